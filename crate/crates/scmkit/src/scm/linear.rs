use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value as Json};

use super::StructuralModel;
use crate::error::{Error, Result};
use crate::value::natural_cmp;

/// Zero threshold used by linear routines unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Jointly Gaussian group of noise coordinates, independent of other blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBlock {
    pub name: String,
    pub coords: Vec<String>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBlock {
    /// One-dimensional block whose only coordinate shares its name.
    pub fn scalar(name: &str, mean: f64, var: f64) -> Self {
        GaussianBlock {
            name: name.to_string(),
            coords: vec![name.to_string()],
            mean: DVector::from_element(1, mean),
            cov: DMatrix::from_element(1, 1, var),
        }
    }

    pub fn new(name: &str, coords: &[&str], mean: &[f64], cov: &[&[f64]]) -> Self {
        let n = coords.len();
        GaussianBlock {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            mean: DVector::from_column_slice(mean),
            cov: DMatrix::from_fn(n, n, |i, j| cov.get(i).and_then(|r| r.get(j)).copied().unwrap_or(f64::NAN)),
        }
    }
}

/// Linear model `X = B X + Γ E + c` with Gaussian noise blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScm {
    pub(crate) endo: Vec<String>,
    pub(crate) blocks: Vec<GaussianBlock>,
    pub(crate) b: DMatrix<f64>,
    pub(crate) gamma: DMatrix<f64>,
    pub(crate) c: DVector<f64>,
    pub(crate) tol: f64,
}

#[derive(Default)]
pub struct LinearScmBuilder {
    endo: Vec<String>,
    blocks: Vec<GaussianBlock>,
    terms: Vec<(String, String, f64)>,
    intercepts: Vec<(String, f64)>,
}

impl LinearScmBuilder {
    pub fn endogenous<S: AsRef<str>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.endo.extend(names.into_iter().map(|s| s.as_ref().to_string()));
        self
    }

    pub fn normal(self, name: &str, mean: f64, var: f64) -> Self {
        self.block(GaussianBlock::scalar(name, mean, var))
    }

    pub fn block(mut self, block: GaussianBlock) -> Self {
        self.blocks.push(block);
        self
    }

    /// Adds `value * source` to the equation of `target`; the source is an
    /// endogenous variable or a noise coordinate.
    pub fn coef(mut self, target: &str, source: &str, value: f64) -> Self {
        self.terms.push((target.to_string(), source.to_string(), value));
        self
    }

    pub fn intercept(mut self, target: &str, value: f64) -> Self {
        self.intercepts.push((target.to_string(), value));
        self
    }

    pub fn build(mut self) -> Result<LinearScm> {
        self.endo.sort_by(|a, b| natural_cmp(a, b));
        self.blocks.sort_by(|a, b| natural_cmp(&a.name, &b.name));
        let mut names: Vec<&str> = self.endo.iter().map(String::as_str).collect();
        for bl in &self.blocks {
            if bl.coords.len() != 1 || bl.coords[0] != bl.name {
                names.push(&bl.name);
            }
            names.extend(bl.coords.iter().map(String::as_str));
        }
        names.sort_unstable();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateName(w[0].to_string()));
            }
        }
        let coords: Vec<String> = self.blocks.iter().flat_map(|b| b.coords.clone()).collect();
        let (n, m) = (self.endo.len(), coords.len());
        let mut b = DMatrix::zeros(n, n);
        let mut gamma = DMatrix::zeros(n, m);
        let mut c = DVector::zeros(n);
        let row = |t: &str| self.endo.iter().position(|e| e == t).ok_or_else(|| Error::UnknownVariable(t.to_string()));
        for (t, s, v) in &self.terms {
            let k = row(t)?;
            if let Some(i) = self.endo.iter().position(|e| e == s) {
                b[(k, i)] += v;
            } else if let Some(j) = coords.iter().position(|e| e == s) {
                gamma[(k, j)] += v;
            } else {
                return Err(Error::UnknownVariable(s.clone()));
            }
        }
        for (t, v) in &self.intercepts {
            c[row(t)?] += v;
        }
        let m = LinearScm { endo: self.endo, blocks: self.blocks, b, gamma, c, tol: DEFAULT_TOLERANCE };
        let problems = m.validate();
        if problems.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidModel(problems))
        }
    }
}

impl LinearScm {
    pub fn builder() -> LinearScmBuilder {
        LinearScmBuilder::default()
    }

    /// Model from raw matrices; rows and columns follow `endo` and the
    /// concatenated block coordinates, both already in natural order.
    pub fn from_parts(
        endo: Vec<String>,
        blocks: Vec<GaussianBlock>,
        b: DMatrix<f64>,
        gamma: DMatrix<f64>,
        c: DVector<f64>,
    ) -> Self {
        LinearScm { endo, blocks, b, gamma, c, tol: DEFAULT_TOLERANCE }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn endogenous(&self) -> &[String] {
        &self.endo
    }

    pub fn blocks(&self) -> &[GaussianBlock] {
        &self.blocks
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn intercept(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn endo_index(&self, name: &str) -> Result<usize> {
        self.endo.iter().position(|v| v == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// All noise coordinate names in column order.
    pub fn coords(&self) -> Vec<String> {
        self.blocks.iter().flat_map(|b| b.coords.clone()).collect()
    }

    /// Block index of each noise coordinate.
    pub(crate) fn coord_blocks(&self) -> Vec<usize> {
        self.blocks.iter().enumerate().flat_map(|(i, b)| std::iter::repeat(i).take(b.coords.len())).collect()
    }

    /// Stacked noise mean.
    pub fn noise_mean(&self) -> DVector<f64> {
        let v: Vec<f64> = self.blocks.iter().flat_map(|b| b.mean.iter().copied()).collect();
        DVector::from_vec(v)
    }

    /// Block-diagonal noise covariance.
    pub fn noise_cov(&self) -> DMatrix<f64> {
        let m: usize = self.blocks.iter().map(|b| b.coords.len()).sum();
        let mut s = DMatrix::zeros(m, m);
        let mut off = 0;
        for b in &self.blocks {
            let d = b.coords.len();
            s.view_mut((off, off), (d, d)).copy_from(&b.cov);
            off += d;
        }
        s
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (n, m) = (self.endo.len(), self.coords().len());
        if self.b.shape() != (n, n) {
            out.push(format!("B has shape {:?}, expected ({n}, {n})", self.b.shape()));
        }
        if self.gamma.shape() != (n, m) {
            out.push(format!("Gamma has shape {:?}, expected ({n}, {m})", self.gamma.shape()));
        }
        if self.c.len() != n {
            out.push(format!("intercept has length {}, expected {n}", self.c.len()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(self.b.as_slice()) || !finite(self.gamma.as_slice()) || !finite(self.c.as_slice()) {
            out.push("non-finite coefficient".into());
        }
        for bl in &self.blocks {
            let d = bl.coords.len();
            if bl.mean.len() != d || bl.cov.shape() != (d, d) {
                out.push(format!("block {} has inconsistent dimensions", bl.name));
                continue;
            }
            if !finite(bl.mean.as_slice()) || !finite(bl.cov.as_slice()) {
                out.push(format!("block {} has non-finite parameters", bl.name));
                continue;
            }
            let scale = bl.cov.amax().max(1.0);
            if (&bl.cov - bl.cov.transpose()).amax() > self.tol * scale {
                out.push(format!("covariance of {} is not symmetric", bl.name));
            } else if bl.cov.clone().symmetric_eigenvalues().min() < -self.tol * scale {
                out.push(format!("covariance of {} is not positive semidefinite", bl.name));
            }
        }
        out
    }

    /// Functional parents by position: endogenous indices, then block indices.
    pub(crate) fn parents_idx(&self, k: usize) -> (Vec<usize>, Vec<usize>) {
        let tol = self.tol;
        let endo = (0..self.endo.len())
            .filter(|&i| if i == k { (self.b[(k, k)] - 1.0).abs() <= tol } else { self.b[(k, i)].abs() > tol })
            .collect();
        let cov = self.noise_cov();
        let cb = self.coord_blocks();
        let mut blocks: Vec<usize> = (0..cb.len())
            .filter(|&j| self.gamma[(k, j)].abs() > tol && cov[(j, j)] > tol)
            .map(|j| cb[j])
            .collect();
        blocks.dedup();
        (endo, blocks)
    }

    /// Equivalent model in which each row reads only its functional parents:
    /// rows with a diagonal coefficient other than 0 or 1 are rescaled, and
    /// constant noise coordinates are folded into the intercept.
    pub fn canonicalize(&self) -> LinearScm {
        let mut m = self.clone();
        let tol = self.tol;
        let mu = self.noise_mean();
        let cov = self.noise_cov();
        for k in 0..m.endo.len() {
            let d = m.b[(k, k)];
            if d.abs() > tol && (d - 1.0).abs() > tol {
                let s = 1.0 - d;
                for i in 0..m.endo.len() {
                    m.b[(k, i)] /= s;
                }
                for j in 0..m.gamma.ncols() {
                    m.gamma[(k, j)] /= s;
                }
                m.c[k] /= s;
                m.b[(k, k)] = 0.0;
            } else if d.abs() <= tol {
                m.b[(k, k)] = 0.0;
            } else {
                m.b[(k, k)] = 1.0;
            }
            for i in 0..m.endo.len() {
                if i != k && m.b[(k, i)].abs() <= tol {
                    m.b[(k, i)] = 0.0;
                }
            }
            for j in 0..m.gamma.ncols() {
                if m.gamma[(k, j)].abs() <= tol {
                    m.gamma[(k, j)] = 0.0;
                } else if cov[(j, j)] <= tol {
                    m.c[k] += m.gamma[(k, j)] * mu[j];
                    m.gamma[(k, j)] = 0.0;
                }
            }
        }
        m
    }

    pub fn to_json(&self) -> Json {
        let rows = |a: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
        };
        json!({
            "family": "linear",
            "endogenous": self.endo,
            "noise": self.blocks.iter().map(|b| json!({
                "name": b.name,
                "coords": b.coords,
                "mean": b.mean.iter().collect::<Vec<_>>(),
                "cov": rows(&b.cov),
            })).collect::<Vec<_>>(),
            "B": rows(&self.b),
            "Gamma": rows(&self.gamma),
            "c": self.c.iter().collect::<Vec<_>>(),
        })
    }
}

impl StructuralModel for LinearScm {
    fn endogenous_names(&self) -> Vec<String> {
        self.endo.clone()
    }

    fn exogenous_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name.clone()).collect()
    }

    fn functional_parents(&self, k: &str) -> Result<Vec<String>> {
        let k = self.endo_index(k)?;
        let (endo, blocks) = self.parents_idx(k);
        Ok(endo
            .into_iter()
            .map(|i| self.endo[i].clone())
            .chain(blocks.into_iter().map(|b| self.blocks[b].name.clone()))
            .collect())
    }
}
