//! Solvability and distributions of linear Gaussian models.

use nalgebra::{DMatrix, DVector};

use super::GaussianDistribution;
use crate::error::{Error, Result};
use crate::scm::{LinearScm, StructuralModel};

/// Solution of a uniquely solvable subset:
/// `x_O = A x_ctx + G e + d` with `ctx` the remaining variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolveMap {
    pub targets: Vec<String>,
    pub context: Vec<String>,
    pub coords: Vec<String>,
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub d: DVector<f64>,
    /// Context variables and noise coordinates with a nonzero coefficient.
    pub endo_args: Vec<String>,
    pub exo_args: Vec<String>,
}

impl LinearSolveMap {
    /// Coefficient of `source` (context variable or noise coordinate) in the
    /// solution for `target`.
    pub fn coefficient(&self, target: &str, source: &str) -> Option<f64> {
        let t = self.targets.iter().position(|v| v == target)?;
        if let Some(i) = self.context.iter().position(|v| v == source) {
            return Some(self.a[(t, i)]);
        }
        self.coords.iter().position(|v| v == source).map(|j| self.g[(t, j)])
    }

    pub fn constant(&self, target: &str) -> Option<f64> {
        self.targets.iter().position(|v| v == target).map(|t| self.d[t])
    }
}

pub(crate) fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max().max(1.0);
    sv.iter().filter(|&&s| s > tol * top).count()
}

fn sqrt_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    if s.nrows() == 0 {
        return s.clone();
    }
    let eig = s.clone().symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

impl LinearScm {
    fn indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut v: Vec<usize> = names.iter().map(|n| self.endo_index(n.as_ref())).collect::<Result<_>>()?;
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    fn identity_minus(&self, o: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(o.len(), o.len(), |i, j| if i == j { 1.0 } else { 0.0 } - self.b[(o[i], o[j])])
    }

    /// `det(I − B_OO)` of a subset.
    pub fn subset_determinant<S: AsRef<str>>(&self, subset: &[S]) -> Result<f64> {
        let o = self.indices(subset)?;
        Ok(self.identity_minus(&o).determinant())
    }

    pub(crate) fn solve_inverse(&self, o: &[usize]) -> Result<DMatrix<f64>> {
        let m = self.identity_minus(o);
        let det = m.determinant();
        if det.abs() <= self.tol {
            return Err(Error::NotUniquelySolvable {
                subset: o.iter().map(|&k| self.endo[k].clone()).collect(),
                witness: format!("det(I - B) = {det}"),
            });
        }
        m.try_inverse().ok_or_else(|| Error::Singular("I - B".into()))
    }

    pub fn uniquely_solvable_wrt<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        let o = self.indices(subset)?;
        Ok(self.identity_minus(&o).determinant().abs() > self.tol)
    }

    /// Solvable for every context and almost every noise value: the right
    /// hand sides `B_O,ctx x + Γ_O e + c_O` stay in the column space of
    /// `I − B_OO` as `e` ranges over the noise support.
    pub fn solvable_wrt<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        let o = self.indices(subset)?;
        if o.is_empty() {
            return Ok(true);
        }
        let ctx: Vec<usize> = (0..self.endo.len()).filter(|k| !o.contains(k)).collect();
        let lhs = self.identity_minus(&o);
        let gamma_o = DMatrix::from_fn(o.len(), self.gamma.ncols(), |i, j| self.gamma[(o[i], j)]);
        let spread = &gamma_o * sqrt_psd(&self.noise_cov());
        let offset = &gamma_o * self.noise_mean() + DVector::from_fn(o.len(), |i, _| self.c[o[i]]);
        let bctx = DMatrix::from_fn(o.len(), ctx.len(), |i, j| self.b[(o[i], ctx[j])]);
        let mut aug = DMatrix::zeros(o.len(), o.len() + ctx.len() + spread.ncols() + 1);
        aug.view_mut((0, 0), (o.len(), o.len())).copy_from(&lhs);
        aug.view_mut((0, o.len()), (o.len(), ctx.len())).copy_from(&bctx);
        aug.view_mut((0, o.len() + ctx.len()), (o.len(), spread.ncols())).copy_from(&spread);
        aug.column_mut(aug.ncols() - 1).copy_from(&offset);
        Ok(rank(&aug, self.tol) == rank(&lhs, self.tol))
    }

    pub fn solve_map<S: AsRef<str>>(&self, subset: &[S]) -> Result<LinearSolveMap> {
        let o = self.indices(subset)?;
        let inv = self.solve_inverse(&o)?;
        let ctx: Vec<usize> = (0..self.endo.len()).filter(|k| !o.contains(k)).collect();
        let bctx = DMatrix::from_fn(o.len(), ctx.len(), |i, j| self.b[(o[i], ctx[j])]);
        let gamma_o = DMatrix::from_fn(o.len(), self.gamma.ncols(), |i, j| self.gamma[(o[i], j)]);
        let a = &inv * bctx;
        let g = &inv * gamma_o;
        let d = &inv * DVector::from_fn(o.len(), |i, _| self.c[o[i]]);
        let coords = self.coords();
        let tol = self.tol;
        Ok(LinearSolveMap {
            targets: o.iter().map(|&k| self.endo[k].clone()).collect(),
            context: ctx.iter().map(|&k| self.endo[k].clone()).collect(),
            endo_args: ctx.iter().enumerate().filter(|(i, _)| a.column(*i).amax() > tol).map(|(_, &k)| self.endo[k].clone()).collect(),
            exo_args: coords.iter().enumerate().filter(|(j, _)| g.column(*j).amax() > tol).map(|(_, c)| c.clone()).collect(),
            coords,
            a,
            g,
            d,
        })
    }

    pub fn structurally_uniquely_solvable(&self) -> bool {
        (0..self.endo.len()).all(|k| (1.0 - self.b[(k, k)]).abs() > self.tol)
    }

    pub fn uniquely_solvable_all_subsets(&self) -> Result<bool> {
        for lp in self.functional_graph().enumerate_loops()? {
            if !self.uniquely_solvable_wrt(&lp)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Joint law of the unique solution:
    /// mean `(I − B)⁻¹(Γμ + c)`, covariance `(I − B)⁻¹ΓΣΓᵀ(I − B)⁻ᵀ`.
    pub fn observational_distribution(&self) -> Result<GaussianDistribution> {
        let all: Vec<usize> = (0..self.endo.len()).collect();
        let inv = self.solve_inverse(&all)?;
        let mean = &inv * (&self.gamma * self.noise_mean() + &self.c);
        let mix = &inv * &self.gamma;
        let cov = &mix * self.noise_cov() * mix.transpose();
        Ok(GaussianDistribution::new(self.endo.clone(), mean, cov))
    }
}
