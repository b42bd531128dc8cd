use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::value::{fmt_ratio, FiniteDomain, Prob, Value};

/// Exact distribution over finitely many discrete variables. Only cells
/// with positive probability are stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteDistribution {
    vars: Vec<String>,
    domains: Vec<FiniteDomain>,
    probs: BTreeMap<Vec<usize>, Prob>,
}

impl DiscreteDistribution {
    /// Cells are value-index tuples in `vars` order.
    pub fn new(vars: Vec<String>, domains: Vec<FiniteDomain>, probs: BTreeMap<Vec<usize>, Prob>) -> Self {
        let probs = probs.into_iter().filter(|(_, p)| p.is_positive()).collect();
        DiscreteDistribution { vars, domains, probs }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domains(&self) -> &[FiniteDomain] {
        &self.domains
    }

    /// Positive cells as value tuples.
    pub fn cells(&self) -> Vec<(Vec<Value>, Prob)> {
        self.probs.iter().map(|(k, p)| (self.values_of(k), p.clone())).collect()
    }

    fn values_of(&self, cell: &[usize]) -> Vec<Value> {
        cell.iter().zip(&self.domains).map(|(&i, d)| d.get(i).clone()).collect()
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.vars.iter().position(|v| v == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn total(&self) -> Prob {
        self.probs.values().fold(Prob::zero(), |a, p| a + p)
    }

    /// Probability of a partial assignment.
    pub fn prob(&self, assignment: &[(&str, Value)]) -> Result<Prob> {
        let mut want = Vec::new();
        for (n, v) in assignment {
            let i = self.var_index(n)?;
            let Some(vi) = self.domains[i].index_of(v) else {
                return Ok(Prob::zero());
            };
            want.push((i, vi));
        }
        Ok(self
            .probs
            .iter()
            .filter(|(cell, _)| want.iter().all(|&(i, v)| cell[i] == v))
            .fold(Prob::zero(), |a, (_, p)| a + p))
    }

    pub fn marginal<S: AsRef<str>>(&self, vars: &[S]) -> Result<DiscreteDistribution> {
        let idx: Vec<usize> = vars.iter().map(|v| self.var_index(v.as_ref())).collect::<Result<_>>()?;
        let mut probs: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        for (cell, p) in &self.probs {
            let key: Vec<usize> = idx.iter().map(|&i| cell[i]).collect();
            *probs.entry(key).or_insert_with(Prob::zero) += p;
        }
        Ok(DiscreteDistribution {
            vars: idx.iter().map(|&i| self.vars[i].clone()).collect(),
            domains: idx.iter().map(|&i| self.domains[i].clone()).collect(),
            probs,
        })
    }

    /// Conditional distribution given a partial assignment.
    pub fn condition(&self, evidence: &[(&str, Value)]) -> Result<DiscreteDistribution> {
        let z = self.prob(evidence)?;
        if z.is_zero() {
            return Err(Error::ZeroProbabilityEvidence);
        }
        let mut want = Vec::new();
        for (n, v) in evidence {
            let i = self.var_index(n)?;
            want.push((i, self.domains[i].index_of(v).expect("positive evidence lies in the domain")));
        }
        let probs = self
            .probs
            .iter()
            .filter(|(cell, _)| want.iter().all(|&(i, v)| cell[i] == v))
            .map(|(c, p)| (c.clone(), p / &z))
            .collect();
        Ok(DiscreteDistribution { vars: self.vars.clone(), domains: self.domains.clone(), probs })
    }

    /// `{"vars":[..],"probs":[["v1,v2","p/q"],..]}`.
    pub fn to_json(&self) -> Json {
        let probs: Vec<Json> = self
            .probs
            .iter()
            .map(|(cell, p)| {
                let vals: Vec<String> = self.values_of(cell).iter().map(|v| v.to_string()).collect();
                json!([vals.join(","), fmt_ratio(p)])
            })
            .collect();
        json!({"vars": self.vars, "probs": probs})
    }

    /// One line per positive cell.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.vars.join(" "));
        for (cell, p) in &self.probs {
            let vals: Vec<String> = self.values_of(cell).iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{} : {}\n", vals.join(" "), fmt_ratio(p)));
        }
        s
    }

    /// Exact conditional independence of `a` and `b` given `s`:
    /// `p(a,b,s) p(s) = p(a,s) p(b,s)` on every cell.
    pub fn independent<S: AsRef<str>>(&self, a: &[S], b: &[S], s: &[S]) -> Result<bool> {
        let name = |v: &S| v.as_ref().to_string();
        let all: Vec<String> = a.iter().chain(b).chain(s).map(name).collect();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != all.len() {
            return Err(Error::Unsupported("conditional independence needs disjoint sets".into()));
        }
        let idx = |set: &[S]| -> Result<Vec<usize>> { set.iter().map(|v| self.var_index(v.as_ref())).collect() };
        let (ia, ib, is) = (idx(a)?, idx(b)?, idx(s)?);
        let proj = |cell: &[usize], ix: &[&[usize]]| -> Vec<usize> { ix.iter().flat_map(|v| v.iter().map(|&i| cell[i])).collect() };
        let mut pabs: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        let mut pas: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        let mut pbs: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        let mut ps: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        for (cell, p) in &self.probs {
            *pabs.entry(proj(cell, &[&ia, &ib, &is])).or_insert_with(Prob::zero) += p;
            *pas.entry(proj(cell, &[&ia, &is])).or_insert_with(Prob::zero) += p;
            *pbs.entry(proj(cell, &[&ib, &is])).or_insert_with(Prob::zero) += p;
            *ps.entry(proj(cell, &[&is])).or_insert_with(Prob::zero) += p;
        }
        let (na, nb) = (ia.len(), ib.len());
        for (sv, p_s) in &ps {
            for (ka, p_as) in pas.iter().filter(|(k, _)| &k[na..] == sv.as_slice()) {
                for (kb, p_bs) in pbs.iter().filter(|(k, _)| &k[nb..] == sv.as_slice()) {
                    let key: Vec<usize> = ka[..na].iter().chain(&kb[..nb]).chain(sv).copied().collect();
                    let joint = pabs.get(&key).cloned().unwrap_or_else(Prob::zero);
                    if joint * p_s != p_as * p_bs {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn is_normalized(&self) -> bool {
        self.total().is_one()
    }
}

/// Multivariate normal distribution over named coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDistribution {
    pub vars: Vec<String>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Set when conditioning had to regularize an ill-conditioned block.
    pub regularized: bool,
}

impl GaussianDistribution {
    pub fn new(vars: Vec<String>, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        GaussianDistribution { vars, mean, cov, regularized: false }
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.vars.iter().position(|v| v == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn mean_of(&self, name: &str) -> Result<f64> {
        Ok(self.mean[self.var_index(name)?])
    }

    pub fn cov_of(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.cov[(self.var_index(a)?, self.var_index(b)?)])
    }

    pub fn marginal<S: AsRef<str>>(&self, vars: &[S]) -> Result<GaussianDistribution> {
        let idx: Vec<usize> = vars.iter().map(|v| self.var_index(v.as_ref())).collect::<Result<_>>()?;
        Ok(GaussianDistribution {
            vars: idx.iter().map(|&i| self.vars[i].clone()).collect(),
            mean: DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]),
            regularized: self.regularized,
        })
    }

    /// Equal variables, means and covariances within `tol`.
    pub fn approx_eq(&self, other: &GaussianDistribution, tol: f64) -> bool {
        self.vars == other.vars && (&self.mean - &other.mean).amax() <= tol && (&self.cov - &other.cov).amax() <= tol
    }

    pub fn to_json(&self) -> Json {
        let cov: Vec<Vec<f64>> = (0..self.cov.nrows()).map(|i| self.cov.row(i).iter().copied().collect()).collect();
        json!({"vars": self.vars, "mean": self.mean.iter().collect::<Vec<_>>(), "cov": cov})
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.vars.iter().enumerate() {
            let row: Vec<String> = self.cov.row(i).iter().map(|&c| crate::dsl::fmt_real(c)).collect();
            s.push_str(&format!("{v} mean {} cov [{}]\n", crate::dsl::fmt_real(self.mean[i]), row.join(", ")));
        }
        s
    }

    /// Zero partial covariance of `a` and `b` given `s`.
    pub fn independent<S: AsRef<str>>(&self, a: &[S], b: &[S], s: &[S], tol: f64) -> Result<bool> {
        let idx = |set: &[S]| -> Result<Vec<usize>> { set.iter().map(|v| self.var_index(v.as_ref())).collect() };
        let (ia, ib, is) = (idx(a)?, idx(b)?, idx(s)?);
        let mut all: Vec<usize> = ia.iter().chain(&ib).chain(&is).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Unsupported("conditional independence needs disjoint sets".into()));
        }
        let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| self.cov[(r[i], c[j])]);
        let mut partial = sub(&ia, &ib);
        if !is.is_empty() {
            let sss = sub(&is, &is);
            let inv = sss.pseudo_inverse(tol).map_err(|e| Error::Singular(e.to_string()))?;
            partial -= sub(&ia, &is) * inv * sub(&is, &ib);
        }
        Ok(partial.amax() <= tol)
    }
}

/// Distribution of all coordinates given exact values of some of them.
/// Observed coordinates become point masses. Errors when the observed block
/// is singular; an ill-conditioned block (condition number above 1e12) is
/// regularized and the result flagged.
pub fn gaussian_condition(d: &GaussianDistribution, observed: &[(&str, f64)], tol: f64) -> Result<GaussianDistribution> {
    let n = d.vars.len();
    let ob: Vec<usize> = observed.iter().map(|(v, _)| d.var_index(v)).collect::<Result<_>>()?;
    let mut sorted = ob.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ob.len() {
        return Err(Error::Unsupported("coordinate observed twice".into()));
    }
    let hid: Vec<usize> = (0..n).filter(|i| !ob.contains(i)).collect();
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| d.cov[(r[i], c[j])]);
    let sbb = sub(&ob, &ob);
    let eig = sbb.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if ob.is_empty() {
        return Ok(d.clone());
    }
    if lo <= tol * hi.max(1.0) {
        return Err(Error::Singular("observed covariance block".into()));
    }
    let mut regularized = false;
    let sbb = if hi / lo > 1e12 {
        regularized = true;
        sbb + DMatrix::identity(ob.len(), ob.len()) * tol
    } else {
        sbb
    };
    let inv = sbb.try_inverse().ok_or_else(|| Error::Singular("observed covariance block".into()))?;
    let resid = DVector::from_fn(ob.len(), |i, _| observed[i].1 - d.mean[ob[i]]);
    let sab = sub(&hid, &ob);
    let gain = &sab * &inv;
    let mean_h = DVector::from_fn(hid.len(), |i, _| d.mean[hid[i]]) + &gain * resid;
    let cov_h = sub(&hid, &hid) - &gain * sab.transpose();
    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);
    for (i, &h) in hid.iter().enumerate() {
        mean[h] = mean_h[i];
        for (j, &g) in hid.iter().enumerate() {
            cov[(h, g)] = cov_h[(i, j)];
        }
    }
    for (i, &o) in ob.iter().enumerate() {
        mean[o] = observed[i].1;
    }
    Ok(GaussianDistribution { vars: d.vars.clone(), mean, cov, regularized })
}
