//! Solvability, solution functions and the distributions a model induces.

mod distribution;
mod linear;
mod polytope;
mod solve;

use std::collections::BTreeMap;

pub use distribution::{gaussian_condition, DiscreteDistribution, GaussianDistribution};
pub use linear::LinearSolveMap;
pub use polytope::MAX_SELECTORS;
pub use solve::FiniteSolveMap;
pub(crate) use solve::Subsystem;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::odometer::Odometer;
use crate::scm::{FiniteScm, LinearScm, Model};
use crate::transform::{twin_name, Intervention, TWIN_SUFFIX};
use crate::value::{Prob, Value};

/// Distribution of either model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Discrete(DiscreteDistribution),
    Gaussian(GaussianDistribution),
}

impl Distribution {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Distribution::Discrete(d) => d.to_json(),
            Distribution::Gaussian(d) => d.to_json(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Distribution::Discrete(d) => d.to_text(),
            Distribution::Gaussian(d) => d.to_text(),
        }
    }
}

/// Counterfactual interventions act on the primed copies; unprimed names
/// are mapped to their copies.
fn to_copies<V: Clone>(iv: &Intervention<V>) -> Intervention<V> {
    Intervention::new(iv.assignments().iter().map(|(n, v)| {
        let t = if n.ends_with(TWIN_SUFFIX) { n.clone() } else { twin_name(n) };
        (t, v.clone())
    }))
}

impl FiniteScm {
    /// Law of the unique solution, computed exactly by pushing the noise
    /// measure forward.
    pub fn observational_distribution(&self) -> Result<DiscreteDistribution> {
        let all: Vec<usize> = (0..self.endo.len()).collect();
        let sys = Subsystem::new(self, &all);
        let mut probs: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        let mut x = vec![0; self.endo.len()];
        let mut od = Odometer::new(self.supports());
        while let Some(e) = od.next_combo() {
            let mut sols = Vec::new();
            sys.for_each(&mut x, e, &mut |s| {
                sols.push(s.to_vec());
                sols.len() < 2
            });
            if sols.len() != 1 {
                let shown: Vec<String> =
                    e.iter().enumerate().map(|(j, &v)| format!("{}={}", self.exo[j].name, self.exo[j].domain.get(v))).collect();
                let what = if sols.is_empty() { "no solution" } else { "several solutions" };
                return Err(Error::NotUniquelySolvable {
                    subset: self.endo.iter().map(|v| v.name.clone()).collect(),
                    witness: format!("{what} at ({})", shown.join(", ")),
                });
            }
            let p = self.prob_of(e);
            *probs.entry(sols.pop().unwrap()).or_insert_with(Prob::zero) += p;
        }
        Ok(DiscreteDistribution::new(
            self.endo.iter().map(|v| v.name.clone()).collect(),
            self.endo.iter().map(|v| v.domain.clone()).collect(),
            probs,
        ))
    }

    pub fn interventional_distribution(&self, iv: &Intervention<Value>) -> Result<DiscreteDistribution> {
        self.intervene(iv)?.observational_distribution()
    }

    /// Law of `query` in the twin model after the factual intervention on
    /// the original variables and the counterfactual one on the copies,
    /// conditioned on `observed`.
    pub fn counterfactual_distribution(
        &self,
        factual: &Intervention<Value>,
        observed: &[(&str, Value)],
        counterfactual: &Intervention<Value>,
        query: &[&str],
    ) -> Result<DiscreteDistribution> {
        let t = self.twin()?.intervene(&factual.and(&to_copies(counterfactual)))?;
        t.observational_distribution()?.condition(observed)?.marginal(query)
    }
}

impl LinearScm {
    pub fn interventional_distribution(&self, iv: &Intervention<f64>) -> Result<GaussianDistribution> {
        self.intervene(iv)?.observational_distribution()
    }

    pub fn counterfactual_distribution(
        &self,
        factual: &Intervention<f64>,
        observed: &[(&str, f64)],
        counterfactual: &Intervention<f64>,
        query: &[&str],
    ) -> Result<GaussianDistribution> {
        let t = self.twin()?.intervene(&factual.and(&to_copies(counterfactual)))?;
        let joint = t.observational_distribution()?;
        gaussian_condition(&joint, observed, self.tol)?.marginal(query)
    }
}

impl Model {
    pub fn observational_distribution(&self) -> Result<Distribution> {
        Ok(match self {
            Model::Finite(m) => Distribution::Discrete(m.observational_distribution()?),
            Model::Linear(m) => Distribution::Gaussian(m.observational_distribution()?),
        })
    }

    pub fn solvable_wrt<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        match self {
            Model::Finite(m) => m.solvable_wrt(subset),
            Model::Linear(m) => m.solvable_wrt(subset),
        }
    }

    pub fn uniquely_solvable_wrt<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        match self {
            Model::Finite(m) => m.uniquely_solvable_wrt(subset),
            Model::Linear(m) => m.uniquely_solvable_wrt(subset),
        }
    }

    pub fn structurally_uniquely_solvable(&self) -> bool {
        match self {
            Model::Finite(m) => m.structurally_uniquely_solvable(),
            Model::Linear(m) => m.structurally_uniquely_solvable(),
        }
    }

    pub fn uniquely_solvable_all_subsets(&self) -> Result<bool> {
        match self {
            Model::Finite(m) => m.uniquely_solvable_all_subsets(),
            Model::Linear(m) => m.uniquely_solvable_all_subsets(),
        }
    }
}
