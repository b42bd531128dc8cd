//! Structural causal models: finite tabular models with exact
//! probabilities and linear models with Gaussian noise.

mod finite;
mod linear;

pub use finite::{Endogenous, Exogenous, FiniteScm, FiniteScmBuilder, TabularMechanism, VarRef};
pub use linear::{GaussianBlock, LinearScm, LinearScmBuilder, DEFAULT_TOLERANCE};

use crate::error::Result;
use crate::graph::MixedGraph;

/// Operations shared by both model families.
pub trait StructuralModel {
    fn endogenous_names(&self) -> Vec<String>;
    /// Exogenous graph nodes (noise variables, or noise blocks).
    fn exogenous_names(&self) -> Vec<String>;
    /// Minimal parent set of `k` among endogenous and exogenous nodes.
    fn functional_parents(&self, k: &str) -> Result<Vec<String>>;

    /// Graph on endogenous and exogenous nodes with an edge into each
    /// variable from each of its functional parents.
    fn augmented_graph(&self) -> MixedGraph {
        let mut g = MixedGraph::new(self.endogenous_names().into_iter().chain(self.exogenous_names()))
            .expect("endogenous and exogenous names are distinct");
        for k in self.endogenous_names() {
            for p in self.functional_parents(&k).expect("known variable") {
                g.add_directed(&p, &k).expect("known node");
            }
        }
        g
    }

    /// Directed part of the augmented graph on endogenous nodes, plus a
    /// bidirected edge between any two variables sharing an exogenous parent.
    fn functional_graph(&self) -> MixedGraph {
        let endo = self.endogenous_names();
        let exo = self.exogenous_names();
        let mut g = MixedGraph::new(&endo).expect("distinct names");
        let parents: Vec<Vec<String>> =
            endo.iter().map(|k| self.functional_parents(k).expect("known variable")).collect();
        for (k, pa) in endo.iter().zip(&parents) {
            for p in pa.iter().filter(|p| !exo.contains(p)) {
                g.add_directed(p, k).expect("known node");
            }
        }
        for i in 0..endo.len() {
            for j in i + 1..endo.len() {
                if parents[i].iter().any(|p| exo.contains(p) && parents[j].contains(p)) {
                    g.add_bidirected(&endo[i], &endo[j]).expect("distinct nodes");
                }
            }
        }
        g
    }
}

/// Either model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Finite(FiniteScm),
    Linear(LinearScm),
}

impl StructuralModel for Model {
    fn endogenous_names(&self) -> Vec<String> {
        match self {
            Model::Finite(m) => m.endogenous_names(),
            Model::Linear(m) => m.endogenous_names(),
        }
    }

    fn exogenous_names(&self) -> Vec<String> {
        match self {
            Model::Finite(m) => m.exogenous_names(),
            Model::Linear(m) => m.exogenous_names(),
        }
    }

    fn functional_parents(&self, k: &str) -> Result<Vec<String>> {
        match self {
            Model::Finite(m) => m.functional_parents(k),
            Model::Linear(m) => m.functional_parents(k),
        }
    }
}

impl Model {
    pub fn validate(&self) -> Vec<String> {
        match self {
            Model::Finite(m) => m.validate(),
            Model::Linear(m) => m.validate(),
        }
    }

    /// Overrides the numerical tolerance of linear models.
    pub fn with_tolerance(self, tol: f64) -> Model {
        match self {
            Model::Linear(m) => Model::Linear(m.with_tolerance(tol)),
            m => m,
        }
    }

    pub fn canonicalize(&self) -> Model {
        match self {
            Model::Finite(m) => Model::Finite(m.canonicalize()),
            Model::Linear(m) => Model::Linear(m.canonicalize()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Model::Finite(m) => m.to_json(),
            Model::Linear(m) => m.to_json(),
        }
    }
}
