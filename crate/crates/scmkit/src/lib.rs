pub mod analysis;
pub mod causal;
pub mod dsl;
pub mod error;
pub mod graph;
pub mod markov;
mod odometer;
pub mod scm;
pub mod transform;
pub mod value;

pub use error::{Error, Result};
pub use graph::MixedGraph;
pub use scm::{FiniteScm, LinearScm, Model, StructuralModel};
pub use transform::Intervention;
pub use value::{parse_real, ratio, FiniteDomain, Prob, Value};

// Runs the code blocks of the guide in book/ as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/models.md")]
    pub mod models {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    pub mod graphs {}
    #[doc = include_str!("../../../book/src/interventions.md")]
    pub mod interventions {}
    #[doc = include_str!("../../../book/src/solvability.md")]
    pub mod solvability {}
    #[doc = include_str!("../../../book/src/equivalence.md")]
    pub mod equivalence {}
    #[doc = include_str!("../../../book/src/markov.md")]
    pub mod markov {}
}
