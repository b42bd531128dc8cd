//! Plain-text model format.
//!
//! ```text
//! model finite
//! var X : {-1, 0, 1}
//! noise E : {-1, 0, 1} ~ {-1: 1/2, 0: 0, 1: 1/2}
//! eq X = E*E + E - 1
//! ```
//!
//! Linear models declare real variables, Gaussian noise blocks and affine
//! equations:
//!
//! ```text
//! model linear
//! var X1 X2
//! noise E1 : Normal(0, 1)
//! noise E(E2, E3) : Normal(mean=[0, 0], cov=[[1, 0.6], [0.6, 1]])
//! eq X1 = 1*E1
//! eq X2 = 0.5*X1 + 1*E2 + 2
//! ```

pub mod expr;
mod lexer;
mod parser;
mod serialize;

pub use parser::parse;
pub use serialize::serialize;
pub(crate) use serialize::fmt_real;

use crate::error::{Error, Result};
use crate::scm::{FiniteScm, LinearScm, Model};

pub fn parse_finite(src: &str) -> Result<FiniteScm> {
    match parse(src)? {
        Model::Finite(m) => Ok(m),
        Model::Linear(_) => Err(Error::Unsupported("expected a finite model".into())),
    }
}

pub fn parse_linear(src: &str) -> Result<LinearScm> {
    match parse(src)? {
        Model::Linear(m) => Ok(m),
        Model::Finite(_) => Err(Error::Unsupported("expected a linear model".into())),
    }
}
