//! Atoms, finite domains and exact probabilities.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact probability.
pub type Prob = BigRational;

/// Builds the rational `p/q`.
pub fn ratio(p: i64, q: i64) -> Prob {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn fmt_ratio(r: &Prob) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p`, `-p` or `p/q`.
/// Parses a decimal or `p/q` literal as a float.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let r = parse_ratio(s)?;
    let (p, q): (f64, f64) = (r.numer().to_string().parse().ok()?, r.denom().to_string().parse().ok()?);
    Some(p / q)
}

pub fn parse_ratio(s: &str) -> Option<Prob> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// A domain atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Sym(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Sym(_) => None,
        }
    }

    /// Parses an integer literal or a (possibly quoted) symbol.
    pub fn parse(s: &str) -> Value {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return Value::Int(i);
        }
        Value::Sym(s.trim_matches('"').to_string())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "\"{s}\""),
        }
    }
}

/// Ordered set of distinct atoms. Iteration follows declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteDomain(Vec<Value>);

impl FiniteDomain {
    pub fn new(values: Vec<Value>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidModel(vec!["empty domain".into()]));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::InvalidModel(vec![format!("duplicate domain value {v}")]));
            }
        }
        Ok(FiniteDomain(values))
    }

    pub fn ints(values: impl IntoIterator<Item = i64>) -> Self {
        Self::new(values.into_iter().map(Value::Int).collect()).expect("valid integer domain")
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, v: &Value) -> Option<usize> {
        self.0.iter().position(|w| w == v)
    }

    pub fn get(&self, i: usize) -> &Value {
        &self.0[i]
    }
}

impl fmt::Display for FiniteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Orders names with embedded numbers numerically, so `X2 < X10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut i, mut j) = (0, 0);
    let (a, b) = (a.as_bytes(), b.as_bytes());
    while i < a.len() && j < b.len() {
        if a[i].is_ascii_digit() && b[j].is_ascii_digit() {
            let si = i;
            while i < a.len() && a[i].is_ascii_digit() {
                i += 1;
            }
            let sj = j;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let da = std::str::from_utf8(&a[si..i]).unwrap().trim_start_matches('0');
            let db = std::str::from_utf8(&b[sj..j]).unwrap().trim_start_matches('0');
            let ord = da.len().cmp(&db.len()).then_with(|| da.cmp(db));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            if a[i] != b[j] {
                return a[i].cmp(&b[j]);
            }
            i += 1;
            j += 1;
        }
    }
    (a.len() - i).cmp(&(b.len() - j)).then_with(|| a.cmp(b))
}

/// Sum of a probability vector.
pub fn total(ps: &[Prob]) -> Prob {
    ps.iter().fold(Prob::zero(), |acc, p| acc + p)
}
