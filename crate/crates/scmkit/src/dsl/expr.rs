//! Arithmetic expressions over finite atoms.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::value::{fmt_ratio, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Sym(String),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Ind(Box<Expr>, CmpOp, Box<Expr>),
}

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Num(BigRational),
    Sym(String),
}

impl Atom {
    pub fn from_value(v: &Value) -> Atom {
        match v {
            Value::Int(i) => Atom::Num(BigRational::from_integer(BigInt::from(*i))),
            Value::Sym(s) => Atom::Sym(s.clone()),
        }
    }

    /// The domain atom this evaluates to, if it is one.
    pub fn to_value(&self) -> Option<Value> {
        match self {
            Atom::Num(r) if r.is_integer() => r.to_integer().to_i64().map(Value::Int),
            Atom::Num(_) => None,
            Atom::Sym(s) => Some(Value::Sym(s.clone())),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Num(r) => write!(f, "{}", fmt_ratio(r)),
            Atom::Sym(s) => write!(f, "\"{s}\""),
        }
    }
}

impl Expr {
    pub fn int(i: i64) -> Expr {
        Expr::Num(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn value(v: &Value) -> Expr {
        match v {
            Value::Int(i) => Expr::int(*i),
            Value::Sym(s) => Expr::Sym(s.clone()),
        }
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Names referenced by the expression, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Num(_) | Expr::Sym(_) => {}
            Expr::Neg(a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Ind(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Renames variables through `f`.
    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Expr {
        let r = |e: &Expr| Box::new(e.rename(f));
        match self {
            Expr::Var(n) => Expr::Var(f(n)),
            Expr::Num(_) | Expr::Sym(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(r(a)),
            Expr::Add(a, b) => Expr::Add(r(a), r(b)),
            Expr::Sub(a, b) => Expr::Sub(r(a), r(b)),
            Expr::Mul(a, b) => Expr::Mul(r(a), r(b)),
            Expr::Ind(a, op, b) => Expr::Ind(r(a), *op, r(b)),
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Result<Atom, String> {
        let num = |a: Atom| match a {
            Atom::Num(r) => Ok(r),
            Atom::Sym(s) => Err(format!("arithmetic on symbol \"{s}\"")),
        };
        Ok(match self {
            Expr::Num(r) => Atom::Num(r.clone()),
            Expr::Sym(s) => Atom::Sym(s.clone()),
            Expr::Var(n) => Atom::from_value(&lookup(n).ok_or_else(|| format!("unbound name {n}"))?),
            Expr::Neg(a) => Atom::Num(-num(a.eval(lookup)?)?),
            Expr::Add(a, b) => Atom::Num(num(a.eval(lookup)?)? + num(b.eval(lookup)?)?),
            Expr::Sub(a, b) => Atom::Num(num(a.eval(lookup)?)? - num(b.eval(lookup)?)?),
            Expr::Mul(a, b) => Atom::Num(num(a.eval(lookup)?)? * num(b.eval(lookup)?)?),
            Expr::Ind(a, op, b) => {
                let (x, y) = (a.eval(lookup)?, b.eval(lookup)?);
                let holds = match (op, &x, &y) {
                    (CmpOp::Eq, _, _) => x == y,
                    (CmpOp::Ne, _, _) => x != y,
                    (CmpOp::Lt, Atom::Num(p), Atom::Num(q)) => p < q,
                    (CmpOp::Gt, Atom::Num(p), Atom::Num(q)) => p > q,
                    _ => return Err("ordering comparison on a symbol".into()),
                };
                Atom::Num(if holds { BigRational::one() } else { BigRational::zero() })
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(r) if r.is_negative() => 3,
            _ => 4,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(r) => write!(f, "{}", fmt_ratio(r))?,
            Expr::Sym(s) => write!(f, "\"{s}\"")?,
            Expr::Var(n) => write!(f, "{n}")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.write(f, 1)?;
                write!(f, " + ")?;
                b.write(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.write(f, 1)?;
                write!(f, " - ")?;
                b.write(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.write(f, 2)?;
                write!(f, "*")?;
                b.write(f, 3)?;
            }
            Expr::Ind(a, op, b) => {
                write!(f, "ind(")?;
                a.write(f, 0)?;
                write!(f, " {} ", op.symbol())?;
                b.write(f, 0)?;
                write!(f, ")")?;
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
