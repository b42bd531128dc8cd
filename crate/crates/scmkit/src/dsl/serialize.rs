use super::expr::{CmpOp, Expr};
use crate::odometer::Odometer;
use crate::scm::{FiniteScm, LinearScm, Model, TabularMechanism};
use crate::value::{fmt_ratio, Value};

/// Canonical text of a model: declarations in model order, single spaces,
/// LF line endings. Parsing the output gives back an equivalent model.
pub fn serialize(m: &Model) -> String {
    match m {
        Model::Finite(m) => finite(m),
        Model::Linear(m) => linear(m),
    }
}

fn finite(m: &FiniteScm) -> String {
    let mut s = String::from("model finite\n");
    for v in m.endogenous() {
        s.push_str(&format!("var {} : {}\n", v.name, v.domain));
    }
    for v in m.exogenous() {
        let probs: Vec<String> =
            v.domain.values().iter().zip(&v.probs).map(|(d, p)| format!("{d}: {}", fmt_ratio(p))).collect();
        s.push_str(&format!("noise {} : {} ~ {{{}}}\n", v.name, v.domain, probs.join(", ")));
    }
    for (k, mech) in m.mechanisms().iter().enumerate() {
        let target = &m.endogenous()[k];
        let body = match mech.expr() {
            Some(e) => e.to_string(),
            None if target.domain.values().iter().all(|v| v.as_int().is_some()) => indicator_sum(m, mech, k).to_string(),
            None => table_form(m, mech, k),
        };
        s.push_str(&format!("eq {} = {body}\n", target.name));
    }
    s
}

/// The table as a sum of indicator products, one per nonzero row.
fn indicator_sum(m: &FiniteScm, mech: &TabularMechanism, k: usize) -> Expr {
    let sizes: Vec<usize> = mech.args().iter().map(|&r| m.ref_domain(r).len()).collect();
    let target = &m.endogenous()[k].domain;
    let mut od = Odometer::full(&sizes);
    let mut sum: Option<Expr> = None;
    let mut row = 0;
    while let Some(combo) = od.next_combo() {
        let out = target.get(mech.table()[row]).as_int().expect("integer output");
        row += 1;
        if out == 0 {
            continue;
        }
        let mut term: Option<Expr> = None;
        for (&r, &c) in mech.args().iter().zip(combo) {
            let ind = Expr::Ind(
                Box::new(Expr::var(m.ref_name(r))),
                CmpOp::Eq,
                Box::new(Expr::value(m.ref_domain(r).get(c))),
            );
            term = Some(match term {
                None => ind,
                Some(t) => Expr::Mul(Box::new(t), Box::new(ind)),
            });
        }
        let term = match term {
            None => Expr::int(out),
            Some(t) if out == 1 => t,
            Some(t) => Expr::Mul(Box::new(t), Box::new(Expr::int(out))),
        };
        sum = Some(match sum {
            None => term,
            Some(s) => Expr::Add(Box::new(s), Box::new(term)),
        });
    }
    sum.unwrap_or_else(|| Expr::int(0))
}

fn table_form(m: &FiniteScm, mech: &TabularMechanism, k: usize) -> String {
    let sizes: Vec<usize> = mech.args().iter().map(|&r| m.ref_domain(r).len()).collect();
    let names: Vec<&str> = mech.args().iter().map(|&r| m.ref_name(r)).collect();
    let mut rows = Vec::new();
    let mut od = Odometer::full(&sizes);
    let mut row = 0;
    while let Some(combo) = od.next_combo() {
        let key: Vec<String> = mech.args().iter().zip(combo).map(|(&r, &c)| m.ref_domain(r).get(c).to_string()).collect();
        let out: &Value = m.endogenous()[k].domain.get(mech.table()[row]);
        rows.push(format!("({}): {out}", key.join(", ")));
        row += 1;
    }
    format!("table({}) {{{}}}", names.join(", "), rows.join(", "))
}

/// Shortest text that parses back to `v`: a short decimal, else a fraction
/// with a small denominator. Values within rounding noise of a short
/// decimal print as that decimal, and tiny values as zero.
pub(crate) fn fmt_real(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".into();
    }
    let exact = format!("{v}");
    if exact.len() <= 12 {
        return exact;
    }
    for q in 2..=1000i64 {
        let p = (v * q as f64).round();
        if p / q as f64 == v {
            return format!("{}/{q}", p as i64);
        }
    }
    let rounded = format!("{}", format!("{v:.11e}").parse::<f64>().unwrap_or(v));
    if rounded.len() <= 12 {
        rounded
    } else {
        exact
    }
}

fn linear(m: &LinearScm) -> String {
    let mut s = String::from("model linear\n");
    s.push_str(&format!("var {}\n", m.endogenous().join(" ")));
    for b in m.blocks() {
        let scalar = b.coords.len() == 1 && b.coords[0] == b.name;
        if scalar {
            s.push_str(&format!("noise {} : Normal({}, {})\n", b.name, fmt_real(b.mean[0]), fmt_real(b.cov[(0, 0)])));
        } else {
            let mean: Vec<String> = b.mean.iter().map(|&v| fmt_real(v)).collect();
            let cov: Vec<String> = (0..b.cov.nrows())
                .map(|i| {
                    let row: Vec<String> = (0..b.cov.ncols()).map(|j| fmt_real(b.cov[(i, j)])).collect();
                    format!("[{}]", row.join(", "))
                })
                .collect();
            s.push_str(&format!(
                "noise {}({}) : Normal(mean=[{}], cov=[{}])\n",
                b.name,
                b.coords.join(", "),
                mean.join(", "),
                cov.join(", ")
            ));
        }
    }
    let coords = m.coords();
    for (k, name) in m.endogenous().iter().enumerate() {
        let mut terms = Vec::new();
        for (i, src) in m.endogenous().iter().enumerate() {
            let v = fmt_real(m.b()[(k, i)]);
            if v != "0" {
                terms.push(format!("{v}*{src}"));
            }
        }
        for (j, src) in coords.iter().enumerate() {
            let v = fmt_real(m.gamma()[(k, j)]);
            if v != "0" {
                terms.push(format!("{v}*{src}"));
            }
        }
        let c = fmt_real(m.intercept()[k]);
        if c != "0" || terms.is_empty() {
            terms.push(c);
        }
        s.push_str(&format!("eq {name} = {}\n", terms.join(" + ")));
    }
    s
}
