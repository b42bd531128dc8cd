use std::fmt;

use num_traits::{One, Signed};
use serde_json::{json, Value as Json};

use super::StructuralModel;
use crate::dsl::expr::Expr;
use crate::error::{Error, Result};
use crate::odometer::Odometer;
use crate::value::{fmt_ratio, natural_cmp, total, FiniteDomain, Prob, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Endogenous {
    pub name: String,
    pub domain: FiniteDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exogenous {
    pub name: String,
    pub domain: FiniteDomain,
    pub probs: Vec<Prob>,
}

impl Exogenous {
    /// Indices of values with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.domain.len()).filter(|&i| self.probs.get(i).is_some_and(|p| p.is_positive())).collect()
    }
}

/// Reference to a variable of a finite model by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Endo(usize),
    Exo(usize),
}

/// A total table over the product of the argument domains, stored as
/// indices into the target domain. The first argument varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMechanism {
    pub(crate) args: Vec<VarRef>,
    strides: Vec<usize>,
    pub(crate) table: Vec<usize>,
    pub(crate) expr: Option<Expr>,
}

impl TabularMechanism {
    pub(crate) fn new(args: Vec<VarRef>, sizes: &[usize], table: Vec<usize>, expr: Option<Expr>) -> Self {
        let mut strides = vec![1; args.len()];
        for i in (0..args.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        TabularMechanism { args, strides, table, expr }
    }

    pub(crate) fn constant(v: usize, expr: Option<Expr>) -> Self {
        Self::new(Vec::new(), &[], vec![v], expr)
    }

    pub fn args(&self) -> &[VarRef] {
        &self.args
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Source expression, kept only for serialization.
    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    #[inline]
    pub(crate) fn eval(&self, x: &[usize], e: &[usize]) -> usize {
        let mut row = 0;
        for (a, s) in self.args.iter().zip(&self.strides) {
            row += s * match *a {
                VarRef::Endo(i) => x[i],
                VarRef::Exo(j) => e[j],
            };
        }
        self.table[row]
    }
}

/// Finite structural causal model with exact noise probabilities.
///
/// Variables are kept in natural name order; mechanisms are indexed like
/// the endogenous variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteScm {
    pub(crate) endo: Vec<Endogenous>,
    pub(crate) exo: Vec<Exogenous>,
    pub(crate) mechs: Vec<TabularMechanism>,
}

type MechFn = Box<dyn Fn(&[Value]) -> std::result::Result<Value, String>>;

enum MechSpec {
    Func(Vec<String>, MechFn),
    Table(Vec<String>, Vec<Value>),
    Expr(Expr),
}

/// Collects declarations by name and tabulates mechanisms on `build`.
#[derive(Default)]
pub struct FiniteScmBuilder {
    endo: Vec<(String, Vec<Value>)>,
    exo: Vec<(String, Vec<(Value, Prob)>)>,
    mechs: Vec<(String, MechSpec)>,
}

impl FiniteScmBuilder {
    pub fn endogenous<V: Into<Value>>(mut self, name: &str, values: impl IntoIterator<Item = V>) -> Self {
        self.endo.push((name.to_string(), values.into_iter().map(Into::into).collect()));
        self
    }

    pub fn exogenous<V: Into<Value>>(mut self, name: &str, dist: impl IntoIterator<Item = (V, Prob)>) -> Self {
        self.exo.push((name.to_string(), dist.into_iter().map(|(v, p)| (v.into(), p)).collect()));
        self
    }

    pub fn uniform_exogenous<V: Into<Value>>(self, name: &str, values: impl IntoIterator<Item = V>) -> Self {
        let vals: Vec<Value> = values.into_iter().map(Into::into).collect();
        let p = crate::value::ratio(1, vals.len().max(1) as i64);
        self.exogenous(name, vals.into_iter().map(|v| (v, p.clone())))
    }

    /// Mechanism given as a function of the listed arguments.
    pub fn mechanism_fn(mut self, target: &str, args: &[&str], f: impl Fn(&[Value]) -> Value + 'static) -> Self {
        let f: MechFn = Box::new(move |v| Ok(f(v)));
        self.mechs.push((target.to_string(), MechSpec::Func(args.iter().map(|s| s.to_string()).collect(), f)));
        self
    }

    /// Mechanism over integer-valued arguments.
    pub fn mechanism_int(self, target: &str, args: &[&str], f: impl Fn(&[i64]) -> i64 + 'static) -> Self {
        self.mechanism_fn(target, args, move |v| {
            let ints: Vec<i64> = v.iter().map(|x| x.as_int().expect("integer argument")).collect();
            Value::Int(f(&ints))
        })
    }

    /// Mechanism given by its outputs, row-major over `args` as listed.
    pub fn mechanism_table<V: Into<Value>>(mut self, target: &str, args: &[&str], outputs: impl IntoIterator<Item = V>) -> Self {
        let outs = outputs.into_iter().map(Into::into).collect();
        self.mechs.push((target.to_string(), MechSpec::Table(args.iter().map(|s| s.to_string()).collect(), outs)));
        self
    }

    pub fn mechanism_expr(mut self, target: &str, expr: Expr) -> Self {
        self.mechs.push((target.to_string(), MechSpec::Expr(expr)));
        self
    }

    pub fn build(self) -> Result<FiniteScm> {
        let mut endo = Vec::new();
        for (name, vals) in self.endo {
            endo.push(Endogenous { domain: FiniteDomain::new(vals)?, name });
        }
        let mut exo = Vec::new();
        for (name, dist) in self.exo {
            let (vals, probs): (Vec<Value>, Vec<Prob>) = dist.into_iter().unzip();
            exo.push(Exogenous { domain: FiniteDomain::new(vals)?, name, probs });
        }
        endo.sort_by(|a, b| natural_cmp(&a.name, &b.name));
        exo.sort_by(|a, b| natural_cmp(&a.name, &b.name));
        let mut names: Vec<&str> = endo.iter().map(|v| v.name.as_str()).chain(exo.iter().map(|v| v.name.as_str())).collect();
        names.sort_unstable();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateName(w[0].to_string()));
            }
        }
        let mut shell = FiniteScm { endo, exo, mechs: Vec::new() };
        let mut slots: Vec<Option<TabularMechanism>> = vec![None; shell.endo.len()];
        for (target, spec) in self.mechs {
            let k = shell.endo_index(&target)?;
            if slots[k].is_some() {
                return Err(Error::DuplicateName(format!("mechanism for {target}")));
            }
            let mech = match spec {
                MechSpec::Func(args, f) => shell.tabulate(k, &args, &|v| f(v), None)?,
                MechSpec::Table(args, outs) => {
                    let refs = args.iter().map(|a| shell.var_ref(a)).collect::<Result<Vec<_>>>()?;
                    let sizes: Vec<usize> = refs.iter().map(|&r| shell.ref_domain(r).len()).collect();
                    if outs.len() != sizes.iter().product::<usize>() {
                        return Err(Error::InvalidModel(vec![format!("table for {target} has wrong length")]));
                    }
                    let idx = |v: &[Value]| -> usize {
                        let mut row = 0;
                        for (i, val) in v.iter().enumerate() {
                            row = row * sizes[i] + shell.ref_domain(refs[i]).index_of(val).unwrap();
                        }
                        row
                    };
                    shell.tabulate(k, &args, &|v| Ok(outs[idx(v)].clone()), None)?
                }
                MechSpec::Expr(expr) => {
                    let args = expr.variables();
                    let e2 = expr.clone();
                    let eval = |v: &[Value]| -> std::result::Result<Value, String> {
                        let lookup = |n: &str| args.iter().position(|a| a == n).map(|i| v[i].clone());
                        let atom = e2.eval(&lookup)?;
                        atom.to_value().ok_or_else(|| atom.to_string())
                    };
                    shell.tabulate(k, &args, &eval, Some(expr))?
                }
            };
            slots[k] = Some(mech);
        }
        for (k, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(m) => shell.mechs.push(m),
                None => return Err(Error::InvalidModel(vec![format!("no mechanism for {}", shell.endo[k].name)])),
            }
        }
        Ok(shell)
    }
}

impl FiniteScm {
    /// Model from name-based pieces. Each mechanism is
    /// `(target, argument names, table row-major over those names, expr)`.
    /// Variables are put in natural order and tables re-laid out.
    pub(crate) fn assemble(
        mut endo: Vec<Endogenous>,
        mut exo: Vec<Exogenous>,
        pieces: Vec<(String, Vec<String>, Vec<usize>, Option<Expr>)>,
    ) -> Result<FiniteScm> {
        endo.sort_by(|a, b| natural_cmp(&a.name, &b.name));
        exo.sort_by(|a, b| natural_cmp(&a.name, &b.name));
        let mut names: Vec<&str> = endo.iter().map(|v| v.name.as_str()).chain(exo.iter().map(|v| v.name.as_str())).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::NameCollision(w[0].to_string()));
        }
        let mut m = FiniteScm { endo, exo, mechs: Vec::new() };
        let mut slots: Vec<Option<TabularMechanism>> = vec![None; m.endo.len()];
        for (target, arg_names, table, expr) in pieces {
            let k = m.endo_index(&target)?;
            let given = arg_names.iter().map(|a| m.var_ref(a)).collect::<Result<Vec<_>>>()?;
            let given_sizes: Vec<usize> = given.iter().map(|&r| m.ref_domain(r).len()).collect();
            let mut args = given.clone();
            args.sort_unstable();
            args.dedup();
            let sizes: Vec<usize> = args.iter().map(|&r| m.ref_domain(r).len()).collect();
            let pos: Vec<usize> = given.iter().map(|g| args.iter().position(|a| a == g).unwrap()).collect();
            let mut out = Vec::with_capacity(table.len());
            let mut od = Odometer::full(&sizes);
            while let Some(combo) = od.next_combo() {
                let mut row = 0;
                for (i, &p) in pos.iter().enumerate() {
                    row = row * given_sizes[i] + combo[p];
                }
                out.push(table[row]);
            }
            slots[k] = Some(TabularMechanism::new(args, &sizes, out, expr));
        }
        for (k, slot) in slots.into_iter().enumerate() {
            m.mechs.push(slot.ok_or_else(|| Error::InvalidModel(vec![format!("no mechanism for {}", m.endo[k].name)]))?);
        }
        Ok(m)
    }

    /// Mechanism of `k` as name-based pieces for [`FiniteScm::assemble`].
    pub(crate) fn piece(&self, k: usize) -> (String, Vec<String>, Vec<usize>, Option<Expr>) {
        let m = &self.mechs[k];
        (
            self.endo[k].name.clone(),
            m.args.iter().map(|&r| self.ref_name(r).to_string()).collect(),
            m.table.clone(),
            m.expr.clone(),
        )
    }

    pub fn builder() -> FiniteScmBuilder {
        FiniteScmBuilder::default()
    }

    pub fn endogenous(&self) -> &[Endogenous] {
        &self.endo
    }

    pub fn exogenous(&self) -> &[Exogenous] {
        &self.exo
    }

    pub fn mechanisms(&self) -> &[TabularMechanism] {
        &self.mechs
    }

    pub fn endo_index(&self, name: &str) -> Result<usize> {
        self.endo.iter().position(|v| v.name == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn exo_index(&self, name: &str) -> Result<usize> {
        self.exo.iter().position(|v| v.name == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn var_ref(&self, name: &str) -> Result<VarRef> {
        self.endo_index(name).map(VarRef::Endo).or_else(|_| self.exo_index(name).map(VarRef::Exo))
    }

    pub fn ref_name(&self, r: VarRef) -> &str {
        match r {
            VarRef::Endo(i) => &self.endo[i].name,
            VarRef::Exo(j) => &self.exo[j].name,
        }
    }

    pub fn ref_domain(&self, r: VarRef) -> &FiniteDomain {
        match r {
            VarRef::Endo(i) => &self.endo[i].domain,
            VarRef::Exo(j) => &self.exo[j].domain,
        }
    }

    /// Index of `value` in the domain of endogenous `var`.
    pub fn value_index(&self, var: &str, value: &Value) -> Result<usize> {
        let k = self.endo_index(var)?;
        self.endo[k]
            .domain
            .index_of(value)
            .ok_or_else(|| Error::ValueOutOfDomain { var: var.to_string(), value: value.to_string() })
    }

    pub(crate) fn supports(&self) -> Vec<Vec<usize>> {
        self.exo.iter().map(Exogenous::support).collect()
    }

    /// Allowed value indices for each reference; exogenous ones are
    /// restricted to their support when `support_only` is set.
    pub(crate) fn ranges(&self, refs: &[VarRef], support_only: bool) -> Vec<Vec<usize>> {
        refs.iter()
            .map(|&r| match r {
                VarRef::Exo(j) if support_only => self.exo[j].support(),
                _ => (0..self.ref_domain(r).len()).collect(),
            })
            .collect()
    }

    pub(crate) fn write(refs: &[VarRef], combo: &[usize], x: &mut [usize], e: &mut [usize]) {
        for (&r, &v) in refs.iter().zip(combo) {
            match r {
                VarRef::Endo(i) => x[i] = v,
                VarRef::Exo(j) => e[j] = v,
            }
        }
    }

    /// Baseline assignment: first domain value for endogenous variables and
    /// first support value for exogenous ones.
    pub(crate) fn baseline(&self) -> (Vec<usize>, Vec<usize>) {
        let e = self.exo.iter().map(|v| v.support().first().copied().unwrap_or(0)).collect();
        (vec![0; self.endo.len()], e)
    }

    pub(crate) fn prob_of(&self, e: &[usize]) -> Prob {
        let mut p = Prob::one();
        for (j, &v) in e.iter().enumerate() {
            p *= &self.exo[j].probs[v];
        }
        p
    }

    /// Tabulates `f` over the full product of the argument domains.
    /// Results outside the target domain are errors on positive-probability
    /// rows and are replaced by the first domain value elsewhere.
    pub(crate) fn tabulate(
        &self,
        k: usize,
        arg_names: &[String],
        f: &dyn Fn(&[Value]) -> std::result::Result<Value, String>,
        expr: Option<Expr>,
    ) -> Result<TabularMechanism> {
        let given = arg_names.iter().map(|a| self.var_ref(a)).collect::<Result<Vec<_>>>()?;
        let mut args = given.clone();
        args.sort_unstable();
        args.dedup();
        if args.len() != given.len() {
            return Err(Error::DuplicateName(format!("argument of {}", self.endo[k].name)));
        }
        let sizes: Vec<usize> = args.iter().map(|&r| self.ref_domain(r).len()).collect();
        let pos: Vec<usize> = given.iter().map(|g| args.iter().position(|a| a == g).unwrap()).collect();
        let target = &self.endo[k];
        let mut table = Vec::with_capacity(sizes.iter().product());
        let mut od = Odometer::full(&sizes);
        let mut vals = Vec::with_capacity(given.len());
        while let Some(combo) = od.next_combo() {
            vals.clear();
            vals.extend(pos.iter().map(|&p| self.ref_domain(args[p]).get(combo[p]).clone()));
            let out = f(&vals);
            let hit = out.as_ref().ok().and_then(|v| target.domain.index_of(v));
            match hit {
                Some(i) => table.push(i),
                None => {
                    let positive = args.iter().zip(combo).all(|(&r, &c)| match r {
                        VarRef::Exo(j) => self.exo[j].probs[c].is_positive(),
                        VarRef::Endo(_) => true,
                    });
                    if positive {
                        let shown = match out {
                            Ok(v) => v.to_string(),
                            Err(m) => m,
                        };
                        return Err(Error::ValueOutOfDomain { var: target.name.clone(), value: shown });
                    }
                    table.push(0);
                }
            }
        }
        Ok(TabularMechanism::new(args, &sizes, table, expr))
    }

    /// Structural problems: unnormalized or negative measures, malformed tables.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in &self.exo {
            if v.probs.len() != v.domain.len() {
                out.push(format!("measure of {} has the wrong length", v.name));
                continue;
            }
            if v.probs.iter().any(|p| p.is_negative()) {
                out.push(format!("measure of {} has a negative probability", v.name));
            }
            if total(&v.probs) != Prob::one() {
                out.push(format!("measure not normalized: {} sums to {}", v.name, fmt_ratio(&total(&v.probs))));
            }
        }
        if self.mechs.len() != self.endo.len() {
            out.push("mechanism count differs from variable count".into());
        }
        for (k, m) in self.mechs.iter().enumerate() {
            let n: usize = m.args.iter().map(|&r| self.ref_domain(r).len()).product();
            if m.table.len() != n {
                out.push(format!("table of {} has the wrong length", self.endo[k].name));
            }
            if m.table.iter().any(|&v| v >= self.endo[k].domain.len()) {
                out.push(format!("table of {} leaves its domain", self.endo[k].name));
            }
        }
        out
    }

    /// Functional parents of endogenous `k` by position.
    pub fn parents_idx(&self, k: usize) -> Vec<VarRef> {
        let m = &self.mechs[k];
        let me = VarRef::Endo(k);
        let mut scope = m.args.clone();
        if !scope.contains(&me) {
            scope.push(me);
            scope.sort_unstable();
        }
        let (mut x, mut e) = self.baseline();
        let mut out = Vec::new();
        for &v in m.args.iter().filter(|&&v| v != me) {
            let others: Vec<VarRef> = scope.iter().copied().filter(|&r| r != v).collect();
            let v_range = &self.ranges(&[v], true)[0];
            let mut od = Odometer::new(self.ranges(&others, true));
            let mut varies = false;
            'outer: while let Some(combo) = od.next_combo() {
                Self::write(&others, combo, &mut x, &mut e);
                let mut first = None;
                for &w in v_range {
                    Self::write(&[v], &[w], &mut x, &mut e);
                    let member = m.eval(&x, &e) == x[k];
                    match first {
                        None => first = Some(member),
                        Some(f) if f != member => {
                            varies = true;
                            break 'outer;
                        }
                        _ => {}
                    }
                }
            }
            if varies {
                out.push(v);
            }
        }
        if m.args.contains(&me) {
            let others: Vec<VarRef> = m.args.iter().copied().filter(|&r| r != me).collect();
            let mut od = Odometer::new(self.ranges(&others, true));
            while let Some(combo) = od.next_combo() {
                Self::write(&others, combo, &mut x, &mut e);
                let mut count = 0;
                for xk in 0..self.endo[k].domain.len() {
                    x[k] = xk;
                    if m.eval(&x, &e) == xk {
                        count += 1;
                    }
                }
                if count != 1 {
                    out.push(me);
                    break;
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks that two models declare the same variables, domains and noise law.
    pub fn same_signature(&self, other: &FiniteScm) -> Result<()> {
        if self.endo != other.endo {
            return Err(Error::SignatureMismatch("endogenous variables or domains differ".into()));
        }
        if self.exo != other.exo {
            return Err(Error::SignatureMismatch("exogenous variables or measures differ".into()));
        }
        Ok(())
    }

    /// Whether every mechanism pair defines the same relation on all
    /// endogenous values and all positive-probability noise values.
    pub fn mechanisms_equivalent(&self, other: &FiniteScm) -> Result<bool> {
        self.same_signature(other)?;
        let (mut x, mut e) = self.baseline();
        for k in 0..self.endo.len() {
            let (m1, m2) = (&self.mechs[k], &other.mechs[k]);
            let mut scope: Vec<VarRef> = m1.args.iter().chain(&m2.args).copied().chain([VarRef::Endo(k)]).collect();
            scope.sort_unstable();
            scope.dedup();
            let mut od = Odometer::new(self.ranges(&scope, true));
            while let Some(combo) = od.next_combo() {
                Self::write(&scope, combo, &mut x, &mut e);
                if (m1.eval(&x, &e) == x[k]) != (m2.eval(&x, &e) == x[k]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Equivalent model whose mechanisms read exactly their functional parents.
    pub fn canonicalize(&self) -> FiniteScm {
        let (x0, e0) = self.baseline();
        let mut mechs = Vec::with_capacity(self.endo.len());
        for k in 0..self.endo.len() {
            let m = &self.mechs[k];
            let pa = self.parents_idx(k);
            let self_loop = pa.contains(&VarRef::Endo(k));
            let sizes: Vec<usize> = pa.iter().map(|&r| self.ref_domain(r).len()).collect();
            let (mut x, mut e) = (x0.clone(), e0.clone());
            let mut table = Vec::new();
            let mut od = Odometer::full(&sizes);
            while let Some(combo) = od.next_combo() {
                Self::write(&pa, combo, &mut x, &mut e);
                let v = if self_loop {
                    m.eval(&x, &e)
                } else {
                    let mut hit = None;
                    for xk in 0..self.endo[k].domain.len() {
                        x[k] = xk;
                        if m.eval(&x, &e) == xk {
                            hit = Some(xk);
                            break;
                        }
                    }
                    x[k] = x0[k];
                    hit.unwrap_or(0)
                };
                table.push(v);
            }
            mechs.push(TabularMechanism::new(pa, &sizes, table, None));
        }
        FiniteScm { endo: self.endo.clone(), exo: self.exo.clone(), mechs }
    }

    pub fn to_json(&self) -> Json {
        let vals = |d: &FiniteDomain| -> Vec<Json> { d.values().iter().map(value_json).collect() };
        json!({
            "family": "finite",
            "endogenous": self.endo.iter().map(|v| json!({"name": v.name, "domain": vals(&v.domain)})).collect::<Vec<_>>(),
            "exogenous": self.exo.iter().map(|v| json!({
                "name": v.name,
                "domain": vals(&v.domain),
                "probs": v.probs.iter().map(fmt_ratio).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "mechanisms": self.mechs.iter().enumerate().map(|(k, m)| json!({
                "target": self.endo[k].name,
                "args": m.args.iter().map(|&r| self.ref_name(r)).collect::<Vec<_>>(),
                "table": m.table.iter().map(|&i| value_json(self.endo[k].domain.get(i))).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub(crate) fn value_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Sym(s) => json!(s),
    }
}

impl StructuralModel for FiniteScm {
    fn endogenous_names(&self) -> Vec<String> {
        self.endo.iter().map(|v| v.name.clone()).collect()
    }

    fn exogenous_names(&self) -> Vec<String> {
        self.exo.iter().map(|v| v.name.clone()).collect()
    }

    fn functional_parents(&self, k: &str) -> Result<Vec<String>> {
        let k = self.endo_index(k)?;
        Ok(self.parents_idx(k).into_iter().map(|r| self.ref_name(r).to_string()).collect())
    }
}

impl fmt::Display for FiniteScm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::dsl::serialize(&super::Model::Finite(self.clone())))
    }
}
