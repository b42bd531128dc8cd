//! Model surgery: perfect interventions, twin models, extension by noise
//! copies, and marginalization of uniquely solvable subsets.

use nalgebra::{DMatrix, DVector};

use crate::dsl::expr::Expr;
use crate::error::{Error, Result};
use crate::odometer::Odometer;
use crate::scm::{Endogenous, FiniteScm, LinearScm, Model, VarRef};
use crate::value::Value;

/// Perfect intervention: each target is held at its value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Intervention<V> {
    assignments: Vec<(String, V)>,
}

impl<V: Clone> Intervention<V> {
    pub fn new<S: Into<String>, W: Into<V>>(assignments: impl IntoIterator<Item = (S, W)>) -> Self {
        Intervention { assignments: assignments.into_iter().map(|(s, v)| (s.into(), v.into())).collect() }
    }

    pub fn none() -> Self {
        Intervention { assignments: Vec::new() }
    }

    pub fn assignments(&self) -> &[(String, V)] {
        &self.assignments
    }

    pub fn targets(&self) -> Vec<String> {
        self.assignments.iter().map(|(s, _)| s.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Union with another intervention on disjoint targets.
    pub fn and(&self, other: &Intervention<V>) -> Self {
        let mut a = self.assignments.clone();
        a.extend(other.assignments.iter().cloned());
        Intervention { assignments: a }
    }

    fn check_distinct(&self) -> Result<()> {
        for (i, (n, _)) in self.assignments.iter().enumerate() {
            if self.assignments[..i].iter().any(|(m, _)| m == n) {
                return Err(Error::DuplicateName(format!("intervention target {n}")));
            }
        }
        Ok(())
    }
}

/// Suffix marking the counterfactual copy of a variable.
pub const TWIN_SUFFIX: &str = "'";

pub fn twin_name(name: &str) -> String {
    format!("{name}{TWIN_SUFFIX}")
}

impl FiniteScm {
    /// Replaces the mechanisms of the targets by constants.
    pub fn intervene(&self, iv: &Intervention<Value>) -> Result<FiniteScm> {
        iv.check_distinct()?;
        let mut m = self.clone();
        for (name, v) in iv.assignments() {
            let k = self.endo_index(name)?;
            let i = self.value_index(name, v)?;
            m.mechs[k] = crate::scm::TabularMechanism::constant(i, Some(Expr::value(v)));
        }
        Ok(m)
    }

    /// Model on the variables and their primed copies sharing all noise.
    pub fn twin(&self) -> Result<FiniteScm> {
        let mut endo = self.endo.clone();
        for v in &self.endo {
            let n = twin_name(&v.name);
            if self.var_ref(&n).is_ok() {
                return Err(Error::NameCollision(n));
            }
            endo.push(Endogenous { name: n, domain: v.domain.clone() });
        }
        let rename = |n: &str| if self.endo_index(n).is_ok() { twin_name(n) } else { n.to_string() };
        let mut pieces = Vec::new();
        for k in 0..self.endo.len() {
            let (t, args, table, expr) = self.piece(k);
            let copy = (twin_name(&t), args.iter().map(|a| rename(a)).collect(), table.clone(), expr.as_ref().map(|e| e.rename(&rename)));
            pieces.push((t, args, table, expr));
            pieces.push(copy);
        }
        FiniteScm::assemble(endo, self.exo.clone(), pieces)
    }

    /// Adds an endogenous copy of every noise variable, fed only by that
    /// noise, and lets every mechanism read the copies instead.
    pub fn extend(&self) -> Result<FiniteScm> {
        let mut endo = self.endo.clone();
        for v in &self.exo {
            let n = twin_name(&v.name);
            if self.var_ref(&n).is_ok() {
                return Err(Error::NameCollision(n));
            }
            endo.push(Endogenous { name: n, domain: v.domain.clone() });
        }
        let rename = |n: &str| if self.exo_index(n).is_ok() { twin_name(n) } else { n.to_string() };
        let mut pieces = Vec::new();
        for k in 0..self.endo.len() {
            let (t, args, table, expr) = self.piece(k);
            pieces.push((t, args.iter().map(|a| rename(a)).collect(), table, expr.map(|e| e.rename(&rename))));
        }
        for v in &self.exo {
            let ident: Vec<usize> = (0..v.domain.len()).collect();
            pieces.push((twin_name(&v.name), vec![v.name.clone()], ident, Some(Expr::var(&v.name))));
        }
        FiniteScm::assemble(endo, self.exo.clone(), pieces)
    }

    /// Substitutes the solution of the latent subset into the remaining
    /// mechanisms. The subset must be uniquely solvable.
    pub fn marginalize<S: AsRef<str>>(&self, latent: &[S]) -> Result<FiniteScm> {
        let l = self.indices(latent)?;
        if l.is_empty() {
            return Ok(self.clone());
        }
        let g = self.solve_map_idx(&l)?;
        let keep: Vec<usize> = (0..self.endo.len()).filter(|k| !l.contains(k)).collect();
        let endo: Vec<Endogenous> = keep.iter().map(|&k| self.endo[k].clone()).collect();
        let mut pieces = Vec::new();
        let (x0, e0) = self.baseline();
        for &o in &keep {
            let mech = &self.mechs[o];
            let touches = mech.args.iter().any(|r| matches!(r, VarRef::Endo(i) if l.contains(i)));
            if !touches {
                pieces.push(self.piece(o));
                continue;
            }
            let mut args: Vec<VarRef> = mech
                .args
                .iter()
                .copied()
                .filter(|r| !matches!(r, VarRef::Endo(i) if l.contains(i)))
                .chain(g.args.iter().copied())
                .collect();
            args.sort_unstable();
            args.dedup();
            let sizes: Vec<usize> = args.iter().map(|&r| self.ref_domain(r).len()).collect();
            let (mut x, mut e) = (x0.clone(), e0.clone());
            let mut table = Vec::new();
            let mut od = Odometer::full(&sizes);
            while let Some(combo) = od.next_combo() {
                FiniteScm::write(&args, combo, &mut x, &mut e);
                let sol = g.row(&x, &e).to_vec();
                for (&k, &v) in l.iter().zip(&sol) {
                    x[k] = v;
                }
                table.push(mech.eval(&x, &e));
            }
            let names = args.iter().map(|&r| self.ref_name(r).to_string()).collect();
            pieces.push((self.endo[o].name.clone(), names, table, None));
        }
        FiniteScm::assemble(endo, self.exo.clone(), pieces)
    }
}

impl LinearScm {
    fn rebuild(&self, endo: Vec<String>, b: DMatrix<f64>, gamma: DMatrix<f64>, c: DVector<f64>) -> Result<LinearScm> {
        let coords = self.coords();
        let mut builder = LinearScm::builder().endogenous(&endo);
        for bl in &self.blocks {
            builder = builder.block(bl.clone());
        }
        for (k, t) in endo.iter().enumerate() {
            for (i, s) in endo.iter().enumerate() {
                if b[(k, i)] != 0.0 {
                    builder = builder.coef(t, s, b[(k, i)]);
                }
            }
            for (j, s) in coords.iter().enumerate() {
                if gamma[(k, j)] != 0.0 {
                    builder = builder.coef(t, s, gamma[(k, j)]);
                }
            }
            if c[k] != 0.0 {
                builder = builder.intercept(t, c[k]);
            }
        }
        Ok(builder.build()?.with_tolerance(self.tol))
    }

    /// Zeroes the target rows of `B` and `Γ` and sets the intercepts.
    pub fn intervene(&self, iv: &Intervention<f64>) -> Result<LinearScm> {
        iv.check_distinct()?;
        let mut m = self.clone();
        for (name, v) in iv.assignments() {
            let k = self.endo_index(name)?;
            m.b.row_mut(k).fill(0.0);
            m.gamma.row_mut(k).fill(0.0);
            m.c[k] = *v;
        }
        Ok(m)
    }

    pub fn twin(&self) -> Result<LinearScm> {
        let n = self.endo.len();
        let mut endo = self.endo.clone();
        for v in &self.endo {
            let t = twin_name(v);
            if self.endo.contains(&t) || self.coords().contains(&t) || self.blocks.iter().any(|b| b.name == t) {
                return Err(Error::NameCollision(t));
            }
            endo.push(t);
        }
        let mut b = DMatrix::zeros(2 * n, 2 * n);
        b.view_mut((0, 0), (n, n)).copy_from(&self.b);
        b.view_mut((n, n), (n, n)).copy_from(&self.b);
        let mut gamma = DMatrix::zeros(2 * n, self.gamma.ncols());
        gamma.view_mut((0, 0), (n, self.gamma.ncols())).copy_from(&self.gamma);
        gamma.view_mut((n, 0), (n, self.gamma.ncols())).copy_from(&self.gamma);
        let c = DVector::from_fn(2 * n, |i, _| self.c[i % n]);
        self.rebuild(endo, b, gamma, c)
    }

    /// Endogenous copy of every noise coordinate; equations read the copies.
    pub fn extend(&self) -> Result<LinearScm> {
        let coords = self.coords();
        let (n, m) = (self.endo.len(), coords.len());
        let mut endo = self.endo.clone();
        for cn in &coords {
            let t = twin_name(cn);
            if self.endo.contains(&t) || coords.contains(&t) || self.blocks.iter().any(|b| b.name == t) {
                return Err(Error::NameCollision(t));
            }
            endo.push(t);
        }
        let mut b = DMatrix::zeros(n + m, n + m);
        b.view_mut((0, 0), (n, n)).copy_from(&self.b);
        b.view_mut((0, n), (n, m)).copy_from(&self.gamma);
        let mut gamma = DMatrix::zeros(n + m, m);
        gamma.view_mut((n, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
        let c = DVector::from_fn(n + m, |i, _| if i < n { self.c[i] } else { 0.0 });
        self.rebuild(endo, b, gamma, c)
    }

    /// Eliminates the latent rows:
    /// `B̃ = B_OO + B_OL (I − B_LL)⁻¹ B_LO`, and likewise for `Γ` and `c`.
    pub fn marginalize<S: AsRef<str>>(&self, latent: &[S]) -> Result<LinearScm> {
        let mut l: Vec<usize> = latent.iter().map(|s| self.endo_index(s.as_ref())).collect::<Result<_>>()?;
        l.sort_unstable();
        l.dedup();
        let o: Vec<usize> = (0..self.endo.len()).filter(|k| !l.contains(k)).collect();
        let sub = |a: &DMatrix<f64>, r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| a[(r[i], c[j])]);
        let rows = |a: &DMatrix<f64>, r: &[usize]| DMatrix::from_fn(r.len(), a.ncols(), |i, j| a[(r[i], j)]);
        let vec = |v: &DVector<f64>, r: &[usize]| DVector::from_fn(r.len(), |i, _| v[r[i]]);
        let inv = self.solve_inverse(&l)?;
        let bol = sub(&self.b, &o, &l);
        let carry = &bol * &inv;
        let b = sub(&self.b, &o, &o) + &carry * sub(&self.b, &l, &o);
        let gamma = rows(&self.gamma, &o) + &carry * rows(&self.gamma, &l);
        let c = vec(&self.c, &o) + &carry * vec(&self.c, &l);
        self.rebuild(o.iter().map(|&k| self.endo[k].clone()).collect(), b, gamma, c)
    }
}

impl Model {
    pub fn twin(&self) -> Result<Model> {
        Ok(match self {
            Model::Finite(m) => Model::Finite(m.twin()?),
            Model::Linear(m) => Model::Linear(m.twin()?),
        })
    }

    pub fn extend(&self) -> Result<Model> {
        Ok(match self {
            Model::Finite(m) => Model::Finite(m.extend()?),
            Model::Linear(m) => Model::Linear(m.extend()?),
        })
    }

    pub fn marginalize<S: AsRef<str>>(&self, latent: &[S]) -> Result<Model> {
        Ok(match self {
            Model::Finite(m) => Model::Finite(m.marginalize(latent)?),
            Model::Linear(m) => Model::Linear(m.marginalize(latent)?),
        })
    }

    /// Intervention from textual values, parsed per family.
    pub fn intervene_str(&self, assignments: &[(String, String)]) -> Result<Model> {
        Ok(match self {
            Model::Finite(m) => {
                Model::Finite(m.intervene(&Intervention::new(assignments.iter().map(|(k, v)| (k.clone(), Value::parse(v)))))?)
            }
            Model::Linear(m) => {
                let iv = assignments
                    .iter()
                    .map(|(k, v)| {
                        crate::value::parse_real(v)
                            .map(|x| (k.clone(), x))
                            .ok_or_else(|| Error::ValueOutOfDomain { var: k.clone(), value: v.clone() })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Model::Linear(m.intervene(&Intervention::new(iv))?)
            }
        })
    }
}
