//! Fibers and solvability of finite models.

use crate::error::{Error, Result};
use crate::odometer::Odometer;
use crate::scm::{FiniteScm, StructuralModel, VarRef};
use crate::value::Value;

/// Backtracking solver for the structural equations of a subset.
pub(crate) struct Subsystem<'a> {
    m: &'a FiniteScm,
    subset: Vec<usize>,
    order: Vec<usize>,
    checks: Vec<Vec<usize>>,
}

impl<'a> Subsystem<'a> {
    pub fn new(m: &'a FiniteScm, subset: &[usize]) -> Self {
        let inside = |i: usize| subset.contains(&i);
        let scope: Vec<Vec<usize>> = subset
            .iter()
            .map(|&k| {
                let mut s: Vec<usize> = m.mechs[k]
                    .args
                    .iter()
                    .filter_map(|r| match *r {
                        VarRef::Endo(i) if inside(i) => Some(i),
                        _ => None,
                    })
                    .collect();
                s.push(k);
                s
            })
            .collect();
        // Greedy order: next the variable whose equation waits on the fewest
        // unassigned subset members.
        let mut order = Vec::with_capacity(subset.len());
        let mut done = vec![false; subset.len()];
        for _ in 0..subset.len() {
            let (best, _) = (0..subset.len())
                .filter(|&i| !done[i])
                .map(|i| {
                    let waiting = scope[i].iter().filter(|&&v| v != subset[i] && !order.contains(&v)).count();
                    (i, waiting)
                })
                .min_by_key(|&(i, w)| (w, i))
                .unwrap();
            done[best] = true;
            order.push(subset[best]);
        }
        let mut checks = vec![Vec::new(); order.len()];
        for (i, &k) in subset.iter().enumerate() {
            let last = scope[i].iter().map(|v| order.iter().position(|o| o == v).unwrap()).max().unwrap();
            checks[last].push(k);
        }
        Subsystem { m, subset: subset.to_vec(), order, checks }
    }

    /// Calls `f` with each solution (values of the subset in the order it was
    /// given) until `f` returns false. `x` holds the context and is used as
    /// scratch space for the subset coordinates.
    pub fn for_each(&self, x: &mut [usize], e: &[usize], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        self.rec(0, x, e, f)
    }

    fn rec(&self, depth: usize, x: &mut [usize], e: &[usize], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if depth == self.order.len() {
            let sol: Vec<usize> = self.subset.iter().map(|&k| x[k]).collect();
            return f(&sol);
        }
        let v = self.order[depth];
        for val in 0..self.m.endo[v].domain.len() {
            x[v] = val;
            if self.checks[depth].iter().all(|&k| self.m.mechs[k].eval(x, e) == x[k]) && !self.rec(depth + 1, x, e, f) {
                return false;
            }
        }
        true
    }

    /// Number of solutions, counting no further than `limit`.
    pub fn count(&self, x: &mut [usize], e: &[usize], limit: usize) -> usize {
        let mut n = 0;
        self.for_each(x, e, &mut |_| {
            n += 1;
            n < limit
        });
        n
    }

    pub fn first(&self, x: &mut [usize], e: &[usize]) -> Option<Vec<usize>> {
        let mut out = None;
        self.for_each(x, e, &mut |s| {
            out = Some(s.to_vec());
            false
        });
        out
    }

    pub fn all(&self, x: &mut [usize], e: &[usize]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.for_each(x, e, &mut |s| {
            out.push(s.to_vec());
            true
        });
        out
    }
}

/// Solution of a uniquely solvable subset as a table over its context
/// parents and exogenous parents.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSolveMap {
    pub targets: Vec<String>,
    pub endo_args: Vec<String>,
    pub exo_args: Vec<String>,
    pub(crate) target_idx: Vec<usize>,
    pub(crate) args: Vec<VarRef>,
    pub(crate) sizes: Vec<usize>,
    pub(crate) table: Vec<Vec<usize>>,
}

impl FiniteSolveMap {
    pub(crate) fn row(&self, x: &[usize], e: &[usize]) -> &[usize] {
        let mut row = 0;
        for (a, s) in self.args.iter().zip(&self.sizes) {
            row = row * s
                + match *a {
                    VarRef::Endo(i) => x[i],
                    VarRef::Exo(j) => e[j],
                };
        }
        &self.table[row]
    }

    /// Values of the targets for the named argument values.
    pub fn apply(&self, m: &FiniteScm, inputs: &[(&str, Value)]) -> Result<Vec<Value>> {
        let (mut x, mut e) = m.baseline();
        for (n, v) in inputs {
            let r = m.var_ref(n)?;
            let i = m
                .ref_domain(r)
                .index_of(v)
                .ok_or_else(|| Error::ValueOutOfDomain { var: n.to_string(), value: v.to_string() })?;
            FiniteScm::write(&[r], &[i], &mut x, &mut e);
        }
        Ok(self.row(&x, &e).iter().zip(&self.target_idx).map(|(&v, &k)| m.endo[k].domain.get(v).clone()).collect())
    }
}

impl FiniteScm {
    pub(crate) fn indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = names.iter().map(|n| self.endo_index(n.as_ref())).collect::<Result<_>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Context endogenous parents and exogenous parents of a subset.
    pub(crate) fn subset_parents(&self, subset: &[usize]) -> Vec<VarRef> {
        let mut pa: Vec<VarRef> = subset
            .iter()
            .flat_map(|&k| self.parents_idx(k))
            .filter(|r| !matches!(r, VarRef::Endo(i) if subset.contains(i)))
            .collect();
        pa.sort_unstable();
        pa.dedup();
        pa
    }

    fn describe(&self, refs: &[VarRef], combo: &[usize]) -> String {
        let parts: Vec<String> =
            refs.iter().zip(combo).map(|(&r, &c)| format!("{}={}", self.ref_name(r), self.ref_domain(r).get(c))).collect();
        format!("({})", parts.join(", "))
    }

    /// Checks the solution count of `subset` over every context value and
    /// every positive-probability noise value. Returns a witness on failure.
    fn solvability_witness(&self, subset: &[usize], unique: bool) -> Option<String> {
        let sys = Subsystem::new(self, subset);
        let pa = self.subset_parents(subset);
        let (mut x, mut e) = self.baseline();
        let mut od = Odometer::new(self.ranges(&pa, true));
        while let Some(combo) = od.next_combo() {
            Self::write(&pa, combo, &mut x, &mut e);
            let n = sys.count(&mut x, &e, 2);
            if n == 0 || (unique && n > 1) {
                let what = if n == 0 { "no solution" } else { "several solutions" };
                return Some(format!("{what} at {}", self.describe(&pa, combo)));
            }
        }
        None
    }

    fn names(&self, subset: &[usize]) -> Vec<String> {
        subset.iter().map(|&k| self.endo[k].name.clone()).collect()
    }

    /// Solutions of the subset equations for the given noise values and
    /// context values of the remaining endogenous variables.
    pub fn fiber<S: AsRef<str>>(&self, subset: &[S], noise: &[(&str, Value)], context: &[(&str, Value)]) -> Result<Vec<Vec<Value>>> {
        let o = self.indices(subset)?;
        let (mut x, mut e) = self.baseline();
        for (n, v) in noise.iter().chain(context) {
            let r = self.var_ref(n)?;
            if let VarRef::Endo(i) = r {
                if o.contains(&i) {
                    return Err(Error::Unsupported(format!("context assigns {n}, which is being solved for")));
                }
            }
            let i = self
                .ref_domain(r)
                .index_of(v)
                .ok_or_else(|| Error::ValueOutOfDomain { var: n.to_string(), value: v.to_string() })?;
            Self::write(&[r], &[i], &mut x, &mut e);
        }
        let sols = Subsystem::new(self, &o).all(&mut x, &e);
        Ok(sols
            .into_iter()
            .map(|s| s.iter().zip(&o).map(|(&v, &k)| self.endo[k].domain.get(v).clone()).collect())
            .collect())
    }

    /// Solvable with respect to a subset: every context and almost every
    /// noise value admit at least one solution.
    pub fn solvable_wrt<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        Ok(self.solvability_witness(&self.indices(subset)?, false).is_none())
    }

    /// Uniquely solvable: exactly one solution everywhere that matters.
    pub fn uniquely_solvable_wrt<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        Ok(self.solvability_witness(&self.indices(subset)?, true).is_none())
    }

    pub(crate) fn require_unique(&self, subset: &[usize]) -> Result<()> {
        match self.solvability_witness(subset, true) {
            None => Ok(()),
            Some(witness) => Err(Error::NotUniquelySolvable { subset: self.names(subset), witness }),
        }
    }

    /// The solution function of a uniquely solvable subset. Rows for noise
    /// values outside the support hold the first solution, if any.
    pub fn solve_map<S: AsRef<str>>(&self, subset: &[S]) -> Result<FiniteSolveMap> {
        let o = self.indices(subset)?;
        self.solve_map_idx(&o)
    }

    pub(crate) fn solve_map_idx(&self, o: &[usize]) -> Result<FiniteSolveMap> {
        self.require_unique(o)?;
        let sys = Subsystem::new(self, o);
        let args = self.subset_parents(o);
        let sizes: Vec<usize> = args.iter().map(|&r| self.ref_domain(r).len()).collect();
        let (mut x, mut e) = self.baseline();
        let mut table = Vec::new();
        let mut od = Odometer::full(&sizes);
        while let Some(combo) = od.next_combo() {
            Self::write(&args, combo, &mut x, &mut e);
            table.push(sys.first(&mut x, &e).unwrap_or_else(|| vec![0; o.len()]));
        }
        let name = |r: &VarRef| self.ref_name(*r).to_string();
        Ok(FiniteSolveMap {
            targets: self.names(o),
            endo_args: args.iter().filter(|r| matches!(r, VarRef::Endo(_))).map(name).collect(),
            exo_args: args.iter().filter(|r| matches!(r, VarRef::Exo(_))).map(name).collect(),
            target_idx: o.to_vec(),
            args,
            sizes,
            table,
        })
    }

    /// Uniquely solvable with respect to every single variable, which holds
    /// exactly when no variable is its own functional parent.
    pub fn structurally_uniquely_solvable(&self) -> bool {
        let ok = (0..self.endo.len()).all(|k| self.solvability_witness(&[k], true).is_none());
        debug_assert_eq!(ok, (0..self.endo.len()).all(|k| !self.parents_idx(k).contains(&VarRef::Endo(k))));
        ok
    }

    /// Uniquely solvable with respect to every subset, decided on the loops
    /// of the functional graph.
    pub fn uniquely_solvable_all_subsets(&self) -> Result<bool> {
        let g = self.functional_graph();
        for lp in g.enumerate_loops()? {
            if !self.uniquely_solvable_wrt(&lp)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
