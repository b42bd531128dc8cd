//! Equivalence of models at the observational, interventional and
//! counterfactual level, and the causal graphs read off intervened models.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use num_traits::Zero;
use serde_json::{json, Value as Json};

use crate::analysis::{GaussianDistribution, MAX_SELECTORS};
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::odometer::Odometer;
use crate::scm::{FiniteScm, LinearScm, Model, StructuralModel, VarRef};
use crate::transform::{twin_name, Intervention};
use crate::value::{Prob, Value};

/// Cap on the number of intervened model pairs compared by one check.
pub const MAX_INTERVENTIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Observational,
    Interventional,
    Counterfactual,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Observational => "observational",
            Level::Interventional => "interventional",
            Level::Counterfactual => "counterfactual",
        })
    }
}

/// A setting under which two models disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Intervention applied to both models, as `(variable, value)` text.
    pub intervention: Vec<(String, String)>,
    pub detail: String,
}

/// Outcome of an equivalence check. `witnesses` is empty iff the verdict is
/// true.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub level: Level,
    pub margin: Vec<String>,
    pub verdict: bool,
    pub witnesses: Vec<Witness>,
}

impl EquivalenceReport {
    fn new(level: Level, margin: &[String], witnesses: Vec<Witness>) -> Self {
        EquivalenceReport { level, margin: margin.to_vec(), verdict: witnesses.is_empty(), witnesses }
    }

    pub fn to_json(&self) -> Json {
        let w: Vec<Json> = self
            .witnesses
            .iter()
            .map(|w| {
                let iv: serde_json::Map<String, Json> =
                    w.intervention.iter().map(|(n, v)| (n.clone(), Json::String(v.clone()))).collect();
                json!({"intervention": iv, "detail": w.detail})
            })
            .collect();
        json!({"level": self.level.to_string(), "margin": self.margin, "verdict": self.verdict, "witnesses": w})
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} equivalence w.r.t. {{{}}}: {}", self.level, self.margin.join(", "), self.verdict)?;
        for w in &self.witnesses {
            let iv: Vec<String> = w.intervention.iter().map(|(n, v)| format!("{n}={v}")).collect();
            writeln!(f, "  do({}): {}", iv.join(", "), w.detail)?;
        }
        Ok(())
    }
}

fn sorted_names<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    let mut out: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
    out.sort_by(|a, b| crate::value::natural_cmp(a, b));
    out.dedup();
    out
}

/// Subsets of `0..n` ordered by size, then lexicographically.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u64..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

// ---------- finite models ----------

fn margin_indices(m1: &FiniteScm, m2: &FiniteScm, margin: &[String]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for n in margin {
        let (i, j) = (m1.endo_index(n)?, m2.endo_index(n)?);
        if m1.endogenous()[i].domain != m2.endogenous()[j].domain {
            return Err(Error::SignatureMismatch(format!("domains of {n} differ")));
        }
        a.push(i);
        b.push(j);
    }
    Ok((a, b))
}

/// Compares the sets of achievable distributions on the margin; `None` when
/// they coincide.
fn finite_obs_difference(m1: &FiniteScm, m2: &FiniteScm, p1: &[usize], p2: &[usize]) -> Result<Option<String>> {
    let (s1, s2) = (m1.selectors(p1), m2.selectors(p2));
    match (s1.is_empty(), s2.is_empty()) {
        (true, true) => return Ok(None),
        (true, false) => return Ok(Some("the first model has no solution, the second has".into())),
        (false, true) => return Ok(Some("the second model has no solution, the first has".into())),
        _ => {}
    }
    let show = |pt: &BTreeMap<Vec<usize>, Prob>| {
        let cells: Vec<String> = pt
            .iter()
            .map(|(c, p)| {
                let vals: Vec<String> =
                    c.iter().zip(p1).map(|(&v, &k)| m1.endogenous()[k].domain.get(v).to_string()).collect();
                format!("({}): {}", vals.join(", "), crate::value::fmt_ratio(p))
            })
            .collect();
        format!("{{{}}}", cells.join(", "))
    };
    for v in s1.vertices(MAX_SELECTORS)? {
        if !s2.contains(&v) {
            return Ok(Some(format!("distribution {} of the first model is not achieved by the second", show(&v))));
        }
    }
    for v in s2.vertices(MAX_SELECTORS)? {
        if !s1.contains(&v) {
            return Ok(Some(format!("distribution {} of the second model is not achieved by the first", show(&v))));
        }
    }
    Ok(None)
}

impl FiniteScm {
    /// Same set of achievable distributions on `margin`. Models without
    /// solutions are equivalent to each other only.
    pub fn observationally_equivalent<S: AsRef<str>>(&self, other: &FiniteScm, margin: &[S]) -> Result<EquivalenceReport> {
        let margin = sorted_names(margin);
        let (p1, p2) = margin_indices(self, other, &margin)?;
        let witnesses = finite_obs_difference(self, other, &p1, &p2)?
            .map(|detail| Witness { intervention: Vec::new(), detail })
            .into_iter()
            .collect();
        Ok(EquivalenceReport::new(Level::Observational, &margin, witnesses))
    }

    /// Observationally equivalent on `margin` under every perfect
    /// intervention on a subset of `margin`. Reports the first disagreement.
    pub fn interventionally_equivalent<S: AsRef<str>>(&self, other: &FiniteScm, margin: &[S]) -> Result<EquivalenceReport> {
        let margin = sorted_names(margin);
        let witnesses = self.first_interventional_difference(other, &margin)?;
        Ok(EquivalenceReport::new(Level::Interventional, &margin, witnesses.into_iter().collect()))
    }

    fn first_interventional_difference(&self, other: &FiniteScm, margin: &[String]) -> Result<Option<Witness>> {
        let (p1, p2) = margin_indices(self, other, margin)?;
        let sizes: Vec<usize> = p1.iter().map(|&k| self.endogenous()[k].domain.len()).collect();
        let total: usize = subsets(margin.len())
            .iter()
            .map(|s| s.iter().fold(1usize, |a, &i| a.saturating_mul(sizes[i])))
            .fold(0usize, |a, b| a.saturating_add(b));
        if total > MAX_INTERVENTIONS {
            return Err(Error::BoundExceeded { what: "number of interventions".into(), limit: MAX_INTERVENTIONS });
        }
        for targets in subsets(margin.len()) {
            let tsizes: Vec<usize> = targets.iter().map(|&i| sizes[i]).collect();
            let mut od = Odometer::full(&tsizes);
            while let Some(combo) = od.next_combo() {
                let assignments: Vec<(String, Value)> = targets
                    .iter()
                    .zip(combo)
                    .map(|(&i, &v)| (margin[i].clone(), self.endogenous()[p1[i]].domain.get(v).clone()))
                    .collect();
                let iv = Intervention::new(assignments.clone());
                let (a, b) = (self.intervene(&iv)?, other.intervene(&iv)?);
                if let Some(detail) = finite_obs_difference(&a, &b, &p1, &p2)? {
                    let intervention = assignments.into_iter().map(|(n, v)| (n, v.to_string())).collect();
                    return Ok(Some(Witness { intervention, detail }));
                }
            }
        }
        Ok(None)
    }

    /// Interventional equivalence of the twin models on the margin and its
    /// counterfactual copy.
    pub fn counterfactually_equivalent<S: AsRef<str>>(&self, other: &FiniteScm, margin: &[S]) -> Result<EquivalenceReport> {
        let margin = sorted_names(margin);
        let twin_margin = with_copies(&margin);
        let witnesses = self.twin()?.first_interventional_difference(&other.twin()?, &twin_margin)?;
        Ok(EquivalenceReport::new(Level::Counterfactual, &margin, witnesses.into_iter().collect()))
    }

    fn require_no_self_loops(&self) -> Result<()> {
        let loops: Vec<String> = (0..self.endogenous().len())
            .filter(|&k| self.parents_idx(k).contains(&VarRef::Endo(k)))
            .map(|k| self.endogenous()[k].name.clone())
            .collect();
        if loops.is_empty() {
            Ok(())
        } else {
            Err(Error::SelfLoops(loops))
        }
    }

    /// A pair of interventions on all variables but `effect`, differing only
    /// at `cause`, under which the law of `effect` changes. The first such
    /// pair in lexicographic order of value indices is returned.
    pub fn direct_cause_witness(&self, cause: &str, effect: &str) -> Result<Option<(Intervention<Value>, Intervention<Value>)>> {
        let (i, j) = (self.endo_index(cause)?, self.endo_index(effect)?);
        if i == j {
            return Err(Error::Unsupported(format!("{cause} cannot be a direct cause of itself")));
        }
        self.require_no_self_loops()?;
        let map = self.solve_map_idx(&[j])?;
        let endo_args: Vec<usize> =
            map.args.iter().filter_map(|r| if let VarRef::Endo(k) = *r { Some(k) } else { None }).collect();
        let Some(pos) = endo_args.iter().position(|&k| k == i) else {
            return Ok(None);
        };
        let exo_args: Vec<usize> =
            map.args.iter().filter_map(|r| if let VarRef::Exo(k) = *r { Some(k) } else { None }).collect();
        let exo_refs: Vec<VarRef> = exo_args.iter().map(|&k| VarRef::Exo(k)).collect();

        // Law of the effect for each value of its context parents.
        let sizes: Vec<usize> = endo_args.iter().map(|&k| self.endogenous()[k].domain.len()).collect();
        let (mut x, mut e) = self.baseline();
        let mut laws: BTreeMap<Vec<usize>, BTreeMap<usize, Prob>> = BTreeMap::new();
        let mut od = Odometer::full(&sizes);
        while let Some(xi) = od.next_combo() {
            for (&k, &v) in endo_args.iter().zip(xi) {
                x[k] = v;
            }
            let mut law: BTreeMap<usize, Prob> = BTreeMap::new();
            let mut noise = Odometer::new(self.ranges(&exo_refs, true));
            while let Some(ev) = noise.next_combo() {
                FiniteScm::write(&exo_refs, ev, &mut x, &mut e);
                let p = exo_args.iter().zip(ev).fold(Prob::from_integer(1.into()), |acc, (&k, &v)| {
                    acc * &self.exogenous()[k].probs[v]
                });
                *law.entry(map.row(&x, &e)[0]).or_insert_with(Prob::zero) += p;
            }
            laws.insert(xi.to_vec(), law);
        }
        for (xi, law) in &laws {
            for alt in xi[pos] + 1..sizes[pos] {
                let mut other = xi.clone();
                other[pos] = alt;
                if laws[&other] != *law {
                    let full = |vals: &[usize]| {
                        Intervention::new((0..self.endogenous().len()).filter(|&k| k != j).map(|k| {
                            let v = endo_args.iter().position(|&a| a == k).map_or(0, |p| vals[p]);
                            (self.endogenous()[k].name.clone(), self.endogenous()[k].domain.get(v).clone())
                        }))
                    };
                    return Ok(Some((full(xi), full(&other))));
                }
            }
        }
        Ok(None)
    }

    pub fn is_direct_cause(&self, cause: &str, effect: &str) -> Result<bool> {
        Ok(self.direct_cause_witness(cause, effect)?.is_some())
    }
}

fn with_copies(margin: &[String]) -> Vec<String> {
    margin.iter().cloned().chain(margin.iter().map(|n| twin_name(n))).collect()
}

// ---------- linear models ----------

fn gaussian_difference(a: &GaussianDistribution, b: &GaussianDistribution, tol: f64) -> Option<String> {
    let dm = (&a.mean - &b.mean).amax();
    let dc = (&a.cov - &b.cov).amax();
    if dm > tol {
        Some(format!("means differ by {dm:.3e}"))
    } else if dc > tol {
        Some(format!("covariances differ by {dc:.3e}"))
    } else {
        None
    }
}

impl LinearScm {
    fn require_unique_all(&self) -> Result<()> {
        if self.uniquely_solvable_wrt(self.endogenous())? {
            Ok(())
        } else {
            Err(Error::Unsupported("equivalence of linear models that are not uniquely solvable".into()))
        }
    }

    pub fn observationally_equivalent<S: AsRef<str>>(&self, other: &LinearScm, margin: &[S]) -> Result<EquivalenceReport> {
        let margin = sorted_names(margin);
        self.require_unique_all()?;
        other.require_unique_all()?;
        let a = self.observational_distribution()?.marginal(&margin)?;
        let b = other.observational_distribution()?.marginal(&margin)?;
        let tol = self.tolerance().max(other.tolerance());
        let witnesses = gaussian_difference(&a, &b, tol)
            .map(|detail| Witness { intervention: Vec::new(), detail })
            .into_iter()
            .collect();
        Ok(EquivalenceReport::new(Level::Observational, &margin, witnesses))
    }

    /// Intervened law on the margin as an affine function of the
    /// intervention values: law at zero, then the mean shift per unit value
    /// of each target.
    fn affine_law(&self, targets: &[String], margin: &[String]) -> Result<(GaussianDistribution, Vec<DVector<f64>>)> {
        let at = |k: Option<usize>| -> Result<GaussianDistribution> {
            let iv = Intervention::new(
                targets.iter().enumerate().map(|(i, n)| (n.clone(), if Some(i) == k { 1.0 } else { 0.0 })),
            );
            self.intervene(&iv)?.observational_distribution()?.marginal(margin)
        };
        let base = at(None)?;
        let shifts = (0..targets.len()).map(|k| Ok(&at(Some(k))?.mean - &base.mean)).collect::<Result<_>>()?;
        Ok((base, shifts))
    }

    /// Compares the affine maps from intervention values to intervened laws
    /// for every target subset of the margin. All disagreeing target sets
    /// are reported, each with a concrete intervention.
    pub fn interventionally_equivalent<S: AsRef<str>>(&self, other: &LinearScm, margin: &[S]) -> Result<EquivalenceReport> {
        let margin = sorted_names(margin);
        let witnesses = self.interventional_differences(other, &margin)?;
        Ok(EquivalenceReport::new(Level::Interventional, &margin, witnesses))
    }

    fn interventional_differences(&self, other: &LinearScm, margin: &[String]) -> Result<Vec<Witness>> {
        for n in margin {
            self.endo_index(n)?;
            other.endo_index(n)?;
        }
        let tol = self.tolerance().max(other.tolerance());
        let mut out = Vec::new();
        for targets in subsets(margin.len()) {
            let targets: Vec<String> = targets.iter().map(|&i| margin[i].clone()).collect();
            let zero = || targets.iter().map(|n| (n.clone(), "0".to_string())).collect::<Vec<_>>();
            let (a, b) = match (self.affine_law(&targets, margin), other.affine_law(&targets, margin)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(Error::NotUniquelySolvable { .. }), Err(Error::NotUniquelySolvable { .. })) => {
                    return Err(Error::Unsupported("equivalence of linear models that are not uniquely solvable".into()))
                }
                (Err(Error::NotUniquelySolvable { .. }), Ok(_)) | (Ok(_), Err(Error::NotUniquelySolvable { .. })) => {
                    let detail = "only one of the intervened models is uniquely solvable".to_string();
                    out.push(Witness { intervention: zero(), detail });
                    continue;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            if let Some(detail) = gaussian_difference(&a.0, &b.0, tol) {
                out.push(Witness { intervention: zero(), detail });
                continue;
            }
            if let Some(k) = (0..targets.len()).find(|&k| (&a.1[k] - &b.1[k]).amax() > tol) {
                let mut intervention = zero();
                intervention[k].1 = "1".into();
                out.push(Witness { intervention, detail: format!("means respond differently to {}", targets[k]) });
            }
        }
        Ok(out)
    }

    pub fn counterfactually_equivalent<S: AsRef<str>>(&self, other: &LinearScm, margin: &[S]) -> Result<EquivalenceReport> {
        let margin = sorted_names(margin);
        let witnesses = self.twin()?.interventional_differences(&other.twin()?, &with_copies(&margin))?;
        Ok(EquivalenceReport::new(Level::Counterfactual, &margin, witnesses))
    }

    /// Nonzero coefficient of `cause` in the normalized equation of `effect`.
    pub fn is_direct_cause(&self, cause: &str, effect: &str) -> Result<bool> {
        let (i, j) = (self.endo_index(cause)?, self.endo_index(effect)?);
        if i == j {
            return Err(Error::Unsupported(format!("{cause} cannot be a direct cause of itself")));
        }
        let c = self.canonicalize();
        let loops: Vec<String> =
            (0..c.endogenous().len()).filter(|&k| c.b()[(k, k)] != 0.0).map(|k| c.endogenous()[k].clone()).collect();
        if !loops.is_empty() {
            return Err(Error::SelfLoops(loops));
        }
        Ok(c.b()[(j, i)].abs() > c.tolerance())
    }
}

// ---------- graphs, both families ----------

fn causal_graph<M: StructuralModel>(m: &M, direct: impl Fn(&str, &str) -> Result<bool>) -> Result<MixedGraph> {
    let names = m.endogenous_names();
    let mut g = MixedGraph::new(&names)?;
    for i in &names {
        for j in names.iter().filter(|j| *j != i) {
            if direct(i, j)? {
                g.add_directed(i, j)?;
            }
        }
    }
    assert!(g.is_subgraph_of(&m.functional_graph().directed_part()), "direct causes are functional parents");
    Ok(g)
}

impl FiniteScm {
    /// Edges from each variable to the variables it directly causes.
    pub fn direct_causal_graph(&self) -> Result<MixedGraph> {
        self.require_no_self_loops()?;
        causal_graph(self, |i, j| self.is_direct_cause(i, j))
    }
}

impl LinearScm {
    pub fn direct_causal_graph(&self) -> Result<MixedGraph> {
        causal_graph(self, |i, j| self.is_direct_cause(i, j))
    }
}

impl Model {
    fn pair<'a>(&'a self, other: &'a Model) -> Result<PairRef<'a>> {
        match (self, other) {
            (Model::Finite(a), Model::Finite(b)) => Ok(PairRef::Finite(a, b)),
            (Model::Linear(a), Model::Linear(b)) => Ok(PairRef::Linear(a, b)),
            _ => Err(Error::SignatureMismatch("cannot compare a finite model with a linear one".into())),
        }
    }

    pub fn equivalent<S: AsRef<str>>(&self, other: &Model, level: Level, margin: &[S]) -> Result<EquivalenceReport> {
        match (self.pair(other)?, level) {
            (PairRef::Finite(a, b), Level::Observational) => a.observationally_equivalent(b, margin),
            (PairRef::Finite(a, b), Level::Interventional) => a.interventionally_equivalent(b, margin),
            (PairRef::Finite(a, b), Level::Counterfactual) => a.counterfactually_equivalent(b, margin),
            (PairRef::Linear(a, b), Level::Observational) => a.observationally_equivalent(b, margin),
            (PairRef::Linear(a, b), Level::Interventional) => a.interventionally_equivalent(b, margin),
            (PairRef::Linear(a, b), Level::Counterfactual) => a.counterfactually_equivalent(b, margin),
        }
    }

    pub fn is_direct_cause(&self, cause: &str, effect: &str) -> Result<bool> {
        match self {
            Model::Finite(m) => m.is_direct_cause(cause, effect),
            Model::Linear(m) => m.is_direct_cause(cause, effect),
        }
    }

    pub fn direct_causal_graph(&self) -> Result<MixedGraph> {
        match self {
            Model::Finite(m) => m.direct_causal_graph(),
            Model::Linear(m) => m.direct_causal_graph(),
        }
    }

    /// Direct causal graph of the model with everything outside `context`
    /// marginalized out.
    pub fn direct_causal_graph_wrt<S: AsRef<str>>(&self, context: &[S]) -> Result<MixedGraph> {
        let keep: Vec<&str> = context.iter().map(|s| s.as_ref()).collect();
        for n in &keep {
            if !self.endogenous_names().iter().any(|m| m == n) {
                return Err(Error::UnknownVariable(n.to_string()));
            }
        }
        let latent: Vec<String> = self.endogenous_names().into_iter().filter(|n| !keep.contains(&n.as_str())).collect();
        self.marginalize(&latent)?.direct_causal_graph()
    }

    /// Direct cause in the model marginalized to the two variables.
    pub fn is_indirect_cause(&self, cause: &str, effect: &str) -> Result<bool> {
        if cause == effect {
            return Err(Error::Unsupported(format!("{cause} cannot be an indirect cause of itself")));
        }
        Ok(self.direct_causal_graph_wrt(&[cause, effect])?.has_directed(cause, effect))
    }
}

enum PairRef<'a> {
    Finite(&'a FiniteScm, &'a FiniteScm),
    Linear(&'a LinearScm, &'a LinearScm),
}
