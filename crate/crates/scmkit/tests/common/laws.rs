//! Algebraic laws checked on one random model each. A law whose
//! precondition fails on the drawn model reports `Skipped`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scmkit::causal::Level;
use scmkit::markov::SeparationKind;
use scmkit::{dsl, Error, FiniteScm, Model, StructuralModel};

use super::{random_intervention, random_intervention_on, random_subset, Shape, Spec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Held,
    Skipped,
}

pub type LawResult = Result<Outcome, String>;

fn names(m: &FiniteScm) -> Vec<String> {
    m.endogenous_names()
}

fn rest(m: &FiniteScm, l: &[String]) -> Vec<String> {
    names(m).into_iter().filter(|n| !l.contains(n)).collect()
}

fn same(a: &FiniteScm, b: &FiniteScm, what: &str) -> LawResult {
    match a.mechanisms_equivalent(b) {
        Ok(true) => Ok(Outcome::Held),
        Ok(false) => Err(format!("{what}: models differ\n{}\n---\n{}", text(a), text(b))),
        Err(e) => Err(format!("{what}: {e}")),
    }
}

fn text(m: &FiniteScm) -> String {
    dsl::serialize(&Model::Finite(m.clone()))
}

fn fail(what: &str) -> impl Fn(Error) -> String + '_ {
    move |e| format!("{what}: {e}")
}

/// Nonempty random subset of the variables that is uniquely solvable.
fn solvable_subset(rng: &mut ChaCha8Rng, m: &FiniteScm, among: &[String]) -> Result<Option<Vec<String>>, String> {
    if among.is_empty() {
        return Ok(None);
    }
    for _ in 0..4 {
        let mut l = random_subset(rng, among, 0.4);
        if l.is_empty() {
            l.push(among[rng.gen_range(0..among.len())].clone());
        }
        if m.uniquely_solvable_wrt(&l).map_err(fail("solvability"))? {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

/// Interventions on disjoint targets commute and combine.
pub fn interventions_commute(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Spec::random(rng, shape).build();
    let first = random_intervention(rng, &m);
    let others = rest(&m, &first.targets());
    if others.is_empty() {
        return Ok(Outcome::Skipped);
    }
    let second = random_intervention_on(rng, &m, &others);
    let ab = m.intervene(&first).and_then(|x| x.intervene(&second)).map_err(fail("do"))?;
    let ba = m.intervene(&second).and_then(|x| x.intervene(&first)).map_err(fail("do"))?;
    let both = m.intervene(&first.and(&second)).map_err(fail("do"))?;
    same(&ab, &ba, "order of interventions")?;
    same(&ab, &both, "joint intervention")
}

/// Marginalizing a uniquely solvable subset commutes with intervening on
/// variables outside it.
pub fn marginalization_commutes_with_intervention(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Spec::random(rng, shape).build();
    let Some(l) = solvable_subset(rng, &m, &names(&m))? else { return Ok(Outcome::Skipped) };
    let others = rest(&m, &l);
    if others.is_empty() {
        return Ok(Outcome::Skipped);
    }
    let iv = random_intervention_on(rng, &m, &others);
    let a = m.intervene(&iv).and_then(|x| x.marginalize(&l)).map_err(fail("do then marg"))?;
    let b = m.marginalize(&l).and_then(|x| x.intervene(&iv)).map_err(fail("marg then do"))?;
    same(&a, &b, "marginalization and intervention")
}

/// Marginalizing in two steps equals marginalizing the union at once.
pub fn marginalization_composes(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Spec::random(rng, shape).build();
    let Some(l1) = solvable_subset(rng, &m, &names(&m))? else { return Ok(Outcome::Skipped) };
    let step = m.marginalize(&l1).map_err(fail("first step"))?;
    let Some(l2) = solvable_subset(rng, &step, &names(&step))? else { return Ok(Outcome::Skipped) };
    if l1.len() + l2.len() == names(&m).len() {
        return Ok(Outcome::Skipped);
    }
    let union: Vec<String> = l1.iter().chain(&l2).cloned().collect();
    if !m.uniquely_solvable_wrt(&union).map_err(fail("union"))? {
        return Err(format!("{union:?} is not uniquely solvable although both steps are\n{}", text(&m)));
    }
    let two = step.marginalize(&l2).map_err(fail("second step"))?;
    let once = m.marginalize(&union).map_err(fail("union"))?;
    same(&two, &once, "composition of marginalizations")
}

/// With unique solvability w.r.t. the latent set and each of its ancestral
/// parts, the marginal graph lies inside the latent projection.
pub fn marginal_graph_within_latent_projection(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Spec::random(rng, shape).build();
    let Some(l) = solvable_subset(rng, &m, &names(&m))? else { return Ok(Outcome::Skipped) };
    let ga = m.augmented_graph();
    let inner = ga.induced_subgraph(&l).map_err(fail("induced"))?;
    for v in &l {
        let an = inner.ancestors(&[v]).map_err(fail("ancestors"))?;
        if !m.uniquely_solvable_wrt(&an).map_err(fail("solvability"))? {
            return Ok(Outcome::Skipped);
        }
    }
    let marg = m.marginalize(&l).map_err(fail("marg"))?;
    let projected = ga.latent_projection(&l).map_err(fail("projection"))?;
    if marg.augmented_graph().is_subgraph_of(&projected) {
        Ok(Outcome::Held)
    } else {
        Err(format!("marginal graph escapes the latent projection over {l:?}\n{}", text(&m)))
    }
}

/// Counterfactual equivalence implies interventional, which implies
/// observational equivalence.
pub fn equivalence_ladder(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let spec = Spec::random(rng, shape);
    let p = rng.gen_range(0.0..0.3);
    let a = Model::Finite(spec.build());
    let b = Model::Finite(spec.perturb(rng, p).build());
    let margin = a.endogenous_names();
    let verdict = |level| match a.equivalent(&b, level, &margin) {
        Ok(r) => Ok(Some(r.verdict)),
        Err(Error::BoundExceeded { .. }) => Ok(None),
        Err(e) => Err(format!("{level}: {e}")),
    };
    let (Some(obs), Some(int), Some(cf)) =
        (verdict(Level::Observational)?, verdict(Level::Interventional)?, verdict(Level::Counterfactual)?)
    else {
        return Ok(Outcome::Skipped);
    };
    if (cf && !int) || (int && !obs) {
        return Err(format!("obs {obs}, int {int}, cf {cf}\n{}", dsl::serialize(&a)));
    }
    let Model::Finite(fa) = &a else { unreachable!() };
    let Model::Finite(fb) = &b else { unreachable!() };
    if fa.mechanisms_equivalent(fb).map_err(fail("mechanisms"))? && !cf {
        return Err("equivalent mechanisms but not counterfactually equivalent".into());
    }
    Ok(Outcome::Held)
}

/// The canonical form is equivalent, reads exactly the functional parents
/// and is a fixed point.
pub fn canonical_form(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Spec::random(rng, shape).build();
    let c = m.canonicalize();
    same(&m, &c, "canonical form")?;
    for (k, mech) in c.mechanisms().iter().enumerate() {
        let args: Vec<String> = mech.args().iter().map(|&r| c.ref_name(r).to_string()).collect();
        let pa = m.functional_parents(&m.endogenous()[k].name).map_err(fail("parents"))?;
        let mut args_sorted = args.clone();
        args_sorted.sort();
        let mut pa_sorted = pa.clone();
        pa_sorted.sort();
        if args_sorted != pa_sorted {
            return Err(format!("canonical mechanism reads {args:?}, parents are {pa:?}"));
        }
    }
    if c.augmented_graph() != m.augmented_graph() {
        return Err("canonical form changed the augmented graph".into());
    }
    if c.canonicalize() != c {
        return Err("canonical form is not a fixed point".into());
    }
    Ok(Outcome::Held)
}

fn sigma_violations(m: &FiniteScm) -> Result<usize, String> {
    let model = Model::Finite(m.clone());
    let n = m.endogenous().len();
    let report = model.verify_markov(SeparationKind::Sigma, n.saturating_sub(2)).map_err(fail("markov"))?;
    Ok(report.violations().len())
}

fn sccs_uniquely_solvable(m: &FiniteScm) -> Result<bool, String> {
    for scc in m.functional_graph().sccs() {
        if !m.uniquely_solvable_wrt(&scc).map_err(fail("scc"))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Models uniquely solvable w.r.t. each strongly connected component obey
/// the sigma-Markov property.
pub fn sigma_markov(m: &FiniteScm) -> LawResult {
    if !sccs_uniquely_solvable(m)? {
        return Ok(Outcome::Skipped);
    }
    match sigma_violations(m)? {
        0 => Ok(Outcome::Held),
        v => Err(format!("{v} sigma-Markov violation(s)\n{}", text(m))),
    }
}

/// Unique solvability w.r.t. every subset survives any intervention, and
/// so does the sigma-Markov property.
pub fn sigma_markov_after_intervention(rng: &mut ChaCha8Rng, m: &FiniteScm) -> LawResult {
    if !m.uniquely_solvable_all_subsets().map_err(fail("all subsets"))? {
        return Ok(Outcome::Skipped);
    }
    let iv = random_intervention(rng, m);
    let d = m.intervene(&iv).map_err(fail("do"))?;
    if !d.uniquely_solvable_all_subsets().map_err(fail("all subsets after do"))? {
        return Err(format!("intervention broke unique solvability\n{}", text(m)));
    }
    match sigma_violations(&d)? {
        0 => Ok(Outcome::Held),
        v => Err(format!("{v} violation(s) after intervention\n{}", text(&d))),
    }
}

/// Marginalization keeps the observational and interventional laws of the
/// remaining variables.
pub fn marginalization_preserves_laws(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Spec::random(rng, shape).build();
    let all = names(&m);
    if !m.uniquely_solvable_all_subsets().map_err(fail("all subsets"))? {
        return Ok(Outcome::Skipped);
    }
    let Some(l) = solvable_subset(rng, &m, &all)? else { return Ok(Outcome::Skipped) };
    let others = rest(&m, &l);
    if others.is_empty() {
        return Ok(Outcome::Skipped);
    }
    let marg = m.marginalize(&l).map_err(fail("marg"))?;
    let full = m.observational_distribution().map_err(fail("obs"))?.marginal(&others).map_err(fail("marginal"))?;
    if marg.observational_distribution().map_err(fail("obs of marginal"))? != full {
        return Err(format!("observational law changed by marginalizing {l:?}\n{}", text(&m)));
    }
    let iv = random_intervention_on(rng, &m, &others);
    let a = m.interventional_distribution(&iv).map_err(fail("do"))?.marginal(&others).map_err(fail("marginal"))?;
    let b = marg.interventional_distribution(&iv).map_err(fail("do on marginal"))?;
    if a != b {
        return Err(format!("interventional law changed by marginalizing {l:?}\n{}", text(&m)));
    }
    Ok(Outcome::Held)
}

/// Serializing and parsing is a fixed point and keeps the model.
pub fn dsl_round_trip(rng: &mut ChaCha8Rng, shape: Shape) -> LawResult {
    let m = Model::Finite(Spec::random(rng, shape).build());
    let once = dsl::serialize(&m);
    let back = dsl::parse(&once).map_err(|e| format!("{e}\n{once}"))?;
    let twice = dsl::serialize(&back);
    if once != twice {
        return Err(format!("serialization is not a fixed point\n{once}\n---\n{twice}"));
    }
    match (&m, &back) {
        (Model::Finite(a), Model::Finite(b)) => same(a, b, "round trip"),
        _ => Err("model family changed".into()),
    }
}
