//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use common::laws::{self, LawResult, Outcome};
use common::{finite, linear, model, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use scmkit::analysis::{gaussian_condition, Distribution};
use scmkit::causal::Level;
use scmkit::graph::MixedGraph;
use scmkit::{dsl, ratio, Intervention, LinearScm, Model, StructuralModel, Value};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, format!("{what}: {a} vs {b}"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn linear_marginalization() -> Check {
    let m = linear("marginalization.scm");
    let marg = m.marginalize(&["X3", "X4", "X5"]).map_err(err)?;
    ensure(marg.endogenous() == ["X1", "X2"], "marginal keeps X1, X2")?;
    let coords = marg.coords();
    let expected_b = [[0.0, 0.0], [1.0, 0.0]];
    let expected_g = [[0.0, 1.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
    ensure(coords == ["E1", "E2", "E3", "E4"], "noise coordinates")?;
    for i in 0..2 {
        for j in 0..2 {
            close(marg.b()[(i, j)], expected_b[i][j], 1e-12, "B")?;
        }
        for j in 0..4 {
            close(marg.gamma()[(i, j)], expected_g[i][j], 1e-12, "Gamma")?;
        }
        close(marg.intercept()[i], 0.0, 1e-12, "intercept")?;
    }
    let g = m.solve_map(&["X3", "X4", "X5"]).map_err(err)?;
    let expected = [
        ("X3", [("X1", 0.0), ("X2", 0.0), ("E1", 0.0), ("E2", 2.0), ("E3", 0.0), ("E4", 0.0)]),
        ("X4", [("X1", 1.0), ("X2", 0.0), ("E1", 1.0), ("E2", 1.0), ("E3", 0.0), ("E4", 0.0)]),
        ("X5", [("X1", 0.0), ("X2", 0.0), ("E1", 0.0), ("E2", 1.0), ("E3", 0.0), ("E4", 0.0)]),
    ];
    for (t, row) in expected {
        for (s, v) in row {
            close(g.coefficient(t, s).unwrap_or(0.0), v, 1e-12, &format!("{t} <- {s}"))?;
        }
    }
    Ok("f1 = e2 + e3, f2 = x1 + e2 + e4; g3 = 2e2, g4 = x1 + e1 + e2, g5 = e2".into())
}

fn anm_pair(alpha: f64, beta: f64, mu: [f64; 2], var: [f64; 2]) -> (LinearScm, LinearScm) {
    let m = LinearScm::builder()
        .endogenous(["X1", "X2"])
        .normal("E1", mu[0], var[0])
        .normal("E2", mu[1], var[1])
        .coef("X1", "X2", alpha)
        .coef("X1", "E1", 1.0)
        .coef("X2", "X1", beta)
        .coef("X2", "E2", 1.0)
        .build()
        .unwrap();
    let gamma = (beta * var[0] + alpha * var[1]) / (var[0] + alpha * alpha * var[1]);
    let c = 1.0 / (1.0 - alpha * beta);
    let mu1 = c * (mu[0] + alpha * mu[1]);
    let var1 = c * c * (var[0] + alpha * alpha * var[1]);
    let mu2 = c * ((beta - gamma) * mu[0] + (1.0 - alpha * gamma) * mu[1]);
    let var2 = c * c * ((beta - gamma).powi(2) * var[0] + (1.0 - alpha * gamma).powi(2) * var[1]);
    let reversed = LinearScm::builder()
        .endogenous(["X1", "X2"])
        .normal("F1", mu1, var1)
        .normal("F2", mu2, var2)
        .coef("X1", "F1", 1.0)
        .coef("X2", "X1", gamma)
        .coef("X2", "F2", 1.0)
        .build()
        .unwrap();
    (m, reversed)
}

fn anm_equivalence() -> Check {
    let (m, r) = anm_pair(0.5, 1.0 / 3.0, [0.0, 0.0], [1.0, 1.0]);
    let (a, b) = (m.observational_distribution().map_err(err)?, r.observational_distribution().map_err(err)?);
    for i in ["X1", "X2"] {
        close(a.mean_of(i).unwrap(), b.mean_of(i).unwrap(), 1e-9, "mean")?;
        for j in ["X1", "X2"] {
            close(a.cov_of(i, j).unwrap(), b.cov_of(i, j).unwrap(), 1e-9, "covariance")?;
        }
    }
    ensure(m.observationally_equivalent(&r, &["X1", "X2"]).map_err(err)?.verdict, "observational verdict")?;
    let report = m.interventionally_equivalent(&r, &["X1", "X2"]).map_err(err)?;
    ensure(!report.verdict, "interventionally equivalent")?;
    let on_x2 = report.witnesses.iter().find(|w| w.intervention.iter().any(|(n, _)| n == "X2"));
    let w = on_x2.ok_or("no witness intervenes on X2")?;
    let iv: Vec<String> = w.intervention.iter().map(|(n, v)| format!("{n}={v}")).collect();
    Ok(format!("observational laws agree; witness do({}): {}", iv.join(", "), w.detail))
}

fn solvability_flip_flop() -> Check {
    let m = linear("interventions.scm");
    let all = ["X1", "X2", "X3"];
    let cut = m.intervene(&Intervention::new([("X3", 1.0)])).map_err(err)?;
    let fixed = cut.intervene(&Intervention::new([("X2", 1.0)])).map_err(err)?;
    let dets: Vec<f64> = [&m, &cut, &fixed].iter().map(|x| x.subset_determinant(&all).unwrap()).collect();
    let solv: Vec<bool> = [&m, &cut, &fixed].iter().map(|x| x.solvable_wrt(&all).unwrap()).collect();
    close(dets[0], 1.0, 1e-12, "det before")?;
    close(dets[1], 0.0, 1e-12, "det after do(X3)")?;
    ensure(dets[2].abs() > 1e-9, "det after do(X2) is zero")?;
    ensure(solv == [true, false, true], format!("solvability {solv:?}"))?;
    Ok(format!("det(I - B) = {}, {}, {}; solvable {:?}", dets[0], dets[1], dets[2], solv))
}

fn all_splits(n: usize) -> Vec<(Vec<String>, Vec<String>, Vec<String>)> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let (mut a, mut b, mut s) = (Vec::new(), Vec::new(), Vec::new());
        let mut c = code;
        for i in 0..n {
            let name = format!("V{}", i + 1);
            match c % 4 {
                0 => a.push(name),
                1 => b.push(name),
                2 => s.push(name),
                _ => {}
            }
            c /= 4;
        }
        if !a.is_empty() && !b.is_empty() && a[0] < b[0] {
            out.push((a, b, s));
        }
    }
    out
}

fn sigma_versus_d() -> Check {
    let cycle = MixedGraph::from_edges(
        ["X1", "X2", "X3", "X4"],
        &[("X1", "X2"), ("X2", "X3"), ("X3", "X4"), ("X4", "X1")],
        &[],
    )
    .map_err(err)?;
    ensure(cycle.d_separated(&["X1"], &["X3"], &["X2", "X4"]).map_err(err)?, "4-cycle d-separation")?;
    ensure(!cycle.sigma_separated(&["X1"], &["X3"], &["X2", "X4"]).map_err(err)?, "4-cycle sigma-separation")?;
    let (mut graphs, mut queries, mut dags) = (0usize, 0usize, 0usize);
    for n in [3usize, 4] {
        let names: Vec<String> = (1..=n).map(|i| format!("V{i}")).collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        let splits = all_splits(n);
        for mask in 0u32..1 << pairs.len() {
            let edges: Vec<(&str, &str)> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &(i, j))| (names[i].as_str(), names[j].as_str()))
                .collect();
            let g = MixedGraph::from_edges(&names, &edges, &[]).map_err(err)?;
            let acyclic = g.is_acyclic();
            dags += acyclic as usize;
            graphs += 1;
            for (a, b, s) in &splits {
                let sigma = g.sigma_separated(a, b, s).map_err(err)?;
                let d = g.d_separated(a, b, s).map_err(err)?;
                queries += 1;
                if sigma && !d {
                    return Err(format!("sigma without d: {a:?} {b:?} | {s:?} in {edges:?}"));
                }
                if acyclic && sigma != d {
                    return Err(format!("sigma != d on a DAG: {a:?} {b:?} | {s:?} in {edges:?}"));
                }
            }
        }
    }
    Ok(format!("4-cycle d true, sigma false; {graphs} graphs ({dags} acyclic), {queries} queries"))
}

fn iv(pairs: &[(&str, i64)]) -> Intervention<Value> {
    Intervention::new(pairs.iter().map(|&(n, v)| (n, Value::Int(v))))
}

fn sign_query(name: &str) -> Result<scmkit::Prob, String> {
    let m = finite(name);
    let d = m
        .counterfactual_distribution(&iv(&[("X1", -1)]), &[("X2", Value::Int(1))], &iv(&[("X1'", 1)]), &["X2'"])
        .map_err(err)?;
    d.prob(&[("X2'", Value::Int(1))]).map_err(err)
}

fn interventional_not_counterfactual() -> Check {
    let (m, t) = (model("sign_product.scm"), model("sign_copy.scm"));
    let all = ["X1", "X2"];
    let levels: Vec<bool> = [Level::Observational, Level::Interventional, Level::Counterfactual]
        .iter()
        .map(|&l| m.equivalent(&t, l, &all).map(|r| r.verdict))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    ensure(levels == [true, true, false], format!("levels {levels:?}"))?;
    let (p, q) = (sign_query("sign_product.scm")?, sign_query("sign_copy.scm")?);
    ensure(p == ratio(0, 1) && q == ratio(1, 1), format!("query gives {p} and {q}"))?;
    Ok(format!("obs/int/cf = {levels:?}; p(X2'=1 | ...) = {p} vs {q}"))
}

fn counterfactual_triple() -> Check {
    let names = ["sign_product.scm", "sign_copy.scm", "sign_swap.scm"];
    let ms: Vec<Model> = names.iter().map(|n| model(n)).collect();
    let all = ["X1", "X2"];
    let mut cf_pairs = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let int = ms[i].equivalent(&ms[j], Level::Interventional, &all).map_err(err)?.verdict;
            ensure(int, format!("{} vs {} not interventionally equivalent", names[i], names[j]))?;
            if ms[i].equivalent(&ms[j], Level::Counterfactual, &all).map_err(err)?.verdict {
                cf_pairs.push((i, j));
            }
        }
    }
    ensure(cf_pairs == [(1, 2)], format!("counterfactually equivalent pairs {cf_pairs:?}"))?;
    Ok("all pairs interventionally equivalent; only (copy, swap) counterfactually".into())
}

fn direct_cause_symmetry() -> Check {
    let uniform = model("sign_product.scm").is_direct_cause("X1", "X2").map_err(err)?;
    let skewed = model("sign_product_skewed.scm").is_direct_cause("X1", "X2").map_err(err)?;
    ensure(!uniform && skewed, format!("uniform {uniform}, skewed {skewed}"))?;
    Ok("uniform E2: no direct cause; P(E2=1) = 2/3: direct cause".into())
}

fn context_graph() -> Check {
    let chain = model("chain.scm");
    let dc = chain.direct_causal_graph().map_err(err)?;
    ensure(dc.directed_edges() == [("X1", "X2"), ("X2", "X3")], format!("dc edges {:?}", dc.directed_edges()))?;
    let ctx = chain.direct_causal_graph_wrt(&["X1", "X3"]).map_err(err)?;
    ensure(ctx.directed_edges() == [("X1", "X3")], format!("context edges {:?}", ctx.directed_edges()))?;
    let sp = model("spurious.scm");
    let ctx = sp.direct_causal_graph_wrt(&["X3", "X4"]).map_err(err)?;
    let projected = sp.direct_causal_graph().map_err(err)?.latent_projection(&["X1", "X2", "X5", "X6"]).map_err(err)?;
    ensure(ctx.has_directed("X3", "X4"), "X3 -> X4 missing from the context graph")?;
    ensure(!projected.has_directed("X3", "X4"), "X3 -> X4 present in the latent projection")?;
    Ok("chain; context {X1,X3} gives X1 -> X3; X3 -> X4 only in the context graph".into())
}

fn markov_suite() -> Check {
    // Half of the sample is required to be cyclic; those are rare among
    // random models that pass the filter.
    let shape = Shape { back_edge: 0.5, max_exo: 2, ..Shape::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut acyclic, mut cyclic, mut drawn, mut after) = (0usize, 0usize, 0usize, 0usize);
    while acyclic + cyclic < 200 {
        drawn += 1;
        if drawn > 50_000 {
            return Err(format!("only {acyclic} acyclic and {cyclic} cyclic models passed the filter"));
        }
        let m = common::random_finite(&mut rng, shape);
        let has_cycle = m.functional_graph().sccs().iter().any(|c| c.len() > 1);
        if (has_cycle && cyclic == 100) || (!has_cycle && acyclic == 100) {
            continue;
        }
        if laws::sigma_markov(&m)? == Outcome::Skipped {
            continue;
        }
        if has_cycle {
            cyclic += 1;
        } else {
            acyclic += 1;
        }
        if laws::sigma_markov_after_intervention(&mut rng, &m)? == Outcome::Held {
            after += 1;
        }
    }
    ensure(after >= 50, format!("only {after} models were uniquely solvable w.r.t. every subset"))?;
    Ok(format!(
        "200 models ({cyclic} cyclic, {drawn} drawn) with 0 violations; {after} intervened models with 0 violations"
    ))
}

fn algebraic_battery() -> Check {
    type Law = fn(&mut ChaCha8Rng, Shape) -> LawResult;
    let battery: [(&str, Law, Shape); 8] = [
        ("intervention commutation", laws::interventions_commute, Shape::default()),
        ("marginalization and intervention", laws::marginalization_commutes_with_intervention, Shape::default()),
        ("marginalization composition", laws::marginalization_composes, Shape::default()),
        ("latent projection inclusion", laws::marginal_graph_within_latent_projection, Shape::default()),
        ("equivalence ladder", laws::equivalence_ladder, Shape::small()),
        ("canonical form", laws::canonical_form, Shape::default()),
        ("marginal laws", laws::marginalization_preserves_laws, Shape::default()),
        ("dsl round trip", laws::dsl_round_trip, Shape::default()),
    ];
    let mut summary = Vec::new();
    for (name, law, shape) in battery {
        let mut held = 0;
        for seed in 0..300u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if law(&mut rng, shape).map_err(|e| format!("{name}, seed {seed}: {e}"))? == Outcome::Held {
                held += 1;
            }
        }
        ensure(held >= 30, format!("{name}: only {held}/300 models met the precondition"))?;
        summary.push(format!("{name} {held}"));
    }
    let m = model("no_latent_projection.scm");
    let marg = m.marginalize(&["X1", "X2"]).map_err(err)?;
    let projected = m.augmented_graph().latent_projection(&["X1", "X2"]).map_err(err)?;
    ensure(!marg.augmented_graph().is_subgraph_of(&projected), "counterexample obeys the latent projection")?;
    Ok(format!("held on {} of 300; counterexample escapes the projection", summary.join(", ")))
}

fn corpus_files() -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(common::corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scm"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn mutate(rng: &mut ChaCha8Rng, text: &str) -> String {
    const PIECES: [&str; 16] =
        ["(", ")", "*", "+", "-", "/", "=", ":", "~", "{", "}", ",", "ind", "Normal", "1/0", "\n"];
    let mut bytes: Vec<char> = text.chars().collect();
    for _ in 0..rng.gen_range(1..6) {
        let at = rng.gen_range(0..=bytes.len());
        match rng.gen_range(0..3) {
            0 if !bytes.is_empty() => {
                let end = (at + rng.gen_range(1..8)).min(bytes.len());
                bytes.drain(at.min(bytes.len() - 1)..end);
            }
            1 => {
                let p = PIECES[rng.gen_range(0..PIECES.len())];
                bytes.splice(at..at, p.chars());
            }
            _ => {
                let c = char::from_u32(rng.gen_range(0x20..0x250)).unwrap_or('?');
                bytes.insert(at, c);
            }
        }
    }
    bytes.into_iter().collect()
}

fn dsl_round_trip() -> Check {
    let files = corpus_files();
    for (name, text) in &files {
        let m = dsl::parse(text).map_err(|e| format!("{name}: {e}"))?;
        let once = dsl::serialize(&m);
        let back = dsl::parse(&once).map_err(|e| format!("{name} reparse: {e}"))?;
        ensure(back == m, format!("{name}: model changed by the round trip"))?;
        ensure(dsl::serialize(&back) == once, format!("{name}: serialization is not a fixed point"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut fuzzed = 0;
    let mut crash = None;
    for _ in 0..20_000 {
        let base = &files[rng.gen_range(0..files.len())].1;
        let input = mutate(&mut rng, base);
        fuzzed += 1;
        if panic::catch_unwind(AssertUnwindSafe(|| {
            let _ = dsl::parse(&input);
        }))
        .is_err()
        {
            crash = Some(input);
            break;
        }
    }
    panic::set_hook(hook);
    if let Some(input) = crash {
        return Err(format!("parser panicked on:\n{input}"));
    }
    Ok(format!("{} corpus files are fixed points; {fuzzed} fuzzed inputs without a panic", files.len()))
}

fn gaussian_counterfactual() -> Check {
    let (rho, c) = (0.6, 1.5);
    let twin = linear("treatment_twin.scm");
    let joint = twin.observational_distribution().map_err(err)?;
    close(joint.cov_of("X2", "X2'").unwrap(), rho, 1e-12, "correlation")?;
    let post = gaussian_condition(&joint, &[("X2", c)], 1e-12).map_err(err)?;
    let (mean, var) = (post.mean_of("X2'").unwrap(), post.cov_of("X2'", "X2'").unwrap());
    close(mean, rho * c, 1e-12, "conditional mean")?;
    close(var, 1.0 - rho * rho, 1e-12, "conditional variance")?;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 1_000_000;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let e2: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let e3 = rho * e2 + (1.0 - rho * rho).sqrt() * z;
        sx += e2;
        sy += e3;
        sxx += e2 * e2;
        sxy += e2 * e3;
        syy += e3 * e3;
    }
    let nf = n as f64;
    let (mx, my) = (sx / nf, sy / nf);
    let (vx, vy, cxy) = (sxx / nf - mx * mx, syy / nf - my * my, sxy / nf - mx * my);
    let mc_mean = my + cxy / vx * (c - mx);
    let mc_var = vy - cxy * cxy / vx;
    close(mc_mean, mean, 1e-2, "Monte Carlo mean")?;
    close(mc_var, var, 1e-2, "Monte Carlo variance")?;
    let printed = -rho * c;
    ensure((mean - printed).abs() > 1.0, "conditional mean matches the negated value")?;
    if let Distribution::Gaussian(_) = model("treatment_twin.scm").observational_distribution().map_err(err)? {
        Ok(format!(
            "N({mean:.4}, {var:.4}); Monte Carlo N({mc_mean:.4}, {mc_var:.4}); differs from N({printed:.4}, {var:.4})"
        ))
    } else {
        Err("twin model is not Gaussian".into())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("linear marginalization golden", linear_marginalization),
        ("observational vs interventional equivalence", anm_equivalence),
        ("solvability flip-flop", solvability_flip_flop),
        ("sigma vs d separation", sigma_versus_d),
        ("interventional but not counterfactual", interventional_not_counterfactual),
        ("counterfactual-equivalence triple", counterfactual_triple),
        ("direct-cause symmetry", direct_cause_symmetry),
        ("context causal graph", context_graph),
        ("Markov property suite", markov_suite),
        ("algebraic property battery", algebraic_battery),
        ("DSL round trip", dsl_round_trip),
        ("Gaussian counterfactual", gaussian_counterfactual),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
