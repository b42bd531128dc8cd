mod common;

use common::{finite, linear, model};
use scmkit::analysis::gaussian_condition;
use scmkit::causal::Level;
use scmkit::graph::MixedGraph;
use scmkit::markov::SeparationKind;
use scmkit::{ratio, Error, Intervention, Model, StructuralModel, Value};

fn iv(pairs: &[(&str, i64)]) -> Intervention<Value> {
    Intervention::new(pairs.iter().map(|&(n, v)| (n, Value::Int(v))))
}

fn ints(vals: &[Vec<Value>]) -> Vec<Vec<i64>> {
    vals.iter().map(|r| r.iter().map(|v| v.as_int().unwrap()).collect()).collect()
}

#[test]
fn mechanisms_differing_on_a_null_set_are_equivalent() {
    let a = finite("measure_zero.scm");
    let b = finite("measure_zero_simplified.scm");
    assert_ne!(a, b);
    assert!(a.mechanisms_equivalent(&b).unwrap());
    assert_eq!(a.observational_distribution().unwrap(), b.observational_distribution().unwrap());
}

#[test]
fn augmented_and_functional_graphs() {
    let m = model("augmented_graphs.scm");
    let pa = |k: &str| m.functional_parents(k).unwrap();
    assert_eq!(pa("X1"), ["E1", "E2"]);
    assert_eq!(pa("X2"), ["E2"]);
    assert_eq!(pa("X3"), ["X1", "X2", "X5"]);
    assert_eq!(pa("X4"), ["X2", "X4", "E3"]);
    assert_eq!(pa("X5"), ["X3", "X4"]);
    let g = m.functional_graph();
    assert!(g.has_bidirected("X1", "X2"));
    assert!(g.has_self_loop("X4"));
    assert!(g.has_directed("X3", "X5") && g.has_directed("X5", "X3"));
    assert_eq!(g.scc("X3").unwrap(), ["X3", "X5"]);
    assert!(!m.structurally_uniquely_solvable());
}

#[test]
fn canonical_linear_model_drops_the_self_loop() {
    let m = linear("not_canonical.scm");
    assert_eq!(m.b()[(0, 0)], -1.0);
    // The equation still has a unique solution, so X is not its own parent.
    assert_eq!(m.functional_parents("X").unwrap(), ["E1", "E2"]);
    let c = m.canonicalize();
    assert_eq!(c.b()[(0, 0)], 0.0);
    assert!((c.gamma()[(0, 0)] - 0.5).abs() < 1e-12);
    let (d1, d2) = (m.observational_distribution().unwrap(), c.observational_distribution().unwrap());
    assert!(d1.approx_eq(&d2, 1e-12));
}

#[test]
fn interventions_toggle_linear_solvability() {
    let m = linear("interventions.scm");
    let all = ["X1", "X2", "X3"];
    assert!((m.subset_determinant(&all).unwrap() - 1.0).abs() < 1e-12);
    assert!(m.solvable_wrt(&all).unwrap());
    let cut = m.intervene(&Intervention::new([("X3", 1.0)])).unwrap();
    assert!(cut.subset_determinant(&all).unwrap().abs() < 1e-12);
    assert!(!cut.solvable_wrt(&all).unwrap());
    let fixed = cut.intervene(&Intervention::new([("X2", 1.0)])).unwrap();
    assert!((fixed.subset_determinant(&all).unwrap() - 1.0).abs() < 1e-12);
    assert!(fixed.uniquely_solvable_wrt(&all).unwrap());
}

#[test]
fn unique_solution_can_split_or_vanish_under_intervention() {
    let m = finite("square_root.scm");
    assert!(m.uniquely_solvable_wrt(&["X1", "X2"]).unwrap());
    let d = m.observational_distribution().unwrap();
    assert_eq!(d.prob(&[("X1", Value::Int(0)), ("X2", Value::Int(1))]).unwrap(), ratio(1, 1));

    let split = m.intervene(&iv(&[("X2", 2)])).unwrap();
    assert_eq!(ints(&split.fiber(&["X1", "X2"], &[], &[]).unwrap()), [[-1, 2], [1, 2]]);
    assert!(matches!(split.observational_distribution(), Err(Error::NotUniquelySolvable { .. })));
    assert_eq!(split.observational_polytope().unwrap().len(), 2);

    let none = m.intervene(&iv(&[("X1", 1)])).unwrap();
    assert!(none.fiber(&["X1", "X2"], &[], &[]).unwrap().is_empty());
    assert!(!none.solvable_wrt(&["X1", "X2"]).unwrap());
}

#[test]
fn models_agreeing_observationally_can_differ_in_solvability_under_intervention() {
    let a = finite("square_root.scm");
    let b = finite("square_root_alt.scm");
    assert!(a.observationally_equivalent(&b, &["X1", "X2"]).unwrap().verdict);
    for x1 in [-1, 0, 1] {
        let (ia, ib) = (a.intervene(&iv(&[("X1", x1)])).unwrap(), b.intervene(&iv(&[("X1", x1)])).unwrap());
        assert_eq!(ia.fiber(&["X2"], &[], &[]).unwrap(), ib.fiber(&["X2"], &[], &[]).unwrap());
    }
    let ib = b.intervene(&iv(&[("X2", 2)])).unwrap();
    assert!(!ib.solvable_wrt(&["X1", "X2"]).unwrap());
    let r = a.interventionally_equivalent(&b, &["X1", "X2"]).unwrap();
    assert!(!r.verdict);
    assert_eq!(r.witnesses[0].intervention, [("X2".to_string(), "2".to_string())]);
}

#[test]
fn solvability_is_not_closed_under_union() {
    let m = finite("solvability_union.scm");
    for s in [&["X1", "X2"][..], &["X2", "X3"], &["X2"]] {
        assert!(m.solvable_wrt(s).unwrap(), "{s:?}");
    }
    for s in [&["X1"][..], &["X3"], &["X1", "X2", "X3"]] {
        assert!(!m.solvable_wrt(s).unwrap(), "{s:?}");
    }
}

#[test]
fn solvability_is_not_closed_under_intersection() {
    let m = finite("solvability_intersection.scm");
    assert!(m.solvable_wrt(&["X1", "X2"]).unwrap());
    assert!(m.solvable_wrt(&["X2", "X3"]).unwrap());
    assert!(!m.solvable_wrt(&["X2"]).unwrap());
}

#[test]
fn unique_solvability_does_not_pass_to_ancestral_subsets() {
    let m = finite("unique_not_ancestral.scm");
    assert!(m.uniquely_solvable_wrt(&["X1", "X2"]).unwrap());
    assert!(m.solvable_wrt(&["X2"]).unwrap());
    assert!(!m.uniquely_solvable_wrt(&["X2"]).unwrap());
    let an = m.functional_graph().induced_subgraph(&["X1", "X2"]).unwrap().ancestors(&["X2"]).unwrap();
    assert_eq!(an, ["X2"]);
}

#[test]
fn self_loops_and_structural_solvability() {
    let m = finite("identity_loop.scm");
    assert!(m.functional_graph().has_self_loop("X2"));
    assert!(!m.structurally_uniquely_solvable());
    assert!(matches!(Model::Finite(m).direct_causal_graph(), Err(Error::SelfLoops(v)) if v == ["X2"]));

    let c = finite("copy.scm");
    assert!(c.structurally_uniquely_solvable());
    assert!(c.uniquely_solvable_all_subsets().unwrap());

    let u = finite("unsolvable_loop.scm");
    assert!(!u.solvable_wrt(&["X1"]).unwrap());
    assert!(u.uniquely_solvable_wrt(&["X1", "X2"]).unwrap());
}

#[test]
fn linear_marginalization_golden() {
    let m = linear("marginalization.scm");
    let g = m.solve_map(&["X3", "X4", "X5"]).unwrap();
    let coef = |t, s| g.coefficient(t, s).unwrap_or(0.0);
    assert!((coef("X3", "E2") - 2.0).abs() < 1e-12);
    for s in ["X1", "E1", "E2"] {
        assert!((coef("X4", s) - 1.0).abs() < 1e-12, "X4 <- {s}");
    }
    assert!((coef("X5", "E2") - 1.0).abs() < 1e-12);
    assert!(coef("X5", "X1").abs() < 1e-12);

    let marg = m.marginalize(&["X3", "X4", "X5"]).unwrap();
    assert_eq!(marg.endogenous(), ["X1", "X2"]);
    let text = scmkit::dsl::serialize(&Model::Linear(marg.clone()));
    assert!(text.contains("eq X1 = 1*E2 + 1*E3\n"), "{text}");
    assert!(text.contains("eq X2 = 1*X1 + 1*E2 + 1*E4\n"), "{text}");
    let full = m.observational_distribution().unwrap().marginal(&["X1", "X2"]).unwrap();
    assert!(full.approx_eq(&marg.observational_distribution().unwrap(), 1e-12));
}

#[test]
fn marginal_graph_can_be_strictly_smaller_than_the_latent_projection() {
    let m = model("latent_projection.scm");
    let marg = m.marginalize(&["X3"]).unwrap();
    let projected = m.augmented_graph().latent_projection(&["X3"]).unwrap();
    assert!(projected.has_directed("X1", "X2"));
    assert!(!marg.augmented_graph().has_directed("X1", "X2"));
    assert!(marg.augmented_graph().is_subgraph_of(&projected));
}

#[test]
fn marginal_graph_can_escape_the_latent_projection() {
    let m = model("no_latent_projection.scm");
    let marg = m.marginalize(&["X1", "X2"]).unwrap();
    let projected = m.augmented_graph().latent_projection(&["X1", "X2"]).unwrap();
    assert!(marg.augmented_graph().has_directed("X3", "X4"));
    assert!(!projected.has_directed("X3", "X4"));
    assert!(!marg.augmented_graph().is_subgraph_of(&projected));
}

#[test]
fn extension_makes_the_confounder_explicit() {
    let m = model("latent_confounder.scm");
    assert!(m.functional_graph().has_bidirected("X1", "X2"));
    let ext = m.extend().unwrap();
    let g = ext.functional_graph();
    let names = ext.endogenous_names();
    let copy = names.iter().find(|n| !["X1", "X2"].contains(&n.as_str())).expect("a noise copy");
    assert!(g.has_directed(copy, "X1") && g.has_directed(copy, "X2"));
    assert!(g.bidirected_edges().is_empty());
}

#[test]
fn separation_in_a_four_cycle() {
    let g = MixedGraph::from_edges(
        ["X1", "X2", "X3", "X4"],
        &[("X1", "X2"), ("X2", "X3"), ("X3", "X4"), ("X4", "X1")],
        &[],
    )
    .unwrap();
    assert!(g.d_separated(&["X1"], &["X3"], &["X2", "X4"]).unwrap());
    assert!(!g.sigma_separated(&["X1"], &["X3"], &["X2", "X4"]).unwrap());
    let json: serde_json::Value = serde_json::from_str(&common::corpus_text("cycle4.json")).unwrap();
    assert_eq!(MixedGraph::from_json(&json).unwrap(), g);
    assert_eq!(model("cycle4.scm").functional_graph(), g);
}

#[test]
fn cyclic_model_obeys_the_sigma_markov_property() {
    let m = model("cycle4.scm");
    for scc in m.functional_graph().sccs() {
        assert!(m.uniquely_solvable_wrt(&scc).unwrap());
    }
    let sigma = m.verify_markov(SeparationKind::Sigma, 2).unwrap();
    assert!(sigma.holds(), "{sigma}");
    assert!(!sigma.triples.iter().any(|t| t.separated));
    let d = m.verify_markov(SeparationKind::D, 2).unwrap();
    let t = d.triples.iter().find(|t| t.a == ["X1"] && t.b == ["X3"] && t.given == ["X2", "X4"]).unwrap();
    assert!(t.separated);
}

#[test]
fn observational_but_not_interventional_equivalence() {
    let a = model("anm.scm");
    let b = model("anm_reversed.scm");
    let (da, db) = (a.observational_distribution().unwrap(), b.observational_distribution().unwrap());
    match (da, db) {
        (scmkit::analysis::Distribution::Gaussian(x), scmkit::analysis::Distribution::Gaussian(y)) => {
            assert!(x.approx_eq(&y, 1e-9), "{} vs {}", x.to_text(), y.to_text())
        }
        _ => unreachable!(),
    }
    assert!(a.equivalent(&b, Level::Observational, &["X1", "X2"]).unwrap().verdict);
    let r = a.equivalent(&b, Level::Interventional, &["X1", "X2"]).unwrap();
    assert!(!r.verdict);
    assert!(r.witnesses.iter().any(|w| w.intervention.iter().any(|(n, _)| n == "X2")));
}

#[test]
fn equivalence_ladder_on_the_sign_models() {
    let m = model("sign_product.scm");
    let copy = model("sign_copy.scm");
    let swap = model("sign_swap.scm");
    let all = ["X1", "X2"];
    let check = |a: &Model, b: &Model, level| a.equivalent(b, level, &all).unwrap().verdict;
    for (a, b) in [(&m, &copy), (&m, &swap), (&copy, &swap)] {
        assert!(check(a, b, Level::Observational));
        assert!(check(a, b, Level::Interventional));
    }
    assert!(!check(&m, &copy, Level::Counterfactual));
    assert!(!check(&m, &swap, Level::Counterfactual));
    assert!(check(&copy, &swap, Level::Counterfactual));
    let graphs = [m.augmented_graph(), copy.augmented_graph(), swap.augmented_graph()];
    assert!(graphs[0] != graphs[1] && graphs[1] != graphs[2] && graphs[0] != graphs[2]);
}

#[test]
fn counterfactual_query_on_the_sign_models() {
    let query = |name: &str| {
        let m = finite(name);
        let d = m
            .counterfactual_distribution(&iv(&[("X1", -1)]), &[("X2", Value::Int(1))], &iv(&[("X1'", 1)]), &["X2'"])
            .unwrap();
        d.prob(&[("X2'", Value::Int(1))]).unwrap()
    };
    assert_eq!(query("sign_product.scm"), ratio(0, 1));
    assert_eq!(query("sign_copy.scm"), ratio(1, 1));
}

#[test]
fn symmetric_noise_hides_a_direct_cause() {
    assert!(!model("sign_product.scm").is_direct_cause("X1", "X2").unwrap());
    assert!(model("sign_product_skewed.scm").is_direct_cause("X1", "X2").unwrap());
    assert!(model("sign_product.scm").functional_graph().has_directed("X1", "X2"));
}

#[test]
fn direct_causal_graph_with_respect_to_a_context() {
    let m = model("chain.scm");
    let dc = m.direct_causal_graph().unwrap();
    assert_eq!(dc.directed_edges(), [("X1", "X2"), ("X2", "X3")]);
    assert!(!dc.has_directed("X1", "X3"));
    let ctx = m.direct_causal_graph_wrt(&["X1", "X3"]).unwrap();
    assert_eq!(ctx.nodes(), ["X1", "X3"]);
    assert_eq!(ctx.directed_edges(), [("X1", "X3")]);
    assert!(m.is_indirect_cause("X1", "X3").unwrap());
    assert!(!m.is_direct_cause("X1", "X3").unwrap());
}

#[test]
fn eliminating_variables_can_create_spurious_causes() {
    let m = model("spurious.scm");
    let ctx = m.direct_causal_graph_wrt(&["X3", "X4"]).unwrap();
    assert!(ctx.has_directed("X3", "X4"));
    let projected = m.direct_causal_graph().unwrap().latent_projection(&["X1", "X2", "X5", "X6"]).unwrap();
    assert!(!projected.has_directed("X3", "X4"));
    assert!(m.is_indirect_cause("X3", "X4").unwrap());
}

#[test]
fn a_hidden_mediator_reveals_a_cause() {
    let m = model("hidden_mediator.scm");
    let dc = m.direct_causal_graph().unwrap();
    assert_eq!(dc.directed_edges(), [("X2", "X3")]);
    assert!(!m.is_direct_cause("X1", "X2").unwrap());
    let ctx = m.direct_causal_graph_wrt(&["X1", "X3"]).unwrap();
    assert!(ctx.has_directed("X1", "X3"));
    assert!(dc.is_subgraph_of(&m.functional_graph().directed_part()));
}

#[test]
fn gaussian_counterfactual_in_a_twin() {
    let m = linear("treatment_twin.scm");
    let d = m.observational_distribution().unwrap();
    let post = gaussian_condition(&d, &[("X2", 1.5)], 1e-12).unwrap();
    assert!((post.mean_of("X2'").unwrap() - 0.9).abs() < 1e-12);
    assert!((post.cov_of("X2'", "X2'").unwrap() - 0.64).abs() < 1e-12);
}

#[test]
fn linear_counterfactual_through_the_twin() {
    // Observing X2 under the factual world and setting X1' in the twin.
    let m = linear("anm.scm");
    let cf = m
        .counterfactual_distribution(&Intervention::none(), &[("X1", 0.0), ("X2", 0.0)], &Intervention::new([("X1", 1.0)]), &["X2'"])
        .unwrap();
    // Noise is pinned down by (X1, X2) = 0, so X2' = X1'/3 exactly.
    assert!((cf.mean_of("X2'").unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert!(cf.cov_of("X2'", "X2'").unwrap().abs() < 1e-9);
}
