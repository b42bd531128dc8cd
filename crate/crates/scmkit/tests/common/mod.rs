#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scmkit::{dsl, ratio, FiniteScm, Model, Value};

pub mod laws;

pub fn corpus_dir() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus"].iter().collect()
}

pub fn corpus_text(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn model(name: &str) -> Model {
    dsl::parse(&corpus_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn finite(name: &str) -> FiniteScm {
    match model(name) {
        Model::Finite(m) => m,
        Model::Linear(_) => panic!("{name} is linear"),
    }
}

pub fn linear(name: &str) -> scmkit::LinearScm {
    match model(name) {
        Model::Linear(m) => m,
        Model::Finite(_) => panic!("{name} is finite"),
    }
}

/// Shape of randomly generated finite models.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_endo: usize,
    pub max_exo: usize,
    pub max_domain: usize,
    /// Chance of an edge against the generation order, which closes cycles.
    pub back_edge: f64,
    pub forward_edge: f64,
    pub self_arg: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_endo: 5, max_exo: 3, max_domain: 3, back_edge: 0.2, forward_edge: 0.4, self_arg: 0.1 }
    }
}

impl Shape {
    pub fn small() -> Self {
        Shape { max_endo: 3, max_exo: 2, max_domain: 2, ..Shape::default() }
    }
}

/// Declarations and tables of a finite model, kept apart so that variants
/// with the same signature can be derived.
#[derive(Debug, Clone)]
pub struct Spec {
    endo: Vec<(String, usize)>,
    exo: Vec<(String, Vec<i64>)>,
    mechs: Vec<(Vec<String>, Vec<i64>)>,
}

impl Spec {
    pub fn random(rng: &mut ChaCha8Rng, shape: Shape) -> Spec {
        let n = rng.gen_range(1..=shape.max_endo);
        let n_exo = rng.gen_range(0..=shape.max_exo);
        let endo: Vec<(String, usize)> = (1..=n).map(|i| (format!("X{i}"), rng.gen_range(2..=shape.max_domain))).collect();
        let exo: Vec<(String, Vec<i64>)> = (1..=n_exo)
            .map(|i| {
                let s = rng.gen_range(2..=shape.max_domain);
                let mut w: Vec<i64> = (0..s).map(|_| rng.gen_range(0..4)).collect();
                if w.iter().all(|&x| x == 0) {
                    w[0] = 1;
                }
                (format!("E{i}"), w)
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut mechs = vec![(Vec::new(), Vec::new()); n];
        for (pos, &k) in order.iter().enumerate() {
            let mut args = Vec::new();
            for (q, &j) in order.iter().enumerate() {
                let p = match q.cmp(&pos) {
                    std::cmp::Ordering::Less => shape.forward_edge,
                    std::cmp::Ordering::Equal => shape.self_arg,
                    std::cmp::Ordering::Greater => shape.back_edge,
                };
                if rng.gen_bool(p) {
                    args.push(endo[j].0.clone());
                }
            }
            for (e, _) in &exo {
                if rng.gen_bool(0.5) {
                    args.push(e.clone());
                }
            }
            mechs[k] = (args, Vec::new());
        }
        let mut spec = Spec { endo, exo, mechs };
        for k in 0..n {
            spec.mechs[k].1 = spec.random_table(rng, k);
        }
        spec
    }

    fn size_of(&self, name: &str) -> usize {
        self.endo
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
            .or_else(|| self.exo.iter().find(|(n, _)| n == name).map(|(_, w)| w.len()))
            .unwrap()
    }

    fn random_table(&self, rng: &mut ChaCha8Rng, k: usize) -> Vec<i64> {
        let rows: usize = self.mechs[k].0.iter().map(|a| self.size_of(a)).product();
        (0..rows).map(|_| rng.gen_range(0..self.endo[k].1) as i64).collect()
    }

    /// Same declarations and arguments; each table entry is redrawn with
    /// probability `p`.
    pub fn perturb(&self, rng: &mut ChaCha8Rng, p: f64) -> Spec {
        let mut out = self.clone();
        for k in 0..out.mechs.len() {
            let fresh = self.random_table(rng, k);
            for (v, f) in out.mechs[k].1.iter_mut().zip(fresh) {
                if rng.gen_bool(p) {
                    *v = f;
                }
            }
        }
        out
    }

    pub fn build(&self) -> FiniteScm {
        let mut b = FiniteScm::builder();
        for (name, s) in &self.endo {
            b = b.endogenous(name, 0..*s as i64);
        }
        for (name, w) in &self.exo {
            let t: i64 = w.iter().sum();
            b = b.exogenous(name, w.iter().enumerate().map(|(v, &x)| (v as i64, ratio(x, t))));
        }
        for ((name, _), (args, table)) in self.endo.iter().zip(&self.mechs) {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            b = b.mechanism_table(name, &args, table.iter().map(|&v| Value::Int(v)));
        }
        b.build().expect("generated model is well formed")
    }
}

/// Random finite model with tabular mechanisms. Noise probabilities are
/// rational and occasionally zero.
pub fn random_finite(rng: &mut ChaCha8Rng, shape: Shape) -> FiniteScm {
    Spec::random(rng, shape).build()
}

/// Random perfect intervention on a nonempty subset of `among`.
pub fn random_intervention_on(rng: &mut ChaCha8Rng, m: &FiniteScm, among: &[String]) -> scmkit::Intervention<Value> {
    let mut targets = random_subset(rng, among, 0.4);
    if targets.is_empty() {
        targets.push(among[rng.gen_range(0..among.len())].clone());
    }
    let picks = targets.into_iter().map(|t| {
        let values = m.endogenous()[m.endo_index(&t).unwrap()].domain.values();
        let v = values[rng.gen_range(0..values.len())].clone();
        (t, v)
    });
    scmkit::Intervention::new(picks.collect::<Vec<_>>())
}

/// Random perfect intervention on a nonempty subset of the variables.
pub fn random_intervention(rng: &mut ChaCha8Rng, m: &FiniteScm) -> scmkit::Intervention<Value> {
    let names: Vec<String> = m.endogenous().iter().map(|v| v.name.clone()).collect();
    random_intervention_on(rng, m, &names)
}

/// Random subset of the given names, possibly empty.
pub fn random_subset(rng: &mut ChaCha8Rng, names: &[String], p: f64) -> Vec<String> {
    names.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}
