//! Conditional independence in exact distributions, checked against
//! separation in the functional graph.

use std::fmt;

use serde_json::{json, Value as Json};

use crate::analysis::Distribution;
use crate::error::{Error, Result};
use crate::scm::{Model, StructuralModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationKind {
    D,
    Sigma,
}

impl fmt::Display for SeparationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeparationKind::D => "d",
            SeparationKind::Sigma => "sigma",
        })
    }
}

/// `a` and `b` independent given `s` under `dist`. Exact for discrete
/// distributions, within `tol` on partial covariances for Gaussians.
pub fn conditional_independent<S: AsRef<str>>(dist: &Distribution, a: &[S], b: &[S], s: &[S], tol: f64) -> Result<bool> {
    match dist {
        Distribution::Discrete(d) => d.independent(a, b, s),
        Distribution::Gaussian(d) => d.independent(a, b, s, tol),
    }
}

/// One tested statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub given: Vec<String>,
    pub separated: bool,
    pub independent: bool,
}

impl Triple {
    /// Separated in the graph but dependent in the distribution.
    pub fn violation(&self) -> bool {
        self.separated && !self.independent
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovReport {
    pub kind: SeparationKind,
    pub triples: Vec<Triple>,
}

impl MarkovReport {
    pub fn violations(&self) -> Vec<&Triple> {
        self.triples.iter().filter(|t| t.violation()).collect()
    }

    pub fn holds(&self) -> bool {
        self.triples.iter().all(|t| !t.violation())
    }

    pub fn to_json(&self) -> Json {
        let triples: Vec<Json> = self
            .triples
            .iter()
            .map(|t| {
                json!({"a": t.a, "b": t.b, "given": t.given, "separated": t.separated,
                       "independent": t.independent, "violation": t.violation()})
            })
            .collect();
        json!({"kind": self.kind.to_string(), "violations": self.violations().len(), "triples": triples})
    }
}

impl fmt::Display for MarkovReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: &[String]| if v.is_empty() { "-".to_string() } else { v.join(",") };
        writeln!(f, "{:<10} {:<10} {:<16} {:<10} {:<12} violation", "a", "b", "given", "separated", "independent")?;
        for t in &self.triples {
            writeln!(
                f,
                "{:<10} {:<10} {:<16} {:<10} {:<12} {}",
                cell(&t.a),
                cell(&t.b),
                cell(&t.given),
                t.separated,
                t.independent,
                if t.violation() { "YES" } else { "no" }
            )?;
        }
        write!(f, "{} violation(s) of the {}-Markov property", self.violations().len(), self.kind)
    }
}

/// Subsets of `items` with at most `max` elements, smallest first.
fn small_subsets(items: &[usize], max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::new(), 0usize)];
    for _ in 0..max {
        let mut next = Vec::new();
        for (set, from) in &frontier {
            for (p, &it) in items.iter().enumerate().skip(*from) {
                let mut s: Vec<usize> = set.clone();
                s.push(it);
                out.push(s.clone());
                next.push((s, p + 1));
            }
        }
        frontier = next;
    }
    out
}

impl Model {
    /// Tests every separation statement between two single variables given
    /// at most `max_conditioning` others.
    pub fn verify_markov(&self, kind: SeparationKind, max_conditioning: usize) -> Result<MarkovReport> {
        self.verify_markov_with(kind, max_conditioning, false)
    }

    /// As `verify_markov`; with `all_sets` the two sides range over all
    /// disjoint nonempty sets, which grows exponentially.
    pub fn verify_markov_with(&self, kind: SeparationKind, max_conditioning: usize, all_sets: bool) -> Result<MarkovReport> {
        let g = self.functional_graph();
        if kind == SeparationKind::Sigma {
            for scc in g.sccs() {
                if !self.uniquely_solvable_wrt(&scc)? {
                    return Err(Error::NotUniquelySolvable {
                        subset: scc,
                        witness: "the Markov property needs unique solvability w.r.t. each strongly connected component"
                            .into(),
                    });
                }
            }
        }
        let dist = self.observational_distribution()?;
        let tol = match self {
            Model::Linear(m) => m.tolerance(),
            Model::Finite(_) => 0.0,
        };
        let names = g.nodes().to_vec();
        let n = names.len();
        let pick = |ix: &[usize]| -> Vec<String> { ix.iter().map(|&i| names[i].clone()).collect() };
        let sides: Vec<(Vec<usize>, Vec<usize>)> = if all_sets {
            let mut out = Vec::new();
            for ma in 1u64..1 << n {
                for mb in 1u64..1 << n {
                    if ma & mb == 0 && ma < mb {
                        let bits = |m: u64| (0..n).filter(|i| m >> i & 1 == 1).collect();
                        out.push((bits(ma), bits(mb)));
                    }
                }
            }
            out
        } else {
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (vec![i], vec![j]))).collect()
        };
        let mut triples = Vec::new();
        for (a, b) in sides {
            let rest: Vec<usize> = (0..n).filter(|i| !a.contains(i) && !b.contains(i)).collect();
            for s in small_subsets(&rest, max_conditioning) {
                let (a, b, s) = (pick(&a), pick(&b), pick(&s));
                let separated = match kind {
                    SeparationKind::D => g.d_separated(&a, &b, &s)?,
                    SeparationKind::Sigma => g.sigma_separated(&a, &b, &s)?,
                };
                let independent = conditional_independent(&dist, &a, &b, &s, tol)?;
                triples.push(Triple { a, b, given: s, separated, independent });
            }
        }
        Ok(MarkovReport { kind, triples })
    }
}
