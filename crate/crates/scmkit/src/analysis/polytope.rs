//! Sets of observational distributions of models that may have several
//! solutions: one vertex per deterministic choice of solution for each
//! noise value.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};

use super::solve::Subsystem;
use super::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::odometer::Odometer;
use crate::scm::FiniteScm;
use crate::value::Prob;

/// Default cap on the number of deterministic selectors.
pub const MAX_SELECTORS: usize = 1_000_000;

type Cell = Vec<usize>;
type Point = BTreeMap<Cell, Prob>;

/// Noise mass grouped by the set of solution cells it admits.
#[derive(Debug, Clone)]
pub(crate) struct Selectors {
    pub groups: Vec<(Prob, Vec<Cell>)>,
}

impl Selectors {
    /// True iff some noise value of positive probability has no solution.
    pub fn is_empty(&self) -> bool {
        self.groups.iter().any(|(_, cells)| cells.is_empty())
    }

    pub fn count(&self) -> usize {
        self.groups.iter().fold(1usize, |acc, (_, c)| acc.saturating_mul(c.len()))
    }

    /// Distinct distributions reachable by deterministic selection.
    pub fn vertices(&self, cap: usize) -> Result<Vec<Point>> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if self.count() > cap {
            return Err(Error::BoundExceeded { what: "number of deterministic selectors".into(), limit: cap });
        }
        let mut points: BTreeSet<Point> = BTreeSet::from([Point::new()]);
        for (p, cells) in &self.groups {
            let mut next = BTreeSet::new();
            for pt in &points {
                for c in cells {
                    let mut q = pt.clone();
                    *q.entry(c.clone()).or_insert_with(Prob::zero) += p;
                    next.insert(q);
                }
            }
            points = next;
        }
        Ok(points.into_iter().collect())
    }

    /// Whether `target` is a mixture of selector distributions, decided by
    /// an exact max-flow from noise groups to solution cells.
    pub fn contains(&self, target: &Point) -> bool {
        if self.is_empty() {
            return false;
        }
        let cells: Vec<&Cell> = target.keys().collect();
        let g = self.groups.len();
        let n = g + cells.len() + 2;
        let (src, sink) = (n - 2, n - 1);
        let mut cap: Vec<Vec<Cap>> = vec![vec![Cap::Fin(Prob::zero()); n]; n];
        for (i, (p, cs)) in self.groups.iter().enumerate() {
            cap[src][i] = Cap::Fin(p.clone());
            for c in cs {
                if let Some(j) = cells.iter().position(|t| *t == c) {
                    cap[i][g + j] = Cap::Inf;
                }
            }
        }
        for (j, c) in cells.iter().enumerate() {
            cap[g + j][sink] = Cap::Fin(target[*c].clone());
        }
        max_flow(&mut cap, src, sink).is_one()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cap {
    Inf,
    Fin(Prob),
}

impl Cap {
    fn positive(&self) -> bool {
        match self {
            Cap::Inf => true,
            Cap::Fin(p) => p.is_positive(),
        }
    }

    fn sub(&mut self, d: &Prob) {
        if let Cap::Fin(p) = self {
            *p -= d;
        }
    }

    fn add(&mut self, d: &Prob) {
        if let Cap::Fin(p) = self {
            *p += d;
        }
    }
}

/// Edmonds-Karp on a dense residual matrix with exact capacities.
fn max_flow(cap: &mut [Vec<Cap>], src: usize, sink: usize) -> Prob {
    let n = cap.len();
    let mut flow = Prob::zero();
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v].positive() {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return flow;
        }
        let mut bottleneck: Option<Prob> = None;
        let mut v = sink;
        while v != src {
            let u = prev[v];
            if let Cap::Fin(p) = &cap[u][v] {
                bottleneck = Some(match bottleneck {
                    Some(b) if b <= *p => b,
                    _ => p.clone(),
                });
            }
            v = u;
        }
        let b = bottleneck.expect("source edges are finite");
        let mut v = sink;
        while v != src {
            let u = prev[v];
            cap[u][v].sub(&b);
            cap[v][u].add(&b);
            v = u;
        }
        flow += b;
    }
}

impl FiniteScm {
    /// Groups positive-probability noise values by their solution sets,
    /// projected onto `proj`.
    pub(crate) fn selectors(&self, proj: &[usize]) -> Selectors {
        let all: Vec<usize> = (0..self.endo.len()).collect();
        let sys = Subsystem::new(self, &all);
        let mut grouped: BTreeMap<Vec<Cell>, Prob> = BTreeMap::new();
        let mut od = Odometer::new(self.supports());
        let mut x = vec![0; self.endo.len()];
        while let Some(e) = od.next_combo() {
            let e = e.to_vec();
            let mut cells: BTreeSet<Cell> = BTreeSet::new();
            sys.for_each(&mut x, &e, &mut |sol| {
                cells.insert(proj.iter().map(|&k| sol[k]).collect());
                true
            });
            *grouped.entry(cells.into_iter().collect()).or_insert_with(Prob::zero) += self.prob_of(&e);
        }
        Selectors { groups: grouped.into_iter().map(|(c, p)| (p, c)).collect() }
    }

    /// All distributions induced by choosing one solution per noise value,
    /// deduplicated. Empty when the model has no solution.
    pub fn observational_polytope(&self) -> Result<Vec<DiscreteDistribution>> {
        let all: Vec<usize> = (0..self.endo.len()).collect();
        let vars: Vec<String> = self.endo.iter().map(|v| v.name.clone()).collect();
        let domains: Vec<_> = self.endo.iter().map(|v| v.domain.clone()).collect();
        Ok(self
            .selectors(&all)
            .vertices(MAX_SELECTORS)?
            .into_iter()
            .map(|p| DiscreteDistribution::new(vars.clone(), domains.clone(), p))
            .collect())
    }
}
