//! Directed mixed graphs: nodes, directed edges (self-loops allowed) and
//! bidirected edges between distinct nodes.

mod io;
mod separation;

use std::collections::BTreeSet;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::value::natural_cmp;

/// Default cap on the node count for loop enumeration.
pub const MAX_LOOP_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MixedGraph {
    names: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
}

impl MixedGraph {
    /// Graph without edges. Nodes are stored in natural name order.
    pub fn new<S: AsRef<str>>(nodes: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut names: Vec<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        names.sort_by(|a, b| natural_cmp(a, b));
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateName(w[0].clone()));
            }
        }
        Ok(MixedGraph { names, ..Default::default() })
    }

    pub fn from_edges<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        let mut g = Self::new(nodes)?;
        for (a, b) in directed {
            g.add_directed(a, b)?;
        }
        for (a, b) in bidirected {
            g.add_bidirected(a, b)?;
        }
        Ok(g)
    }

    pub fn add_directed(&mut self, from: &str, to: &str) -> Result<()> {
        let (a, b) = (self.idx(from)?, self.idx(to)?);
        self.directed.insert((a, b));
        Ok(())
    }

    pub fn add_bidirected(&mut self, x: &str, y: &str) -> Result<()> {
        let (a, b) = (self.idx(x)?, self.idx(y)?);
        if a == b {
            return Err(Error::InvalidGraph(format!("bidirected self-edge at {x}")));
        }
        self.bidirected.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    pub fn directed_edges(&self) -> Vec<(&str, &str)> {
        self.directed.iter().map(|&(a, b)| (self.name(a), self.name(b))).collect()
    }

    pub fn bidirected_edges(&self) -> Vec<(&str, &str)> {
        self.bidirected.iter().map(|&(a, b)| (self.name(a), self.name(b))).collect()
    }

    pub fn has_directed(&self, from: &str, to: &str) -> bool {
        match (self.position(from), self.position(to)) {
            (Some(a), Some(b)) => self.directed.contains(&(a, b)),
            _ => false,
        }
    }

    pub fn has_bidirected(&self, x: &str, y: &str) -> bool {
        match (self.position(x), self.position(y)) {
            (Some(a), Some(b)) => self.bidirected.contains(&(a.min(b), a.max(b))),
            _ => false,
        }
    }

    pub fn parents(&self, k: &str) -> Result<Vec<String>> {
        let k = self.idx(k)?;
        Ok(self.names_of(self.directed.iter().filter(|e| e.1 == k).map(|e| e.0)))
    }

    pub fn children(&self, k: &str) -> Result<Vec<String>> {
        let k = self.idx(k)?;
        Ok(self.names_of(self.directed.iter().filter(|e| e.0 == k).map(|e| e.1)))
    }

    /// Ancestors of a set, including the set itself.
    pub fn ancestors<S: AsRef<str>>(&self, set: &[S]) -> Result<Vec<String>> {
        let seeds = self.indices(set)?;
        let mask = self.reach(&seeds, false);
        Ok(self.names_of(mask_iter(&mask)))
    }

    /// Descendants of a set, including the set itself.
    pub fn descendants<S: AsRef<str>>(&self, set: &[S]) -> Result<Vec<String>> {
        let seeds = self.indices(set)?;
        let mask = self.reach(&seeds, true);
        Ok(self.names_of(mask_iter(&mask)))
    }

    /// Strongly connected component of `k`.
    pub fn scc(&self, k: &str) -> Result<Vec<String>> {
        let k = self.idx(k)?;
        let comp = self.component_ids();
        Ok(self.names_of((0..self.len()).filter(|&i| comp[i] == comp[k])))
    }

    /// All strongly connected components, ordered by their first node.
    pub fn sccs(&self) -> Vec<Vec<String>> {
        let comp = self.component_ids();
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for i in 0..self.len() {
            if seen[comp[i]] {
                continue;
            }
            seen[comp[i]] = true;
            out.push(self.names_of((0..self.len()).filter(|&j| comp[j] == comp[i])));
        }
        out
    }

    /// True iff there are no directed cycles. A self-loop is a cycle.
    pub fn is_acyclic(&self) -> bool {
        if self.directed.iter().any(|&(a, b)| a == b) {
            return false;
        }
        let comp = self.component_ids();
        (0..self.len()).all(|i| comp[i] == i)
    }

    pub fn has_self_loop(&self, k: &str) -> bool {
        self.has_directed(k, k)
    }

    /// Removes directed edges into the targets and bidirected edges at them.
    pub fn intervene_graph<S: AsRef<str>>(&self, targets: &[S]) -> Result<MixedGraph> {
        let t = self.mask(targets)?;
        let mut g = self.clone();
        g.directed.retain(|&(_, b)| !t[b]);
        g.bidirected.retain(|&(a, b)| !t[a] && !t[b]);
        Ok(g)
    }

    /// Directed graph on the nodes outside `latent`, with `i -> j` whenever
    /// the original graph has a directed walk from `i` to `j` whose inner
    /// nodes all lie in `latent`.
    pub fn latent_projection<S: AsRef<str>>(&self, latent: &[S]) -> Result<MixedGraph> {
        if !self.bidirected.is_empty() {
            return Err(Error::InvalidGraph("latent projection needs a directed graph".into()));
        }
        let lat = self.mask(latent)?;
        let children = self.child_lists();
        let keep: Vec<usize> = (0..self.len()).filter(|&i| !lat[i]).collect();
        let mut g = MixedGraph::new(keep.iter().map(|&i| self.name(i)))?;
        for &i in &keep {
            let mut seen = vec![false; self.len()];
            let mut queue: VecDeque<usize> = children[i].iter().copied().collect();
            while let Some(v) = queue.pop_front() {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                if lat[v] {
                    queue.extend(children[v].iter().copied());
                }
            }
            for &j in &keep {
                if seen[j] {
                    g.add_directed(self.name(i), self.name(j))?;
                }
            }
        }
        Ok(g)
    }

    /// Subgraph induced by a node subset.
    pub fn induced_subgraph<S: AsRef<str>>(&self, set: &[S]) -> Result<MixedGraph> {
        let m = self.mask(set)?;
        let mut g = MixedGraph::new((0..self.len()).filter(|&i| m[i]).map(|i| self.name(i)))?;
        for &(a, b) in &self.directed {
            if m[a] && m[b] {
                g.add_directed(self.name(a), self.name(b))?;
            }
        }
        for &(a, b) in &self.bidirected {
            if m[a] && m[b] {
                g.add_bidirected(self.name(a), self.name(b))?;
            }
        }
        Ok(g)
    }

    /// True iff every node and edge of `self` also appears in `other`.
    pub fn is_subgraph_of(&self, other: &MixedGraph) -> bool {
        self.names.iter().all(|n| other.contains(n))
            && self.directed_edges().iter().all(|&(a, b)| other.has_directed(a, b))
            && self.bidirected_edges().iter().all(|&(a, b)| other.has_bidirected(a, b))
    }

    /// Directed part only.
    pub fn directed_part(&self) -> MixedGraph {
        MixedGraph { bidirected: BTreeSet::new(), ..self.clone() }
    }

    /// All node subsets whose induced subgraph is strongly connected,
    /// ordered by size and then by node order. Errors above `max_nodes`.
    pub fn enumerate_loops_bounded(&self, max_nodes: usize) -> Result<Vec<Vec<String>>> {
        let n = self.len();
        if n > max_nodes {
            return Err(Error::BoundExceeded { what: format!("loop enumeration over {n} nodes"), limit: max_nodes });
        }
        let mut adj = vec![0u64; n];
        for &(a, b) in &self.directed {
            adj[a] |= 1 << b;
        }
        let mut found: Vec<u64> = Vec::new();
        for set in 1u64..(1u64 << n) {
            if strongly_connected(set, &adj) {
                found.push(set);
            }
        }
        found.sort_by_key(|&s| (s.count_ones(), s.reverse_bits()));
        Ok(found
            .into_iter()
            .map(|s| self.names_of((0..n).filter(|&i| s >> i & 1 == 1)))
            .collect())
    }

    pub fn enumerate_loops(&self) -> Result<Vec<Vec<String>>> {
        self.enumerate_loops_bounded(MAX_LOOP_NODES)
    }

    // ---- index helpers ----

    pub(crate) fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub(crate) fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn idx(&self, name: &str) -> Result<usize> {
        self.position(name).ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    fn indices<S: AsRef<str>>(&self, set: &[S]) -> Result<Vec<usize>> {
        set.iter().map(|s| self.idx(s.as_ref())).collect()
    }

    pub(crate) fn mask<S: AsRef<str>>(&self, set: &[S]) -> Result<Vec<bool>> {
        let mut m = vec![false; self.len()];
        for i in self.indices(set)? {
            m[i] = true;
        }
        Ok(m)
    }

    fn names_of(&self, it: impl Iterator<Item = usize>) -> Vec<String> {
        let mut idx: Vec<usize> = it.collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().map(|i| self.names[i].clone()).collect()
    }

    fn child_lists(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len()];
        for &(a, b) in &self.directed {
            ch[a].push(b);
        }
        ch
    }

    fn parent_lists(&self) -> Vec<Vec<usize>> {
        let mut pa = vec![Vec::new(); self.len()];
        for &(a, b) in &self.directed {
            pa[b].push(a);
        }
        pa
    }

    /// Reflexive reachability along edges (forward) or against them.
    pub(crate) fn reach(&self, seeds: &[usize], forward: bool) -> Vec<bool> {
        let adj = if forward { self.child_lists() } else { self.parent_lists() };
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(adj[v].iter().copied());
            }
        }
        seen
    }

    /// Component id of each node: the smallest index in its SCC.
    pub(crate) fn component_ids(&self) -> Vec<usize> {
        let n = self.len();
        let desc: Vec<Vec<bool>> = (0..n).map(|i| self.reach(&[i], true)).collect();
        (0..n)
            .map(|i| (0..n).find(|&j| desc[i][j] && desc[j][i]).unwrap_or(i))
            .collect()
    }
}

fn mask_iter(m: &[bool]) -> impl Iterator<Item = usize> + '_ {
    m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
}

fn strongly_connected(set: u64, adj: &[u64]) -> bool {
    let start = set.trailing_zeros() as usize;
    let closure = |rev: bool| {
        let mut seen = 1u64 << start;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                if rev {
                    for (u, &a) in adj.iter().enumerate() {
                        if a >> v & 1 == 1 {
                            next |= 1 << u;
                        }
                    }
                } else {
                    next |= adj[v];
                }
            }
            next &= set & !seen;
            seen |= next;
            frontier = next;
        }
        seen
    };
    closure(false) == set && closure(true) == set
}
