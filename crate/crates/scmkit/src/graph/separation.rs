use super::MixedGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    /// cur -> next
    Out,
    /// cur <- next
    In,
    /// cur <-> next
    Bi,
}

struct Search<'a> {
    adj: Vec<Vec<(usize, Step)>>,
    in_s: &'a [bool],
    in_b: &'a [bool],
    an_s: Vec<bool>,
    comp: Option<Vec<usize>>,
    on_path: Vec<bool>,
}

impl Search<'_> {
    /// Whether `cur` blocks a path entering through an edge with the given
    /// arrowhead/tail and leaving through `out`.
    fn blocks(&self, cur: usize, arrow_in: bool, prev_child: Option<usize>, next: usize, out: Step) -> bool {
        let arrow_out = out != Step::Out;
        if arrow_in && arrow_out {
            return !self.an_s[cur];
        }
        if !self.in_s[cur] {
            return false;
        }
        match &self.comp {
            None => true,
            Some(comp) => {
                let next_child = (out == Step::Out).then_some(next);
                prev_child.into_iter().chain(next_child).any(|c| comp[c] != comp[cur])
            }
        }
    }

    /// Depth-first search over open path prefixes ending at `cur`.
    fn open_from(&mut self, cur: usize, arrow_in: bool, prev_child: Option<usize>, first: bool) -> bool {
        for k in 0..self.adj[cur].len() {
            let (next, step) = self.adj[cur][k];
            if self.on_path[next] {
                continue;
            }
            if !first && self.blocks(cur, arrow_in, prev_child, next, step) {
                continue;
            }
            if self.in_b[next] && !self.in_s[next] {
                return true;
            }
            self.on_path[next] = true;
            let child = (step == Step::In).then_some(cur);
            let open = self.open_from(next, step != Step::In, child, false);
            self.on_path[next] = false;
            if open {
                return true;
            }
        }
        false
    }
}

impl MixedGraph {
    /// d-separation of `a` and `b` given `s`, by enumerating simple paths.
    pub fn d_separated<S: AsRef<str>>(&self, a: &[S], b: &[S], s: &[S]) -> Result<bool> {
        self.separated(a, b, s, false)
    }

    /// σ-separation: like d-separation, except that a conditioned
    /// non-collider only blocks when it points along the path to a node
    /// outside its own strongly connected component.
    pub fn sigma_separated<S: AsRef<str>>(&self, a: &[S], b: &[S], s: &[S]) -> Result<bool> {
        self.separated(a, b, s, true)
    }

    fn separated<S: AsRef<str>>(&self, a: &[S], b: &[S], s: &[S], sigma: bool) -> Result<bool> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidGraph("separation needs non-empty end sets".into()));
        }
        let (ma, mb, ms) = (self.mask(a)?, self.mask(b)?, self.mask(s)?);
        Ok(self.separated_idx(&ma, &mb, &ms, sigma))
    }

    pub(crate) fn separated_idx(&self, a: &[bool], b: &[bool], s: &[bool], sigma: bool) -> bool {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for &(x, y) in &self.directed {
            if x != y {
                adj[x].push((y, Step::Out));
                adj[y].push((x, Step::In));
            }
        }
        for &(x, y) in &self.bidirected {
            adj[x].push((y, Step::Bi));
            adj[y].push((x, Step::Bi));
        }
        let seeds: Vec<usize> = (0..n).filter(|&i| s[i]).collect();
        let mut search = Search {
            adj,
            in_s: s,
            in_b: b,
            an_s: self.reach(&seeds, false),
            comp: sigma.then(|| self.component_ids()),
            on_path: vec![false; n],
        };
        for start in (0..n).filter(|&i| a[i] && !s[i]) {
            if b[start] {
                return false;
            }
            search.on_path[start] = true;
            let open = search.open_from(start, false, None, true);
            search.on_path[start] = false;
            if open {
                return false;
            }
        }
        true
    }
}
