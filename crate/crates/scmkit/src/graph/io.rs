use serde_json::{json, Value as Json};

use super::MixedGraph;
use crate::error::{Error, Result};

impl MixedGraph {
    /// `{"nodes":[..],"directed":[[a,b],..],"bidirected":[[a,b],..]}`.
    pub fn to_json(&self) -> Json {
        let pairs = |v: Vec<(&str, &str)>| -> Vec<Json> { v.into_iter().map(|(a, b)| json!([a, b])).collect() };
        json!({
            "nodes": self.names,
            "directed": pairs(self.directed_edges()),
            "bidirected": pairs(self.bidirected_edges()),
        })
    }

    pub fn from_json(v: &Json) -> Result<MixedGraph> {
        let bad = |m: &str| Error::Json(m.to_string());
        let strs = |v: &Json| -> Result<Vec<String>> {
            v.as_array()
                .ok_or_else(|| bad("expected an array"))?
                .iter()
                .map(|s| s.as_str().map(str::to_string).ok_or_else(|| bad("expected a string")))
                .collect()
        };
        let nodes = strs(v.get("nodes").ok_or_else(|| bad("missing nodes"))?)?;
        let mut g = MixedGraph::new(&nodes)?;
        for (key, bi) in [("directed", false), ("bidirected", true)] {
            let Some(list) = v.get(key) else { continue };
            for e in list.as_array().ok_or_else(|| bad("expected an edge list"))? {
                let e = strs(e)?;
                if e.len() != 2 {
                    return Err(bad("edges have two endpoints"));
                }
                if bi {
                    g.add_bidirected(&e[0], &e[1])?;
                } else {
                    g.add_directed(&e[0], &e[1])?;
                }
            }
        }
        Ok(g)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n");
        for n in &self.names {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        for (a, b) in self.directed_edges() {
            s.push_str(&format!("  \"{a}\" -> \"{b}\";\n"));
        }
        for (a, b) in self.bidirected_edges() {
            s.push_str(&format!("  \"{a}\" -> \"{b}\" [dir=both, style=dashed];\n"));
        }
        s.push_str("}\n");
        s
    }
}
