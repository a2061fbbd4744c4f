//! Labeled undirected graphs and the line-based graph file format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Simple undirected graph with unary vertex labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledGraph {
    adj: Vec<Vec<u32>>,
    edge_count: usize,
    labels: BTreeMap<String, BTreeSet<u32>>,
}

impl LabeledGraph {
    pub fn new(n: usize) -> Self {
        LabeledGraph { adj: vec![Vec::new(); n], edge_count: 0, labels: BTreeMap::new() }
    }

    /// Builds a graph from an edge list, ignoring duplicates.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut g = LabeledGraph::new(n);
        for (u, v) in edges {
            if !g.has_edge(u, v) {
                g.add_edge(u, v)?;
            }
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn add_vertex(&mut self) -> u32 {
        self.adj.push(Vec::new());
        (self.adj.len() - 1) as u32
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<()> {
        let n = self.vertex_count();
        if u as usize >= n || v as usize >= n {
            return Err(Error::Contract(format!("edge {u}-{v} out of range for {n} vertices")));
        }
        if u == v {
            return Err(Error::Contract(format!("self-loop at {u}")));
        }
        let pos = match self.adj[u as usize].binary_search(&v) {
            Ok(_) => return Err(Error::Contract(format!("duplicate edge {u}-{v}"))),
            Err(p) => p,
        };
        self.adj[u as usize].insert(pos, v);
        let pos = self.adj[v as usize].binary_search(&u).unwrap_err();
        self.adj[v as usize].insert(pos, u);
        self.edge_count += 1;
        Ok(())
    }

    pub fn add_label(&mut self, label: &str, v: u32) -> Result<()> {
        if v as usize >= self.vertex_count() {
            return Err(Error::Contract(format!("label {label} on missing vertex {v}")));
        }
        self.labels.entry(label.to_string()).or_default().insert(v);
        Ok(())
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj.get(u as usize).is_some_and(|a| a.binary_search(&v).is_ok())
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, ns)| {
            let u = u as u32;
            ns.iter().copied().filter(move |&v| u < v).map(move |v| (u, v))
        })
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<u32>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&BTreeSet<u32>> {
        self.labels.get(name)
    }

    pub fn has_label(&self, name: &str, v: u32) -> bool {
        self.labels.get(name).is_some_and(|s| s.contains(&v))
    }

    /// Serializes into the graph file format accepted by [`load_graph`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.vertex_count() as u32 {
            let _ = write!(out, "v {v}");
            for (name, members) in &self.labels {
                if members.contains(&v) {
                    let _ = write!(out, " {name}");
                }
            }
            out.push('\n');
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "e {u} {v}");
        }
        out
    }
}

/// Parses the graph file format.
///
/// ```text
/// # comment
/// v 0 red
/// v 1
/// e 0 1
/// ```
pub fn load_graph(text: &str) -> Result<LabeledGraph> {
    let mut g = LabeledGraph::new(0);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| Error::GraphParse { line, msg };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let kind = parts.next().unwrap_or_default();
        let parse_id = |tok: Option<&str>| -> Result<u32> {
            let tok = tok.ok_or_else(|| err("missing vertex id".into()))?;
            tok.parse::<u32>().map_err(|_| err(format!("invalid vertex id `{tok}`")))
        };
        match kind {
            "v" => {
                let id = parse_id(parts.next())?;
                if id as usize != g.vertex_count() {
                    return Err(err(format!(
                        "vertex ids must be dense and in order: expected {}, found {id}",
                        g.vertex_count()
                    )));
                }
                g.add_vertex();
                for label in parts {
                    if label == "E" || !is_label_name(label) {
                        return Err(err(format!("invalid label name `{label}`")));
                    }
                    g.add_label(label, id).map_err(|e| err(e.to_string()))?;
                }
            }
            "e" => {
                let u = parse_id(parts.next())?;
                let v = parse_id(parts.next())?;
                if parts.next().is_some() {
                    return Err(err("trailing tokens after edge".into()));
                }
                let n = g.vertex_count() as u32;
                if u >= n || v >= n {
                    return Err(err(format!("edge {u} {v} refers to an undeclared vertex")));
                }
                if u == v {
                    return Err(err(format!("self-loop at vertex {u}")));
                }
                if g.has_edge(u, v) {
                    return Err(err(format!("duplicate edge {u} {v}")));
                }
                g.add_edge(u, v).map_err(|e| err(e.to_string()))?;
            }
            other => return Err(err(format!("unknown line kind `{other}`"))),
        }
    }
    Ok(g)
}

fn is_label_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Degeneracy elimination order: repeatedly removes a vertex of minimum
/// remaining degree. Returns the order, each vertex's position in it, and the
/// degeneracy.
pub fn degeneracy_order(adj: &[Vec<u32>]) -> (Vec<u32>, Vec<usize>, usize) {
    let n = adj.len();
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); max_deg + 1];
    for v in 0..n {
        buckets[deg[v]].push(v as u32);
    }
    let mut removed = vec![false; n];
    let mut pos = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut degeneracy = 0;
    let mut cur = 0;
    while order.len() < n {
        cur = cur.min(max_deg);
        while buckets[cur].is_empty() {
            cur += 1;
        }
        let v = buckets[cur].pop().unwrap();
        // Lazy deletion: stale bucket entries are skipped.
        if removed[v as usize] || deg[v as usize] != cur {
            continue;
        }
        removed[v as usize] = true;
        pos[v as usize] = order.len();
        order.push(v);
        degeneracy = degeneracy.max(cur);
        for &w in &adj[v as usize] {
            let w = w as usize;
            if !removed[w] {
                deg[w] -= 1;
                buckets[deg[w]].push(w as u32);
            }
        }
        cur = cur.saturating_sub(1);
    }
    (order, pos, degeneracy)
}
