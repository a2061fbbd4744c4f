//! Functional representations of oriented graphs and their expansions.
//!
//! An arc `u -> v` is present iff some function symbol maps `v` to `u`.
//! Symbol 0 is always the identity `id`; unused slots map a vertex to itself.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::graph::{degeneracy_order, LabeledGraph};
use crate::logic::ast::{Formula, Term};

pub type FnId = usize;
pub type PredId = usize;

pub const IDENTITY: FnId = 0;
pub const IDENTITY_NAME: &str = "id";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Identity,
    Original,
    Transitive,
    Fraternal,
    Flip,
    Apex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnSymbol {
    pub name: Arc<str>,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct Signature {
    functions: Vec<FnSymbol>,
    predicates: Vec<Arc<str>>,
    fn_index: HashMap<Arc<str>, FnId>,
    pred_index: HashMap<Arc<str>, PredId>,
    composites: HashMap<(FnId, FnId), FnId>,
    parts: HashMap<FnId, (FnId, FnId)>,
}

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

impl Signature {
    /// Signature holding only the identity symbol.
    pub fn new() -> Self {
        let mut sig = Signature {
            functions: Vec::new(),
            predicates: Vec::new(),
            fn_index: HashMap::new(),
            pred_index: HashMap::new(),
            composites: HashMap::new(),
            parts: HashMap::new(),
        };
        sig.push_function(IDENTITY_NAME, Provenance::Identity).unwrap();
        sig
    }

    fn push_function(&mut self, name: &str, provenance: Provenance) -> Result<FnId> {
        if self.fn_index.contains_key(name) {
            return Err(Error::Contract(format!("duplicate function symbol `{name}`")));
        }
        let name: Arc<str> = Arc::from(name);
        let id = self.functions.len();
        self.functions.push(FnSymbol { name: name.clone(), provenance });
        self.fn_index.insert(name, id);
        Ok(id)
    }

    fn push_predicate(&mut self, name: &str) -> Result<PredId> {
        if self.pred_index.contains_key(name) {
            return Err(Error::Contract(format!("duplicate predicate symbol `{name}`")));
        }
        let name: Arc<str> = Arc::from(name);
        let id = self.predicates.len();
        self.predicates.push(name.clone());
        self.pred_index.insert(name, id);
        Ok(id)
    }

    pub fn function(&self, name: &str) -> Option<FnId> {
        self.fn_index.get(name).copied()
    }

    pub fn predicate(&self, name: &str) -> Option<PredId> {
        self.pred_index.get(name).copied()
    }

    pub fn fn_name(&self, f: FnId) -> &Arc<str> {
        &self.functions[f].name
    }

    pub fn pred_name(&self, p: PredId) -> &Arc<str> {
        &self.predicates[p]
    }

    pub fn provenance(&self, f: FnId) -> Provenance {
        self.functions[f].provenance
    }

    pub fn functions(&self) -> &[FnSymbol] {
        &self.functions
    }

    pub fn predicates(&self) -> &[Arc<str>] {
        &self.predicates
    }

    pub fn fn_count(&self) -> usize {
        self.functions.len()
    }

    pub fn pred_count(&self) -> usize {
        self.predicates.len()
    }

    /// The symbol registered as `h_{f,g}`, whose table is `g ∘ f`.
    pub fn composite(&self, f: FnId, g: FnId) -> Option<FnId> {
        self.composites.get(&(f, g)).copied()
    }

    /// Inverse of [`Signature::composite`].
    pub fn parts(&self, h: FnId) -> Option<(FnId, FnId)> {
        self.parts.get(&h).copied()
    }

    pub fn composites(&self) -> impl Iterator<Item = ((FnId, FnId), FnId)> + '_ {
        self.composites.iter().map(|(&k, &v)| (k, v))
    }

    pub fn originals(&self) -> impl Iterator<Item = FnId> + '_ {
        (0..self.functions.len()).filter(|&f| self.functions[f].provenance == Provenance::Original)
    }

    /// Apex symbols are constant functions (all map to vertex 0).
    pub fn is_constant(&self, f: FnId) -> bool {
        self.functions[f].provenance == Provenance::Apex
    }
}

/// Compressed per-vertex sets of distinct proper in-neighbors.
#[derive(Clone, Debug)]
pub struct InNeighbors {
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl InNeighbors {
    pub fn of(&self, v: u32) -> &[u32] {
        &self.items[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// Whether the arc `from -> to` is present.
    pub fn has_arc(&self, from: u32, to: u32) -> bool {
        self.of(to).binary_search(&from).is_ok()
    }

    pub fn connected(&self, a: u32, b: u32) -> bool {
        self.has_arc(a, b) || self.has_arc(b, a)
    }

    pub fn max_indegree(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct FunctionalStructure {
    sig: Signature,
    n: usize,
    tables: Vec<Arc<Vec<u32>>>,
    preds: Vec<Arc<Bits>>,
    fresh: u64,
}

impl FunctionalStructure {
    /// Structure over `n` vertices with only the identity symbol.
    pub fn new(n: usize) -> Self {
        FunctionalStructure {
            sig: Signature::new(),
            n,
            tables: vec![Arc::new((0..n as u32).collect())],
            preds: Vec::new(),
            fresh: 0,
        }
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    #[inline]
    pub fn table(&self, f: FnId) -> &[u32] {
        &self.tables[f]
    }

    #[inline]
    pub fn apply(&self, f: FnId, v: u32) -> u32 {
        self.tables[f][v as usize]
    }

    pub fn predicate(&self, p: PredId) -> &Bits {
        &self.preds[p]
    }

    #[inline]
    pub fn holds(&self, p: PredId, v: u32) -> bool {
        self.preds[p].get(v)
    }

    /// Generates a symbol name not produced before in this lineage.
    pub fn fresh_name(&mut self, prefix: &str) -> String {
        loop {
            self.fresh += 1;
            let candidate = format!("${prefix}{}", self.fresh);
            if self.sig.function(&candidate).is_none() && self.sig.predicate(&candidate).is_none() {
                return candidate;
            }
        }
    }

    pub fn add_function(&mut self, name: &str, provenance: Provenance, table: Vec<u32>) -> Result<FnId> {
        if table.len() != self.n || table.iter().any(|&u| u as usize >= self.n) {
            return Err(Error::Contract(format!("table for `{name}` is not a total map on the universe")));
        }
        let id = self.sig.push_function(name, provenance)?;
        self.tables.push(Arc::new(table));
        Ok(id)
    }

    pub fn add_predicate(&mut self, name: &str, members: Bits) -> Result<PredId> {
        if members.len() != self.n {
            return Err(Error::Contract(format!("predicate `{name}` has wrong length")));
        }
        let id = self.sig.push_predicate(name)?;
        self.preds.push(Arc::new(members));
        Ok(id)
    }

    /// Returns a symbol whose table is `g ∘ f`, creating the composite
    /// `h_{f,g}` if needed. Compositions with the identity reuse the other
    /// symbol.
    pub fn compose(&mut self, f: FnId, g: FnId) -> FnId {
        if f == IDENTITY {
            return g;
        }
        if g == IDENTITY {
            return f;
        }
        if let Some(h) = self.sig.composite(f, g) {
            return h;
        }
        let (tf, tg) = (&self.tables[f], &self.tables[g]);
        let table: Vec<u32> = tf.iter().map(|&u| tg[u as usize]).collect();
        let name = format!("$h{f}_{g}");
        let h = self.add_function(&name, Provenance::Transitive, table).expect("composite names are unique");
        self.sig.composites.insert((f, g), h);
        self.sig.parts.insert(h, (f, g));
        h
    }

    pub fn in_neighbors(&self) -> InNeighbors {
        let mut offsets = Vec::with_capacity(self.n + 1);
        let mut items = Vec::new();
        offsets.push(0);
        let mut buf = Vec::new();
        for v in 0..self.n {
            buf.clear();
            for t in &self.tables[1..] {
                let u = t[v];
                if u as usize != v {
                    buf.push(u);
                }
            }
            buf.sort_unstable();
            buf.dedup();
            items.extend_from_slice(&buf);
            offsets.push(items.len());
        }
        InNeighbors { offsets, items }
    }

    /// Maximum number of distinct proper in-neighbors of a vertex.
    pub fn indegree(&self) -> usize {
        self.in_neighbors().max_indegree()
    }

    /// All proper arcs `(u, v)` meaning `u -> v`.
    pub fn proper_arcs(&self) -> BTreeSet<(u32, u32)> {
        self.arcs_of(0..self.tables.len())
    }

    pub fn arcs_of(&self, fns: impl IntoIterator<Item = FnId>) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for f in fns {
            for (v, &u) in self.tables[f].iter().enumerate() {
                if u as usize != v {
                    out.insert((u, v as u32));
                }
            }
        }
        out
    }

    /// Unordered pairs `(min, max)` joined by a proper arc.
    pub fn underlying_edges(&self) -> BTreeSet<(u32, u32)> {
        self.proper_arcs().into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect()
    }

    /// Number of symbols per provenance tag.
    pub fn provenance_counts(&self) -> Vec<(Provenance, usize)> {
        let mut out: Vec<(Provenance, usize)> = Vec::new();
        for s in self.sig.functions() {
            match out.iter_mut().find(|(p, _)| *p == s.provenance) {
                Some((_, c)) => *c += 1,
                None => out.push((s.provenance, 1)),
            }
        }
        out
    }
}

/// Orients `g` along a degeneracy ordering: each vertex's in-neighbors are
/// its neighbors later in the elimination order, so Δ⁻ ≤ degeneracy.
/// Slot `j` (symbol `f{j+1}`) holds the `j`-th in-neighbor in id order.
pub fn orient(g: &LabeledGraph) -> FunctionalStructure {
    let n = g.vertex_count();
    let adj: Vec<Vec<u32>> = (0..n as u32).map(|v| g.neighbors(v).to_vec()).collect();
    let (_, pos, _) = degeneracy_order(&adj);
    let ins: Vec<Vec<u32>> = (0..n)
        .map(|v| adj[v].iter().copied().filter(|&u| pos[u as usize] > pos[v]).collect())
        .collect();
    let slots = ins.iter().map(Vec::len).max().unwrap_or(0);
    let mut s = FunctionalStructure::new(n);
    for j in 0..slots {
        let table = (0..n).map(|v| ins[v].get(j).copied().unwrap_or(v as u32)).collect();
        s.add_function(&format!("f{}", j + 1), Provenance::Original, table).unwrap();
    }
    for (label, members) in g.labels() {
        s.add_predicate(label, Bits::from_members(n, members.iter().copied())).unwrap();
    }
    s
}

/// One 1-transitive fraternal augmentation over all symbols of `s`.
pub fn augment(s: &FunctionalStructure) -> FunctionalStructure {
    let all: Vec<FnId> = (0..s.signature().fn_count()).collect();
    augment_over(s, &all)
}

/// Augmentation restricted to the arcs of the symbols in `base`: adds every
/// composite `h_{f,g}` for `f, g ∈ base`, then connects every fraternal pair
/// (two base-parents of a common vertex) not already connected by some
/// symbol, orienting those demands along a degeneracy ordering.
pub fn augment_over(s: &FunctionalStructure, base: &[FnId]) -> FunctionalStructure {
    let mut t = s.clone();
    let mut base: Vec<FnId> = base.iter().copied().filter(|&f| f != IDENTITY).collect();
    base.sort_unstable();
    base.dedup();
    for &f in &base {
        for &g in &base {
            t.compose(f, g);
        }
    }
    let n = t.universe_size();
    let inn = t.in_neighbors();
    let mut demand: Vec<(u32, u32)> = Vec::new();
    let mut parents = Vec::new();
    for v in 0..n {
        parents.clear();
        parents.extend(base.iter().map(|&f| t.apply(f, v as u32)).filter(|&u| u as usize != v));
        parents.sort_unstable();
        parents.dedup();
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                if !inn.connected(a, b) {
                    demand.push((a, b));
                }
            }
        }
    }
    if demand.is_empty() {
        return t;
    }
    demand.sort_unstable();
    demand.dedup();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &demand {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let (_, pos, _) = degeneracy_order(&adj);
    let ins: Vec<Vec<u32>> = (0..n)
        .map(|v| {
            let mut i: Vec<u32> = adj[v].iter().copied().filter(|&u| pos[u as usize] > pos[v]).collect();
            i.sort_unstable();
            i
        })
        .collect();
    let slots = ins.iter().map(Vec::len).max().unwrap_or(0);
    for j in 0..slots {
        let table = (0..n).map(|v| ins[v].get(j).copied().unwrap_or(v as u32)).collect();
        let name = t.fresh_name("fr");
        t.add_function(&name, Provenance::Fraternal, table).unwrap();
    }
    t
}

/// Adds one flip symbol realizing each requested arc `u′ -> u` as
/// `f_flip(u) = u′`. The reverse arc `u -> u′` must already be present and
/// every head `u` may appear at most once.
pub fn flip(s: &FunctionalStructure, arcs: &[(u32, u32)]) -> Result<(FunctionalStructure, FnId)> {
    let n = s.universe_size();
    let inn = s.in_neighbors();
    let mut table: Vec<u32> = (0..n as u32).collect();
    let mut seen = vec![false; n];
    for &(u, u2) in arcs {
        if u as usize >= n || u2 as usize >= n {
            return Err(Error::Contract(format!("flip request ({u}, {u2}) out of range")));
        }
        if std::mem::replace(&mut seen[u as usize], true) {
            return Err(Error::Contract(format!("two flip requests share head {u}; split them into rounds")));
        }
        if u == u2 || !inn.has_arc(u, u2) {
            return Err(Error::Contract(format!("cannot flip: arc {u} -> {u2} is not present")));
        }
        table[u as usize] = u2;
    }
    let mut t = s.clone();
    let name = t.fresh_name("flip");
    let f = t.add_function(&name, Provenance::Flip, table)?;
    Ok((t, f))
}

/// Adds a constant symbol mapping every vertex to vertex 0.
pub fn add_apex(s: &FunctionalStructure) -> Result<(FunctionalStructure, FnId)> {
    if s.universe_size() == 0 {
        return Err(Error::Contract("apex vertex needs a nonempty universe".into()));
    }
    let mut t = s.clone();
    let name = t.fresh_name("apx");
    let f = t.add_function(&name, Provenance::Apex, vec![0; s.universe_size()])?;
    Ok((t, f))
}

/// η(x, y): disjunction of `f(x) = y ∨ f(y) = x` over original symbols,
/// guarded by `x ≠ y` since unused slots map a vertex to itself.
pub fn edge_formula(sig: &Signature, x: &str, y: &str) -> Formula {
    let arcs = Formula::or(sig.originals().flat_map(|f| {
        let name = sig.fn_name(f);
        [
            Formula::Eq(Term::app(name, Term::var(x)), Term::var(y)),
            Formula::Eq(Term::app(name, Term::var(y)), Term::var(x)),
        ]
    }));
    if arcs == Formula::False {
        return arcs;
    }
    Formula::and([Formula::not(Formula::Eq(Term::var(x), Term::var(y))), arcs])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;

    fn path3() -> LabeledGraph {
        LabeledGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn triangle() -> LabeledGraph {
        LabeledGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn orient_path() {
        let s = orient(&path3());
        assert!(s.indegree() <= 1);
        assert_eq!(s.proper_arcs().len(), 2);
        assert_eq!(s.underlying_edges(), BTreeSet::from([(0, 1), (1, 2)]));
    }

    #[test]
    fn orient_triangle() {
        let s = orient(&triangle());
        assert!(s.indegree() <= 2);
        assert_eq!(s.underlying_edges().len(), 3);
    }

    #[test]
    fn orient_edgeless() {
        let s = orient(&LabeledGraph::new(5));
        assert_eq!(s.indegree(), 0);
        assert_eq!(s.signature().fn_count(), 1);
        assert!(s.proper_arcs().is_empty());
    }

    #[test]
    fn orient_keeps_labels() {
        let mut g = path3();
        g.add_label("red", 2).unwrap();
        let s = orient(&g);
        let p = s.signature().predicate("red").unwrap();
        assert!(s.holds(p, 2) && !s.holds(p, 0));
    }

    #[test]
    fn augment_transitive() {
        // w=2 -> v=1 -> u=0 as f(1)=0, f(2)=1
        let mut s = FunctionalStructure::new(3);
        let f = s.add_function("f", Provenance::Original, vec![0, 0, 1]).unwrap();
        let t = augment(&s);
        let h = t.signature().composite(f, f).unwrap();
        assert_eq!(t.apply(h, 2), 0);
        assert!(t.proper_arcs().contains(&(0, 2)));
    }

    #[test]
    fn augment_fraternal() {
        // arcs 0 -> 2 and 1 -> 2 via distinct symbols
        let mut s = FunctionalStructure::new(3);
        s.add_function("f", Provenance::Original, vec![0, 1, 0]).unwrap();
        s.add_function("g", Provenance::Original, vec![0, 1, 1]).unwrap();
        let t = augment(&s);
        let arcs = t.proper_arcs();
        assert!(arcs.contains(&(0, 1)) || arcs.contains(&(1, 0)));
    }

    #[test]
    fn augment_identity_only() {
        let s = FunctionalStructure::new(4);
        let t = augment(&s);
        assert!(t.proper_arcs().is_empty());
        assert_eq!(t.signature().fn_count(), 1);
    }

    #[test]
    fn flip_single_arc() {
        // arc 0 -> 1 (f(1) = 0); adding 1 -> 0 as f_flip(0) = 1
        let mut s = FunctionalStructure::new(2);
        s.add_function("f", Provenance::Original, vec![0, 0]).unwrap();
        let before = s.in_neighbors().of(0).len();
        let (t, fl) = flip(&s, &[(0, 1)]).unwrap();
        assert_eq!(t.apply(fl, 0), 1);
        assert_eq!(t.in_neighbors().of(0).len(), before + 1);
        assert_eq!(t.signature().provenance(fl), Provenance::Flip);
    }

    #[test]
    fn flip_empty_and_errors() {
        let mut s = FunctionalStructure::new(3);
        s.add_function("f", Provenance::Original, vec![0, 0, 1]).unwrap();
        let (t, fl) = flip(&s, &[]).unwrap();
        assert!(t.table(fl).iter().enumerate().all(|(v, &u)| v as u32 == u));
        assert!(flip(&s, &[(1, 2)]).is_ok());
        assert!(flip(&s, &[(0, 2)]).is_err());
        assert!(flip(&s, &[(0, 1), (0, 2)]).is_err());
    }

    #[test]
    fn apex() {
        let s = FunctionalStructure::new(3);
        let (t, a) = add_apex(&s).unwrap();
        assert_eq!(t.table(a), &[0, 0, 0]);
        let (u, b) = add_apex(&t).unwrap();
        assert_ne!(a, b);
        assert_eq!(u.table(b), &[0, 0, 0]);
        let (one, c) = add_apex(&FunctionalStructure::new(1)).unwrap();
        assert_eq!(one.table(c), &[0]);
        assert!(add_apex(&FunctionalStructure::new(0)).is_err());
    }

    #[test]
    fn edge_formula_shape() {
        let s = orient(&LabeledGraph::new(5));
        assert_eq!(edge_formula(s.signature(), "x", "y"), Formula::False);
        let s = orient(&triangle());
        let eta = edge_formula(s.signature(), "x", "y");
        assert_eq!(eta.function_symbols().len(), s.signature().originals().count());
        let mut pairs = 0;
        for x in 0..3 {
            for y in 0..3 {
                let a = crate::oracle::Assignment::from_pairs([("x", x), ("y", y)]);
                pairs += crate::oracle::eval(&eta, &s, &a).unwrap() as usize;
            }
        }
        assert_eq!(pairs, 6);
    }
}
