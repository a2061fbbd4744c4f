//! Graph families and random formulas for tests, benches and the CLI.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::LabeledGraph;
use crate::logic::ast::{Cmp, Formula, Term};

fn build(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> LabeledGraph {
    LabeledGraph::from_edges(n, edges).expect("generated edges are in range")
}

pub fn path(n: usize) -> LabeledGraph {
    build(n, (1..n as u32).map(|v| (v - 1, v)))
}

/// Cycle on `n ≥ 3` vertices; smaller `n` gives a path.
pub fn cycle(n: usize) -> LabeledGraph {
    let mut g = path(n);
    if n >= 3 {
        g.add_edge(0, n as u32 - 1).unwrap();
    }
    g
}

/// `K_{1,leaves}` with center 0.
pub fn star(leaves: usize) -> LabeledGraph {
    build(leaves + 1, (1..=leaves as u32).map(|v| (0, v)))
}

pub fn complete(n: usize) -> LabeledGraph {
    build(n, (0..n as u32).flat_map(|u| (u + 1..n as u32).map(move |v| (u, v))))
}

/// `w × h` grid, vertex `(x, y)` numbered `y·w + x`.
pub fn grid(w: usize, h: usize) -> LabeledGraph {
    let id = |x: usize, y: usize| (y * w + x) as u32;
    let mut edges = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < h {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    build(w * h, edges)
}

/// Uniform random recursive tree: vertex `v > 0` hangs below a random earlier vertex.
pub fn random_tree(n: usize, rng: &mut impl Rng) -> LabeledGraph {
    build(n, (1..n as u32).map(|v| (rng.gen_range(0..v), v)))
}

/// Random graph with maximum degree `d`, from `n·d/2` edge attempts.
pub fn random_bounded_degree(n: usize, d: usize, rng: &mut impl Rng) -> LabeledGraph {
    let mut g = LabeledGraph::new(n);
    if n < 2 {
        return g;
    }
    for _ in 0..n * d / 2 {
        let (u, v) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        if u != v && !g.has_edge(u, v) && g.degree(u) < d && g.degree(v) < d {
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

/// `G(n, p)`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> LabeledGraph {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    build(n, edges)
}

/// Puts each vertex into label `name` with probability `p`.
pub fn add_random_label(g: &mut LabeledGraph, name: &str, p: f64, rng: &mut impl Rng) {
    for v in 0..g.vertex_count() as u32 {
        if rng.gen_bool(p) {
            g.add_label(name, v).unwrap();
        }
    }
}

fn adjacency_mask(n: usize, edges: &BTreeSet<(u32, u32)>, perm: &[u32]) -> u64 {
    let mut m = 0u64;
    for &(u, v) in edges {
        let (a, b) = (perm[u as usize], perm[v as usize]);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        m |= 1 << (a as usize * n + b as usize);
    }
    m
}

fn canonical_mask(n: usize, edges: &BTreeSet<(u32, u32)>) -> u64 {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut best = adjacency_mask(n, edges, &perm);
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(adjacency_mask(n, edges, &perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// One representative of every isomorphism class of connected graphs on
/// `1..=max_n` vertices (`max_n ≤ 7`). Every connected graph has a vertex
/// whose removal keeps it connected, so extending the classes on `n - 1`
/// vertices by a vertex with a nonempty neighborhood reaches all classes.
pub fn connected_graphs(max_n: usize) -> Vec<LabeledGraph> {
    assert!(max_n <= 7, "isomorphism classes are enumerated by brute force");
    let mut out = Vec::new();
    if max_n == 0 {
        return out;
    }
    let mut level: Vec<BTreeSet<(u32, u32)>> = vec![BTreeSet::new()];
    out.push(LabeledGraph::new(1));
    for n in 2..=max_n {
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        let new = n as u32 - 1;
        for edges in &level {
            for subset in 1u32..(1 << (n - 1)) {
                let mut e = edges.clone();
                for u in 0..new {
                    if subset >> u & 1 == 1 {
                        e.insert((u, new));
                    }
                }
                if seen.insert(canonical_mask(n, &e)) {
                    next.push(e);
                }
            }
        }
        out.extend(next.iter().map(|e| build(n, e.iter().copied())));
        level = next;
    }
    out
}

const VAR_POOL: [&str; 4] = ["x", "y", "z", "w"];

/// Quantifier-free atom over `vars`: an edge, an equality or a label.
pub fn random_atom(vars: &[&str], labels: &[&str], rng: &mut impl Rng) -> Formula {
    let a = *vars.choose(rng).unwrap();
    let b = *vars.choose(rng).unwrap();
    match rng.gen_range(0..if labels.is_empty() { 2 } else { 3 }) {
        0 => Formula::edge(a, b),
        1 => Formula::eq(Term::var(a), Term::var(b)),
        _ => Formula::pred(labels.choose(rng).unwrap(), Term::var(a)),
    }
}

/// Random quantifier-free formula with up to `atoms` atoms, as a boolean
/// combination with random negations.
pub fn random_qf(vars: &[&str], labels: &[&str], atoms: usize, rng: &mut impl Rng) -> Formula {
    let count = rng.gen_range(1..=atoms.max(1));
    let mut f = random_atom(vars, labels, rng);
    for _ in 1..count {
        let g = random_atom(vars, labels, rng);
        let g = if rng.gen_bool(0.3) { Formula::not(g) } else { g };
        f = if rng.gen_bool(0.5) { Formula::and([f, g]) } else { Formula::or([f, g]) };
    }
    if rng.gen_bool(0.25) {
        Formula::not(f)
    } else {
        f
    }
}

/// Random body `φ(y, x̄)`: quantifier-free, or with one `∃`/`∀` over a
/// fresh variable `z` when `quantified`.
pub fn random_body(y: &str, xs: &[&str], labels: &[&str], atoms: usize, quantified: bool, rng: &mut impl Rng) -> Formula {
    let mut vars: Vec<&str> = vec![y];
    vars.extend_from_slice(xs);
    if !quantified {
        return random_qf(&vars, labels, atoms, rng);
    }
    let outer = random_qf(&vars, labels, atoms.saturating_sub(2).max(1), rng);
    vars.push("z");
    let mut inner = random_qf(&vars, labels, 2, rng);
    if !inner.free_vars().iter().any(|v| &**v == "z") {
        inner = Formula::and([inner, Formula::edge("z", y)]);
    }
    let q = if rng.gen_bool(0.5) { Formula::exists("z", inner) } else { Formula::forall("z", inner) };
    if rng.gen_bool(0.5) {
        Formula::and([outer, q])
    } else {
        Formula::or([outer, q])
    }
}

/// Options for [`random_sentence`].
#[derive(Clone, Debug)]
pub struct SentenceShape<'a> {
    pub labels: &'a [&'a str],
    /// Maximum number of counting atoms; 0 gives plain FO.
    pub counts: usize,
    /// Quantifier nesting depth.
    pub depth: usize,
    /// Thresholds are drawn from `[-1, n + 1]`.
    pub n: usize,
}

/// Random sentence of FO with `#y φ > N` atoms.
pub fn random_sentence(shape: &SentenceShape, rng: &mut impl Rng) -> Formula {
    let mut budget = shape.counts;
    let f = sentence_rec(shape, &[], shape.depth.min(VAR_POOL.len()), &mut budget, rng);
    if f.is_sentence() {
        f
    } else {
        Formula::exists(VAR_POOL[0], f)
    }
}

fn sentence_rec(shape: &SentenceShape, bound: &[&'static str], depth: usize, budget: &mut usize, rng: &mut impl Rng) -> Formula {
    let leaf = depth == 0 || (!bound.is_empty() && rng.gen_bool(0.3));
    if leaf {
        return if bound.is_empty() {
            if rng.gen_bool(0.5) {
                Formula::True
            } else {
                Formula::False
            }
        } else {
            random_qf(bound, shape.labels, 2, rng)
        };
    }
    match rng.gen_range(0..6) {
        0 => Formula::not(sentence_rec(shape, bound, depth, budget, rng)),
        1 if !bound.is_empty() => {
            let a = sentence_rec(shape, bound, depth - 1, budget, rng);
            let b = sentence_rec(shape, bound, depth - 1, budget, rng);
            if rng.gen_bool(0.5) {
                Formula::and([a, b])
            } else {
                Formula::or([a, b])
            }
        }
        _ => {
            let v = VAR_POOL[bound.len()];
            let mut inner = bound.to_vec();
            inner.push(v);
            let mut body = sentence_rec(shape, &inner, depth - 1, budget, rng);
            if !body.free_vars().iter().any(|x| &**x == v) {
                let other = *inner.choose(rng).unwrap();
                body = Formula::and([body, Formula::edge(v, other)]);
            }
            if *budget > 0 && rng.gen_bool(0.6) {
                *budget -= 1;
                let t = rng.gen_range(-1..=shape.n as i64 + 1);
                Formula::count(v, body, Cmp::Gt, t)
            } else if rng.gen_bool(0.5) {
                Formula::exists(v, body)
            } else {
                Formula::forall(v, body)
            }
        }
    }
}
