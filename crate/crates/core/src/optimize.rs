//! Exact optimization of counting terms `#y φ(y, x̄)` over tuples `x̄`.
//!
//! The exact decomposition turns the count into `Σ_i c_{ω,i}(u_i)` for the
//! unique descriptor `ω` holding at `ū`. Each case of each descriptor is
//! searched by branch and bound over per-position candidate lists sorted by
//! weight; a position tied to an earlier one by an equality only ranges
//! over a preimage.

use serde::Serialize;

use crate::clause::{anchor, Atom, Realizer, Var, Vars};
use crate::count::exact_weights;
use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::logic::ast::{ConjClause, Formula, Term};
use crate::qe::DUMMY;
use crate::structure::{orient, FunctionalStructure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMode {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OptResult {
    pub tuple: Vec<u32>,
    pub value: i64,
    pub mode: OptMode,
    /// Complete tuples scored during the search.
    pub explored: u64,
}

/// Search options; pruning can be disabled to cross-check the bound.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { prune: true }
    }
}

/// The optimum of `#y φ(y, x̄)` over `x̄ ∈ V^k`; ties go to the
/// lexicographically smallest tuple.
pub fn optimize(g: &LabeledGraph, phi: &Formula, y: &str, xs: &[&str], mode: OptMode) -> Result<OptResult> {
    optimize_with(g, phi, y, xs, mode, SearchOptions::default())
}

pub fn optimize_with(
    g: &LabeledGraph,
    phi: &Formula,
    y: &str,
    xs: &[&str],
    mode: OptMode,
    opts: SearchOptions,
) -> Result<OptResult> {
    if phi.has_count() {
        return Err(Error::Shape("optimization needs a body without counting atoms".into()));
    }
    if g.vertex_count() == 0 {
        return Err(Error::Contract("optimization needs a nonempty graph".into()));
    }
    for v in phi.free_vars() {
        if &*v != y && !xs.contains(&&*v) {
            return Err(Error::UnboundVariable(v.to_string()));
        }
    }
    let s = orient(g);
    let dummy = xs.is_empty();
    let vars = Vars::new(y, if dummy { &[DUMMY] } else { xs });
    let (d, w) = exact_weights(&s, phi, &vars)?;
    let sign = match mode {
        OptMode::Max => 1,
        OptMode::Min => -1,
    };
    if dummy {
        let value = w.sum_at(&d.structure, &[0]);
        return Ok(OptResult { tuple: Vec::new(), value, mode, explored: 1 });
    }
    let realizer = Realizer::new(&d.structure, w.k);
    let mut search = Search { s: &d.structure, realizer: &realizer, prune: opts.prune, best: None, explored: 0 };
    for desc in 0..w.descriptors.len() {
        let cols: Vec<Vec<i64>> = (0..w.k).map(|i| w.column(desc, i).into_iter().map(|c| sign * c).collect()).collect();
        for case in &w.cases[desc] {
            search.case(&cols, case);
        }
    }
    let (score, tuple) = search.best.ok_or_else(|| Error::Invariant("no descriptor holds at any tuple".into()))?;
    Ok(OptResult { tuple, value: sign * score, mode, explored: search.explored })
}

struct Search<'a> {
    s: &'a FunctionalStructure,
    realizer: &'a Realizer<'a>,
    prune: bool,
    /// Best `sign · value` and its tuple.
    best: Option<(i64, Vec<u32>)>,
    explored: u64,
}

/// One case of a descriptor: a conjunction of literals, searched position
/// by position.
struct Case<'c> {
    cols: &'c [Vec<i64>],
    /// Literals grouped by their last position.
    by_pos: Vec<Vec<(&'c Atom, bool)>>,
    /// Vertices passing the single-position literals, as `(score, vertex)`
    /// by descending score, then vertex.
    sorted: Vec<Vec<(i64, u32)>>,
    /// Best score still available at this and later positions.
    rest: Vec<i64>,
}

impl Search<'_> {
    fn case(&mut self, cols: &[Vec<i64>], lits: &ConjClause<Atom>) {
        let k = cols.len();
        let mut by_pos: Vec<Vec<(&Atom, bool)>> = vec![Vec::new(); k + 1];
        for (a, v) in lits.literals() {
            by_pos[a.vars().last().copied().unwrap_or(0) as usize].push((a, v));
        }
        let mut vals = vec![0u32; k + 1];
        if !by_pos[0].iter().all(|&(a, v)| a.eval(self.s, &vals) == v) {
            return;
        }
        let mut sorted = Vec::with_capacity(k);
        for (i, col) in cols.iter().enumerate() {
            let j = i + 1;
            let own: Vec<&(&Atom, bool)> = by_pos[j].iter().filter(|(a, _)| a.vars() == [j as Var]).collect();
            let mut cand: Vec<(i64, u32)> = Vec::new();
            for (v, &c) in col.iter().enumerate() {
                vals[j] = v as u32;
                if own.iter().all(|&&(a, w)| a.eval(self.s, &vals) == w) {
                    cand.push((c, v as u32));
                }
            }
            if cand.is_empty() {
                return;
            }
            cand.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            sorted.push(cand);
        }
        let mut rest = vec![0; k + 1];
        for i in (0..k).rev() {
            rest[i] = rest[i + 1] + sorted[i][0].0;
        }
        let case = Case { cols, by_pos, sorted, rest };
        self.extend(&case, 0, 0, &mut vals);
    }

    fn extend(&mut self, case: &Case, i: usize, score: i64, vals: &mut [u32]) {
        if i == case.cols.len() {
            self.explored += 1;
            let tuple = &vals[1..];
            let better = match &self.best {
                None => true,
                Some((b, t)) => score > *b || (score == *b && tuple < t.as_slice()),
            };
            if better {
                self.best = Some((score, tuple.to_vec()));
            }
            return;
        }
        let j = i + 1;
        let anchored: Vec<(i64, u32)>;
        let candidates: &[(i64, u32)] = match anchor(case.by_pos[j].iter().copied(), j, self.s, vals) {
            Some((p, u)) => {
                let mut c: Vec<(i64, u32)> =
                    self.realizer.preimage(p, u).into_iter().map(|v| (case.cols[i][v as usize], v)).collect();
                c.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                anchored = c;
                &anchored
            }
            None => &case.sorted[i],
        };
        for &(c, v) in candidates {
            if self.prune {
                if let Some((b, t)) = &self.best {
                    let bound = score + c + case.rest[j];
                    if bound < *b {
                        break;
                    }
                    // An equal bound can only help through a smaller tuple.
                    if bound == *b && prefix_after(&vals[1..j], v, t) {
                        continue;
                    }
                }
            }
            vals[j] = v;
            if case.by_pos[j].iter().all(|&(a, w)| a.eval(self.s, vals) == w) {
                self.extend(case, j, score + c, vals);
            }
        }
    }
}

/// Whether every tuple starting with `prefix ++ [v]` is lexicographically
/// above `best`.
fn prefix_after(prefix: &[u32], v: u32, best: &[u32]) -> bool {
    for (a, b) in prefix.iter().chain([&v]).zip(best) {
        if a != b {
            return a > b;
        }
    }
    false
}

/// `⋁_i (x_i = y ∨ E(x_i, y))`: `x̄` dominates `y`.
pub fn domination_body(k: usize) -> (Formula, Vec<String>) {
    let xs: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let f = Formula::or(
        xs.iter().map(|x| Formula::or([Formula::eq(Term::var(x), Term::var("y")), Formula::edge(x, "y")])),
    );
    (f, xs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdsMode {
    MaxCoverage,
    /// Whether some `k` vertices dominate more than `N`.
    Threshold(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum PdsAnswer {
    Best(OptResult),
    Threshold(bool),
}

/// Partial dominating set of size `k`.
pub fn partial_dominating_set(g: &LabeledGraph, k: usize, mode: PdsMode) -> Result<PdsAnswer> {
    if k == 0 {
        return Err(Error::Contract("k must be positive".into()));
    }
    if k > g.vertex_count() {
        return Err(Error::Contract(format!("k = {k} exceeds the {} vertices", g.vertex_count())));
    }
    let (body, xs) = domination_body(k);
    let xs: Vec<&str> = xs.iter().map(String::as_str).collect();
    let best = optimize(g, &body, "y", &xs, OptMode::Max)?;
    Ok(match mode {
        PdsMode::MaxCoverage => PdsAnswer::Best(best),
        PdsMode::Threshold(n) => PdsAnswer::Threshold(best.value > n as i64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{complete, path, star};
    use crate::logic::parser::parse_query;

    fn p(s: &str) -> Formula {
        parse_query(s).unwrap()
    }

    #[test]
    fn domination_on_path() {
        let r = optimize(&path(4), &p("x = y | E(x, y)"), "y", &["x"], OptMode::Max).unwrap();
        assert_eq!((r.tuple, r.value), (vec![1], 3));
    }

    #[test]
    fn trivial_bodies() {
        let r = optimize(&star(3), &Formula::True, "y", &["x"], OptMode::Min).unwrap();
        assert_eq!((r.tuple, r.value), (vec![0], 4));
        let mut g = path(3);
        g.add_vertex();
        let r = optimize(&g, &p("E(x, y)"), "y", &["x"], OptMode::Min).unwrap();
        assert_eq!((r.tuple, r.value), (vec![3], 0));
    }

    #[test]
    fn pds_examples() {
        let PdsAnswer::Best(r) = partial_dominating_set(&star(4), 1, PdsMode::MaxCoverage).unwrap() else { panic!() };
        assert_eq!((r.tuple, r.value), (vec![0], 5));
        assert_eq!(partial_dominating_set(&complete(3), 2, PdsMode::Threshold(2)).unwrap(), PdsAnswer::Threshold(true));
        let PdsAnswer::Best(r) = partial_dominating_set(&LabeledGraph::new(3), 1, PdsMode::MaxCoverage).unwrap() else {
            panic!()
        };
        assert_eq!(r.value, 1);
        assert!(partial_dominating_set(&path(2), 3, PdsMode::MaxCoverage).is_err());
    }

    #[test]
    fn pds_beyond_tuple_enumeration() {
        use rand::SeedableRng;
        // 300² tuples exceed the enumeration cap, so descriptors come from search.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = crate::gen::random_bounded_degree(300, 3, &mut rng);
        let closed = |v: u32| std::iter::once(v).chain(g.neighbors(v).iter().copied()).collect::<Vec<u32>>();
        let mut best = (0, vec![]);
        for a in 0..300u32 {
            for b in 0..300u32 {
                let mut c = closed(a);
                c.extend(closed(b));
                c.sort_unstable();
                c.dedup();
                if c.len() > best.0 {
                    best = (c.len(), vec![a, b]);
                }
            }
        }
        let PdsAnswer::Best(r) = partial_dominating_set(&g, 2, PdsMode::MaxCoverage).unwrap() else { panic!() };
        assert_eq!((r.value, r.tuple), (best.0 as i64, best.1));
    }

    #[test]
    fn counting_atoms_are_rejected() {
        assert!(optimize(&path(3), &p("#z. E(z, y) > 1"), "y", &["x"], OptMode::Max).is_err());
    }

    #[test]
    fn prefix_order() {
        assert!(prefix_after(&[1], 2, &[1, 1]));
        assert!(!prefix_after(&[1], 1, &[1, 1]));
        assert!(!prefix_after(&[0], 5, &[1, 1]));
    }
}
