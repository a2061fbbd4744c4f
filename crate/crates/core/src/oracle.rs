//! Brute-force semantics of FO with counting atoms, used as ground truth.
//!
//! Runtime is `O(n^d)` for quantifier depth `d`; meant for small inputs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::logic::ast::{name, Formula, Name, Term};
use crate::logic::transform::similarity_interval;
use crate::structure::FunctionalStructure;

/// Anything formulas can be evaluated over.
pub trait Interpretation {
    fn universe_size(&self) -> usize;
    fn edge(&self, u: u32, v: u32) -> Result<bool>;
    /// Unknown predicate names denote the empty set.
    fn label(&self, name: &str, v: u32) -> bool;
    fn apply(&self, f: &str, v: u32) -> Result<u32>;
}

impl Interpretation for LabeledGraph {
    fn universe_size(&self) -> usize {
        self.vertex_count()
    }

    fn edge(&self, u: u32, v: u32) -> Result<bool> {
        Ok(self.has_edge(u, v))
    }

    fn label(&self, name: &str, v: u32) -> bool {
        self.has_label(name, v)
    }

    fn apply(&self, f: &str, v: u32) -> Result<u32> {
        match f {
            "id" => Ok(v),
            _ => Err(Error::UnknownFunction(f.to_string())),
        }
    }
}

impl Interpretation for FunctionalStructure {
    fn universe_size(&self) -> usize {
        FunctionalStructure::universe_size(self)
    }

    fn edge(&self, _: u32, _: u32) -> Result<bool> {
        Err(Error::Shape("edge atoms must be translated before evaluating on a functional structure".into()))
    }

    fn label(&self, name: &str, v: u32) -> bool {
        self.signature().predicate(name).is_some_and(|p| self.holds(p, v))
    }

    fn apply(&self, f: &str, v: u32) -> Result<u32> {
        let id = self.signature().function(f).ok_or_else(|| Error::UnknownFunction(f.to_string()))?;
        Ok(FunctionalStructure::apply(self, id, v))
    }
}

/// Variable assignment; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: Vec<(Name, u32)>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, u32)>) -> Self {
        Assignment { bindings: pairs.into_iter().map(|(v, u)| (name(v), u)).collect() }
    }

    pub fn bind(&mut self, v: Name, u: u32) {
        self.bindings.push((v, u));
    }

    pub fn with(mut self, v: &Name, u: u32) -> Self {
        self.bind(v.clone(), u);
        self
    }

    fn pop(&mut self) {
        self.bindings.pop();
    }

    fn set_last(&mut self, u: u32) {
        self.bindings.last_mut().unwrap().1 = u;
    }

    pub fn get(&self, v: &str) -> Option<u32> {
        self.bindings.iter().rev().find(|(n, _)| n.as_ref() == v).map(|&(_, u)| u)
    }
}

fn term_value(t: &Term, s: &impl Interpretation, a: &Assignment) -> Result<u32> {
    match t {
        Term::Var(v) => a.get(v).ok_or_else(|| Error::UnboundVariable(v.to_string())),
        Term::App(f, inner) => s.apply(f, term_value(inner, s, a)?),
    }
}

/// Truth of `f` under assignment `a`.
pub fn eval(f: &Formula, s: &impl Interpretation, a: &Assignment) -> Result<bool> {
    let mut a = a.clone();
    eval_mut(f, s, &mut a)
}

fn eval_mut(f: &Formula, s: &impl Interpretation, a: &mut Assignment) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Pred(p, t) => s.label(p, term_value(t, s, a)?),
        Formula::Eq(l, r) => term_value(l, s, a)? == term_value(r, s, a)?,
        Formula::Edge(l, r) => s.edge(term_value(l, s, a)?, term_value(r, s, a)?)?,
        Formula::Not(g) => !eval_mut(g, s, a)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval_mut(g, s, a)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval_mut(g, s, a)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(l, r) => !eval_mut(l, s, a)? || eval_mut(r, s, a)?,
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let want = matches!(f, Formula::Exists(..));
            let mut result = !want;
            a.bind(v.clone(), 0);
            for u in 0..s.universe_size() as u32 {
                a.set_last(u);
                if eval_mut(g, s, a)? == want {
                    result = want;
                    break;
                }
            }
            a.pop();
            result
        }
        Formula::Count { var, body, cmp, threshold } => {
            let c = count_mut(var, body, s, a)?;
            let gt = BigInt::from(c) > *threshold;
            match cmp {
                crate::logic::ast::Cmp::Gt => gt,
                crate::logic::ast::Cmp::Le => !gt,
            }
        }
    })
}

fn count_mut(y: &Name, body: &Formula, s: &impl Interpretation, a: &mut Assignment) -> Result<u64> {
    let mut c = 0;
    a.bind(y.clone(), 0);
    for u in 0..s.universe_size() as u32 {
        a.set_last(u);
        match eval_mut(body, s, a) {
            Ok(true) => c += 1,
            Ok(false) => {}
            Err(e) => {
                a.pop();
                return Err(e);
            }
        }
    }
    a.pop();
    Ok(c)
}

/// `|{v : body holds with y ↦ v}|`.
pub fn count_term(y: &str, body: &Formula, s: &impl Interpretation, a: &Assignment) -> Result<u64> {
    let mut a = a.clone();
    count_mut(&name(y), body, s, &mut a)
}

/// A pair of λ-similar variants of a sentence, one true and one false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub satisfied: Formula,
    pub unsatisfied: Formula,
}

/// Exhaustive search over the integer threshold perturbation grid. Returns
/// a witness iff `f` is λ-unstable on `s`. A grid larger than `cap` points is
/// a budget error.
pub fn instability_witness(
    f: &Formula,
    s: &impl Interpretation,
    lambda: &BigRational,
    cap: u64,
) -> Result<Option<Witness>> {
    if *lambda <= BigRational::one() {
        return Err(Error::Contract("similarity factor must exceed 1".into()));
    }
    if !f.is_sentence() {
        return Err(Error::Shape("instability is defined for sentences".into()));
    }
    let intervals: Vec<(BigInt, BigInt)> = f.thresholds().iter().map(|t| similarity_interval(t, lambda)).collect();
    let mut size = BigInt::one();
    for (lo, hi) in &intervals {
        size *= hi - lo + 1;
    }
    if size > BigInt::from(cap) {
        return Err(Error::Budget(format!("perturbation grid has {size} points, cap is {cap}")));
    }
    let mut cur: Vec<BigInt> = intervals.iter().map(|(lo, _)| lo.clone()).collect();
    let (mut yes, mut no) = (None, None);
    let empty = Assignment::new();
    loop {
        let g = f.with_thresholds(&cur);
        if eval(&g, s, &empty)? {
            yes.get_or_insert(g);
        } else {
            no.get_or_insert(g);
        }
        if yes.is_some() && no.is_some() {
            break;
        }
        let mut k = 0;
        loop {
            if k == cur.len() {
                return Ok(None);
            }
            cur[k] += 1;
            if cur[k] <= intervals[k].1 {
                break;
            }
            cur[k] = intervals[k].0.clone();
            k += 1;
        }
    }
    Ok(Some(Witness { satisfied: yes.unwrap(), unsatisfied: no.unwrap() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse_query;

    fn p(s: &str) -> Formula {
        parse_query(s).unwrap()
    }

    fn labeled(n: usize, label: &str, members: &[u32]) -> LabeledGraph {
        let mut g = LabeledGraph::new(n);
        for &v in members {
            g.add_label(label, v).unwrap();
        }
        g
    }

    fn complete(n: usize) -> LabeledGraph {
        let mut edges = vec![];
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                edges.push((u, v));
            }
        }
        LabeledGraph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn basic_eval() {
        let g = LabeledGraph::from_edges(2, [(0, 1)]).unwrap();
        assert!(eval(&p("E(x,y)"), &g, &Assignment::from_pairs([("x", 0), ("y", 1)])).unwrap());
        let g6 = labeled(8, "P", &[0, 1, 2, 3, 4, 5]);
        assert!(eval(&p("# y. P(y) > 5"), &g6, &Assignment::new()).unwrap());
        assert!(matches!(eval(&p("P(z)"), &g6, &Assignment::new()), Err(Error::UnboundVariable(_))));
    }

    #[test]
    fn counting() {
        let g = complete(4);
        let a = Assignment::from_pairs([("x", 2)]);
        assert_eq!(count_term("y", &Formula::True, &g, &a).unwrap(), 4);
        assert_eq!(count_term("y", &Formula::False, &g, &a).unwrap(), 0);
        assert_eq!(count_term("y", &p("E(x,y)"), &g, &a).unwrap(), 3);
    }

    #[test]
    fn domination_on_five_cycle() {
        let g = LabeledGraph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let f = p("exists x1. exists x2. # y. (x1 = y | E(x1,y) | x2 = y | E(x2,y)) > 3");
        assert!(eval(&f, &g, &Assignment::new()).unwrap());
        // independent pair enumeration
        let dominated = |a: u32, b: u32| (0..5u32).filter(|&y| y == a || y == b || g.has_edge(a, y) || g.has_edge(b, y)).count();
        assert!((0..5).any(|a| (0..5).any(|b| dominated(a, b) > 3)));
    }

    #[test]
    fn witness_examples() {
        let g = labeled(8, "P", &[0, 1, 2, 3, 4, 5]);
        let lam = BigRational::new(6.into(), 5.into());
        let w = instability_witness(&p("# y. P(y) > 5"), &g, &lam, 1000).unwrap().unwrap();
        assert_eq!(w.satisfied, p("# y. P(y) > 5"));
        assert_eq!(w.unsatisfied, p("# y. P(y) > 6"));
        assert_eq!(instability_witness(&p("exists x. P(x)"), &g, &lam, 1000).unwrap(), None);
        let lam = BigRational::new(11.into(), 10.into());
        assert_eq!(instability_witness(&p("# y. true > 16"), &g, &lam, 1000).unwrap(), None);
        assert!(matches!(
            instability_witness(&p("# y. P(y) > 100000"), &g, &BigRational::from_integer(2.into()), 1000),
            Err(Error::Budget(_))
        ));
    }
}
