//! Quantifier elimination and the approximate model-checking scheme.
//!
//! Every subformula `χ` is replaced by a pair of quantifier-free formulas
//! over a growing expansion of the oriented graph: `χ⁻` implies `χ`, and
//! `¬χ⁻` implies that the hardest λ-similar variant of `χ` fails; dually
//! `¬χ⁺` implies `¬χ` and `χ⁺` implies the easiest variant holds. A sentence
//! is answered `1` when `χ⁻` holds, `0` when `χ⁺` fails and unknown
//! otherwise, in which case it is λ-unstable for `λ = 1+ε`.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::bits::Bits;
use crate::clause::{conj_formula, Vars};
use crate::count::{approx_decompose, WeightTable};
use crate::error::{shape, Error, Result};
use crate::graph::LabeledGraph;
use crate::logic::ast::{name, Cmp, Formula, Name, Term};
use crate::logic::parser::rename_apart;
use crate::logic::transform::relational_to_functional;
use crate::oracle::{self, Assignment};
use crate::structure::{orient, FunctionalStructure, PredId};

/// Free variable used when a quantified body has no other free variable.
pub const DUMMY: &str = "$d";

/// Level predicates for one descriptor and position.
#[derive(Clone, Debug)]
pub struct BucketSet {
    pub descriptor: usize,
    pub position: usize,
    /// Bucket width `s`.
    pub step: BigRational,
    /// Levels `0..cap` are exact; level `cap` means "at least `cap`".
    pub cap: usize,
    /// Predicate per level, absent when no vertex has that level.
    pub levels: Vec<Option<PredId>>,
}

#[derive(Clone, Debug, Default)]
pub struct BucketPredicates {
    pub sets: Vec<BucketSet>,
}

/// Outcome of one elimination step.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub structure: FunctionalStructure,
    pub formula: Formula,
    pub buckets: Option<BucketPredicates>,
}

/// One elimination step, as reported in diagnostics.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Round {
    pub quantifier: String,
    pub threshold: Option<String>,
    pub new_predicates: usize,
    pub new_functions: usize,
    pub indegree: usize,
}

#[derive(Clone, Debug)]
enum Test {
    Exists,
    /// True ⇒ count `> a`; false ⇒ count `≤ b`.
    Above(BigInt, BigInt),
}

fn free_positions(phi: &Formula, y: &str) -> Vec<Name> {
    phi.free_vars().into_iter().filter(|v| &**v != y).collect()
}

fn eliminate(s: &FunctionalStructure, phi: &Formula, y: &str, test: Test) -> Result<Elimination> {
    let n = s.universe_size();
    if n == 0 {
        return Err(Error::Contract("quantifier elimination needs a nonempty universe".into()));
    }
    let done = |f: Formula| Ok(Elimination { structure: s.clone(), formula: f, buckets: None });
    let test = match test {
        Test::Above(a, b) => {
            if a > b {
                return Err(Error::Contract(format!("threshold test needs a ≤ b, got {a} > {b}")));
            }
            if a.is_negative() {
                return done(Formula::True);
            }
            if a >= BigInt::from(n) {
                return done(Formula::False);
            }
            if a.is_zero() {
                Test::Exists
            } else {
                Test::Above(a, b)
            }
        }
        t => t,
    };
    if phi == &Formula::False {
        return done(Formula::False);
    }
    let xs = free_positions(phi, y);
    let dummy = xs.is_empty();
    let vars = Vars { y: name(y), xs: if dummy { vec![name(DUMMY)] } else { xs } };
    let delta = match &test {
        Test::Exists => BigRational::one(),
        Test::Above(a, b) => BigRational::new(b + 1 - a, BigInt::from(2) * a),
    };
    let dec = approx_decompose(s, phi, &vars, &delta)?;
    let w = match test {
        Test::Above(..) if vars.k() > 1 => dec.weights(),
        _ => dec.psi_weights(),
    };
    let mut t = dec.structure;
    if vars.k() == 1 {
        let members = Bits::from_fn(n, |v| {
            let sum = BigInt::from(w.sum_at(&t, &[v]));
            match &test {
                Test::Exists => sum.is_positive(),
                // S > T = a + G/2, doubled
                Test::Above(a, b) => BigInt::from(2) * sum > a + b + 1,
            }
        });
        if dummy {
            let f = if members.get(0) { Formula::True } else { Formula::False };
            return Ok(Elimination { structure: t, formula: f, buckets: None });
        }
        let formula = if members.count() == 0 {
            Formula::False
        } else if members.count() == n {
            Formula::True
        } else {
            let m = t.fresh_name("M");
            t.add_predicate(&m, members)?;
            Formula::pred(&m, Term::Var(vars.xs[0].clone()))
        };
        return Ok(Elimination { structure: t, formula, buckets: None });
    }
    match test {
        Test::Exists => {
            let formula = positive_formula(&mut t, &w, &vars)?;
            Ok(Elimination { structure: t, formula, buckets: None })
        }
        Test::Above(a, b) => {
            let (formula, buckets) = bucket_formula(&mut t, &w, &vars, &a, &b)?;
            Ok(Elimination { structure: t, formula, buckets: Some(buckets) })
        }
    }
}

fn active_positions(w: &WeightTable, d: usize) -> Vec<(usize, Vec<i64>)> {
    (0..w.k).map(|i| (i, w.column(d, i))).filter(|(_, c)| c.iter().any(|&x| x != 0)).collect()
}

fn check_nonnegative(w: &WeightTable) -> Result<()> {
    if w.by_psi.iter().flatten().flatten().any(|&x| x < 0) {
        return Err(Error::Invariant("negative weight in an approximate decomposition".into()));
    }
    Ok(())
}

/// `⋁_j (ψ_j(x̄) ∧ ⋁_i c_{j,i}(x_i) > 0)`. With nonnegative weights a
/// descriptor's sum is positive iff one of the `ψ`s it asserts has a
/// positive column, so no descriptors are needed.
fn positive_formula(t: &mut FunctionalStructure, w: &WeightTable, vars: &Vars) -> Result<Formula> {
    check_nonnegative(w)?;
    let mut out = Vec::new();
    for (psi, cols) in w.psis.iter().zip(&w.by_psi) {
        let mut parts = Vec::new();
        for (i, col) in cols.iter().enumerate() {
            let members = Bits::from_fn(col.len(), |v| col[v as usize] > 0);
            if members.count() == col.len() {
                parts = vec![Formula::True];
                break;
            }
            if members.count() > 0 {
                let m = t.fresh_name("P");
                t.add_predicate(&m, members)?;
                parts.push(Formula::pred(&m, Term::Var(vars.xs[i].clone())));
            }
        }
        if !parts.is_empty() {
            out.push(Formula::and([conj_formula(psi, t.signature(), vars), Formula::or(parts)]));
        }
    }
    Ok(Formula::or(out))
}

/// Level test per descriptor: with `G = b+1-a`, `s = G/2k` and
/// `T = a + G/2`, it asserts `Σ_i ⌊c_i/s⌋ > T/s`. Given a decomposition
/// within factor `1 + G/2a`, truth implies count `> a` and falsity implies
/// count `≤ b`.
fn bucket_formula(
    t: &mut FunctionalStructure,
    w: &WeightTable,
    vars: &Vars,
    a: &BigInt,
    b: &BigInt,
) -> Result<(Formula, BucketPredicates)> {
    check_nonnegative(w)?;
    let g = b + 1 - a;
    let mut out = Vec::new();
    let mut buckets = BucketPredicates::default();
    for d in 0..w.descriptors.len() {
        let active = active_positions(w, d);
        if active.is_empty() {
            continue;
        }
        let kd = BigInt::from(active.len());
        // ⌊T/s⌋ + 1 = ⌊(2a+G)·k/G⌋ + 1
        let num: BigInt = (BigInt::from(2) * a + &g) * &kd;
        let cap: BigInt = Integer::div_floor(&num, &g) + BigInt::one();
        let cap = cap.to_usize().ok_or_else(|| Error::Budget(format!("bucket count {cap} too large")))?;
        let mut levels_of = Vec::new();
        for (i, col) in &active {
            let mut by_level: Vec<Vec<u32>> = vec![Vec::new(); cap + 1];
            for (v, &c) in col.iter().enumerate() {
                let l: BigInt = Integer::div_floor(&(BigInt::from(2) * &kd * BigInt::from(c)), &g);
                let l = l.to_usize().map_or(cap, |l| l.min(cap));
                by_level[l].push(v as u32);
            }
            let mut levels = Vec::with_capacity(cap + 1);
            for members in by_level {
                if members.is_empty() {
                    levels.push(None);
                } else {
                    let m = t.fresh_name("R");
                    levels.push(Some(t.add_predicate(&m, Bits::from_members(col.len(), members))?));
                }
            }
            buckets.sets.push(BucketSet {
                descriptor: d,
                position: *i,
                step: BigRational::new(g.clone(), BigInt::from(2) * &kd),
                cap,
                levels: levels.clone(),
            });
            levels_of.push((*i, levels));
        }
        let test = level_sum_at_least(t, vars, &levels_of, 0, cap as i64);
        if test != Formula::False {
            out.push(Formula::and([w.formula(d, t.signature(), vars), test]));
        }
    }
    Ok((Formula::or(out), buckets))
}

/// `Σ_{j ≥ from} level(x_{i_j}) ≥ r` over the installed level predicates.
fn level_sum_at_least(
    t: &FunctionalStructure,
    vars: &Vars,
    levels: &[(usize, Vec<Option<PredId>>)],
    from: usize,
    r: i64,
) -> Formula {
    if r <= 0 {
        return Formula::True;
    }
    if from == levels.len() {
        return Formula::False;
    }
    let (i, ls) = &levels[from];
    let atom = |p: PredId| Formula::Pred(t.signature().pred_name(p).clone(), Term::Var(vars.xs[*i].clone()));
    let mut parts = Vec::new();
    for (l, p) in ls.iter().enumerate() {
        let Some(p) = p else { continue };
        let rest = level_sum_at_least(t, vars, levels, from + 1, r - l as i64);
        if rest != Formula::False {
            parts.push(Formula::and([atom(*p), rest]));
        }
    }
    Formula::or(parts)
}

/// `∃y φ` as a quantifier-free formula over an expansion of `s`. Exact.
pub fn eliminate_exists(s: &FunctionalStructure, phi: &Formula, y: &str) -> Result<Elimination> {
    if !phi.is_quantifier_free() {
        return shape("existential elimination needs a quantifier-free body");
    }
    eliminate(s, phi, y, Test::Exists)
}

/// Quantifier-free `φ′` with: `φ′` true ⇒ `#y φ > a`, and `φ′` false ⇒
/// `#y φ ≤ b`. Requires `a ≤ b`.
pub fn threshold_test(s: &FunctionalStructure, phi: &Formula, y: &str, a: &BigInt, b: &BigInt) -> Result<Elimination> {
    if !phi.is_quantifier_free() {
        return shape("threshold tests need a quantifier-free body");
    }
    eliminate(s, phi, y, Test::Above(a.clone(), b.clone()))
}

/// Bucketing at threshold `N` with accuracy `ε`: true ⇒ count `> N`,
/// false ⇒ count `≤ (1+ε)N`.
pub fn bucketize(s: &FunctionalStructure, phi: &Formula, y: &str, n: &BigInt, eps: &BigRational) -> Result<Elimination> {
    let b = if n.is_negative() {
        n.clone()
    } else {
        ((BigRational::one() + eps) * BigRational::from_integer(n.clone())).floor().to_integer()
    };
    threshold_test(s, phi, y, n, &b)
}

/// Eliminates every `∃`/`∀` of a formula without counting atoms, exactly.
pub fn eliminate_fo(s: &FunctionalStructure, phi: &Formula) -> Result<(FunctionalStructure, Formula)> {
    if phi.has_count() {
        return shape("only first-order quantifiers can be eliminated exactly");
    }
    let phi = rename_apart(phi);
    let phi = if phi.has_edge() { relational_to_functional(&phi, s.signature())? } else { phi };
    let mut s = s.clone();
    let f = fo(&mut s, &phi)?;
    Ok((s, f))
}

fn fo(s: &mut FunctionalStructure, f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::Not(g) => Formula::not(fo(s, g)?),
        Formula::And(gs) => Formula::and(gs.iter().map(|g| fo(s, g)).collect::<Result<Vec<_>>>()?),
        Formula::Or(gs) => Formula::or(gs.iter().map(|g| fo(s, g)).collect::<Result<Vec<_>>>()?),
        Formula::Implies(a, b) => Formula::implies(fo(s, a)?, fo(s, b)?),
        Formula::Exists(y, g) => {
            let body = fo(s, g)?;
            let e = eliminate_exists(s, &body, y)?;
            *s = e.structure;
            e.formula
        }
        Formula::Forall(y, g) => {
            let body = Formula::not(fo(s, g)?);
            let e = eliminate_exists(s, &body, y)?;
            *s = e.structure;
            Formula::not(e.formula)
        }
        _ => f.clone(),
    })
}

/// `(G′, φ⁺, φ⁻)`: an over- and an underapproximation over an expansion.
#[derive(Clone, Debug)]
pub struct ApproxPair {
    pub structure: FunctionalStructure,
    pub phi_plus: Formula,
    pub phi_minus: Formula,
    pub epsilon: BigRational,
    pub rounds: Vec<Round>,
}

impl ApproxPair {
    /// The exact pair of a quantifier-free formula.
    pub fn exact(s: &FunctionalStructure, phi: &Formula, eps: &BigRational) -> ApproxPair {
        ApproxPair {
            structure: s.clone(),
            phi_plus: phi.clone(),
            phi_minus: phi.clone(),
            epsilon: eps.clone(),
            rounds: Vec::new(),
        }
    }
}

/// Thresholds `(⌈N/λ⌉, ⌊λN⌋)`, the ends of the similarity interval of `N ≥ 0`.
pub fn similar_bounds(n: &BigInt, lambda: &BigRational) -> (BigInt, BigInt) {
    let r = BigRational::from_integer(n.clone());
    ((&r / lambda).ceil().to_integer(), (&r * lambda).floor().to_integer())
}

struct Engine {
    s: FunctionalStructure,
    lambda: BigRational,
    rounds: Vec<Round>,
}

impl Engine {
    fn record(&mut self, before: &FunctionalStructure, quantifier: String, threshold: Option<String>) {
        let s = &self.s;
        log::debug!("eliminated {quantifier}: indegree {}, {} functions", s.indegree(), s.signature().fn_count());
        self.rounds.push(Round {
            quantifier,
            threshold,
            new_predicates: s.signature().pred_count() - before.signature().pred_count(),
            new_functions: s.signature().fn_count() - before.signature().fn_count(),
            indegree: s.indegree(),
        });
    }

    fn step(&mut self, body: &Formula, y: &Name, test: Test, label: &str, threshold: Option<String>) -> Result<Formula> {
        let before = self.s.clone();
        let e = eliminate(&self.s, body, y, test)?;
        self.s = e.structure;
        self.record(&before, format!("{label} {y}"), threshold);
        Ok(e.formula)
    }

    fn exists(&mut self, body: &Formula, y: &Name) -> Result<Formula> {
        self.step(body, y, Test::Exists, "exists", None)
    }

    /// Count `> n` under the pair `(m, p)` of the body.
    fn count(&mut self, y: &Name, m: &Formula, p: &Formula, n: &BigInt) -> Result<(Formula, Formula)> {
        if n.is_negative() {
            return Ok((Formula::True, Formula::True));
        }
        if *n >= BigInt::from(self.s.universe_size()) {
            return Ok((Formula::False, Formula::False));
        }
        let (lo, hi) = similar_bounds(n, &self.lambda);
        let minus = self.step(m, y, Test::Above(n.clone(), hi.clone()), "count", Some(format!("> {n} (upper {hi})")))?;
        let plus = self.step(p, y, Test::Above(lo.clone(), n.clone()), "count", Some(format!("> {lo} (upper {n})")))?;
        Ok((minus, plus))
    }

    /// `(χ⁻, χ⁺)` for a formula whose relational atoms are translated.
    fn pair(&mut self, f: &Formula) -> Result<(Formula, Formula)> {
        Ok(match f {
            Formula::True | Formula::False | Formula::Pred(..) | Formula::Eq(..) => (f.clone(), f.clone()),
            Formula::Edge(..) => return shape("edge atoms must be translated before elimination"),
            Formula::Not(g) => {
                let (m, p) = self.pair(g)?;
                (Formula::not(p), Formula::not(m))
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let mut ms = Vec::new();
                let mut ps = Vec::new();
                for g in gs {
                    let (m, p) = self.pair(g)?;
                    ms.push(m);
                    ps.push(p);
                }
                if matches!(f, Formula::And(_)) {
                    (Formula::and(ms), Formula::and(ps))
                } else {
                    (Formula::or(ms), Formula::or(ps))
                }
            }
            Formula::Implies(a, b) => self.pair(&Formula::or([Formula::not((**a).clone()), (**b).clone()]))?,
            Formula::Exists(y, g) => {
                let (m, p) = self.pair(g)?;
                let em = self.exists(&m, y)?;
                let ep = if p == m { em.clone() } else { self.exists(&p, y)? };
                (em, ep)
            }
            Formula::Forall(y, g) => {
                let (m, p) = self.pair(g)?;
                let em = self.exists(&Formula::not(p.clone()), y)?;
                let ep = if p == m { em.clone() } else { self.exists(&Formula::not(m), y)? };
                (Formula::not(ep), Formula::not(em))
            }
            Formula::Count { var, body, cmp, threshold } => {
                let (m, p) = self.pair(body)?;
                let (cm, cp) = self.count(var, &m, &p, threshold)?;
                match cmp {
                    Cmp::Gt => (cm, cp),
                    Cmp::Le => (Formula::not(cp), Formula::not(cm)),
                }
            }
        })
    }
}

/// Eliminates `#y φ > N` (or `≤ N`) given an approximation pair of `φ`.
pub fn eliminate_count(p: &ApproxPair, y: &str, n: &BigInt, cmp: Cmp) -> Result<ApproxPair> {
    let mut e = Engine { s: p.structure.clone(), lambda: BigRational::one() + &p.epsilon, rounds: p.rounds.clone() };
    let (m, pl) = e.count(&name(y), &p.phi_minus, &p.phi_plus, n)?;
    let (phi_minus, phi_plus) = match cmp {
        Cmp::Gt => (m, pl),
        Cmp::Le => (Formula::not(pl), Formula::not(m)),
    };
    Ok(ApproxPair { structure: e.s, phi_plus, phi_minus, epsilon: p.epsilon.clone(), rounds: e.rounds })
}

/// Approximation pair of an arbitrary formula of the functional vocabulary
/// of `s` (or with edge atoms over its original symbols).
pub fn approximate(s: &FunctionalStructure, f: &Formula, eps: &BigRational) -> Result<ApproxPair> {
    if !eps.is_positive() {
        return Err(Error::Contract("ε must be positive".into()));
    }
    let f = rename_apart(f);
    let f = if f.has_edge() { relational_to_functional(&f, s.signature())? } else { f };
    let mut e = Engine { s: s.clone(), lambda: BigRational::one() + eps, rounds: Vec::new() };
    let (m, p) = e.pair(&f)?;
    Ok(ApproxPair { structure: e.s, phi_plus: p, phi_minus: m, epsilon: eps.clone(), rounds: e.rounds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Answer {
    #[serde(rename = "1")]
    True,
    #[serde(rename = "0")]
    False,
    #[serde(rename = "unknown")]
    Unknown,
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Answer::True => "1",
            Answer::False => "0",
            Answer::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub answer: Answer,
    pub epsilon: String,
    pub rounds: Vec<Round>,
    pub wall_time_ms: f64,
    pub phi_minus: String,
    pub phi_plus: String,
    pub max_indegree: usize,
    pub predicates_added: usize,
}

/// Approximate model checking: `1` means the sentence holds, `0` that it
/// fails, unknown that some `(1+ε)`-similar variants disagree on `g`.
pub fn check_sentence(g: &LabeledGraph, f: &Formula, eps: &BigRational) -> Result<CheckReport> {
    let start = Instant::now();
    if !eps.is_positive() {
        return Err(Error::Contract("ε must be positive".into()));
    }
    if !f.is_sentence() {
        return shape(format!("not a sentence; free variables: {:?}", f.free_vars()));
    }
    let finish = |answer, rounds, m: &Formula, p: &Formula, deg, preds| CheckReport {
        answer,
        epsilon: eps.to_string(),
        rounds,
        wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
        phi_minus: m.to_string(),
        phi_plus: p.to_string(),
        max_indegree: deg,
        predicates_added: preds,
    };
    if g.vertex_count() == 0 {
        let truth = oracle::eval(f, g, &Assignment::new())?;
        let c = if truth { Formula::True } else { Formula::False };
        let a = if truth { Answer::True } else { Answer::False };
        return Ok(finish(a, Vec::new(), &c, &c, 0, 0));
    }
    let s = orient(g);
    let base_preds = s.signature().pred_count();
    let pair = approximate(&s, f, eps)?;
    let t = &pair.structure;
    let empty = Assignment::new();
    let minus = oracle::eval(&pair.phi_minus, t, &empty)?;
    let plus = oracle::eval(&pair.phi_plus, t, &empty)?;
    let answer = match (minus, plus) {
        (true, false) => return Err(Error::Invariant("underapproximation holds but overapproximation fails".into())),
        (true, true) => Answer::True,
        (false, false) => Answer::False,
        (false, true) => Answer::Unknown,
    };
    let preds = t.signature().pred_count() - base_preds;
    Ok(finish(answer, pair.rounds.clone(), &pair.phi_minus, &pair.phi_plus, t.indegree(), preds))
}

/// `ε` from a decimal or fraction string such as `0.1` or `1/10`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Contract(format!("`{text}` is not a rational number"));
    if let Some((a, b)) = text.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) || (int.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let neg = int.starts_with('-');
    let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let r = BigRational::new(num, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse_query;
    use crate::oracle::count_term;

    fn p(s: &str) -> Formula {
        parse_query(s).unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
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

    fn star(leaves: usize) -> LabeledGraph {
        LabeledGraph::from_edges(leaves + 1, (1..=leaves as u32).map(|v| (0, v))).unwrap()
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("0.5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("1/10").unwrap(), q(1, 10));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert_eq!(parse_rational(".25").unwrap(), q(1, 4));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn exists_on_single_edge() {
        let g = LabeledGraph::from_edges(3, [(0, 1)]).unwrap();
        let s = orient(&g);
        let phi = relational_to_functional(&p("E(x,y)"), s.signature()).unwrap();
        let e = eliminate_exists(&s, &phi, "y").unwrap();
        for v in 0..3 {
            let a = Assignment::from_pairs([("x", v)]);
            assert_eq!(oracle::eval(&e.formula, &e.structure, &a).unwrap(), v < 2);
        }
        assert_eq!(eliminate_exists(&s, &Formula::False, "y").unwrap().formula, Formula::False);
    }

    #[test]
    fn bucketize_on_triangle() {
        let g = complete(3);
        let s = orient(&g);
        let phi = relational_to_functional(&p("E(x,y)"), s.signature()).unwrap();
        let e = bucketize(&s, &phi, "y", &BigInt::from(1), &q(1, 2)).unwrap();
        for v in 0..3 {
            assert!(oracle::eval(&e.formula, &e.structure, &Assignment::from_pairs([("x", v)])).unwrap());
        }
        assert_eq!(bucketize(&s, &phi, "y", &BigInt::from(-1), &q(1, 2)).unwrap().formula, Formula::True);
        assert_eq!(bucketize(&s, &phi, "y", &BigInt::from(3), &q(1, 2)).unwrap().formula, Formula::False);
    }

    #[test]
    fn two_position_buckets_respect_contract() {
        let g = LabeledGraph::from_edges(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (0, 3), (2, 5)]).unwrap();
        let s = orient(&g);
        let body = p("x1 = y | E(x1,y) | x2 = y | E(x2,y)");
        let phi = relational_to_functional(&body, s.signature()).unwrap();
        for n in 1..6i64 {
            let eps = q(1, 2);
            let e = bucketize(&s, &phi, "y", &BigInt::from(n), &eps).unwrap();
            assert!(e.buckets.is_some());
            for a in 0..7 {
                for b in 0..7 {
                    let asg = Assignment::from_pairs([("x1", a), ("x2", b)]);
                    let c = count_term("y", &body, &g, &asg).unwrap() as i64;
                    if oracle::eval(&e.formula, &e.structure, &asg).unwrap() {
                        assert!(c > n);
                    } else {
                        assert!(BigRational::from_integer(c.into()) <= (BigRational::one() + &eps) * BigRational::from_integer(n.into()));
                    }
                }
            }
        }
    }

    #[test]
    fn count_pair_on_triangle() {
        let s = orient(&complete(3));
        let phi = relational_to_functional(&p("E(x,y)"), s.signature()).unwrap();
        let pair = eliminate_count(&ApproxPair::exact(&s, &phi, &q(1, 10)), "y", &BigInt::from(1), Cmp::Gt).unwrap();
        for v in 0..3 {
            let a = Assignment::from_pairs([("x", v)]);
            assert!(oracle::eval(&pair.phi_minus, &pair.structure, &a).unwrap());
        }
        let huge = eliminate_count(&ApproxPair::exact(&s, &phi, &q(1, 10)), "y", &BigInt::from(10), Cmp::Gt).unwrap();
        assert_eq!((huge.phi_minus, huge.phi_plus), (Formula::False, Formula::False));
        let le = eliminate_count(&ApproxPair::exact(&s, &phi, &q(1, 10)), "y", &BigInt::from(10), Cmp::Le).unwrap();
        assert_eq!((le.phi_minus, le.phi_plus), (Formula::True, Formula::True));
        let neg = eliminate_count(&ApproxPair::exact(&s, &phi, &q(1, 10)), "y", &BigInt::from(-1), Cmp::Gt).unwrap();
        assert_eq!((neg.phi_minus, neg.phi_plus), (Formula::True, Formula::True));
    }

    #[test]
    fn check_examples() {
        let r = check_sentence(&complete(3), &p("exists x. # y. E(x,y) > 1"), &q(1, 2)).unwrap();
        assert_eq!(r.answer, Answer::True);
        let r = check_sentence(&LabeledGraph::new(1), &p("# x. P(x) > 0"), &q(1, 2)).unwrap();
        assert_eq!(r.answer, Answer::False);
        for n in [3, 4, 6] {
            let f = p(&format!("exists x1. # y. (x1 = y | E(x1,y)) > {n}"));
            // ⌊(1+ε)n⌋ < n+1 forces a definite answer
            assert_eq!(check_sentence(&star(n), &f, &q(1, 2 * n as i64)).unwrap().answer, Answer::True);
            assert_ne!(check_sentence(&star(n), &f, &q(1, 2)).unwrap().answer, Answer::False);
        }
        let r = check_sentence(&LabeledGraph::new(0), &p("# x. true > 0"), &q(1, 2)).unwrap();
        assert_eq!(r.answer, Answer::False);
    }

    #[test]
    fn unstable_sentence_may_be_unknown_but_never_wrong() {
        let mut g = LabeledGraph::new(8);
        for v in 0..6 {
            g.add_label("P", v).unwrap();
        }
        for n in 0..10 {
            let f = p(&format!("# y. P(y) > {n}"));
            let r = check_sentence(&g, &f, &q(1, 5)).unwrap();
            match r.answer {
                Answer::True => assert!(6 > n),
                Answer::False => assert!(6 <= n),
                Answer::Unknown => {}
            }
        }
    }
}
