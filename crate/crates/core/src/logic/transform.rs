use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ast::{ConjClause, Formula, Term};
use super::parser::rename_apart;
use crate::error::{shape, Error, Result};
use crate::structure::{edge_formula, FunctionalStructure, Signature};

/// Rebuilds `f`, rewriting every term with `g`.
pub fn map_terms(f: &Formula, g: &mut impl FnMut(&Term) -> Result<Term>) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Pred(p, t) => Formula::Pred(p.clone(), g(t)?),
        Formula::Eq(a, b) => Formula::Eq(g(a)?, g(b)?),
        Formula::Edge(a, b) => Formula::Edge(g(a)?, g(b)?),
        Formula::Not(h) => Formula::Not(Box::new(map_terms(h, g)?)),
        Formula::And(hs) => Formula::And(hs.iter().map(|h| map_terms(h, g)).collect::<Result<_>>()?),
        Formula::Or(hs) => Formula::Or(hs.iter().map(|h| map_terms(h, g)).collect::<Result<_>>()?),
        Formula::Implies(a, b) => Formula::implies(map_terms(a, g)?, map_terms(b, g)?),
        Formula::Exists(v, h) => Formula::Exists(v.clone(), Box::new(map_terms(h, g)?)),
        Formula::Forall(v, h) => Formula::Forall(v.clone(), Box::new(map_terms(h, g)?)),
        Formula::Count { var, body, cmp, threshold } => Formula::Count {
            var: var.clone(),
            body: Box::new(map_terms(body, g)?),
            cmp: *cmp,
            threshold: threshold.clone(),
        },
    })
}

/// Rebuilds `f` bottom-up, replacing atoms with `g`.
pub fn map_atoms(f: &Formula, g: &mut impl FnMut(&Formula) -> Result<Formula>) -> Result<Formula> {
    Ok(match f {
        Formula::Not(h) => Formula::Not(Box::new(map_atoms(h, g)?)),
        Formula::And(hs) => Formula::And(hs.iter().map(|h| map_atoms(h, g)).collect::<Result<_>>()?),
        Formula::Or(hs) => Formula::Or(hs.iter().map(|h| map_atoms(h, g)).collect::<Result<_>>()?),
        Formula::Implies(a, b) => Formula::implies(map_atoms(a, g)?, map_atoms(b, g)?),
        Formula::Exists(v, h) => Formula::Exists(v.clone(), Box::new(map_atoms(h, g)?)),
        Formula::Forall(v, h) => Formula::Forall(v.clone(), Box::new(map_atoms(h, g)?)),
        Formula::Count { var, body, cmp, threshold } => Formula::Count {
            var: var.clone(),
            body: Box::new(map_atoms(body, g)?),
            cmp: *cmp,
            threshold: threshold.clone(),
        },
        atom => g(atom)?,
    })
}

/// Replaces every `E(x, y)` by the edge formula η(x, y) of `sig`.
pub fn relational_to_functional(f: &Formula, sig: &Signature) -> Result<Formula> {
    map_atoms(f, &mut |a| match a {
        Formula::Edge(Term::Var(x), Term::Var(y)) => Ok(edge_formula(sig, x, y)),
        Formula::Edge(a, b) => shape(format!("edge atom over non-variable terms E({a}, {b})")),
        other => Ok(other.clone()),
    })
}

/// Counting prenex normal form on universes of size `n`: no ∃/∀, and every
/// ∧/∨ has counting-free operands. Thresholds are clamped first: `> N` with
/// `N < 0` becomes ⊤ and with `N ≥ n` becomes ⊥.
pub fn to_cpnf(f: &Formula, n: usize) -> Result<Formula> {
    if !f.is_sentence() {
        return shape("counting prenex normal form needs a sentence");
    }
    let f = rename_apart(f);
    cpnf(&f, &BigInt::from(n))
}

fn clamp_count(body: Formula, var: &super::ast::Name, threshold: &BigInt, n: &BigInt) -> Formula {
    if threshold.is_negative() {
        Formula::True
    } else if threshold >= n {
        Formula::False
    } else {
        Formula::Count { var: var.clone(), body: Box::new(body), cmp: super::ast::Cmp::Gt, threshold: threshold.clone() }
    }
}

fn cpnf(f: &Formula, n: &BigInt) -> Result<Formula> {
    use super::ast::Cmp;
    Ok(match f {
        Formula::Not(g) => Formula::not(cpnf(g, n)?),
        Formula::Implies(a, b) => cpnf(&Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()]), n)?,
        Formula::Exists(v, b) => clamp_count(cpnf(b, n)?, v, &BigInt::zero(), n),
        Formula::Forall(v, b) => Formula::not(clamp_count(cpnf(&Formula::not((**b).clone()), n)?, v, &BigInt::zero(), n)),
        Formula::Count { var, body, cmp, threshold } => {
            let c = clamp_count(cpnf(body, n)?, var, threshold, n);
            match cmp {
                Cmp::Gt => c,
                Cmp::Le => Formula::not(c),
            }
        }
        Formula::And(parts) => {
            let parts = parts.iter().map(|p| cpnf(p, n)).collect::<Result<Vec<_>>>()?;
            merge(Formula::and(parts), n)?
        }
        Formula::Or(parts) => {
            let parts = parts.iter().map(|p| cpnf(p, n)).collect::<Result<Vec<_>>>()?;
            merge(Formula::or(parts), n)?
        }
        atom => atom.clone(),
    })
}

/// Pushes counting-free siblings of a counting atom into its body.
fn merge(f: Formula, n: &BigInt) -> Result<Formula> {
    let (parts, conj) = match f {
        Formula::And(p) => (p, true),
        Formula::Or(p) => (p, false),
        other => return Ok(other),
    };
    let Some(idx) = parts.iter().position(Formula::has_count) else {
        return Ok(if conj { Formula::And(parts) } else { Formula::Or(parts) });
    };
    let mut rest = parts;
    let tower = rest.remove(idx);
    let rest = if conj { Formula::and(rest) } else { Formula::or(rest) };
    let (negated, atom) = match tower {
        Formula::Not(inner) => (true, *inner),
        other => (false, other),
    };
    let Formula::Count { var, body, threshold, .. } = atom else {
        return Err(Error::Invariant(format!("unexpected operand in counting prenex form: {atom}")));
    };
    // Under negation, ∧ and ∨ swap roles by De Morgan.
    let as_conj = conj != negated;
    let rest = if negated { Formula::not(rest) } else { rest };
    let new_body = if as_conj {
        // (#y φ > N) ∧ ψ  ≡  #y (φ ∧ ψ) > N      (N ≥ 0)
        Formula::and([*body, rest])
    } else {
        // (#y φ > N) ∨ ψ  ≡  #y (φ ∨ ψ) > N      (0 ≤ N < n)
        Formula::or([*body, rest])
    };
    let body = cpnf(&new_body, n)?;
    let c = Formula::Count { var, body: Box::new(body), cmp: super::ast::Cmp::Gt, threshold };
    Ok(if negated { Formula::not(c) } else { c })
}

/// Syntactic check of counting prenex normal form.
pub fn is_cpnf(f: &Formula) -> bool {
    match f {
        Formula::Exists(..) | Formula::Forall(..) | Formula::Implies(..) => false,
        Formula::Not(g) => is_cpnf(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().all(|g| g.is_quantifier_free()),
        Formula::Count { body, .. } => is_cpnf(body),
        _ => true,
    }
}

/// Disjunctive normal form of a quantifier-free formula. Clauses with
/// complementary literals are dropped; duplicates are removed.
pub fn to_dnf(f: &Formula) -> Result<Vec<ConjClause<Formula>>> {
    if !f.is_quantifier_free() {
        return shape("disjunctive normal form needs a quantifier-free formula");
    }
    let mut out = dnf(f, true);
    out.sort();
    out.dedup();
    Ok(out)
}

fn dnf(f: &Formula, positive: bool) -> Vec<ConjClause<Formula>> {
    match (f, positive) {
        (Formula::True, true) | (Formula::False, false) => vec![ConjClause::new()],
        (Formula::True, false) | (Formula::False, true) => vec![],
        (Formula::Not(g), p) => dnf(g, !p),
        (Formula::Implies(a, b), p) => dnf(&Formula::Or(vec![Formula::Not(a.clone()), (**b).clone()]), p),
        (Formula::Or(gs), true) | (Formula::And(gs), false) => gs.iter().flat_map(|g| dnf(g, positive)).collect(),
        (Formula::And(gs), true) | (Formula::Or(gs), false) => {
            let mut acc = vec![ConjClause::new()];
            for g in gs {
                let parts = dnf(g, positive);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &parts {
                        let mut c = a.clone();
                        if c.conjoin(b) {
                            next.push(c);
                        }
                    }
                }
                next.sort();
                next.dedup();
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
        (atom, p) => vec![ConjClause::new().with(atom.clone(), p).unwrap()],
    }
}

/// Rewrites every term of depth ≥ 2 with composite symbols until the
/// functional depth is at most 1; each round pairs adjacent applications,
/// so depth `d` becomes `⌈d/2⌉`.
pub fn reduce_depth(f: &Formula, s: &FunctionalStructure) -> Result<(Formula, FunctionalStructure)> {
    if !f.is_quantifier_free() {
        return shape("depth reduction needs a quantifier-free formula");
    }
    let mut t = s.clone();
    let mut cur = f.clone();
    while cur.depth() > 1 {
        cur = map_terms(&cur, &mut |term| {
            if term.depth() <= 1 {
                return Ok(term.clone());
            }
            let mut ids = Vec::new();
            for sym in term.symbols() {
                ids.push(t.signature().function(sym).ok_or_else(|| Error::UnknownFunction(sym.to_string()))?);
            }
            let mut out = Term::Var(term.root_var().clone());
            for pair in ids.chunks(2) {
                let h = if pair.len() == 2 { t.compose(pair[0], pair[1]) } else { pair[0] };
                out = Term::App(t.signature().fn_name(h).clone(), Box::new(out));
            }
            Ok(out)
        })?;
    }
    Ok((cur, t))
}

/// Integer perturbations `t′` of a threshold `t` under factor `λ`: the
/// closed interval between `t/λ` and `λt`.
pub fn similarity_interval(t: &BigInt, lambda: &BigRational) -> (BigInt, BigInt) {
    let t = BigRational::from_integer(t.clone());
    let (a, b) = (&t / lambda, &t * lambda);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (lo.ceil().to_integer(), hi.floor().to_integer())
}

/// Formulas λ-similar to `f`: each threshold replaced independently by an
/// integer in its similarity interval. With `endpoints_only`, only interval
/// endpoints are used. More than `cap` results is a budget error.
pub fn similar_extremes(f: &Formula, lambda: &BigRational, endpoints_only: bool, cap: usize) -> Result<Vec<Formula>> {
    if *lambda <= BigRational::one() {
        return Err(Error::Contract("similarity factor must exceed 1".into()));
    }
    let choices: Vec<Vec<BigInt>> = f
        .thresholds()
        .iter()
        .map(|t| {
            let (lo, hi) = similarity_interval(t, lambda);
            if endpoints_only {
                let mut v = vec![lo.clone(), hi.clone()];
                v.dedup();
                v
            } else {
                num_iter(&lo, &hi)
            }
        })
        .collect();
    let mut total: usize = 1;
    for c in &choices {
        total = total.checked_mul(c.len()).filter(|&t| t <= cap).ok_or_else(|| {
            Error::Budget(format!("more than {cap} similar formulas"))
        })?;
    }
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; choices.len()];
    loop {
        let ts: Vec<BigInt> = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        out.push(f.with_thresholds(&ts));
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn num_iter(lo: &BigInt, hi: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut x = lo.clone();
    while &x <= hi {
        out.push(x.clone());
        x += 1;
    }
    out
}

/// Exact ceiling of `a / b` for `b > 0`.
pub fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

/// Variables occurring in `f` that are not in `exclude`, sorted.
pub fn other_free_vars(f: &Formula, exclude: &[&str]) -> Vec<super::ast::Name> {
    let set: BTreeSet<_> = f.free_vars();
    set.into_iter().filter(|v| !exclude.contains(&v.as_ref())).collect()
}
