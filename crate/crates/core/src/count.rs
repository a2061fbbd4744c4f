//! Counting terms `#y φ(y, x̄)` as sums of per-position vertex weights.
//!
//! A decomposition rewrites `φ` into entries `μ · [ψ(x̄)] · #{y : τ(y) ∧ f(y) = g(x_i)}`.
//! Each entry is a function of a single `x_i` once `ψ` is fixed, so grouping
//! entries by the sign vector of their `ψ`s yields one weight per vertex and
//! position. The approximate decomposition has only positive entries and
//! overcounts by at most a factor `1+ε`; the exact one is signed.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::clause::{
    all_tuples, canonicalize_on, conj_holds, realized, descriptor_holds, distinct_psis, extension, prune_delta_neq, reduce_delta_eq,
    type_split_on, descriptor_formula, Atom, CanonicalClause, Mode, TypeDescriptor, Var, Vars,
};
use crate::error::{shape, Error, Result};
use crate::logic::ast::{ConjClause, Formula};
use crate::logic::transform::{reduce_depth, relational_to_functional};
use crate::structure::{add_apex, augment_over, flip, FnId, FunctionalStructure, Provenance, Signature};

/// `(u, u′, c)`: `c` vertices `v` with `τ(v)`, `f(v) = u`, `f′(v) = u′`.
pub type TripleList = Vec<(u32, u32, u64)>;

/// All nonzero `(u, u′)` counts of `τ`-vertices by their `(f, f′)` images,
/// sorted by `(u, u′)`.
pub fn count_pairs(s: &FunctionalStructure, tau: &ConjClause<Atom>, f: FnId, f2: FnId) -> TripleList {
    let ext = extension(tau, s);
    count_pairs_in(s, ext.iter(), f, f2)
}

fn count_pairs_in(s: &FunctionalStructure, vs: impl Iterator<Item = u32>, f: FnId, f2: FnId) -> TripleList {
    let (tf, tf2) = (s.table(f), s.table(f2));
    let mut pairs: Vec<(u32, u32)> = vs.map(|v| (tf[v as usize], tf2[v as usize])).collect();
    pairs.sort_unstable();
    let mut out: TripleList = Vec::new();
    for (u, u2) in pairs {
        match out.last_mut() {
            Some((a, b, c)) if (*a, *b) == (u, u2) => *c += 1,
            _ => out.push((u, u2, 1)),
        }
    }
    out
}

/// `count[u] = #{v : τ(v) ∧ f(v) = u}`.
pub fn count_single(s: &FunctionalStructure, tau: &ConjClause<Atom>, f: FnId) -> Vec<u64> {
    let mut out = vec![0u64; s.universe_size()];
    let t = s.table(f);
    for v in extension(tau, s).iter() {
        out[t[v as usize] as usize] += 1;
    }
    out
}

/// `min(1, ε) / 2t`, the per-literal slack that keeps dropping `t`
/// negative literals within a factor `1+ε`.
pub fn technical_epsilon(eps: &BigRational, t: usize) -> BigRational {
    let one = BigRational::one();
    let m = if *eps < one { eps.clone() } else { one };
    m / BigInt::from(2 * t.max(1))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Entry {
    /// `+1` or `-1`.
    pub mu: i8,
    pub tau: ConjClause<Atom>,
    pub psi: ConjClause<Atom>,
    pub f: FnId,
    pub g: FnId,
    pub i: Var,
}

#[derive(Clone, Debug, Default)]
pub struct SimpleClauseSum {
    pub entries: Vec<Entry>,
    pub exact: bool,
}

/// A counting term rewritten over an expansion of the input structure.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub structure: FunctionalStructure,
    pub vars: Vars,
    pub sum: SimpleClauseSum,
    /// Flip symbols added while preparing the structure.
    pub flips: usize,
}

fn apex_of(s: &FunctionalStructure) -> Result<(FunctionalStructure, FnId)> {
    let sig = s.signature();
    match (0..sig.fn_count()).find(|&f| sig.provenance(f) == Provenance::Apex) {
        Some(f) => Ok((s.clone(), f)),
        None => add_apex(s),
    }
}

/// Apex, depth reduction, augmentation over the symbols of `φ`, then
/// canonical clauses.
fn canonical(s: &FunctionalStructure, phi: &Formula, vars: &Vars) -> Result<(FunctionalStructure, Vec<CanonicalClause>)> {
    if s.universe_size() == 0 {
        return Err(Error::Contract("counting terms need a nonempty universe".into()));
    }
    if vars.k() == 0 {
        return Err(Error::Contract("decomposition needs at least one free variable besides y".into()));
    }
    for v in phi.free_vars() {
        if vars.index(&v).is_none() {
            return Err(Error::UnboundVariable(v.to_string()));
        }
    }
    let phi = if phi.has_edge() { relational_to_functional(phi, s.signature())? } else { phi.clone() };
    let (s, apex) = apex_of(s)?;
    let (phi, s) = reduce_depth(&phi, &s)?;
    let mut base: Vec<FnId> = Vec::new();
    for name in phi.function_symbols() {
        base.push(s.signature().function(&name).ok_or_else(|| Error::UnknownFunction(name.to_string()))?);
    }
    base.push(apex);
    let s = augment_over(&s, &base);
    let clauses = canonicalize_on(&phi, vars, &s, apex)?;
    Ok((s, clauses))
}

/// Result of [`prepare_flips`].
#[derive(Clone, Debug)]
pub struct Prepared {
    pub structure: FunctionalStructure,
    /// Clauses pruned against the final structure.
    pub clauses: Vec<CanonicalClause>,
    pub flips: usize,
}

/// Adds flips until, for every pruned clause and surviving literal
/// `f′(y) ≠ g′(x_j)`, each pair count `#(τ, f, f′)(u, u′)` is at most
/// `ε′ · #(τ, f)(u)`. Heavy pairs get an arc `u′ -> u`, which lets the next
/// pruning pass move their vertices into `ψ`.
pub fn prepare_flips(s: &FunctionalStructure, reduced: &[CanonicalClause], eps_prime: &BigRational) -> Result<Prepared> {
    if !eps_prime.is_positive() {
        return Err(Error::Contract("ε′ must be positive".into()));
    }
    let (num, den) = (eps_prime.numer().clone(), eps_prime.denom().clone());
    let mut s = s.clone();
    let mut flips = 0;
    let mut done: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();
    loop {
        let mut pruned = Vec::new();
        for c in reduced {
            pruned.extend(prune_delta_neq(c, Mode::Concrete(&s))?);
        }
        let mut requests: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for c in pruned.iter().filter(|c| !c.delta_neq.is_empty()) {
            let f = c.delta_eq[0].f;
            let members: Vec<u32> = extension(&c.tau, &s).iter().collect();
            let mut single = vec![0u64; s.universe_size()];
            for &v in &members {
                single[s.apply(f, v) as usize] += 1;
            }
            for l in &c.delta_neq {
                for (u, u2, cnt) in count_pairs_in(&s, members.iter().copied(), f, l.f) {
                    if BigInt::from(cnt) * &den > &num * BigInt::from(single[u as usize]) {
                        if !done.insert((u, u2)) && !requests.get(&u).is_some_and(|r| r.contains(&u2)) {
                            return Err(Error::Invariant(format!("flip {u2} -> {u} requested twice")));
                        }
                        let r = requests.entry(u).or_default();
                        if !r.contains(&u2) {
                            r.push(u2);
                        }
                    }
                }
            }
        }
        if requests.is_empty() {
            return Ok(Prepared { structure: s, clauses: pruned, flips });
        }
        let rounds = requests.values().map(Vec::len).max().unwrap_or(0);
        for r in 0..rounds {
            let arcs: Vec<(u32, u32)> = requests.iter().filter_map(|(&u, us)| us.get(r).map(|&u2| (u, u2))).collect();
            s = flip(&s, &arcs)?.0;
            flips += 1;
        }
        log::debug!("flip round: {} heads, {rounds} symbols", requests.len());
    }
}

fn entry(c: &CanonicalClause, mu: i8) -> Entry {
    let l = c.delta_eq[0];
    Entry { mu, tau: c.tau.clone(), psi: c.psi.clone(), f: l.f, g: l.g, i: l.i }
}

/// Canonical clauses of `φ`, reduced and prepared with flips for
/// accuracy `ε`. Also returns the per-literal slack `ε′` that was used.
pub fn prepare(s: &FunctionalStructure, phi: &Formula, vars: &Vars, eps: &BigRational) -> Result<(Prepared, BigRational)> {
    if !eps.is_positive() {
        return Err(Error::Contract("ε must be positive".into()));
    }
    if !phi.is_quantifier_free() {
        return shape("approximate decomposition needs a quantifier-free body");
    }
    let (s, clauses) = canonical(s, phi, vars)?;
    let mut reduced = Vec::new();
    for c in &clauses {
        reduced.extend(reduce_delta_eq(c, Mode::Concrete(&s))?);
    }
    let t = reduced.iter().map(|c| c.delta_neq.len()).max().unwrap_or(0);
    let eps_prime = technical_epsilon(eps, t);
    Ok((prepare_flips(&s, &reduced, &eps_prime)?, eps_prime))
}

/// Positive decomposition with `true ≤ Σ ≤ (1+ε)·true` at every tuple.
pub fn approx_decompose(s: &FunctionalStructure, phi: &Formula, vars: &Vars, eps: &BigRational) -> Result<Decomposition> {
    let (prepared, _) = prepare(s, phi, vars, eps)?;
    let entries = prepared.clauses.iter().map(|c| entry(c, 1)).collect();
    Ok(Decomposition {
        structure: prepared.structure,
        vars: vars.clone(),
        sum: SimpleClauseSum { entries, exact: false },
        flips: prepared.flips,
    })
}

/// Signed decomposition equal to the count at every tuple. Inner `∃`/`∀`
/// are eliminated first; counting atoms are rejected.
pub fn exact_decompose(s: &FunctionalStructure, phi: &Formula, vars: &Vars) -> Result<Decomposition> {
    if phi.has_count() {
        return shape("exact decomposition needs a body without counting atoms");
    }
    let (s, phi) = if phi.is_quantifier_free() {
        (s.clone(), phi.clone())
    } else {
        crate::qe::eliminate_fo(s, phi)?
    };
    let (s, clauses) = canonical(&s, &phi, vars)?;
    // Terms whose positive part no tuple satisfies are zero, and so are all
    // terms expanded from them.
    let tuples = all_tuples(s.universe_size(), vars.k());
    let live = |c: &CanonicalClause| {
        tuples.as_ref().is_none_or(|t| realized(&CanonicalClause { delta_neq: Vec::new(), ..c.clone() }, &s, t))
    };
    let mut entries = Vec::new();
    for c in clauses {
        let mut work = vec![(c, 1i8)];
        while let Some((mut c, mu)) = work.pop() {
            if c.delta_neq.is_empty() {
                for r in reduce_delta_eq(&c, Mode::Concrete(&s))? {
                    entries.push(entry(&r, mu));
                }
                continue;
            }
            let l = c.delta_neq.remove(0);
            let mut with = c.clone();
            if !with.delta_eq.contains(&l) {
                with.delta_eq.push(l);
                with.delta_eq.sort_unstable();
            }
            if live(&with) {
                work.push((with, -mu));
            }
            work.push((c, mu));
        }
    }
    Ok(Decomposition { structure: s, vars: vars.clone(), sum: SimpleClauseSum { entries, exact: true }, flips: 0 })
}

impl Decomposition {
    /// Per entry, `count[u] = #{v : τ(v) ∧ f(v) = u}`.
    pub fn entry_counts(&self) -> Vec<Vec<u64>> {
        let mut cache: HashMap<(&ConjClause<Atom>, FnId), usize> = HashMap::new();
        let mut lists: Vec<Vec<u64>> = Vec::new();
        let mut out = Vec::with_capacity(self.sum.entries.len());
        for e in &self.sum.entries {
            let next = lists.len();
            let j = *cache.entry((&e.tau, e.f)).or_insert(next);
            if j == next {
                lists.push(count_single(&self.structure, &e.tau, e.f));
            }
            out.push(j);
        }
        out.into_iter().map(|j| lists[j].clone()).collect()
    }

    /// `Σ μ · [ψ(ū)] · count(g(u_i))` at `xs = ū`.
    pub fn value_at(&self, counts: &[Vec<u64>], xs: &[u32]) -> i64 {
        let mut vals = Vec::with_capacity(xs.len() + 1);
        vals.push(0);
        vals.extend_from_slice(xs);
        let s = &self.structure;
        let mut total = 0i64;
        for (e, c) in self.sum.entries.iter().zip(counts) {
            if conj_holds(&e.psi, s, &vals) {
                total += e.mu as i64 * c[s.apply(e.g, xs[e.i as usize - 1]) as usize] as i64;
            }
        }
        total
    }

    /// Weights with their descriptors.
    pub fn weights(&self) -> WeightTable {
        let mut w = self.psi_weights();
        (w.descriptors, w.cases) = type_split_on(&w.psis, &self.structure, w.k).into_iter().unzip();
        w
    }

    /// Weights per distinct `ψ` only; `descriptors` and `cases` stay empty.
    /// Literals of an entry's `ψ` that mention only its own position are
    /// folded into the weight column; the rest select the descriptor.
    pub fn psi_weights(&self) -> WeightTable {
        let counts = self.entry_counts();
        let s = &self.structure;
        let n = s.universe_size();
        let k = self.vars.k();
        let split: Vec<(ConjClause<Atom>, ConjClause<Atom>)> = self
            .sum
            .entries
            .iter()
            .map(|e| {
                let (mut own, mut rest) = (ConjClause::new(), ConjClause::new());
                for (a, v) in e.psi.literals() {
                    if a.vars() == [e.i] {
                        own.insert(a.clone(), v);
                    } else {
                        rest.insert(a.clone(), v);
                    }
                }
                (own, rest)
            })
            .collect();
        let (psis, of) = distinct_psis(split.iter().map(|(_, r)| r));
        let mut by_psi = vec![vec![vec![0i64; n]; k]; psis.len()];
        let mut vals = vec![0u32; k + 1];
        for (((e, c), &j), (own, _)) in self.sum.entries.iter().zip(&counts).zip(&of).zip(&split) {
            let i = e.i as usize;
            let col = &mut by_psi[j][i - 1];
            let g = s.table(e.g);
            for (v, w) in col.iter_mut().enumerate() {
                vals[i] = v as u32;
                if conj_holds(own, s, &vals) {
                    *w += e.mu as i64 * c[g[v] as usize] as i64;
                }
            }
        }
        WeightTable { n, k, psis, descriptors: Vec::new(), cases: Vec::new(), by_psi, exact: self.sum.exact }
    }
}

/// Weights `c_{ω,i}(v)` for every sign-vector descriptor `ω`. Stored per
/// distinct `ψ`; a descriptor's weight is the sum over the `ψ`s it asserts.
#[derive(Clone, Debug)]
pub struct WeightTable {
    /// Universe size.
    pub n: usize,
    pub k: usize,
    pub psis: Vec<ConjClause<Atom>>,
    pub descriptors: Vec<TypeDescriptor>,
    /// Mutually exclusive atom cases selecting each descriptor.
    pub cases: Vec<Vec<ConjClause<Atom>>>,
    /// `by_psi[j][i][v]`: weight contributed at position `i` by entries
    /// whose `ψ` is `psis[j]`.
    pub by_psi: Vec<Vec<Vec<i64>>>,
    pub exact: bool,
}

impl WeightTable {
    pub fn formula(&self, d: usize, sig: &Signature, vars: &Vars) -> Formula {
        descriptor_formula(&self.cases[d], sig, vars)
    }

    pub fn weight(&self, d: usize, i: usize, v: u32) -> i64 {
        self.descriptors[d].iter().zip(&self.by_psi).filter(|(&on, _)| on).map(|(_, w)| w[i][v as usize]).sum()
    }

    pub fn column(&self, d: usize, i: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.n];
        for (_, w) in self.descriptors[d].iter().zip(&self.by_psi).filter(|(&on, _)| on) {
            for (o, x) in out.iter_mut().zip(&w[i]) {
                *o += x;
            }
        }
        out
    }

    /// The unique descriptor holding at `xs`.
    pub fn descriptor_at(&self, s: &FunctionalStructure, xs: &[u32]) -> Option<usize> {
        let mut vals = Vec::with_capacity(xs.len() + 1);
        vals.push(0);
        vals.extend_from_slice(xs);
        let truth: Vec<bool> = self.psis.iter().map(|p| conj_holds(p, s, &vals)).collect();
        self.descriptors.iter().position(|d| *d == truth)
    }

    /// `Σ_i c_{ω,i}(u_i)` for the descriptor holding at `xs`.
    pub fn sum_at(&self, s: &FunctionalStructure, xs: &[u32]) -> i64 {
        let mut vals = Vec::with_capacity(xs.len() + 1);
        vals.push(0);
        vals.extend_from_slice(xs);
        self.psis
            .iter()
            .zip(&self.by_psi)
            .filter(|(p, _)| conj_holds(p, s, &vals))
            .map(|(_, w)| xs.iter().enumerate().map(|(i, &u)| w[i][u as usize]).sum::<i64>())
            .sum()
    }

    /// Number of descriptors holding at `xs` (always 1 when well formed).
    pub fn holding(&self, s: &FunctionalStructure, xs: &[u32]) -> usize {
        let mut vals = vec![0];
        vals.extend_from_slice(xs);
        self.descriptors.iter().filter(|d| descriptor_holds(&self.psis, d, s, &vals)).count()
    }

    /// `vertex,descriptor,position,weight` rows, skipping zero weights.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,descriptor,position,weight\n");
        for d in 0..self.descriptors.len() {
            for i in 0..self.k {
                for (v, w) in self.column(d, i).into_iter().enumerate() {
                    if w != 0 {
                        writeln!(out, "{v},{d},{},{w}", i + 1).unwrap();
                    }
                }
            }
        }
        out
    }
}

pub fn approx_weights(
    s: &FunctionalStructure,
    phi: &Formula,
    vars: &Vars,
    eps: &BigRational,
) -> Result<(Decomposition, WeightTable)> {
    let d = approx_decompose(s, phi, vars, eps)?;
    let w = d.weights();
    Ok((d, w))
}

pub fn exact_weights(s: &FunctionalStructure, phi: &Formula, vars: &Vars) -> Result<(Decomposition, WeightTable)> {
    let d = exact_decompose(s, phi, vars)?;
    let w = d.weights();
    Ok((d, w))
}

/// Whether `count ≤ (1+ε)·truth`, exactly.
pub fn within_factor(count: i64, truth: u64, eps: &BigRational) -> bool {
    let lhs = BigRational::from_integer(count.into());
    let rhs = (BigRational::one() + eps) * BigRational::from_integer(truth.into());
    count >= truth as i64 && lhs <= rhs
}

/// Checks the flip guarantee on prepared clauses: every surviving literal's
/// pair counts are at most `ε′` times the single counts.
pub fn flips_sufficient(p: &Prepared, eps_prime: &BigRational) -> bool {
    let s = &p.structure;
    p.clauses.iter().filter(|c| !c.delta_neq.is_empty()).all(|c| {
        let f = c.delta_eq[0].f;
        let single = count_single(s, &c.tau, f);
        c.delta_neq.iter().all(|l| {
            count_pairs(s, &c.tau, f, l.f).into_iter().all(|(u, _, cnt)| {
                BigRational::from_integer(cnt.into()) <= eps_prime * BigRational::from_integer(single[u as usize].into())
            })
        })
    })
}
