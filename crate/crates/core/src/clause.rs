//! Canonical conjunctive clauses `τ(y) ∧ ψ(x̄) ∧ Δ= ∧ Δ≠` and the rewriting
//! steps that bring a clause down to a single positive mixed literal.
//!
//! Atoms are compiled to [`Path`]s over atomic symbols: identities are
//! dropped, composites are expanded into their parts and everything before
//! the last constant (apex) symbol is discarded. Syntactic equality of
//! compiled atoms is therefore a sound (if incomplete) semantic check.
//!
//! Completion of `τ` and `ψ` is lazy. A clause only decides the literals
//! some rewriting step has asked about; undecided literals are split on
//! demand. In [`Mode::Concrete`] the split only uses literals realized on a
//! given structure, which keeps the number of branches small.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::bits::Bits;
use crate::error::{shape, Error, Result};
use crate::logic::ast::{ConjClause, Formula, Name, Term};
use crate::structure::{FnId, FunctionalStructure, PredId, Signature, IDENTITY};

/// Variable index: `0` is the counted variable `y`, `i ≥ 1` is `x_i`.
pub type Var = u8;
pub const Y: Var = 0;

/// The counted variable and the free variables `x̄` of a counting term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vars {
    pub y: Name,
    pub xs: Vec<Name>,
}

impl Vars {
    pub fn new(y: &str, xs: &[&str]) -> Vars {
        Vars { y: y.into(), xs: xs.iter().map(|&x| x.into()).collect() }
    }

    pub fn k(&self) -> usize {
        self.xs.len()
    }

    pub fn index(&self, v: &str) -> Option<Var> {
        if *self.y == *v {
            return Some(Y);
        }
        self.xs.iter().position(|x| **x == *v).map(|i| i as Var + 1)
    }

    pub fn name(&self, v: Var) -> &Name {
        if v == Y {
            &self.y
        } else {
            &self.xs[v as usize - 1]
        }
    }
}

/// A term `fns(var)`, functions applied innermost first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub var: Var,
    pub fns: Vec<FnId>,
}

fn expand(sig: &Signature, f: FnId, out: &mut Vec<FnId>) {
    if f == IDENTITY {
        return;
    }
    match sig.parts(f) {
        Some((a, b)) => {
            expand(sig, a, out);
            expand(sig, b, out);
        }
        None => out.push(f),
    }
}

impl Path {
    pub fn new(sig: &Signature, var: Var, fns: &[FnId]) -> Path {
        let mut out = Vec::with_capacity(fns.len());
        for &f in fns {
            expand(sig, f, &mut out);
        }
        if let Some(p) = out.iter().rposition(|&f| sig.is_constant(f)) {
            out.drain(..p);
        }
        Path { var, fns: out }
    }

    fn is_ground(&self, sig: &Signature) -> bool {
        self.fns.first().is_some_and(|&f| sig.is_constant(f))
    }

    #[inline]
    pub fn eval(&self, s: &FunctionalStructure, vals: &[u32]) -> u32 {
        self.fns.iter().fold(vals[self.var as usize], |v, &f| s.apply(f, v))
    }

    pub fn to_term(&self, sig: &Signature, vars: &Vars) -> Term {
        self.fns
            .iter()
            .fold(Term::Var(vars.name(self.var).clone()), |t, &f| Term::App(sig.fn_name(f).clone(), Box::new(t)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Pred(PredId, Path),
    Eq(Path, Path),
}

/// Result of normalizing an atom: either decided outright or a proper atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Norm {
    Const(bool),
    Atom(Atom),
}

impl Atom {
    /// Normalized equality: sides ordered; identical or both-ground-equal
    /// sides are `true`, and a ground side takes the other side's variable.
    pub fn eq(sig: &Signature, mut a: Path, mut b: Path) -> Norm {
        let (ga, gb) = (a.is_ground(sig), b.is_ground(sig));
        if a == b || (a.fns == b.fns && ga && gb) {
            return Norm::Const(true);
        }
        // A ground side does not depend on its variable.
        if ga && !gb {
            a.var = b.var;
        } else if gb && !ga {
            b.var = a.var;
        }
        if a <= b {
            Norm::Atom(Atom::Eq(a, b))
        } else {
            Norm::Atom(Atom::Eq(b, a))
        }
    }

    #[inline]
    pub fn eval(&self, s: &FunctionalStructure, vals: &[u32]) -> bool {
        match self {
            Atom::Pred(p, t) => s.holds(*p, t.eval(s, vals)),
            Atom::Eq(a, b) => a.eval(s, vals) == b.eval(s, vals),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v = match self {
            Atom::Pred(_, t) => vec![t.var],
            Atom::Eq(a, b) => vec![a.var, b.var],
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_formula(&self, sig: &Signature, vars: &Vars) -> Formula {
        match self {
            Atom::Pred(p, t) => Formula::Pred(sig.pred_name(*p).clone(), t.to_term(sig, vars)),
            Atom::Eq(a, b) => Formula::Eq(a.to_term(sig, vars), b.to_term(sig, vars)),
        }
    }
}

/// Evaluates a conjunction of literals under `vals` (indexed by [`Var`]).
#[inline]
pub fn conj_holds(c: &ConjClause<Atom>, s: &FunctionalStructure, vals: &[u32]) -> bool {
    c.literals().all(|(a, v)| a.eval(s, vals) == v)
}

pub fn conj_formula(c: &ConjClause<Atom>, sig: &Signature, vars: &Vars) -> Formula {
    Formula::and(c.literals().map(|(a, v)| {
        let f = a.to_formula(sig, vars);
        if v {
            f
        } else {
            Formula::not(f)
        }
    }))
}

/// The vertices `v` with `τ(v)`.
pub fn extension(tau: &ConjClause<Atom>, s: &FunctionalStructure) -> Bits {
    let mut vals = [0u32];
    Bits::from_fn(s.universe_size(), |v| {
        vals[0] = v;
        conj_holds(tau, s, &vals)
    })
}

/// The mixed literal `f(y) = g(x_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MixedLit {
    pub f: FnId,
    pub g: FnId,
    pub i: Var,
}

impl MixedLit {
    pub fn holds(&self, s: &FunctionalStructure, vals: &[u32]) -> bool {
        s.apply(self.f, vals[0]) == s.apply(self.g, vals[self.i as usize])
    }

    pub fn to_formula(&self, sig: &Signature, vars: &Vars) -> Formula {
        let side = |f: FnId, v: Var| Path::new(sig, v, &[f]).to_term(sig, vars);
        Formula::Eq(side(self.f, Y), side(self.g, self.i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalClause {
    pub k: usize,
    pub tau: ConjClause<Atom>,
    pub psi: ConjClause<Atom>,
    pub delta_eq: Vec<MixedLit>,
    pub delta_neq: Vec<MixedLit>,
}

impl CanonicalClause {
    /// Truth at `vals = [y, x_1, .., x_k]`.
    pub fn holds(&self, s: &FunctionalStructure, vals: &[u32]) -> bool {
        conj_holds(&self.tau, s, vals)
            && conj_holds(&self.psi, s, vals)
            && self.delta_eq.iter().all(|l| l.holds(s, vals))
            && self.delta_neq.iter().all(|l| !l.holds(s, vals))
    }

    pub fn to_formula(&self, sig: &Signature, vars: &Vars) -> Formula {
        let mut parts = vec![conj_formula(&self.tau, sig, vars), conj_formula(&self.psi, sig, vars)];
        parts.extend(self.delta_eq.iter().map(|l| l.to_formula(sig, vars)));
        parts.extend(self.delta_neq.iter().map(|l| Formula::not(l.to_formula(sig, vars))));
        Formula::and(parts)
    }

    /// Stable one-line rendering for golden tests and debugging.
    pub fn display<'a>(&'a self, sig: &'a Signature, vars: &'a Vars) -> impl fmt::Display + 'a {
        ClauseDisplay { c: self, sig, vars }
    }

    fn insert_tau(&mut self, n: Norm, value: bool) -> bool {
        match n {
            Norm::Const(b) => b == value,
            Norm::Atom(a) => self.tau.insert(a, value),
        }
    }

    fn insert_psi(&mut self, n: Norm, value: bool) -> bool {
        match n {
            Norm::Const(b) => b == value,
            Norm::Atom(a) => self.psi.insert(a, value),
        }
    }
}

struct ClauseDisplay<'a> {
    c: &'a CanonicalClause,
    sig: &'a Signature,
    vars: &'a Vars,
}

impl fmt::Display for ClauseDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (sig, vars) = (self.sig, self.vars);
        let lits = |c: &ConjClause<Atom>| {
            c.literals()
                .map(|(a, v)| {
                    let s = a.to_formula(sig, vars).to_string();
                    if v {
                        s
                    } else {
                        format!("!{s}")
                    }
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mixed = |ls: &[MixedLit]| ls.iter().map(|l| l.to_formula(sig, vars).to_string()).collect::<Vec<_>>().join(", ");
        write!(
            f,
            "tau[{}] psi[{}] eq[{}] neq[{}]",
            lits(&self.c.tau),
            lits(&self.c.psi),
            mixed(&self.c.delta_eq),
            mixed(&self.c.delta_neq)
        )
    }
}

#[derive(Clone, Debug)]
enum Qf {
    Const(bool),
    Atom(usize),
    Not(Box<Qf>),
    And(Vec<Qf>),
    Or(Vec<Qf>),
}

impl Qf {
    fn first_atom(&self) -> Option<usize> {
        match self {
            Qf::Const(_) => None,
            Qf::Atom(a) => Some(*a),
            Qf::Not(q) => q.first_atom(),
            Qf::And(qs) | Qf::Or(qs) => qs.iter().find_map(Qf::first_atom),
        }
    }

    /// Constant folding only.
    fn fold(&self) -> Qf {
        self.subst(usize::MAX, false)
    }

    fn subst(&self, atom: usize, value: bool) -> Qf {
        match self {
            Qf::Const(_) => self.clone(),
            Qf::Atom(a) if *a == atom => Qf::Const(value),
            Qf::Atom(_) => self.clone(),
            Qf::Not(q) => match q.subst(atom, value) {
                Qf::Const(b) => Qf::Const(!b),
                q => Qf::Not(Box::new(q)),
            },
            Qf::And(qs) | Qf::Or(qs) => {
                let is_and = matches!(self, Qf::And(_));
                let mut out = Vec::with_capacity(qs.len());
                for q in qs {
                    match q.subst(atom, value) {
                        Qf::Const(b) if b == is_and => {}
                        Qf::Const(b) => return Qf::Const(b),
                        q => out.push(q),
                    }
                }
                match out.len() {
                    0 => Qf::Const(is_and),
                    1 => out.pop().unwrap(),
                    _ if is_and => Qf::And(out),
                    _ => Qf::Or(out),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum AtomKind {
    Tau(Atom),
    Psi(Atom),
    Mixed(MixedLit),
}

struct Compiler<'a> {
    sig: &'a Signature,
    vars: &'a Vars,
    atoms: Vec<AtomKind>,
    index: HashMap<AtomKind, usize>,
}

impl Compiler<'_> {
    fn path(&self, t: &Term) -> Result<(Var, Vec<FnId>)> {
        if t.depth() > 1 {
            return shape(format!("term `{t}` has depth above 1"));
        }
        let var = self.vars.index(t.root_var()).ok_or_else(|| Error::UnboundVariable(t.root_var().to_string()))?;
        let mut fns = Vec::new();
        for f in t.symbols() {
            fns.push(self.sig.function(f).ok_or_else(|| Error::UnknownFunction(f.to_string()))?);
        }
        Ok((var, fns))
    }

    fn atom(&mut self, kind: AtomKind) -> Qf {
        let next = self.atoms.len();
        let id = *self.index.entry(kind.clone()).or_insert(next);
        if id == next {
            self.atoms.push(kind);
        }
        Qf::Atom(id)
    }

    fn pure(&mut self, n: Norm, var: Var) -> Qf {
        match n {
            Norm::Const(b) => Qf::Const(b),
            Norm::Atom(a) if var == Y => self.atom(AtomKind::Tau(a)),
            Norm::Atom(a) => self.atom(AtomKind::Psi(a)),
        }
    }

    fn compile(&mut self, f: &Formula) -> Result<Qf> {
        Ok(match f {
            Formula::True => Qf::Const(true),
            Formula::False => Qf::Const(false),
            Formula::Pred(p, t) => {
                let (var, fns) = self.path(t)?;
                match self.sig.predicate(p) {
                    Some(p) => {
                        let a = Atom::Pred(p, Path::new(self.sig, var, &fns));
                        self.pure(Norm::Atom(a), var)
                    }
                    None => Qf::Const(false),
                }
            }
            Formula::Eq(a, b) => {
                let (va, fa) = self.path(a)?;
                let (vb, fb) = self.path(b)?;
                let sym = |fs: &[FnId]| fs.first().copied().unwrap_or(IDENTITY);
                if va == vb || (va != Y && vb != Y) {
                    let n = Atom::eq(self.sig, Path::new(self.sig, va, &fa), Path::new(self.sig, vb, &fb));
                    self.pure(n, va.max(vb))
                } else if va == Y {
                    self.atom(AtomKind::Mixed(MixedLit { f: sym(&fa), g: sym(&fb), i: vb }))
                } else {
                    self.atom(AtomKind::Mixed(MixedLit { f: sym(&fb), g: sym(&fa), i: va }))
                }
            }
            Formula::Not(g) => match self.compile(g)? {
                Qf::Const(b) => Qf::Const(!b),
                q => Qf::Not(Box::new(q)),
            },
            Formula::And(gs) => Qf::And(gs.iter().map(|g| self.compile(g)).collect::<Result<_>>()?),
            Formula::Or(gs) => Qf::Or(gs.iter().map(|g| self.compile(g)).collect::<Result<_>>()?),
            Formula::Implies(a, b) => Qf::Or(vec![Qf::Not(Box::new(self.compile(a)?)), self.compile(b)?]),
            Formula::Edge(..) => return shape("edge atoms must be translated to function symbols first"),
            _ => return shape("canonicalization needs a quantifier-free formula"),
        })
    }
}

fn shannon(q: &Qf, path: &mut Vec<(usize, bool)>, out: &mut Vec<Vec<(usize, bool)>>) {
    match q {
        Qf::Const(true) => out.push(path.clone()),
        Qf::Const(false) => {}
        _ => {
            let a = q.first_atom().expect("non-constant formula has an atom");
            for value in [true, false] {
                path.push((a, value));
                shannon(&q.subst(a, value), path, out);
                path.pop();
            }
        }
    }
}

impl AtomKind {
    fn holds(&self, s: &FunctionalStructure, vals: &[u32]) -> bool {
        match self {
            AtomKind::Tau(a) | AtomKind::Psi(a) => a.eval(s, vals),
            AtomKind::Mixed(l) => l.holds(s, vals),
        }
    }
}

/// Largest `n^(k+1)` for which clause sets are pruned against the tuples
/// of a concrete structure.
pub const TUPLE_CAP: usize = 1 << 16;

/// All tuples `[y, x_1, .., x_k]` of an `n`-element universe, flattened
/// with stride `k + 1`, or `None` above [`TUPLE_CAP`].
pub fn all_tuples(n: usize, k: usize) -> Option<Vec<u32>> {
    let total = (0..=k).try_fold(1usize, |acc, _| acc.checked_mul(n)).filter(|&t| t <= TUPLE_CAP)?;
    let mut out = Vec::with_capacity(total * (k + 1));
    for mut t in 0..total {
        for _ in 0..=k {
            out.push((t % n) as u32);
            t /= n;
        }
    }
    Some(out)
}

/// Whether some tuple satisfies the clause.
pub fn realized(c: &CanonicalClause, s: &FunctionalStructure, tuples: &[u32]) -> bool {
    tuples.chunks(c.k + 1).any(|vals| c.holds(s, vals))
}

/// Decision tree that skips branches no tuple of `s` reaches.
fn shannon_on(
    q: &Qf,
    atoms: &[AtomKind],
    s: &FunctionalStructure,
    stride: usize,
    tuples: &[u32],
    path: &mut Vec<(usize, bool)>,
    out: &mut Vec<Vec<(usize, bool)>>,
) {
    if tuples.is_empty() {
        return;
    }
    match q {
        Qf::Const(true) => out.push(path.clone()),
        Qf::Const(false) => {}
        _ => {
            let a = q.first_atom().expect("non-constant formula has an atom");
            let (mut yes, mut no) = (Vec::new(), Vec::new());
            for vals in tuples.chunks(stride) {
                if atoms[a].holds(s, vals) {
                    yes.extend_from_slice(vals);
                } else {
                    no.extend_from_slice(vals);
                }
            }
            for (value, part) in [(true, yes), (false, no)] {
                path.push((a, value));
                shannon_on(&q.subst(a, value), atoms, s, stride, &part, path, out);
                path.pop();
            }
        }
    }
}

/// Splits `φ(y, x̄)` into mutually exclusive canonical clauses whose
/// disjunction is equivalent to `φ`. Atoms are the branching points of a
/// decision tree, so every tuple satisfies at most one clause. When a
/// clause has no positive mixed literal, the always-true apex literal
/// `apx(y) = apx(x_1)` is added.
pub fn canonicalize(phi: &Formula, vars: &Vars, sig: &Signature, apex: FnId) -> Result<Vec<CanonicalClause>> {
    canonicalize_impl(phi, vars, sig, apex, None)
}

/// [`canonicalize`], dropping clauses that no tuple of `s` satisfies when
/// `s` is small enough to enumerate. Equivalent to `φ` on `s` and on every
/// expansion of `s`.
pub fn canonicalize_on(phi: &Formula, vars: &Vars, s: &FunctionalStructure, apex: FnId) -> Result<Vec<CanonicalClause>> {
    canonicalize_impl(phi, vars, s.signature(), apex, Some(s))
}

fn canonicalize_impl(
    phi: &Formula,
    vars: &Vars,
    sig: &Signature,
    apex: FnId,
    on: Option<&FunctionalStructure>,
) -> Result<Vec<CanonicalClause>> {
    if vars.k() == 0 {
        return Err(Error::Contract("canonical clauses need at least one free variable".into()));
    }
    if !sig.is_constant(apex) {
        return Err(Error::Contract(format!("`{}` is not an apex symbol", sig.fn_name(apex))));
    }
    let mut c = Compiler { sig, vars, atoms: Vec::new(), index: HashMap::new() };
    let q = c.compile(phi)?.fold();
    let mut paths = Vec::new();
    match on.and_then(|s| all_tuples(s.universe_size(), vars.k()).map(|t| (s, t))) {
        Some((s, tuples)) => shannon_on(&q, &c.atoms, s, vars.k() + 1, &tuples, &mut Vec::new(), &mut paths),
        None => shannon(&q, &mut Vec::new(), &mut paths),
    }
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let mut cl = CanonicalClause {
            k: vars.k(),
            tau: ConjClause::new(),
            psi: ConjClause::new(),
            delta_eq: Vec::new(),
            delta_neq: Vec::new(),
        };
        for (a, value) in path {
            match &c.atoms[a] {
                AtomKind::Tau(atom) => {
                    cl.tau.insert(atom.clone(), value);
                }
                AtomKind::Psi(atom) => {
                    cl.psi.insert(atom.clone(), value);
                }
                AtomKind::Mixed(l) if value => cl.delta_eq.push(*l),
                AtomKind::Mixed(l) => cl.delta_neq.push(*l),
            }
        }
        if cl.delta_eq.is_empty() {
            cl.delta_eq.push(MixedLit { f: apex, g: apex, i: 1 });
        }
        cl.delta_eq.sort_unstable();
        cl.delta_neq.sort_unstable();
        out.push(cl);
    }
    Ok(out)
}

/// How undecided completion literals are split.
#[derive(Clone, Copy)]
pub enum Mode<'a> {
    /// Over every symbol of the signature, as in the completeness
    /// requirement on canonical clauses. Sound on all expansions.
    Symbolic(&'a Signature),
    /// Only over literals realized by some `τ`-vertex of the structure.
    /// Sound on this structure and its expansions.
    Concrete(&'a FunctionalStructure),
}

impl Mode<'_> {
    fn sig(&self) -> &Signature {
        match self {
            Mode::Symbolic(sig) => sig,
            Mode::Concrete(s) => s.signature(),
        }
    }
}

/// A completion literal `probe` on `y` and what follows from it.
#[derive(Clone, Debug)]
struct Probe {
    atom: Atom,
    /// Literal added to `ψ` when the probe holds.
    psi: Norm,
    /// Which Δ literal becomes redundant (0 = first, 1 = second).
    drop: usize,
}

enum Probes {
    /// Some probe is already known to hold.
    Decided(Norm, usize),
    Open(Vec<Probe>),
}

/// Probes relating `l1 = f(y) = g(x_i)` and `l2 = f′(y) ~ g′(x_j)`:
/// forward `h(f(y)) = f′(y)` gives `h(g(x_i)) ~ g′(x_j)`, reverse
/// `f(y) = h(f′(y))` gives `g(x_i) = h(g′(x_j))`.
fn probes(c: &CanonicalClause, sig: &Signature, l1: MixedLit, l2: MixedLit, reverse: bool) -> Probes {
    let mut out: Vec<Probe> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let dirs: &[bool] = if reverse { &[false, true] } else { &[false] };
    for &rev in dirs {
        for h in 0..sig.fn_count() {
            if rev && h == IDENTITY {
                continue;
            }
            let (probe, psi, drop) = if !rev {
                (
                    Atom::eq(sig, Path::new(sig, Y, &[l1.f, h]), Path::new(sig, Y, &[l2.f])),
                    Atom::eq(sig, Path::new(sig, l1.i, &[l1.g, h]), Path::new(sig, l2.i, &[l2.g])),
                    1,
                )
            } else {
                (
                    Atom::eq(sig, Path::new(sig, Y, &[l1.f]), Path::new(sig, Y, &[l2.f, h])),
                    Atom::eq(sig, Path::new(sig, l1.i, &[l1.g]), Path::new(sig, l2.i, &[l2.g, h])),
                    0,
                )
            };
            match probe {
                Norm::Const(true) => return Probes::Decided(psi, drop),
                Norm::Const(false) => {}
                Norm::Atom(a) => match c.tau.get(&a) {
                    Some(true) => return Probes::Decided(psi, drop),
                    Some(false) => {}
                    None => {
                        if seen.insert(a.clone()) {
                            out.push(Probe { atom: a, psi, drop });
                        }
                    }
                },
            }
        }
    }
    Probes::Open(out)
}

/// Greedy cover of the `τ`-extension by probes realized on `s`, most
/// frequent first. Returns the chosen probes and the vertices left over.
fn cover(c: &CanonicalClause, s: &FunctionalStructure, cands: &[Probe]) -> (Vec<Probe>, usize) {
    let ext = extension(&c.tau, s);
    let members: Vec<u32> = ext.iter().collect();
    let hits: Vec<Vec<u32>> = cands
        .iter()
        .map(|p| members.iter().copied().filter(|&v| p.atom.eval(s, &[v])).collect())
        .collect();
    let mut covered = Bits::new(s.universe_size());
    let mut remaining = members.len();
    let mut used = vec![false; cands.len()];
    let mut chosen = Vec::new();
    loop {
        let best = (0..cands.len())
            .filter(|&j| !used[j])
            .map(|j| (hits[j].iter().filter(|&&v| !covered.get(v)).count(), j))
            .filter(|&(n, _)| n > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let Some((n, j)) = best else { break };
        used[j] = true;
        for &v in &hits[j] {
            covered.set(v);
        }
        remaining -= n;
        chosen.push(cands[j].clone());
    }
    (chosen, remaining)
}

/// Sequential exclusive branches: the `m`-th asserts probe `m` and denies
/// all earlier ones. With `keep_rest`, a final branch denies every probe.
fn branches(c: &CanonicalClause, probes: &[Probe], keep_rest: bool) -> (Vec<(CanonicalClause, Probe)>, Option<CanonicalClause>) {
    let mut out = Vec::new();
    let mut base = c.clone();
    for p in probes {
        let mut b = base.clone();
        if b.tau.insert(p.atom.clone(), true) {
            out.push((b, p.clone()));
        }
        if !base.tau.insert(p.atom.clone(), false) {
            return (out, None);
        }
    }
    (out, keep_rest.then_some(base))
}

/// Brings `Δ=` down to a single literal. Returns the equivalent branches;
/// an empty result means the clause is unsatisfiable.
pub fn reduce_delta_eq(c: &CanonicalClause, mode: Mode) -> Result<Vec<CanonicalClause>> {
    let sig = mode.sig();
    let mut out = Vec::new();
    let mut work = vec![c.clone()];
    while let Some(mut c) = work.pop() {
        if c.delta_eq.len() <= 1 {
            out.push(c);
            continue;
        }
        let (l1, l2) = (c.delta_eq[0], c.delta_eq[1]);
        if (l1.g, l1.i) == (l2.g, l2.i) {
            let n = Atom::eq(sig, Path::new(sig, Y, &[l1.f]), Path::new(sig, Y, &[l2.f]));
            c.delta_eq.remove(1);
            if c.insert_tau(n, true) {
                work.push(c);
            }
            continue;
        }
        let apply = |mut c: CanonicalClause, psi: Norm, drop: usize| {
            c.delta_eq.remove(drop);
            c.insert_psi(psi, true).then_some(c)
        };
        match probes(&c, sig, l1, l2, true) {
            Probes::Decided(psi, drop) => work.extend(apply(c, psi, drop)),
            Probes::Open(cands) => {
                let chosen = match mode {
                    Mode::Symbolic(_) => cands,
                    Mode::Concrete(s) => {
                        let (chosen, left) = cover(&c, s, &cands);
                        if left > 0 {
                            return Err(Error::Invariant(format!(
                                "{left} vertices relate `{}` and `{}` by no symbol; the structure is not augmented",
                                sig.fn_name(l1.f),
                                sig.fn_name(l2.f)
                            )));
                        }
                        chosen
                    }
                };
                let (bs, _) = branches(&c, &chosen, false);
                for (b, p) in bs.into_iter().rev() {
                    work.extend(apply(b, p.psi, p.drop));
                }
            }
        }
    }
    out.reverse();
    Ok(out)
}

/// Moves every `Δ≠` literal `f′(y) ≠ g′(x_j)` for which `τ` forces
/// `h(f(y)) = f′(y)` into `ψ` as `h(g(x_i)) ≠ g′(x_j)`. Surviving literals
/// are those where no `h` relates `f(y)` to `f′(y)` on the clause's `τ`.
pub fn prune_delta_neq(c: &CanonicalClause, mode: Mode) -> Result<Vec<CanonicalClause>> {
    if c.delta_eq.len() != 1 {
        return Err(Error::Contract(format!(
            "pruning needs exactly one positive mixed literal, found {}",
            c.delta_eq.len()
        )));
    }
    let sig = mode.sig();
    let l1 = c.delta_eq[0];
    let mut stage = vec![CanonicalClause { delta_neq: Vec::new(), ..c.clone() }];
    for &l2 in &c.delta_neq {
        let mut next = Vec::new();
        for mut cl in stage {
            if (l1.g, l1.i) == (l2.g, l2.i) {
                let n = Atom::eq(sig, Path::new(sig, Y, &[l1.f]), Path::new(sig, Y, &[l2.f]));
                if cl.insert_tau(n, false) {
                    next.push(cl);
                }
                continue;
            }
            match probes(&cl, sig, l1, l2, false) {
                Probes::Decided(psi, _) => {
                    if cl.insert_psi(psi, false) {
                        next.push(cl);
                    }
                }
                Probes::Open(cands) => {
                    let chosen = match mode {
                        Mode::Symbolic(_) => cands,
                        Mode::Concrete(s) => cover(&cl, s, &cands).0,
                    };
                    let (bs, rest) = branches(&cl, &chosen, true);
                    for (mut b, p) in bs {
                        if b.insert_psi(p.psi, false) {
                            next.push(b);
                        }
                    }
                    if let Some(mut rest) = rest {
                        rest.delta_neq.push(l2);
                        next.push(rest);
                    }
                }
            }
        }
        stage = next;
    }
    Ok(stage)
}

/// Descriptor `ω`: entry `j` tells whether `ψ_j` is asserted or denied.
pub type TypeDescriptor = Vec<bool>;

/// The realizable sign vectors over `psis`, each with the atom cases that
/// select it. Built by a decision tree over the atoms of the `ψ`s that stops
/// once every `ψ` is decided, so cases are mutually exclusive and cover
/// every tuple. Syntactically impossible sign vectors never appear.
pub fn type_split(psis: &[ConjClause<Atom>]) -> Vec<(TypeDescriptor, Vec<ConjClause<Atom>>)> {
    split_with(psis, Reach::Any)
}

/// [`type_split`] without cases that no tuple of `s` reaches.
pub fn type_split_on(psis: &[ConjClause<Atom>], s: &FunctionalStructure, k: usize) -> Vec<(TypeDescriptor, Vec<ConjClause<Atom>>)> {
    let n = s.universe_size();
    // `ψ` atoms never mention `y`, so slot 0 stays at vertex 0.
    let reach = match all_tuples(n, k.saturating_sub(1)).filter(|_| k > 0) {
        Some(flat) => {
            Reach::Tuples(s, k, flat.chunks(k).flat_map(|t| std::iter::once(0).chain(t.iter().copied())).collect())
        }
        None => {
            let r = Realizer::new(s, k);
            match r.solve(&ConjClause::new()) {
                Some(w) => Reach::Search(Rc::new(r), w),
                None => return Vec::new(),
            }
        }
    };
    split_with(psis, reach)
}

/// Tuples a branch of the decision tree can still be reached by.
enum Reach<'a> {
    Any,
    /// Tuples `[_, x_1, .., x_k]` with stride `k + 1`.
    Tuples(&'a FunctionalStructure, usize, Vec<u32>),
    /// Decided per branch by [`Realizer::solve`], with a tuple reaching
    /// the current branch.
    Search(Rc<Realizer<'a>>, Vec<u32>),
}

impl<'a> Reach<'a> {
    /// The part of the reach where `acc` holds and `atom` has `value`, or
    /// `None` if empty.
    fn restrict(&self, acc: &ConjClause<Atom>, atom: &Atom, value: bool) -> Option<Reach<'a>> {
        match self {
            Reach::Any => Some(Reach::Any),
            Reach::Tuples(s, k, t) => {
                let kept: Vec<u32> = t.chunks(k + 1).filter(|v| atom.eval(s, v) == value).flatten().copied().collect();
                (!kept.is_empty()).then_some(Reach::Tuples(s, *k, kept))
            }
            Reach::Search(r, witness) => {
                if atom.eval(r.s, witness) == value {
                    return Some(Reach::Search(r.clone(), witness.clone()));
                }
                let next = acc.clone().with(atom.clone(), value)?;
                r.solve(&next).map(|w| Reach::Search(r.clone(), w))
            }
        }
    }
}

/// A positive equality `p(x_j) = q(x_i)` with `i < j`, as `p` and the
/// value of `q` under `vals`. Every solution has `x_j` in the preimage.
pub fn anchor<'c>(
    lits: impl IntoIterator<Item = (&'c Atom, bool)>,
    j: usize,
    s: &FunctionalStructure,
    vals: &[u32],
) -> Option<(&'c Path, u32)> {
    lits.into_iter().find_map(|(a, v)| match a {
        Atom::Eq(l, r) if v && (l.var as usize) < j && r.var as usize == j => Some((r, l.eval(s, vals))),
        Atom::Eq(l, r) if v && (r.var as usize) < j && l.var as usize == j => Some((l, r.eval(s, vals))),
        _ => None,
    })
}

/// Decides whether a conjunction over `x_1..x_k` has a solution, by
/// backtracking over positions in order. A positive equality linking a
/// position to an earlier one draws candidates from a preimage, so
/// sparse structures are searched in near-linear time.
pub struct Realizer<'a> {
    s: &'a FunctionalStructure,
    k: usize,
    inverse: RefCell<BTreeMap<FnId, Vec<Vec<u32>>>>,
    /// Vertices passing a set of single-position literals.
    local: RefCell<BTreeMap<Vec<(Atom, bool)>, Rc<Vec<u32>>>>,
}

impl<'a> Realizer<'a> {
    pub fn new(s: &'a FunctionalStructure, k: usize) -> Self {
        Realizer { s, k, inverse: RefCell::new(BTreeMap::new()), local: RefCell::new(BTreeMap::new()) }
    }

    /// Vertices `v` with `p(v) = u`.
    pub fn preimage(&self, p: &Path, u: u32) -> Vec<u32> {
        let mut inv = self.inverse.borrow_mut();
        let mut layer = vec![u];
        for &f in p.fns.iter().rev() {
            let table = inv.entry(f).or_insert_with(|| {
                let mut t = vec![Vec::new(); self.s.universe_size()];
                for (v, &w) in self.s.table(f).iter().enumerate() {
                    t[w as usize].push(v as u32);
                }
                t
            });
            layer = layer.iter().flat_map(|&w| table[w as usize].iter().copied()).collect();
        }
        layer
    }

    /// A tuple `[_, x_1, .., x_k]` satisfying `c`, if any.
    pub fn solve(&self, c: &ConjClause<Atom>) -> Option<Vec<u32>> {
        let mut by_pos: Vec<Vec<(&Atom, bool)>> = vec![Vec::new(); self.k + 1];
        for (a, v) in c.literals() {
            let last = a.vars().last().copied().unwrap_or(0) as usize;
            by_pos[last].push((a, v));
        }
        let mut vals = vec![0u32; self.k + 1];
        if !by_pos[0].iter().all(|&(a, v)| a.eval(self.s, &vals) == v) {
            return None;
        }
        // Candidates passing the literals local to each position.
        let mut local = Vec::with_capacity(self.k + 1);
        local.push(Rc::new(Vec::new()));
        for j in 1..=self.k {
            let own: Vec<(Atom, bool)> =
                by_pos[j].iter().filter(|(a, _)| a.vars() == [j as Var]).map(|&(a, v)| (a.clone(), v)).collect();
            let keep = self.local_candidates(j, own);
            if keep.is_empty() {
                return None;
            }
            local.push(keep);
        }
        self.search(&by_pos, &local, 1, &mut vals).then_some(vals)
    }

    fn local_candidates(&self, j: usize, own: Vec<(Atom, bool)>) -> Rc<Vec<u32>> {
        if let Some(c) = self.local.borrow().get(&own) {
            return c.clone();
        }
        let mut vals = vec![0u32; self.k + 1];
        let keep: Vec<u32> = (0..self.s.universe_size() as u32)
            .filter(|&v| {
                vals[j] = v;
                own.iter().all(|(a, w)| a.eval(self.s, &vals) == *w)
            })
            .collect();
        let keep = Rc::new(keep);
        self.local.borrow_mut().insert(own, keep.clone());
        keep
    }

    fn search(&self, by_pos: &[Vec<(&Atom, bool)>], local: &[Rc<Vec<u32>>], j: usize, vals: &mut [u32]) -> bool {
        if j > self.k {
            return true;
        }
        let anchored;
        let candidates: &[u32] = match anchor(by_pos[j].iter().copied(), j, self.s, vals) {
            Some((p, u)) => {
                anchored = self.preimage(p, u);
                &anchored
            }
            None => &local[j],
        };
        for &v in candidates {
            vals[j] = v;
            if by_pos[j].iter().all(|&(a, w)| a.eval(self.s, vals) == w) && self.search(by_pos, local, j + 1, vals) {
                return true;
            }
        }
        false
    }
}

fn split_with(psis: &[ConjClause<Atom>], reach: Reach) -> Vec<(TypeDescriptor, Vec<ConjClause<Atom>>)> {
    fn settle(psis: &[ConjClause<Atom>], acc: &ConjClause<Atom>, status: &mut [Option<bool>]) {
        for (p, st) in psis.iter().zip(status.iter_mut()) {
            if st.is_some() {
                continue;
            }
            let mut all = true;
            for (a, v) in p.literals() {
                match acc.get(a) {
                    Some(w) if w != v => {
                        *st = Some(false);
                        break;
                    }
                    Some(_) => {}
                    None => all = false,
                }
            }
            if st.is_none() && all {
                *st = Some(true);
            }
        }
    }
    fn go(
        psis: &[ConjClause<Atom>],
        acc: ConjClause<Atom>,
        reach: Reach,
        mut status: Vec<Option<bool>>,
        index: &mut BTreeMap<TypeDescriptor, usize>,
        out: &mut Vec<(TypeDescriptor, Vec<ConjClause<Atom>>)>,
    ) {
        settle(psis, &acc, &mut status);
        let mut freq: BTreeMap<&Atom, usize> = BTreeMap::new();
        for (p, st) in psis.iter().zip(&status) {
            if st.is_none() {
                for (a, _) in p.literals() {
                    if acc.get(a).is_none() {
                        *freq.entry(a).or_default() += 1;
                    }
                }
            }
        }
        let Some((&atom, _)) = freq.iter().rev().max_by_key(|(_, &c)| c) else {
            let omega: TypeDescriptor = status.iter().map(|s| s.unwrap_or(true)).collect();
            let next = out.len();
            let j = *index.entry(omega.clone()).or_insert(next);
            if j == next {
                out.push((omega, Vec::new()));
            }
            out[j].1.push(acc);
            return;
        };
        let atom = atom.clone();
        for value in [true, false] {
            if let Some(r) = reach.restrict(&acc, &atom, value) {
                let mut next = acc.clone();
                next.insert(atom.clone(), value);
                go(psis, next, r, status.clone(), index, out);
            }
        }
    }
    let mut out = Vec::new();
    go(psis, ConjClause::new(), reach, vec![None; psis.len()], &mut BTreeMap::new(), &mut out);
    out
}

/// The sign vectors of [`type_split`].
pub fn sign_vector_types(psis: &[ConjClause<Atom>]) -> Vec<TypeDescriptor> {
    type_split(psis).into_iter().map(|(d, _)| d).collect()
}

/// Whether descriptor `omega` holds at `vals`.
pub fn descriptor_holds(psis: &[ConjClause<Atom>], omega: &[bool], s: &FunctionalStructure, vals: &[u32]) -> bool {
    psis.iter().zip(omega).all(|(p, &want)| conj_holds(p, s, vals) == want)
}

/// Disjunction of a descriptor's cases.
pub fn descriptor_formula(cases: &[ConjClause<Atom>], sig: &Signature, vars: &Vars) -> Formula {
    Formula::or(cases.iter().map(|c| conj_formula(c, sig, vars)))
}

/// Deduplicated list of the distinct `ψ`s, with an index per clause.
pub fn distinct_psis<'a>(psis: impl IntoIterator<Item = &'a ConjClause<Atom>>) -> (Vec<ConjClause<Atom>>, Vec<usize>) {
    let mut index: BTreeMap<&ConjClause<Atom>, usize> = BTreeMap::new();
    let mut list = Vec::new();
    let mut of = Vec::new();
    for p in psis {
        let next = list.len();
        let j = *index.entry(p).or_insert(next);
        if j == next {
            list.push(p.clone());
        }
        of.push(j);
    }
    (list, of)
}

/// Text dump of a clause set, one clause per line.
pub fn dump(clauses: &[CanonicalClause], sig: &Signature, vars: &Vars) -> String {
    clauses.iter().map(|c| format!("{}\n", c.display(sig, vars))).collect()
}
