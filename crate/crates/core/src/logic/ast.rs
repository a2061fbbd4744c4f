use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    App(Name, Box<Term>),
}

impl Term {
    pub fn var(v: &str) -> Term {
        Term::Var(name(v))
    }

    pub fn app(f: &str, t: Term) -> Term {
        Term::App(name(f), Box::new(t))
    }

    /// Applies `fs` innermost first: `chain(x, [f, g])` is `g(f(x))`.
    pub fn chain(v: &str, fs: &[&str]) -> Term {
        fs.iter().fold(Term::var(v), |t, f| Term::app(f, t))
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, t) => 1 + t.depth(),
        }
    }

    pub fn root_var(&self) -> &Name {
        match self {
            Term::Var(v) => v,
            Term::App(_, t) => t.root_var(),
        }
    }

    /// Function symbols from innermost to outermost.
    pub fn symbols(&self) -> Vec<&Name> {
        let mut out = Vec::new();
        let mut t = self;
        while let Term::App(f, inner) = t {
            out.push(f);
            t = inner;
        }
        out.reverse();
        out
    }

    fn rename(&self, map: &BTreeMap<Name, Name>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(f, t) => Term::App(f.clone(), Box::new(t.rename(map))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Gt,
    Le,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Pred(Name, Term),
    Eq(Term, Term),
    Edge(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Name, Box<Formula>),
    Forall(Name, Box<Formula>),
    Count { var: Name, body: Box<Formula>, cmp: Cmp, threshold: BigInt },
}

impl Formula {
    pub fn pred(p: &str, t: Term) -> Formula {
        Formula::Pred(name(p), t)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn edge(a: &str, b: &str) -> Formula {
        Formula::Edge(Term::var(a), Term::var(b))
    }

    pub fn exists(v: &str, body: Formula) -> Formula {
        Formula::Exists(name(v), Box::new(body))
    }

    pub fn forall(v: &str, body: Formula) -> Formula {
        Formula::Forall(name(v), Box::new(body))
    }

    pub fn count(v: &str, body: Formula, cmp: Cmp, threshold: impl Into<BigInt>) -> Formula {
        Formula::Count { var: name(v), body: Box::new(body), cmp, threshold: threshold.into() }
    }

    /// Negation with constant folding and double-negation removal.
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Conjunction with flattening and constant folding.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with flattening and constant folding.
    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::True | Formula::False | Formula::Pred(..) | Formula::Eq(..) | Formula::Edge(..))
    }

    /// No FO quantifiers and no counting atoms.
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Exists(..) | Formula::Forall(..) | Formula::Count { .. } => false,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            _ => true,
        }
    }

    pub fn has_count(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Count { .. }));
        found
    }

    pub fn has_edge(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Edge(..)));
        found
    }

    /// Number of counting atoms.
    pub fn count_atoms(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| n += matches!(f, Formula::Count { .. }) as usize);
        n
    }

    /// Pre-order traversal over all subformulas.
    pub fn visit(&self, cb: &mut impl FnMut(&Formula)) {
        cb(self);
        match self {
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.visit(cb),
            Formula::Count { body, .. } => body.visit(cb),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(cb)),
            Formula::Implies(a, b) => {
                a.visit(cb);
                b.visit(cb);
            }
            _ => {}
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Term>) {
            match f {
                Formula::Pred(_, t) => out.push(t),
                Formula::Eq(a, b) | Formula::Edge(a, b) => {
                    out.push(a);
                    out.push(b);
                }
                Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => go(f, out),
                Formula::Count { body, .. } => go(body, out),
                Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| go(f, out)),
                Formula::Implies(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Formula::True | Formula::False => {}
            }
        }
        go(self, &mut out);
        out
    }

    /// Functional depth: maximal nesting of function symbols in any term.
    pub fn depth(&self) -> usize {
        self.terms().iter().map(|t| t.depth()).max().unwrap_or(0)
    }

    pub fn function_symbols(&self) -> BTreeSet<Name> {
        self.terms().into_iter().flat_map(|t| t.symbols().into_iter().cloned()).collect()
    }

    pub fn predicate_symbols(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Pred(p, _) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let term = |t: &Term, bound: &Vec<Name>, out: &mut BTreeSet<Name>| {
            let v = t.root_var();
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Pred(_, t) => term(t, bound, out),
            Formula::Eq(a, b) | Formula::Edge(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) | Formula::Count { var: v, body: f, .. } => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every variable bound anywhere, in pre-order.
    pub fn bound_vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.visit(&mut |f| match f {
            Formula::Exists(v, _) | Formula::Forall(v, _) | Formula::Count { var: v, .. } => out.push(v.clone()),
            _ => {}
        });
        out
    }

    /// Renames free occurrences of variables according to `map`.
    pub fn rename_free(&self, map: &BTreeMap<Name, Name>) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Pred(p, t) => Formula::Pred(p.clone(), t.rename(map)),
            Formula::Eq(a, b) => Formula::Eq(a.rename(map), b.rename(map)),
            Formula::Edge(a, b) => Formula::Edge(a.rename(map), b.rename(map)),
            Formula::Not(f) => Formula::Not(Box::new(f.rename_free(map))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.rename_free(map)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.rename_free(map)).collect()),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.rename_free(map)), Box::new(b.rename_free(map))),
            Formula::Exists(v, f) | Formula::Forall(v, f) | Formula::Count { var: v, body: f, .. } => {
                let mut inner = map.clone();
                inner.remove(v);
                let body = Box::new(f.rename_free(&inner));
                match self {
                    Formula::Exists(..) => Formula::Exists(v.clone(), body),
                    Formula::Forall(..) => Formula::Forall(v.clone(), body),
                    Formula::Count { cmp, threshold, .. } => {
                        Formula::Count { var: v.clone(), body, cmp: *cmp, threshold: threshold.clone() }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Thresholds of all counting atoms in pre-order.
    pub fn thresholds(&self) -> Vec<BigInt> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Count { threshold, .. } = f {
                out.push(threshold.clone());
            }
        });
        out
    }

    /// Replaces the thresholds of all counting atoms (pre-order) by `ts`.
    pub fn with_thresholds(&self, ts: &[BigInt]) -> Formula {
        let mut it = ts.iter();
        let out = self.replace_thresholds(&mut it);
        debug_assert!(it.next().is_none());
        out
    }

    fn replace_thresholds<'a>(&self, ts: &mut impl Iterator<Item = &'a BigInt>) -> Formula {
        match self {
            Formula::Count { var, body, cmp, .. } => {
                let t = ts.next().expect("threshold list too short").clone();
                Formula::Count { var: var.clone(), body: Box::new(body.replace_thresholds(ts)), cmp: *cmp, threshold: t }
            }
            Formula::Not(f) => Formula::Not(Box::new(f.replace_thresholds(ts))),
            Formula::Exists(v, f) => Formula::Exists(v.clone(), Box::new(f.replace_thresholds(ts))),
            Formula::Forall(v, f) => Formula::Forall(v.clone(), Box::new(f.replace_thresholds(ts))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.replace_thresholds(ts)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.replace_thresholds(ts)).collect()),
            Formula::Implies(a, b) => {
                let a = a.replace_thresholds(ts);
                Formula::Implies(Box::new(a), Box::new(b.replace_thresholds(ts)))
            }
            _ => self.clone(),
        }
    }

    /// Node count, used for size diagnostics.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(g, t) => write!(f, "{g}({t})"),
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Gt => ">",
            Cmp::Le => "<=",
        })
    }
}

/// Prints in the query syntax; the output parses back to an equal formula.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, fs: &[Formula], op: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{g}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Pred(p, t) => write!(f, "{p}({t})"),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Edge(a, b) => write!(f, "E({a}, {b})"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::And(fs) if fs.is_empty() => f.write_str("true"),
            Formula::Or(fs) if fs.is_empty() => f.write_str("false"),
            Formula::And(fs) => join(f, fs, "&"),
            Formula::Or(fs) => join(f, fs, "|"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Exists(v, g) => write!(f, "(exists {v}. {g})"),
            Formula::Forall(v, g) => write!(f, "(forall {v}. {g})"),
            Formula::Count { var, body, cmp, threshold } => write!(f, "(# {var}. {body} {cmp} {threshold})"),
        }
    }
}

/// Conjunction of literals over atoms of type `A`, stored as a three-valued
/// table: an atom maps to `true`, `false`, or is absent (undecided).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjClause<A: Ord> {
    lits: BTreeMap<A, bool>,
}

impl<A: Ord> Default for ConjClause<A> {
    fn default() -> Self {
        ConjClause { lits: BTreeMap::new() }
    }
}

impl<A: Ord + Clone> ConjClause<A> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a literal; returns `false` if it contradicts the clause, in which
    /// case the clause is left unchanged.
    pub fn insert(&mut self, atom: A, value: bool) -> bool {
        match self.lits.get(&atom) {
            Some(&v) => v == value,
            None => {
                self.lits.insert(atom, value);
                true
            }
        }
    }

    pub fn with(mut self, atom: A, value: bool) -> Option<Self> {
        self.insert(atom, value).then_some(self)
    }

    pub fn get(&self, atom: &A) -> Option<bool> {
        self.lits.get(atom).copied()
    }

    pub fn remove(&mut self, atom: &A) -> Option<bool> {
        self.lits.remove(atom)
    }

    pub fn literals(&self) -> impl Iterator<Item = (&A, bool)> {
        self.lits.iter().map(|(a, &v)| (a, v))
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// Conjoins `other`; returns `false` on contradiction.
    pub fn conjoin(&mut self, other: &ConjClause<A>) -> bool {
        other.literals().all(|(a, v)| self.insert(a.clone(), v))
    }
}

impl ConjClause<Formula> {
    pub fn to_formula(&self) -> Formula {
        Formula::and(self.literals().map(|(a, v)| if v { a.clone() } else { Formula::not(a.clone()) }))
    }
}
