//! Recursive-descent parser for the query language.
//!
//! ```text
//! formula    := quantified | binary
//! quantified := ("exists"|"forall") var "." formula | "#" var "." formula cmp int
//! cmp        := ">" | "<="
//! binary     := unary (("&"|"|"|"->") unary)*      precedence ! > & > | > ->
//! unary      := "!" unary | atom | "(" formula ")" | quantified | "true" | "false"
//! atom       := ident "(" term ("," term)? ")" | term "=" term
//! term       := var | ident "(" term ")"
//! ```

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use super::ast::{name, Cmp, Formula, Name, Term};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    Comma,
    Dot,
    Hash,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Gt,
    Le,
    Eq,
    End,
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| Error::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let mut advance = |k: usize, i: &mut usize| {
            *i += k;
            col += k;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '#' => Tok::Hash,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '=' => Tok::Eq,
            '>' => Tok::Gt,
            '-' if two == "->" => {
                advance(2, &mut i);
                out.push((Tok::Arrow, pos));
                continue;
            }
            '<' if two == "<=" => {
                advance(2, &mut i);
                out.push((Tok::Le, pos));
                continue;
            }
            c if c.is_ascii_digit() || c == '-' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                let v = s.parse::<BigInt>().map_err(|_| err(pos.line, pos.col, format!("invalid integer `{s}`")))?;
                advance(j - start, &mut i);
                out.push((Tok::Int(v), pos));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || matches!(chars[j], '_' | '$' | '\'')) {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                advance(j - start, &mut i);
                out.push((Tok::Ident(s), pos));
                continue;
            }
            other => return Err(err(pos.line, pos.col, format!("unexpected character `{other}`"))),
        };
        advance(1, &mut i);
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

const KEYWORDS: [&str; 4] = ["exists", "forall", "true", "false"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let p = self.toks[self.at].1;
        Err(Error::Syntax { line: p.line, col: p.col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn var(&mut self) -> Result<Name> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && s != "E" => {
                self.bump();
                Ok(name(&s))
            }
            other => self.error(format!("expected variable, found {}", describe(&other))),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conjunction()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Hash => {
                self.bump();
                let v = self.var()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.formula()?;
                let cmp = match self.peek() {
                    Tok::Gt => Cmp::Gt,
                    Tok::Le => Cmp::Le,
                    other => return self.error(format!("expected `>` or `<=`, found {}", describe(other))),
                };
                self.bump();
                let threshold = match self.peek().clone() {
                    Tok::Int(n) => n,
                    other => return self.error(format!("expected integer threshold, found {}", describe(&other))),
                };
                self.bump();
                Ok(Formula::Count { var: v, body: Box::new(body), cmp, threshold })
            }
            Tok::Ident(s) if s == "exists" || s == "forall" => {
                self.bump();
                let v = self.var()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = Box::new(self.formula()?);
                Ok(if s == "exists" { Formula::Exists(v, body) } else { Formula::Forall(v, body) })
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(_) => self.atom(),
            other => self.error(format!("expected formula, found {}", describe(&other))),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let Tok::Ident(id) = self.peek().clone() else { unreachable!() };
        if *self.peek_at(1) == Tok::LParen {
            // ident(...) is a predicate unless followed by `=`, in which case
            // it is a function term on the left of an equation.
            let start = self.at;
            self.bump();
            self.bump();
            let first = self.term()?;
            if *self.peek() == Tok::Comma {
                self.bump();
                let second = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                if id != "E" {
                    self.at = start;
                    return self.error(format!("only the edge relation E is binary, found `{id}`"));
                }
                return Ok(Formula::Edge(first, second));
            }
            self.expect(Tok::RParen, "`)`")?;
            if id == "E" {
                self.at = start;
                return self.error("the edge relation E takes two arguments");
            }
            if *self.peek() == Tok::Eq {
                self.bump();
                let rhs = self.term()?;
                return Ok(Formula::Eq(Term::App(name(&id), Box::new(first)), rhs));
            }
            return Ok(Formula::Pred(name(&id), first));
        }
        let lhs = self.term()?;
        self.expect(Tok::Eq, "`=`")?;
        let rhs = self.term()?;
        Ok(Formula::Eq(lhs, rhs))
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Ident(s) if *self.peek_at(1) == Tok::LParen => {
                if s == "E" || KEYWORDS.contains(&s.as_str()) {
                    return self.error(format!("`{s}` cannot be used as a function symbol"));
                }
                self.bump();
                self.bump();
                let inner = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::App(name(&s), Box::new(inner)))
            }
            Tok::Ident(_) => Ok(Term::Var(self.var()?)),
            other => self.error(format!("expected term, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

/// Parses a query and renames bound variables apart.
pub fn parse_query(text: &str) -> Result<Formula> {
    let mut p = Parser { toks: tokenize(text)?, at: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after formula", describe(p.peek())));
    }
    Ok(rename_apart(&f))
}

/// Renames bound variables so that no variable is bound twice and no bound
/// variable shares a name with a free one.
pub fn rename_apart(f: &Formula) -> Formula {
    let mut used: BTreeSet<Name> = f.free_vars();
    used.extend(f.terms().iter().map(|t| t.root_var().clone()));
    let mut seen = f.free_vars();
    go(f, &BTreeMap::new(), &mut seen, &mut used)
}

fn fresh(base: &Name, used: &mut BTreeSet<Name>) -> Name {
    let mut candidate = format!("{base}'");
    while used.contains(candidate.as_str()) {
        candidate.push('\'');
    }
    let n = name(&candidate);
    used.insert(n.clone());
    n
}

fn go(f: &Formula, map: &BTreeMap<Name, Name>, seen: &mut BTreeSet<Name>, used: &mut BTreeSet<Name>) -> Formula {
    match f {
        Formula::Exists(v, b) | Formula::Forall(v, b) | Formula::Count { var: v, body: b, .. } => {
            let new_v = if seen.contains(v) { fresh(v, used) } else { v.clone() };
            seen.insert(new_v.clone());
            used.insert(new_v.clone());
            let mut inner = map.clone();
            inner.insert(v.clone(), new_v.clone());
            let body = Box::new(go(b, &inner, seen, used));
            match f {
                Formula::Exists(..) => Formula::Exists(new_v, body),
                Formula::Forall(..) => Formula::Forall(new_v, body),
                Formula::Count { cmp, threshold, .. } => {
                    Formula::Count { var: new_v, body, cmp: *cmp, threshold: threshold.clone() }
                }
                _ => unreachable!(),
            }
        }
        Formula::Not(b) => Formula::Not(Box::new(go(b, map, seen, used))),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| go(g, map, seen, used)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| go(g, map, seen, used)).collect()),
        Formula::Implies(a, b) => {
            let a = go(a, map, seen, used);
            Formula::Implies(Box::new(a), Box::new(go(b, map, seen, used)))
        }
        atom => atom.rename_free(map),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_query(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn domination_shape() {
        let f = p("exists x. # y. (E(x,y) | y = x) > 10");
        let expected = Formula::exists(
            "x",
            Formula::count(
                "y",
                Formula::Or(vec![Formula::edge("x", "y"), Formula::eq(Term::var("y"), Term::var("x"))]),
                Cmp::Gt,
                10,
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn simple_count() {
        assert_eq!(p("# y. P(y) > 0"), Formula::count("y", Formula::pred("P", Term::var("y")), Cmp::Gt, 0));
    }

    #[test]
    fn nested_counts() {
        let f = p("# y. (# z. E(y,z) > 2) > 3");
        let inner = Formula::count("z", Formula::edge("y", "z"), Cmp::Gt, 2);
        assert_eq!(f, Formula::count("y", inner.clone(), Cmp::Gt, 3));
        assert_eq!(p("# y. # z. E(y,z) > 2 > 3"), f);
    }

    #[test]
    fn precedence() {
        let f = p("!P(x) & Q(x) | R(x) -> S(x) -> T(x)");
        let px = |s: &str| Formula::pred(s, Term::var("x"));
        let expected = Formula::implies(
            Formula::Or(vec![Formula::And(vec![Formula::Not(Box::new(px("P"))), px("Q")]), px("R")]),
            Formula::implies(px("S"), px("T")),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn function_terms_and_le() {
        let f = p("# y. f(g(y)) = x <= -1");
        let body = Formula::eq(Term::chain("y", &["g", "f"]), Term::var("x"));
        assert_eq!(f, Formula::count("y", body, Cmp::Le, -1));
        assert_eq!(p("f(x) = y"), Formula::eq(Term::app("f", Term::var("x")), Term::var("y")));
    }

    #[test]
    fn renaming_apart() {
        let f = p("exists x. P(x) & exists x. Q(x)");
        let bound = f.bound_vars();
        assert_eq!(bound.len(), 2);
        assert_ne!(bound[0], bound[1]);
        assert!(f.is_sentence());
        let g = p("P(x) & exists x. Q(x)");
        assert_ne!(g.bound_vars()[0].as_ref(), "x");
        assert_eq!(g.free_vars().into_iter().collect::<Vec<_>>(), vec![name("x")]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_query("exists x. P(x) &").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 1, col: 17, .. }), "{e}");
        assert!(parse_query("# y. P(y) 3").is_err());
        assert!(parse_query("E(x)").is_err());
        assert!(parse_query("P(x, y)").is_err());
        assert!(parse_query("x").is_err());
        let e = parse_query("P(x)\n  & ?").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 2, col: 5, .. }), "{e}");
    }

    #[test]
    fn display_round_trip() {
        for s in [
            "exists x. # y. (E(x,y) | y = x) > 10",
            "forall x. (P(x) -> !(# y. f(y) = x <= 3))",
            "true & (false | P(a))",
            "# y. (# z. E(y,z) > -2) > 3",
        ] {
            let f = p(s);
            assert_eq!(p(&f.to_string()), f, "{s}");
        }
    }
}
