//! ALC concept expressions.
//!
//! Concrete syntax, loosest to tightest binding: `C | D`, `C & D`, then the
//! prefix forms `!C`, `exists r.C` and `forall r.C`. Atoms are `Top`, `Bottom`,
//! concept names and parenthesized concepts. The Unicode spellings `⊔ ⊓ ¬ ∃ ∀ ⊤
//! ⊥` are accepted too.

use std::collections::BTreeSet;
use std::fmt;

use crate::spec::lexer::{Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Concept {
    Top,
    Bottom,
    Atomic(String),
    Not(Box<Concept>),
    And(Box<Concept>, Box<Concept>),
    Or(Box<Concept>, Box<Concept>),
    Exists(String, Box<Concept>),
    Forall(String, Box<Concept>),
}

pub(crate) const KEYWORDS: [&str; 4] = ["Top", "Bottom", "exists", "forall"];

impl Concept {
    pub fn atomic(name: &str) -> Self {
        Concept::Atomic(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Concept) -> Self {
        Concept::Not(Box::new(c))
    }

    pub fn and(a: Concept, b: Concept) -> Self {
        Concept::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Concept, b: Concept) -> Self {
        Concept::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(role: &str, c: Concept) -> Self {
        Concept::Exists(role.to_string(), Box::new(c))
    }

    pub fn forall(role: &str, c: Concept) -> Self {
        Concept::Forall(role.to_string(), Box::new(c))
    }

    /// Concept names used anywhere in the expression.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |c| {
            if let Concept::Atomic(n) = c {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Role names used anywhere in the expression.
    pub fn roles(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |c| {
            if let Concept::Exists(r, _) | Concept::Forall(r, _) = c {
                out.insert(r.clone());
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Concept)) {
        f(self);
        match self {
            Concept::Top | Concept::Bottom | Concept::Atomic(_) => {}
            Concept::Not(a) | Concept::Exists(_, a) | Concept::Forall(_, a) => a.walk(f),
            Concept::And(a, b) | Concept::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Concept::Top | Concept::Bottom | Concept::Atomic(_) => 0,
            Concept::Not(a) | Concept::Exists(_, a) | Concept::Forall(_, a) => 1 + a.depth(),
            Concept::And(a, b) | Concept::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Top => f.write_str("Top"),
            Concept::Bottom => f.write_str("Bottom"),
            Concept::Atomic(n) => f.write_str(n),
            Concept::Not(a) => write!(f, "!{a}"),
            Concept::And(a, b) => write!(f, "({a} & {b})"),
            Concept::Or(a, b) => write!(f, "({a} | {b})"),
            Concept::Exists(r, a) => write!(f, "exists {r}.{a}"),
            Concept::Forall(r, a) => write!(f, "forall {r}.{a}"),
        }
    }
}

pub fn parse_concept(text: &str) -> Result<Concept, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let c = disjunction(&mut cur)?;
    cur.finish()?;
    Ok(c)
}

fn disjunction(cur: &mut Cursor) -> Result<Concept, SyntaxError> {
    let mut lhs = conjunction(cur)?;
    while cur.eat(&Tok::Or) {
        lhs = Concept::or(lhs, conjunction(cur)?);
    }
    Ok(lhs)
}

fn conjunction(cur: &mut Cursor) -> Result<Concept, SyntaxError> {
    let mut lhs = unary(cur)?;
    while cur.eat(&Tok::And) {
        lhs = Concept::and(lhs, unary(cur)?);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor) -> Result<Concept, SyntaxError> {
    if cur.eat(&Tok::Not) {
        return Ok(Concept::not(unary(cur)?));
    }
    let exists = cur.eat(&Tok::Exists) || cur.eat_ident("exists");
    if exists || cur.eat(&Tok::Forall) || cur.eat_ident("forall") {
        let role = role_name(cur)?;
        cur.expect(&Tok::Dot)?;
        let body = unary(cur)?;
        return Ok(if exists { Concept::exists(&role, body) } else { Concept::forall(&role, body) });
    }
    atom(cur)
}

fn role_name(cur: &mut Cursor) -> Result<String, SyntaxError> {
    match cur.peek() {
        Some(Tok::Ident(w)) if !KEYWORDS.contains(&w.as_str()) => {
            let w = w.clone();
            cur.bump();
            Ok(w)
        }
        _ => Err(cur.unexpected("expected a role name")),
    }
}

fn atom(cur: &mut Cursor) -> Result<Concept, SyntaxError> {
    let column = cur.column();
    match cur.bump() {
        Some(Tok::LParen) => {
            let c = disjunction(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(c)
        }
        Some(Tok::Top) => Ok(Concept::Top),
        Some(Tok::Bottom) => Ok(Concept::Bottom),
        Some(Tok::Ident(w)) if w == "Top" => Ok(Concept::Top),
        Some(Tok::Ident(w)) if w == "Bottom" => Ok(Concept::Bottom),
        Some(Tok::Ident(w)) if KEYWORDS.contains(&w.as_str()) => {
            Err(SyntaxError::new(column, format!("`{w}` needs a role and a concept")))
        }
        Some(Tok::Ident(w)) => Ok(Concept::Atomic(w)),
        Some(t) => Err(SyntaxError::new(column, format!("expected a concept, found {t}"))),
        None => Err(SyntaxError::new(column, "expected a concept, found end of input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_detection_concept() {
        let c = parse_concept("exists Proximity.NoEntrySign").unwrap();
        assert_eq!(c, Concept::exists("Proximity", Concept::atomic("NoEntrySign")));
        assert_eq!(parse_concept("∃Proximity.NoEntrySign").unwrap(), c);
    }

    #[test]
    fn quantifiers_bind_tighter_than_connectives() {
        let c = parse_concept("exists r.A & B").unwrap();
        assert_eq!(c, Concept::and(Concept::exists("r", Concept::atomic("A")), Concept::atomic("B")));
        let c = parse_concept("forall r.(A | !B)").unwrap();
        assert_eq!(
            c,
            Concept::forall("r", Concept::or(Concept::atomic("A"), Concept::not(Concept::atomic("B"))))
        );
        assert_eq!(parse_concept("A | B & C").unwrap().to_string(), "(A | (B & C))");
    }

    #[test]
    fn top_and_bottom() {
        assert_eq!(parse_concept("Top").unwrap(), Concept::Top);
        assert_eq!(parse_concept("⊥").unwrap(), Concept::Bottom);
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(parse_concept("exists .A").unwrap_err().column, 8);
        assert_eq!(parse_concept("exists r A").unwrap_err().column, 10);
        assert!(parse_concept("A -> B").is_err());
        assert!(parse_concept("forall").is_err());
    }

    #[test]
    fn printed_form_reparses() {
        for text in ["!(A & exists r.!B)", "forall r.(Top | Bottom)", "A & (B | C) & !exists s.forall r.A"] {
            let c = parse_concept(text).unwrap();
            assert_eq!(parse_concept(&c.to_string()).unwrap(), c);
        }
    }
}
