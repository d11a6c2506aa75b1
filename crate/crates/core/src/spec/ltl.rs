//! LTL formulas over concept-named propositions.
//!
//! Concrete syntax, loosest to tightest binding:
//!
//! | operator        | syntax              | associativity |
//! |-----------------|---------------------|---------------|
//! | implication     | `a -> b`            | right         |
//! | disjunction     | `a \| b`            | left          |
//! | conjunction     | `a & b`             | left          |
//! | until           | `a U b`             | right         |
//! | unary           | `!a`, `X a`, `F a`, `G a` | prefix  |
//!
//! Atoms are `true`, `false` (read as `!true`), identifiers, and parenthesized
//! formulas. `X`, `F`, `G`, `U`, `true` and `false` are reserved words.

use std::collections::BTreeSet;
use std::fmt;

use super::lexer::{Cursor, Tok};
pub use super::lexer::SyntaxError;

/// LTL formula as written. `Eventually`, `Always` and `Implies` are kept for
/// printing; [`LtlFormula::desugar`] reduces them to the core connectives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LtlFormula {
    True,
    Prop(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Always(Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
}

use LtlFormula::*;

const RESERVED: [&str; 6] = ["X", "F", "G", "U", "true", "false"];

impl LtlFormula {
    pub fn prop(name: &str) -> Self {
        Prop(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        Or(Box::new(a), Box::new(b))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        Until(Box::new(a), Box::new(b))
    }

    pub fn always(f: LtlFormula) -> Self {
        Always(Box::new(f))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        Eventually(Box::new(f))
    }

    pub fn next(f: LtlFormula) -> Self {
        Next(Box::new(f))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction of all formulas, `true` if empty.
    pub fn conjunction(parts: impl IntoIterator<Item = LtlFormula>) -> Self {
        parts.into_iter().reduce(LtlFormula::and).unwrap_or(True)
    }

    /// Equivalent formula using only `true`, propositions, `!`, `&`, `X` and `U`.
    pub fn desugar(&self) -> LtlFormula {
        match self {
            True | Prop(_) => self.clone(),
            Not(a) => LtlFormula::not(a.desugar()),
            And(a, b) => LtlFormula::and(a.desugar(), b.desugar()),
            Or(a, b) => LtlFormula::not(LtlFormula::and(
                LtlFormula::not(a.desugar()),
                LtlFormula::not(b.desugar()),
            )),
            Next(a) => LtlFormula::next(a.desugar()),
            Until(a, b) => LtlFormula::until(a.desugar(), b.desugar()),
            Eventually(a) => LtlFormula::until(True, a.desugar()),
            Always(a) => LtlFormula::not(LtlFormula::until(True, LtlFormula::not(a.desugar()))),
            Implies(a, b) => LtlFormula::or(LtlFormula::not((**a).clone()), (**b).clone()).desugar(),
        }
    }

    pub fn is_temporal(&self) -> bool {
        match self {
            True | Prop(_) => false,
            Not(a) => a.is_temporal(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_temporal() || b.is_temporal(),
            Next(_) | Until(..) | Eventually(_) | Always(_) => true,
        }
    }

    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            True => {}
            Prop(p) => {
                out.insert(p.clone());
            }
            Not(a) | Next(a) | Eventually(a) | Always(a) => a.collect_props(out),
            And(a, b) | Or(a, b) | Until(a, b) | Implies(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            True | Prop(_) => 0,
            Not(a) | Next(a) | Eventually(a) | Always(a) => 1 + a.depth(),
            And(a, b) | Or(a, b) | Until(a, b) | Implies(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for LtlFormula {
    /// Binary operators are always parenthesized, so the output reparses to the
    /// same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => f.write_str("true"),
            Prop(p) => f.write_str(p),
            Not(a) => write!(f, "!{a}"),
            Next(a) => write!(f, "X {a}"),
            Eventually(a) => write!(f, "F {a}"),
            Always(a) => write!(f, "G {a}"),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

pub fn parse_ltl(text: &str) -> Result<LtlFormula, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let f = implication(&mut cur)?;
    cur.finish()?;
    Ok(f)
}

fn implication(cur: &mut Cursor) -> Result<LtlFormula, SyntaxError> {
    let lhs = disjunction(cur)?;
    if cur.eat(&Tok::Implies) {
        Ok(LtlFormula::implies(lhs, implication(cur)?))
    } else {
        Ok(lhs)
    }
}

fn disjunction(cur: &mut Cursor) -> Result<LtlFormula, SyntaxError> {
    let mut lhs = conjunction(cur)?;
    while cur.eat(&Tok::Or) {
        lhs = LtlFormula::or(lhs, conjunction(cur)?);
    }
    Ok(lhs)
}

fn conjunction(cur: &mut Cursor) -> Result<LtlFormula, SyntaxError> {
    let mut lhs = until(cur)?;
    while cur.eat(&Tok::And) {
        lhs = LtlFormula::and(lhs, until(cur)?);
    }
    Ok(lhs)
}

fn until(cur: &mut Cursor) -> Result<LtlFormula, SyntaxError> {
    let lhs = unary(cur)?;
    if cur.eat_ident("U") {
        Ok(LtlFormula::until(lhs, until(cur)?))
    } else {
        Ok(lhs)
    }
}

fn unary(cur: &mut Cursor) -> Result<LtlFormula, SyntaxError> {
    match cur.peek() {
        Some(Tok::Not) => {
            cur.bump();
            Ok(LtlFormula::not(unary(cur)?))
        }
        Some(Tok::Next) => {
            cur.bump();
            Ok(LtlFormula::next(unary(cur)?))
        }
        Some(Tok::Eventually) => {
            cur.bump();
            Ok(LtlFormula::eventually(unary(cur)?))
        }
        Some(Tok::Always) => {
            cur.bump();
            Ok(LtlFormula::always(unary(cur)?))
        }
        Some(Tok::Ident(w)) if w == "X" || w == "F" || w == "G" => {
            let w = w.clone();
            cur.bump();
            let inner = unary(cur)?;
            Ok(match w.as_str() {
                "X" => LtlFormula::next(inner),
                "F" => LtlFormula::eventually(inner),
                _ => LtlFormula::always(inner),
            })
        }
        _ => atom(cur),
    }
}

fn atom(cur: &mut Cursor) -> Result<LtlFormula, SyntaxError> {
    let column = cur.column();
    match cur.bump() {
        Some(Tok::LParen) => {
            let f = implication(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(f)
        }
        Some(Tok::Ident(w)) if w == "true" => Ok(True),
        Some(Tok::Ident(w)) if w == "false" => Ok(LtlFormula::not(True)),
        Some(Tok::Ident(w)) if RESERVED.contains(&w.as_str()) => {
            Err(SyntaxError::new(column, format!("`{w}` is an operator, not a proposition")))
        }
        Some(Tok::Ident(w)) => Ok(Prop(w)),
        Some(t) => Err(SyntaxError::new(column, format!("expected a formula, found {t}"))),
        None => Err(SyntaxError::new(column, "expected a formula, found end of input")),
    }
}
