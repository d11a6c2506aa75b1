//! Tokenizer shared by the LTL and concept parsers.
//!
//! ASCII operators and their usual Unicode spellings are both accepted:
//! `!`/`¬`, `&`/`∧`/`⊓`, `|`/`∨`/`⊔`, `->`/`→`, `==`/`≡`, `<=`/`⊑`,
//! `□`, `◇`, `○`, `⊤`, `⊥`, `∃`, `∀`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Dot,
    Equiv,
    Subsumed,
    Always,
    Eventually,
    Next,
    Top,
    Bottom,
    Exists,
    Forall,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Not => f.write_str("`!`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Implies => f.write_str("`->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Equiv => f.write_str("`==`"),
            Tok::Subsumed => f.write_str("`<=`"),
            Tok::Always => f.write_str("`□`"),
            Tok::Eventually => f.write_str("`◇`"),
            Tok::Next => f.write_str("`○`"),
            Tok::Top => f.write_str("`⊤`"),
            Tok::Bottom => f.write_str("`⊥`"),
            Tok::Exists => f.write_str("`∃`"),
            Tok::Forall => f.write_str("`∀`"),
        }
    }
}

/// Parse failure at a 1-based character column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at column {column}: {message}")]
pub struct SyntaxError {
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(column: usize, message: impl Into<String>) -> Self {
        Self { column, message: message.into() }
    }
}

/// Token with its 1-based starting column.
pub type Spanned = (Tok, usize);

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        let single = match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' | '¬' => Some(Tok::Not),
            '&' | '∧' | '⊓' => Some(Tok::And),
            '|' | '∨' | '⊔' => Some(Tok::Or),
            '→' => Some(Tok::Implies),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '.' => Some(Tok::Dot),
            '≡' => Some(Tok::Equiv),
            '⊑' => Some(Tok::Subsumed),
            '□' => Some(Tok::Always),
            '◇' => Some(Tok::Eventually),
            '○' => Some(Tok::Next),
            '⊤' => Some(Tok::Top),
            '⊥' => Some(Tok::Bottom),
            '∃' => Some(Tok::Exists),
            '∀' => Some(Tok::Forall),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, col));
            i += 1;
            continue;
        }
        let double = match (c, next) {
            ('-', Some('>')) => Some(Tok::Implies),
            ('=', Some('=')) => Some(Tok::Equiv),
            ('<', Some('=')) => Some(Tok::Subsumed),
            _ => None,
        };
        if let Some(tok) = double {
            out.push((tok, col));
            i += 2;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        return Err(SyntaxError::new(col, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

/// Cursor over a token stream.
pub struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
    end_column: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, SyntaxError> {
        Ok(Self { toks: tokenize(text)?, pos: 0, end_column: text.chars().count() + 1 })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    pub fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |(_, c)| *c)
    }

    pub fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), SyntaxError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {tok}")))
        }
    }

    pub fn unexpected(&self, what: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError::new(self.column(), format!("{what}, found {t}")),
            None => SyntaxError::new(self.column(), format!("{what}, found end of input")),
        }
    }

    pub fn finish(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("expected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_ascii_and_unicode() {
        let a: Vec<Tok> = tokenize("!a -> G b").unwrap().into_iter().map(|t| t.0).collect();
        let b: Vec<Tok> = tokenize("¬a → □ b").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(a[0], Tok::Not);
        assert_eq!(a[2], Tok::Implies);
        assert_eq!(b[3], Tok::Always);
        assert_eq!(a[1], b[1]);
    }

    #[test]
    fn reports_column_of_bad_character() {
        let err = tokenize("a & $b").unwrap_err();
        assert_eq!(err.column, 5);
    }
}
