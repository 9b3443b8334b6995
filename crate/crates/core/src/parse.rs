//! Text parser for propositional formulas.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! iff     := implies ( "<->" implies )*          left-associative
//! implies := or ( "->" implies )?                right-associative
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "!" unary | "(" iff ")" | "true" | "false" | IDENT
//! ```
//!
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*` and must name registered atoms;
//! `true` and `false` are reserved constants.

use thiserror::Error;

use crate::logic::{and, atom, iff, implies, not, or, AtomRegistry, Formula};

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at offset {offset})")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

fn tokenize(input: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = input.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'!' => {
                toks.push(Spanned { tok: Tok::Not, offset: i });
                i += 1;
            }
            b'&' => {
                toks.push(Spanned { tok: Tok::And, offset: i });
                i += 1;
            }
            b'|' => {
                toks.push(Spanned { tok: Tok::Or, offset: i });
                i += 1;
            }
            b'(' => {
                toks.push(Spanned { tok: Tok::LParen, offset: i });
                i += 1;
            }
            b')' => {
                toks.push(Spanned { tok: Tok::RParen, offset: i });
                i += 1;
            }
            b'-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    toks.push(Spanned { tok: Tok::Implies, offset: i });
                    i += 2;
                } else {
                    return Err(ParseError::new(i, "expected `->`"));
                }
            }
            b'<' => {
                if i + 2 < bytes.len() && bytes[i + 1] == b'-' && bytes[i + 2] == b'>' {
                    toks.push(Spanned { tok: Tok::Iff, offset: i });
                    i += 3;
                } else {
                    return Err(ParseError::new(i, "expected `<->`"));
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push(Spanned {
                    tok: Tok::Ident(input[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(ParseError::new(
                    i,
                    format!("unexpected character `{}`", &input[i..].chars().next().unwrap()),
                ));
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    registry: &'a AtomRegistry,
    input_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.input_len, |s| s.offset)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.parse_implies()?;
            lhs = iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.parse_implies()?;
            Ok(implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.parse_and()?;
            lhs = or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_unary()?;
        while self.eat(&Tok::And) {
            let rhs = self.parse_unary()?;
            lhs = and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        let offset = self.offset();
        match self.bump().map(|s| s.tok) {
            Some(Tok::Not) => Ok(not(self.parse_unary()?)),
            Some(Tok::LParen) => {
                let inner = self.parse_iff()?;
                if self.eat(&Tok::RParen) {
                    Ok(inner)
                } else {
                    Err(ParseError::new(self.offset(), "expected `)`"))
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => match self.registry.lookup(&name) {
                    Some(id) => Ok(atom(id)),
                    None => Err(ParseError::new(offset, format!("unknown atom `{}`", name))),
                },
            },
            Some(tok) => Err(ParseError::new(offset, format!("unexpected token `{:?}`", tok))),
            None => Err(ParseError::new(offset, "unexpected end of formula")),
        }
    }
}

/// Parses `input` as a formula over the atoms in `registry`.
pub fn parse_formula(input: &str, registry: &AtomRegistry) -> Result<Formula, ParseError> {
    let toks = tokenize(input)?;
    if toks.is_empty() {
        return Err(ParseError::new(0, "empty formula"));
    }
    let mut parser = Parser { toks, pos: 0, registry, input_len: input.len() };
    let f = parser.parse_iff()?;
    if parser.pos != parser.toks.len() {
        return Err(ParseError::new(parser.offset(), "trailing input after formula"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::AtomId;

    fn reg() -> AtomRegistry {
        let mut r = AtomRegistry::new();
        r.register("A", None).unwrap();
        r.register("B", None).unwrap();
        r.register("C_1", None).unwrap();
        r
    }

    #[test]
    fn precedence_not_over_and_over_or() {
        let r = reg();
        let f = parse_formula("!A & B | C_1", &r).unwrap();
        assert_eq!(
            f,
            or(and(not(atom(AtomId(0))), atom(AtomId(1))), atom(AtomId(2)))
        );
    }

    #[test]
    fn implies_is_right_associative() {
        let r = reg();
        let f = parse_formula("A -> B -> C_1", &r).unwrap();
        assert_eq!(
            f,
            implies(atom(AtomId(0)), implies(atom(AtomId(1)), atom(AtomId(2))))
        );
    }

    #[test]
    fn iff_binds_loosest() {
        let r = reg();
        let f = parse_formula("A <-> B -> C_1", &r).unwrap();
        assert_eq!(
            f,
            iff(atom(AtomId(0)), implies(atom(AtomId(1)), atom(AtomId(2))))
        );
    }

    #[test]
    fn parens_and_constants() {
        let r = reg();
        let f = parse_formula("(A | true) & !false", &r).unwrap();
        assert_eq!(
            f,
            and(or(atom(AtomId(0)), Formula::True), not(Formula::False))
        );
    }

    #[test]
    fn unknown_atom_reports_offset() {
        let r = reg();
        let err = parse_formula("A & Bogus", &r).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.message.contains("Bogus"));
    }

    #[test]
    fn unbalanced_parens_rejected() {
        let r = reg();
        assert!(parse_formula("(A & B", &r).is_err());
        assert!(parse_formula("A & B)", &r).is_err());
    }

    #[test]
    fn trailing_garbage_rejected() {
        let r = reg();
        let err = parse_formula("A B", &r).unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn display_round_trips_through_parser() {
        let r = reg();
        for text in [
            "A & !B | C_1",
            "A -> B -> C_1",
            "(A -> B) -> C_1",
            "!(A & B)",
            "A <-> B & C_1",
            "A & (B | A)",
            "true | false -> A",
        ] {
            let f = parse_formula(text, &r).unwrap();
            let printed = f.display(&r).to_string();
            let g = parse_formula(&printed, &r).unwrap();
            assert_eq!(f, g, "round-trip failed for `{}` -> `{}`", text, printed);
        }
    }
}
