//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' signed-int-or-parenthesized-expr)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' atom
//! ident  := [A-Za-z][A-Za-z0-9_]*
//! ```
//!
//! `PsiK`/`OmegaK` (K = arity digits) denote abstract functions; a partial
//! like `Psi7_1_3` names the derivative with respect to slots 1 and 3.

use super::{Builtin, Expr};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn fail<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Int(String),
    Ident(String),
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                toks.push((Tok::Int(text[start..i].to_string()), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => return fail(i, format!("unexpected character `{}`", text[i..].chars().next().unwrap())),
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: text.len(),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let off = self.offset();
        match self.next() {
            Some(t) if t == tok => Ok(()),
            _ => fail(off, format!("expected {what}")),
        }
    }
}

/// Splits `Psi7_1_3` into (base name, arity, slots). Returns None when the
/// identifier does not follow the abstract-function pattern.
fn abstract_parts(ident: &str) -> Option<(&'static str, u32, Vec<u32>)> {
    let base = if ident.starts_with("Psi") {
        "Psi"
    } else if ident.starts_with("Omega") {
        "Omega"
    } else {
        return None;
    };
    let rest = &ident[base.len()..];
    let mut pieces = rest.split('_');
    let arity: u32 = pieces.next()?.parse().ok()?;
    let mut slots = Vec::new();
    for p in pieces {
        slots.push(p.parse().ok()?);
    }
    Some((base, arity, slots))
}

struct Parser {
    lexer: Lexer,
}

impl Parser {
    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.parse_term()?];
        loop {
            match self.lexer.peek() {
                Some(Tok::Plus) => {
                    self.lexer.next();
                    terms.push(self.parse_term()?);
                }
                Some(Tok::Minus) => {
                    self.lexer.next();
                    terms.push(Expr::neg(self.parse_term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.lexer.peek() {
                Some(Tok::Star) => {
                    self.lexer.next();
                    let rhs = self.parse_factor()?;
                    acc = Expr::mul(vec![acc, rhs]);
                }
                Some(Tok::Slash) => {
                    self.lexer.next();
                    let rhs = self.parse_factor()?;
                    acc = Expr::div(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.lexer.peek() == Some(&Tok::Caret) {
            self.lexer.next();
            let off = self.lexer.offset();
            let exponent = match self.lexer.peek() {
                Some(Tok::Minus) => {
                    self.lexer.next();
                    let off2 = self.lexer.offset();
                    match self.lexer.next() {
                        Some(Tok::Int(digits)) => {
                            Expr::rational(-int_literal(&digits, off2)?)
                        }
                        _ => return fail(off2, "expected integer exponent after `-`"),
                    }
                }
                Some(Tok::Int(_)) => {
                    let Some(Tok::Int(digits)) = self.lexer.next() else {
                        unreachable!()
                    };
                    Expr::rational(int_literal(&digits, off)?)
                }
                Some(Tok::LParen) => {
                    self.lexer.next();
                    let e = self.parse_expr()?;
                    self.lexer.expect(Tok::RParen, "`)` after exponent")?;
                    e
                }
                _ => return fail(off, "expected integer or parenthesized exponent"),
            };
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let off = self.lexer.offset();
        match self.lexer.next() {
            Some(Tok::Int(digits)) => Ok(Expr::rational(int_literal(&digits, off)?)),
            Some(Tok::Minus) => Ok(Expr::neg(self.parse_atom()?)),
            Some(Tok::LParen) => {
                let e = self.parse_expr()?;
                self.lexer.expect(Tok::RParen, "closing `)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.lexer.peek() == Some(&Tok::LParen) {
                    self.lexer.next();
                    let mut args = vec![self.parse_expr()?];
                    while self.lexer.peek() == Some(&Tok::Comma) {
                        self.lexer.next();
                        args.push(self.parse_expr()?);
                    }
                    self.lexer.expect(Tok::RParen, "closing `)` after arguments")?;
                    if let Some(builtin) = Builtin::from_name(&name) {
                        if args.len() != 1 {
                            return fail(off, format!("{name} takes exactly one argument"));
                        }
                        return Ok(Expr::call(builtin, args));
                    }
                    if let Some((base, arity, slots)) = abstract_parts(&name) {
                        if args.len() as u32 != arity {
                            return fail(
                                off,
                                format!(
                                    "arity mismatch: {name} expects {arity} arguments, got {}",
                                    args.len()
                                ),
                            );
                        }
                        if slots.iter().any(|s| *s < 1 || *s > arity) {
                            return fail(off, format!("slot out of range in {name}"));
                        }
                        if slots.is_empty() {
                            return Ok(Expr::abstract_fn(base, arity, args));
                        }
                        return Ok(Expr::partial(base, arity, slots, args));
                    }
                    fail(off, format!("unknown builtin `{name}`"))
                } else {
                    Ok(Expr::symbol(&name))
                }
            }
            _ => fail(off, "expected expression"),
        }
    }
}

fn int_literal(digits: &str, offset: usize) -> Result<BigRational, ParseError> {
    match BigInt::from_str(digits) {
        Ok(n) => Ok(BigRational::from_integer(n)),
        Err(_) => fail(offset, "invalid integer literal"),
    }
}

impl Expr {
    /// Parses the expression grammar; the result is in light canonical form.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let lexer = lex(text)?;
        let mut p = Parser { lexer };
        let e = p.parse_expr()?;
        if p.lexer.peek().is_some() {
            return fail(p.lexer.offset(), "trailing input");
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_row_source() {
        let e = Expr::parse("t^-2 * Psi7(x/t, y/t, z/t, u, v, w, f*t)").unwrap();
        let t = Expr::symbol("t");
        let args = vec![
            Expr::div(Expr::symbol("x"), t.clone()),
            Expr::div(Expr::symbol("y"), t.clone()),
            Expr::div(Expr::symbol("z"), t.clone()),
            Expr::symbol("u"),
            Expr::symbol("v"),
            Expr::symbol("w"),
            Expr::mul(vec![Expr::symbol("f"), t.clone()]),
        ];
        let expected = Expr::mul(vec![
            Expr::pow(t, Expr::int(-2)),
            Expr::abstract_fn("Psi", 7, args),
        ]);
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_zero() {
        assert!(Expr::parse("0").unwrap().is_zero());
    }

    #[test]
    fn parses_universal_source() {
        let e = Expr::parse("C*f^2").unwrap();
        let expected = Expr::mul(vec![
            Expr::symbol("C"),
            Expr::pow(Expr::symbol("f"), Expr::int(2)),
        ]);
        assert_eq!(e, expected);
    }

    #[test]
    fn reports_offset_on_error() {
        let err = Expr::parse("x + @").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn arity_mismatch_rejected() {
        assert!(Expr::parse("Psi3(x, y)").is_err());
        assert!(Expr::parse("sinh(x)").is_err());
    }

    #[test]
    fn roundtrip_print_parse() {
        let texts = [
            "t^-2*Psi7(x/t, y/t, z/t, u, v, w, f*t)",
            "exp(-2*alpha*theta)*Psi5(r*exp(-alpha*theta), u - beta*theta, V, W, f*exp(alpha*theta))",
            "arctan(w/v) - x/(beta*t)",
            "sqrt(v^2 + w^2)",
        ];
        for text in texts {
            let e = Expr::parse(text).unwrap();
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            assert!(
                Expr::sub(e.clone(), reparsed).simplify().is_zero(),
                "round trip failed for {text}"
            );
        }
    }
}
