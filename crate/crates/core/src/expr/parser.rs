//! Infix expression parser.
//!
//! Grammar: operators `+ - * / ^` with standard precedence, `^` right
//! associative, unary minus binding tighter than `*` but looser than `^`;
//! parentheses; single-argument calls of the known function kinds;
//! identifiers `[A-Za-z][A-Za-z0-9_]*` optionally carrying a jet suffix —
//! primes (`u1'`) or a bracketed multi-index (`u1[2,0]`) — which are kept
//! as part of the symbol name; integer, decimal and scientific numeric
//! literals, all read as exact rationals.

use super::{Expr, FuncKind};
use crate::error::{Error, Result};
use crate::number::rational_from_literal;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Option<Tok>, // None marks end of input
    start: usize,
}

impl Token {
    fn describe(&self) -> String {
        match &self.tok {
            None => "end of input".to_string(),
            Some(Tok::Num(text)) => format!("number `{text}`"),
            Some(Tok::Ident(name)) => format!("identifier `{name}`"),
            Some(Tok::Plus) => "'+'".to_string(),
            Some(Tok::Minus) => "'-'".to_string(),
            Some(Tok::Star) => "'*'".to_string(),
            Some(Tok::Slash) => "'/'".to_string(),
            Some(Tok::Caret) => "'^'".to_string(),
            Some(Tok::LParen) => "'('".to_string(),
            Some(Tok::RParen) => "')'".to_string(),
            Some(Tok::Comma) => "','".to_string(),
        }
    }
}

/// Parses the text and returns the normalized expression.
pub fn parse(text: &str) -> Result<Expr> {
    let mut parser = Parser::new(text)?;
    let e = parser.expr_bp(0)?;
    parser.expect_end()?;
    Ok(e.normalize())
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    current: Token,
}

fn expected(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut p = Parser {
            bytes: text.as_bytes(),
            pos: 0,
            current: Token {
                tok: None,
                start: 0,
            },
        };
        p.current = p.lex()?;
        Ok(p)
    }

    fn bump(&mut self) -> Result<Token> {
        let next = self.lex()?;
        Ok(std::mem::replace(&mut self.current, next))
    }

    fn lex(&mut self) -> Result<Token> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok(Token { tok: None, start });
        }
        let c = self.bytes[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'0'..=b'9' => self.lex_number()?,
            b'A'..=b'Z' | b'a'..=b'z' => self.lex_ident()?,
            other => {
                return Err(Error::Syntax {
                    offset: start,
                    found: format!("'{}'", other as char),
                    expected: expected(&["number", "identifier", "operator", "'('", "')'"]),
                })
            }
        };
        Ok(Token {
            tok: Some(tok),
            start,
        })
    }

    fn lex_number(&mut self) -> Result<Tok> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            if self.pos + 1 >= self.bytes.len() || !self.bytes[self.pos + 1].is_ascii_digit() {
                return Err(Error::Syntax {
                    offset: self.pos,
                    found: "'.'".to_string(),
                    expected: expected(&["digit"]),
                });
            }
            self.pos += 1;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // exponent suffix only when it cannot be the start of an identifier
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let mut probe = self.pos + 1;
            if probe < self.bytes.len() && matches!(self.bytes[probe], b'+' | b'-') {
                probe += 1;
            }
            if probe < self.bytes.len() && self.bytes[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        Ok(Tok::Num(text.to_string()))
    }

    fn lex_ident(&mut self) -> Result<Tok> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'\'' {
            while self.pos < self.bytes.len() && self.bytes[self.pos] == b'\'' {
                self.pos += 1;
            }
        } else if self.pos < self.bytes.len() && self.bytes[self.pos] == b'[' {
            self.pos += 1;
            loop {
                if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_digit() {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        found: self
                            .bytes
                            .get(self.pos)
                            .map(|b| format!("'{}'", *b as char))
                            .unwrap_or_else(|| "end of input".to_string()),
                        expected: expected(&["digit"]),
                    });
                }
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                match self.bytes.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    Some(b']') => {
                        self.pos += 1;
                        break;
                    }
                    _ => {
                        return Err(Error::Syntax {
                            offset: self.pos,
                            found: self
                                .bytes
                                .get(self.pos)
                                .map(|b| format!("'{}'", *b as char))
                                .unwrap_or_else(|| "end of input".to_string()),
                            expected: expected(&["','", "']'"]),
                        })
                    }
                }
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        Ok(Tok::Ident(text.to_string()))
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            let (lbp, rbp) = match &self.current.tok {
                Some(Tok::Plus) | Some(Tok::Minus) => (10u8, 11u8),
                Some(Tok::Star) | Some(Tok::Slash) => (20, 21),
                Some(Tok::Caret) => (30, 30), // right associative
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            let op = self.bump()?;
            let rhs = self.expr_bp(rbp)?;
            lhs = match op.tok.expect("operator") {
                Tok::Plus => Expr::raw_sum(vec![lhs, rhs]),
                Tok::Minus => Expr::raw_sum(vec![lhs, Expr::raw_neg(rhs)]),
                Tok::Star => Expr::raw_product(vec![lhs, rhs]),
                Tok::Slash => {
                    Expr::raw_product(vec![lhs, Expr::raw_pow(rhs, Expr::integer(-1))])
                }
                Tok::Caret => Expr::raw_pow(lhs, rhs),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr> {
        let token = self.bump()?;
        match token.tok {
            Some(Tok::Num(text)) => match rational_from_literal(&text) {
                Some(value) => Ok(Expr::constant(crate::number::Number::Rational(value))),
                None => Err(Error::Syntax {
                    offset: token.start,
                    found: format!("number `{text}`"),
                    expected: expected(&["numeric literal"]),
                }),
            },
            Some(Tok::Ident(name)) => {
                if matches!(self.current.tok, Some(Tok::LParen)) {
                    let kind = FuncKind::from_name(&name).ok_or(Error::UnknownFunction {
                        name: name.clone(),
                        offset: token.start,
                    })?;
                    self.bump()?; // consume '('
                    let arg = self.expr_bp(0)?;
                    self.expect_rparen()?;
                    Ok(Expr::raw_func(kind, arg))
                } else {
                    Ok(Expr::symbol(name))
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr_bp(0)?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some(Tok::Minus) => Ok(Expr::raw_neg(self.expr_bp(25)?)),
            _ => Err(Error::Syntax {
                offset: token.start,
                found: token.describe(),
                expected: expected(&["number", "identifier", "'('", "'-'"]),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if matches!(self.current.tok, Some(Tok::RParen)) {
            self.bump()?;
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.current.start,
                found: self.current.describe(),
                expected: expected(&["')'"]),
            })
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        if self.current.tok.is_none() {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.current.start,
                found: self.current.describe(),
                expected: expected(&["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]),
            })
        }
    }
}
