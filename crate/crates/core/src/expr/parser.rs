//! Recursive-descent parser for the expression language.
//!
//! Precedence, tightest first: `^k` (integer power), unary minus,
//! `* /`, `+ -`. Function calls: `exp log abs2 re im max min complex`.

use super::{Node, Value, VarKind};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared variable `{name}` at byte {pos}")]
    UndeclaredVariable { name: String, pos: usize },
    #[error("non-integer exponent at byte {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("duplicate variable declaration `{0}`")]
    DuplicateVariable(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, int: Option<i64> },
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

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some((tok, at)) = lx.next_token()? {
            out.push((tok, at));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let at = self.pos;
        let c = self.src[self.pos];
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
            b'0'..=b'9' | b'.' => self.number(at)?,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric()
                        || self.src[self.pos] == b'_'
                        || self.src[self.pos] == b'\'')
                {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: at,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((tok, at)))
    }

    fn number(&mut self, at: usize) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut saw_dot = false;
        let mut saw_exp = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            match c {
                b'0'..=b'9' => self.pos += 1,
                b'.' if !saw_dot && !saw_exp => {
                    saw_dot = true;
                    self.pos += 1;
                }
                b'e' | b'E' if !saw_exp => {
                    saw_exp = true;
                    self.pos += 1;
                    if self.pos < self.src.len()
                        && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            pos: at,
            msg: format!("malformed number `{text}`"),
        })?;
        let int = if !saw_dot && !saw_exp {
            text.parse::<i64>().ok()
        } else {
            None
        };
        Ok(Tok::Num { value, int })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    vars: &'a [(&'a str, VarKind)],
    end: usize,
}

pub(super) fn parse(text: &str, vars: &[(&str, VarKind)]) -> Result<super::Expression, ParseError> {
    for (i, (name, _)) in vars.iter().enumerate() {
        if vars[..i].iter().any(|(n, _)| n == name) {
            return Err(ParseError::DuplicateVariable(name.to_string()));
        }
    }
    let toks = Lexer::tokens(text)?;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        toks,
        idx: 0,
        vars,
        end: text.len(),
    };
    let ast = p.expr()?;
    if let Some((_, at)) = p.peek_at() {
        return Err(ParseError::Syntax {
            pos: at,
            msg: "trailing input".into(),
        });
    }
    Ok(super::Expression::from_parts(
        vars.iter().map(|(n, k)| (n.to_string(), *k)).collect(),
        ast,
    ))
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn peek_at(&self) -> Option<(&Tok, usize)> {
        self.toks.get(self.idx).map(|(t, a)| (t, *a))
    }

    fn here(&self) -> usize {
        self.toks.get(self.idx).map(|(_, a)| *a).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.here(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.idx += 1;
                    lhs = lhs + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.idx += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.idx += 1;
                    lhs = lhs * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.idx += 1;
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.idx += 1;
            let k = self.exponent()?;
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    /// Integer exponent: `k`, `-k` or `(k)`, `(-k)`.
    fn exponent(&mut self) -> Result<i32, ParseError> {
        let at = self.here();
        let parens = if self.peek() == Some(&Tok::LParen) {
            self.idx += 1;
            true
        } else {
            false
        };
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            true
        } else {
            false
        };
        let k = match self.bump() {
            Some(Tok::Num { int: Some(k), .. }) => k,
            Some(Tok::Num { int: None, .. }) => {
                return Err(ParseError::NonIntegerExponent { pos: at })
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: at,
                    msg: "expected integer exponent".into(),
                })
            }
        };
        if parens {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        let k = i32::try_from(if neg { -k } else { k }).map_err(|_| ParseError::Syntax {
            pos: at,
            msg: "exponent out of range".into(),
        })?;
        Ok(k)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num { value, .. }) => Ok(Node::Const(Value::Real(value))),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.idx += 1;
                    self.call(&name, at)
                } else {
                    match self.vars.iter().position(|(n, _)| *n == name) {
                        Some(i) => Ok(Node::Var(i)),
                        None => Err(ParseError::UndeclaredVariable { name, pos: at }),
                    }
                }
            }
            _ => Err(ParseError::Syntax {
                pos: at,
                msg: "expected a value".into(),
            }),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Node, ParseError> {
        let unary = |p: &mut Self, f: fn(Box<Node>) -> Node| -> Result<Node, ParseError> {
            let a = p.expr()?;
            p.expect(Tok::RParen, "`)`")?;
            Ok(f(Box::new(a)))
        };
        match name {
            "exp" => unary(self, Node::Exp),
            "log" => unary(self, Node::Log),
            "abs2" => unary(self, Node::Abs2),
            "re" => unary(self, Node::Re),
            "im" => unary(self, Node::Im),
            "max" | "min" => {
                let a = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(if name == "max" {
                    Node::Max(Box::new(a), Box::new(b))
                } else {
                    Node::Min(Box::new(a), Box::new(b))
                })
            }
            "complex" => {
                let re = self.signed_literal()?;
                self.expect(Tok::Comma, "`,`")?;
                let im = self.signed_literal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Node::Const(Value::Complex(Complex64::new(re, im))))
            }
            other => Err(ParseError::Syntax {
                pos: at,
                msg: format!("unknown function `{other}`"),
            }),
        }
    }

    fn signed_literal(&mut self) -> Result<f64, ParseError> {
        let at = self.here();
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            true
        } else {
            false
        };
        match self.bump() {
            Some(Tok::Num { value, .. }) => Ok(if neg { -value } else { value }),
            _ => Err(ParseError::Syntax {
                pos: at,
                msg: "expected numeric literal".into(),
            }),
        }
    }
}
