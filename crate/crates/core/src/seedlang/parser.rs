use num_complex::Complex64;

use super::{Expr, Func, SeedError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, imaginary: bool, integral: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, SeedError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        if c.is_ascii_whitespace() {
            k += 1;
            continue;
        }
        let start = k;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, offset: start });
            k += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            if k < bytes.len() && bytes[k] == b'.' {
                k += 1;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
            }
            if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                let mut e = k + 1;
                if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                    e += 1;
                }
                if e < bytes.len() && bytes[e].is_ascii_digit() {
                    while e < bytes.len() && bytes[e].is_ascii_digit() {
                        e += 1;
                    }
                    k = e;
                }
            }
            let literal = &text[start..k];
            let value: f64 = literal.parse().map_err(|_| SeedError::Syntax {
                offset: start,
                message: format!("malformed number `{literal}`"),
            })?;
            let integral = literal.bytes().all(|b| b.is_ascii_digit());
            let mut imaginary = false;
            if k < bytes.len() && bytes[k] == b'i' {
                let next_is_ident = bytes
                    .get(k + 1)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_');
                if next_is_ident {
                    return Err(SeedError::Syntax {
                        offset: k,
                        message: "identifier directly after a number".into(),
                    });
                }
                imaginary = true;
                k += 1;
            }
            out.push(Token {
                tok: Tok::Num { value, imaginary, integral },
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..k].to_string()),
                offset: start,
            });
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(SeedError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: text.len(),
    });
    Ok(out)
}

pub(super) struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    variables: &'a [String],
    parameters: &'a [String],
}

impl<'a> Parser<'a> {
    pub(super) fn new(text: &str, variables: &'a [String], parameters: &'a [String]) -> Result<Self, SeedError> {
        if text.trim().is_empty() {
            return Err(SeedError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        Ok(Self {
            tokens: lex(text)?,
            pos: 0,
            variables,
            parameters,
        })
    }

    pub(super) fn parse(mut self) -> Result<Expr, SeedError> {
        let e = self.expr()?;
        let t = self.peek();
        if t.tok != Tok::Eof {
            return Err(self.unexpected(&t, "end of input"));
        }
        Ok(e)
    }

    fn peek(&self) -> Token {
        self.tokens[self.pos].clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, t: &Token, wanted: &str) -> SeedError {
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            Tok::Num { value, .. } => format!("number {value}"),
            Tok::Ident(s) => format!("`{s}`"),
            other => format!("{other:?}"),
        };
        SeedError::Syntax {
            offset: t.offset,
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, SeedError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SeedError> {
        let mut lhs = self.power()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self) -> Result<Expr, SeedError> {
        let mut base = self.unary()?;
        while self.peek().tok == Tok::Caret {
            self.bump();
            let negative = if self.peek().tok == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let t = self.bump();
            let n = match t.tok {
                Tok::Num {
                    value,
                    imaginary: false,
                    integral: true,
                } if value <= i32::MAX as f64 => value as i32,
                _ => return Err(self.unexpected(&t, "an integer exponent")),
            };
            base = Expr::Pow(Box::new(base), if negative { -n } else { n });
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, SeedError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SeedError> {
        let t = self.bump();
        match t.tok {
            Tok::Num { value, imaginary, .. } => Ok(Expr::Lit(if imaginary {
                Complex64::new(0.0, value)
            } else {
                Complex64::new(value, 0.0)
            })),
            Tok::LParen => {
                let e = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(self.unexpected(&close, "`)`"));
                }
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, t.offset),
            _ => Err(self.unexpected(&t, "a number, identifier or `(`")),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, SeedError> {
        if let Some(func) = Func::from_name(&name) {
            let open = self.bump();
            if open.tok != Tok::LParen {
                return Err(self.unexpected(&open, &format!("`(` after `{name}`")));
            }
            let mut args = Vec::new();
            if self.peek().tok != Tok::RParen {
                args.push(self.expr()?);
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
            }
            let close = self.bump();
            if close.tok != Tok::RParen {
                return Err(self.unexpected(&close, "`)`"));
            }
            if args.len() != 1 {
                return Err(SeedError::Arity {
                    function: name,
                    expected: 1,
                    found: args.len(),
                    offset,
                });
            }
            return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
        }
        if self.peek().tok == Tok::LParen {
            return Err(SeedError::UnknownIdentifier {
                name: format!("{name}()"),
                offset,
            });
        }
        if name == "i" {
            return Ok(Expr::Lit(Complex64::i()));
        }
        if let Some(k) = self.variables.iter().position(|v| *v == name) {
            return Ok(Expr::Var(k));
        }
        if self.parameters.contains(&name) {
            return Ok(Expr::Param(name));
        }
        Err(SeedError::UnknownIdentifier { name, offset })
    }
}
