use std::sync::Arc;

use super::{Coord, Expr, Func, ScalarExpression};
use crate::error::{Error, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(v) => v.to_string(),
            Token::Ident(s) => s.clone(),
            Token::Plus => "+".into(),
            Token::Minus => "-".into(),
            Token::Star => "*".into(),
            Token::Slash => "/".into(),
            Token::Caret => "^".into(),
            Token::LParen => "(".into(),
            Token::RParen => ")".into(),
        }
    }
}

fn err(kind: ParseErrorKind, offset: usize) -> ParseError {
    ParseError { kind, offset }
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal = &text[start..i];
            let value: f64 = literal
                .parse()
                .map_err(|_| err(ParseErrorKind::InvalidNumber(literal.into()), start))?;
            out.push((Token::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(text[start..i].to_string()), start));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('\0');
        return Err(err(ParseErrorKind::UnexpectedChar(ch), start));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(Token, usize)],
    pos: usize,
    end: usize,
    dim: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<(Token, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            Some((t, o)) => Err(err(ParseErrorKind::UnexpectedToken(t.describe()), o)),
            None => Err(err(ParseErrorKind::UnexpectedEnd, self.end)),
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let node: fn(Arc<Expr>, Arc<Expr>) -> Expr = match self.peek() {
                Some(Token::Plus) => Expr::Add,
                Some(Token::Minus) => Expr::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Arc::new(node(lhs, rhs));
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let node: fn(Arc<Expr>, Arc<Expr>) -> Expr = match self.peek() {
                Some(Token::Star) => Expr::Mul,
                Some(Token::Slash) => Expr::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Arc::new(node(lhs, rhs));
        }
    }

    fn unary(&mut self) -> Result<Arc<Expr>, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(Arc::new(Expr::Neg(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Expr>, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Arc::new(Expr::Pow(base, exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Expr>, ParseError> {
        let (tok, offset) = self
            .bump()
            .ok_or_else(|| err(ParseErrorKind::UnexpectedEnd, self.end))?;
        match tok {
            Token::Num(v) => Ok(Expr::num(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if self.peek() != Some(&Token::LParen) {
                        let o = self.offset();
                        return Err(match self.peek() {
                            Some(t) => err(ParseErrorKind::UnexpectedToken(t.describe()), o),
                            None => err(ParseErrorKind::UnexpectedEnd, o),
                        });
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    return Ok(Arc::new(Expr::Call(func, arg)));
                }
                self.variable(name, offset).map(Expr::var)
            }
            other => Err(err(
                ParseErrorKind::UnexpectedToken(other.describe()),
                offset,
            )),
        }
    }

    fn variable(&self, name: String, offset: usize) -> Result<Coord, ParseError> {
        let (head, digits) = name.split_at(1);
        let make: fn(usize) -> Coord = match head {
            "x" => Coord::X,
            "y" => Coord::Y,
            _ => return Err(err(ParseErrorKind::UnknownIdentifier(name), offset)),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(ParseErrorKind::UnknownIdentifier(name), offset));
        }
        match digits.parse::<usize>() {
            Ok(k) if (1..=self.dim).contains(&k) => Ok(make(k - 1)),
            _ => Err(err(
                ParseErrorKind::IndexOutOfRange {
                    name,
                    dim: self.dim,
                },
                offset,
            )),
        }
    }
}

/// Parses an infix expression over `x1..xn, y1..yn` with `n = dim`.
///
/// The tree is kept exactly as written (no simplification), so printing and
/// re-parsing reproduces it structurally.
pub fn parse(text: &str, dim: usize) -> Result<ScalarExpression, Error> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        end: text.len(),
        dim,
    };
    let root = p.expr()?;
    if let Some((t, o)) = p.bump() {
        return Err(err(ParseErrorKind::UnexpectedToken(t.describe()), o).into());
    }
    Ok(ScalarExpression { root, dim })
}
