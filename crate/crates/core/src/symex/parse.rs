use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::expr::{Applied, Coord, Elementary, Expr};
use super::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at offset {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("jet coordinate not admitted: {0}")]
    NotAdmitted(String),
    #[error("{0}")]
    Invalid(String),
}

/// Name resolution for the parser.
pub trait Scope {
    /// Coordinate or declared parameter bound to `name`.
    fn identifier(&self, name: &str) -> Option<Expr>;

    /// `d(field, dirs..)`; `fresh` is set for the `d(field; dirs..)` spelling,
    /// which names the derivative of a section rather than an admitted jet.
    fn jet(&self, field: &str, dirs: &[&str], fresh: bool) -> Result<Expr, ParseErrorKind>;

    /// `head[idx, ..]` coordinates of the dual bundles.
    fn bracket(&self, head: &str, idx: &[&str]) -> Result<Expr, ParseErrorKind> {
        let _ = idx;
        Err(ParseErrorKind::UnknownIdentifier(head.to_string()))
    }

    /// Arity of a declared undetermined function.
    fn function(&self, name: &str) -> Option<usize> {
        let _ = name;
        None
    }
}

/// Parse an expression against a scope.
pub fn parse(text: &str, scope: &dyn Scope) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, scope, end: text.len() };
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return Err(p.err(ParseErrorKind::Syntax(alloc::format!("unexpected `{}`", p.toks[p.at].1.show()))));
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

impl Tok {
    fn show(&self) -> String {
        match self {
            Tok::Num(r) => r.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let (pos, c) = bytes[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(k + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
            let start = k;
            while k < bytes.len() && (bytes[k].1.is_ascii_digit() || bytes[k].1 == '.') {
                k += 1;
            }
            let s: String = bytes[start..k].iter().map(|(_, c)| *c).collect();
            let r = Rational::parse_decimal(&s).ok_or(ParseError {
                pos,
                kind: ParseErrorKind::Syntax(alloc::format!("bad number `{s}`")),
            })?;
            out.push((pos, Tok::Num(r)));
        } else if c.is_ascii_alphabetic() {
            let start = k;
            while k < bytes.len() && (bytes[k].1.is_ascii_alphanumeric() || bytes[k].1 == '_') {
                k += 1;
            }
            out.push((pos, Tok::Ident(bytes[start..k].iter().map(|(_, c)| *c).collect())));
        } else if "+-*/^(),;[]'".contains(c) {
            out.push((pos, Tok::Op(c)));
            k += 1;
        } else if c == '\u{2212}' {
            out.push((pos, Tok::Op('-')));
            k += 1;
        } else {
            return Err(ParseError { pos, kind: ParseErrorKind::Syntax(alloc::format!("unexpected character `{c}`")) });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    scope: &'a dyn Scope,
    end: usize,
}

impl Parser<'_> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { pos: self.pos(), kind }
    }

    fn peek_op(&self, c: char) -> bool {
        matches!(self.toks.get(self.at), Some((_, Tok::Op(d))) if *d == c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek_op(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(ParseErrorKind::Syntax(alloc::format!("expected `{c}`"))))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.toks.get(self.at) {
            Some((_, Tok::Ident(s))) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => Err(self.err(ParseErrorKind::Syntax("expected identifier".to_string()))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = alloc::vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::add_all(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = alloc::vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.peek_op('/') {
                let pos = self.pos();
                self.at += 1;
                factors.push(self.divisor(pos)?);
            } else {
                return Ok(Expr::mul_all(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    /// Reciprocal of the next unary operand; `a^k` becomes `a^(-k)` without
    /// expanding `a^k` first.
    fn divisor(&mut self, pos: usize) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.divisor(pos)?);
        }
        if self.eat('+') {
            return self.divisor(pos);
        }
        let base = self.atom()?;
        let zero = || ParseError { pos, kind: ParseErrorKind::Invalid("division by zero".to_string()) };
        if !self.eat('^') {
            return if base.is_zero() { Err(zero()) } else { Ok(base.recip()) };
        }
        let k = self.unary()?;
        match k.as_num() {
            Some(r) if r.is_zero() => Ok(Expr::one()),
            Some(_) if base.is_zero() => Err(zero()),
            Some(r) => Ok(Expr::pow(&base, -r)),
            None => Ok(Expr::exp(-(k * Expr::ln(base)))),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.peek_op('^') {
            return Ok(base);
        }
        let pos = self.pos();
        self.at += 1;
        let k = self.unary()?;
        match k.as_num() {
            Some(r) => {
                if base.is_zero() && !r.is_negative() && !r.is_zero() {
                    return Ok(Expr::zero());
                }
                if base.is_zero() {
                    return Err(ParseError { pos, kind: ParseErrorKind::Invalid("zero to a non-positive power".to_string()) });
                }
                Ok(Expr::pow(&base, r.clone()))
            }
            // a^b = exp(b ln a) for positive a
            None => Ok(Expr::exp(k * Expr::ln(base))),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect('(')?;
        let mut out = Vec::new();
        if self.eat(')') {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(')') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.toks.get(self.at).cloned() {
            Some((_, Tok::Num(r))) => {
                self.at += 1;
                Ok(Expr::num(r))
            }
            Some((_, Tok::Op('('))) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some((_, Tok::Ident(name))) => {
                self.at += 1;
                if self.peek_op('(') {
                    return self.call(&name, pos);
                }
                if self.peek_op('\'') {
                    return self.derivative_call(&name, pos);
                }
                if self.eat('[') {
                    let mut idx = Vec::new();
                    if !self.eat(']') {
                        loop {
                            idx.push(self.ident()?);
                            if self.eat(']') {
                                break;
                            }
                            self.expect(',')?;
                        }
                    }
                    let refs: Vec<&str> = idx.iter().map(|s| s.as_str()).collect();
                    return self.scope.bracket(&name, &refs).map_err(|kind| ParseError { pos, kind });
                }
                self.scope
                    .identifier(&name)
                    .ok_or(ParseError { pos, kind: ParseErrorKind::UnknownIdentifier(name) })
            }
            Some((_, t)) => Err(self.err(ParseErrorKind::Syntax(alloc::format!("unexpected `{}`", t.show())))),
            None => Err(self.err(ParseErrorKind::Syntax("unexpected end of input".to_string()))),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        if name == "d" {
            self.expect('(')?;
            let field = self.ident()?;
            let fresh = if self.eat(';') {
                true
            } else {
                self.expect(',')?;
                false
            };
            let mut dirs = alloc::vec![self.ident()?];
            while self.eat(',') {
                dirs.push(self.ident()?);
            }
            self.expect(')')?;
            if dirs.len() > 2 {
                return Err(ParseError { pos, kind: ParseErrorKind::Invalid("jets above second order".to_string()) });
            }
            let refs: Vec<&str> = dirs.iter().map(|s| s.as_str()).collect();
            return self.scope.jet(&field, &refs, fresh).map_err(|kind| ParseError { pos, kind });
        }
        let kind = match name {
            "sin" => Some(Elementary::Sin),
            "cos" => Some(Elementary::Cos),
            "exp" => Some(Elementary::Exp),
            "ln" | "log" => Some(Elementary::Ln),
            _ => None,
        };
        let args = self.args()?;
        if let Some(kind) = kind {
            return match <[Expr; 1]>::try_from(args) {
                Ok([a]) => Ok(Expr::func(kind, a)),
                Err(_) => Err(ParseError { pos, kind: ParseErrorKind::Invalid(alloc::format!("`{name}` takes one argument")) }),
            };
        }
        if name == "sqrt" {
            return match <[Expr; 1]>::try_from(args) {
                Ok([a]) => Ok(a.sqrt()),
                Err(_) => Err(ParseError { pos, kind: ParseErrorKind::Invalid("`sqrt` takes one argument".to_string()) }),
            };
        }
        match self.scope.function(name) {
            Some(n) if n == args.len() => Ok(Expr::applied(name, args)),
            Some(n) => Err(ParseError {
                pos,
                kind: ParseErrorKind::Invalid(alloc::format!("`{name}` takes {n} arguments, got {}", args.len())),
            }),
            None => Err(ParseError { pos, kind: ParseErrorKind::UnknownFunction(name.to_string()) }),
        }
    }

    /// `f'[1,0](a, b)`: derivative counts per argument slot.
    fn derivative_call(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        self.expect('\'')?;
        self.expect('[')?;
        let mut derivs = Vec::new();
        loop {
            match self.toks.get(self.at) {
                Some((_, Tok::Num(r))) => {
                    let n = r.to_i64().filter(|n| (0..=255).contains(n)).ok_or(self.err(ParseErrorKind::Syntax(
                        "derivative counts are small non-negative integers".to_string(),
                    )))?;
                    derivs.push(n as u8);
                    self.at += 1;
                }
                _ => return Err(self.err(ParseErrorKind::Syntax("expected derivative count".to_string()))),
            }
            if self.eat(']') {
                break;
            }
            self.expect(',')?;
        }
        let args = self.args()?;
        match self.scope.function(name) {
            Some(n) if n == args.len() && n == derivs.len() => {
                Ok(Expr::applied_with(Applied { name: name.into(), args, derivs }))
            }
            Some(_) => Err(ParseError { pos, kind: ParseErrorKind::Invalid(alloc::format!("arity mismatch for `{name}`")) }),
            None => Err(ParseError { pos, kind: ParseErrorKind::UnknownFunction(name.to_string()) }),
        }
    }
}

/// Scope matching [`super::render::PlainNames`]; any other identifier is a parameter.
#[derive(Default)]
pub struct PlainScope {
    pub functions: alloc::collections::BTreeMap<String, usize>,
}

impl PlainScope {
    fn coordinate(name: &str) -> Option<Coord> {
        fn idx(s: &str) -> Option<u16> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            s.parse().ok()
        }
        if name == "p" {
            return Some(Coord::MomentumScalar);
        }
        if let Some(rest) = name.strip_prefix("lam") {
            return idx(rest).map(Coord::Dual);
        }
        let (head, rest) = name.split_at(1);
        let parts: Vec<&str> = rest.split('_').collect();
        match (head, parts.as_slice()) {
            ("x", [a]) => idx(a).map(Coord::Base),
            ("y", [a]) => idx(a).map(Coord::Fiber),
            ("y", [a, b]) => Some(Coord::Jet(idx(a)?, idx(b)?)),
            ("y", [a, b, c]) => Some(Coord::jet2(idx(a)? as usize, idx(b)? as usize, idx(c)? as usize)),
            ("p", [a, b]) => Some(Coord::Momentum(idx(a)?, idx(b)?)),
            ("q", [a]) => idx(a).map(Coord::Source),
            _ => None,
        }
    }
}

impl Scope for PlainScope {
    fn identifier(&self, name: &str) -> Option<Expr> {
        match PlainScope::coordinate(name) {
            Some(c) => Some(Expr::coord(c)),
            None => Some(Expr::param(name)),
        }
    }

    fn jet(&self, field: &str, dirs: &[&str], _fresh: bool) -> Result<Expr, ParseErrorKind> {
        let bad = || ParseErrorKind::UnknownIdentifier(field.to_string());
        let i = match PlainScope::coordinate(field) {
            Some(Coord::Fiber(i)) => i as usize,
            _ => return Err(bad()),
        };
        let mut ds = Vec::new();
        for d in dirs {
            match PlainScope::coordinate(d) {
                Some(Coord::Base(m)) => ds.push(m as usize),
                _ => return Err(ParseErrorKind::UnknownIdentifier(d.to_string())),
            }
        }
        Ok(match ds.as_slice() {
            [a] => Expr::coord(Coord::jet(i, *a)),
            [a, b] => Expr::coord(Coord::jet2(i, *a, *b)),
            _ => return Err(bad()),
        })
    }

    fn function(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }
}
