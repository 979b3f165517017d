//! Arithmetic expressions for config values: `-pi/12`, `cos(pi/5)`, `2^-3`.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter than
//! unary minus, so `-2^2 = -4`):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected character `{ch}` at column {col}")]
    UnexpectedChar { ch: char, col: usize },
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("expression evaluates to a non-finite value")]
    NonFinite,
}

type Function = (&'static str, fn(f64) -> f64);

const FUNCTIONS: [Function; 5] =
    [("sin", f64::sin), ("cos", f64::cos), ("tan", f64::tan), ("sqrt", f64::sqrt), ("exp", f64::exp)];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek_raw() {
            self.pos += c.len_utf8();
        }
    }

    fn unexpected(&self) -> ExprError {
        match self.peek_raw() {
            Some(ch) => ExprError::UnexpectedChar { ch, col: self.src[..self.pos].chars().count() + 1 },
            None => ExprError::UnexpectedEnd,
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ExprError> {
        if self.peek() == Some(want) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.bump();
                    acc += self.term()?;
                }
                Some('-') => {
                    self.bump();
                    acc -= self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.bump();
                    acc *= self.unary()?;
                }
                Some('/') => {
                    self.bump();
                    acc /= self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some('-') => {
                self.bump();
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<f64, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(base.powf(exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some('(') => {
                self.bump();
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.unexpected()),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            while *p < bytes.len() && (bytes[*p].is_ascii_digit() || bytes[*p] == b'_') {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if q < bytes.len() && bytes[q].is_ascii_digit() {
                digits(&mut q);
                p = q;
            }
        }
        self.pos = p;
        let text = &self.src[start..p];
        text.replace('_', "").parse().map_err(|_| ExprError::BadNumber(text.to_string()))
    }

    fn ident(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        while matches!(self.peek_raw(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let name = &self.src[start..self.pos];
        if name == "pi" {
            return Ok(PI);
        }
        let f = FUNCTIONS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| *f)
            .ok_or_else(|| ExprError::UnknownIdent(name.to_string()))?;
        self.expect('(')?;
        let arg = self.expr()?;
        self.expect(')')?;
        Ok(f(arg))
    }
}

/// Evaluates `src`; the result must be finite.
pub fn eval(src: &str) -> Result<f64, ExprError> {
    let mut p = Parser { src, pos: 0 };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    if !v.is_finite() {
        return Err(ExprError::NonFinite);
    }
    Ok(v)
}
