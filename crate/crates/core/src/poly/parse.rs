//! Text grammar:
//!
//! ```text
//! poly   := sign? term (sign term)*
//! term   := factor ('*' factor)*
//! factor := number | name ('^' integer)?
//! ```
//!
//! Numbers are decimal with an optional exponent (`1.5e-3`); whitespace is
//! ignored between tokens.

use alloc::string::{String, ToString};

use super::{Monomial, Polynomial};
use crate::{Error, Result};

/// Largest accepted exponent on a single variable.
pub const MAX_EXPONENT: u32 = 1024;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vars: &'a [&'a str],
}

fn syntax(offset: usize, message: &str) -> Error {
    Error::Syntax {
        offset,
        message: message.to_string(),
    }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(b) = self.src.as_bytes().get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.as_bytes().get(self.pos).copied()
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(&b) = self.src.as_bytes().get(self.pos) {
            if pred(b) {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        self.take_while(|b| b.is_ascii_digit());
        if bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            self.take_while(|b| b.is_ascii_digit());
        }
        if matches!(bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.take_while(|b| b.is_ascii_digit()).is_empty() {
                self.pos = save;
                return Err(syntax(save, "malformed exponent in number"));
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| syntax(start, "malformed number"))?;
        if !value.is_finite() {
            return Err(syntax(start, "number out of range"));
        }
        Ok(value)
    }

    fn factor(&mut self, coeff: &mut f64, exps: &mut [u32]) -> Result<()> {
        let start = self.pos;
        match self.peek() {
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                *coeff *= self.number()?;
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let start = self.pos;
                let name = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_');
                let idx = self
                    .vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| Error::UnknownVariable {
                        name: String::from(name),
                        offset: start,
                    })?;
                let mut e = 1u32;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    let estart = self.pos;
                    let digits = self.take_while(|b| b.is_ascii_digit());
                    if digits.is_empty() {
                        return Err(syntax(estart, "expected integer exponent after '^'"));
                    }
                    e = match digits.parse::<u32>() {
                        Ok(v) if v <= MAX_EXPONENT => v,
                        _ => return Err(Error::ExponentOverflow(estart)),
                    };
                    if e == 0 {
                        return Err(syntax(estart, "exponent must be positive"));
                    }
                }
                exps[idx] = exps[idx]
                    .checked_add(e)
                    .filter(|v| *v <= MAX_EXPONENT)
                    .ok_or(Error::ExponentOverflow(start))?;
            }
            Some(_) => return Err(syntax(self.pos, "expected number or variable")),
            None => return Err(syntax(start.max(self.pos), "unexpected end of input")),
        }
        Ok(())
    }

    fn term(&mut self, sign: f64, out: &mut Polynomial) -> Result<()> {
        let mut coeff = sign;
        let mut exps = alloc::vec![0u32; self.vars.len()];
        self.factor(&mut coeff, &mut exps)?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            self.factor(&mut coeff, &mut exps)?;
        }
        out.add_term(Monomial(exps), coeff);
        Ok(())
    }

    fn poly(&mut self) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.vars.len());
        let mut sign = 1.0;
        match self.peek() {
            Some(b'-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            _ => {}
        }
        self.term(sign, &mut out)?;
        loop {
            match self.peek() {
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                None => break,
                Some(_) => return Err(syntax(self.pos, "expected '+', '-' or '*'")),
            }
            self.pos += 1;
            self.term(sign, &mut out)?;
        }
        Ok(out)
    }
}

/// Parse polynomial text over the ordered variable names.
pub fn parse_poly(text: &str, variables: &[&str]) -> Result<Polynomial> {
    let mut p = Parser {
        src: text,
        pos: 0,
        vars: variables,
    };
    p.poly()
}
