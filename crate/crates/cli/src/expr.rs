//! Polynomial expressions in `t` and `s`, e.g. `t^2 - s` or `t*s - 1/4`.

use std::collections::BTreeMap;

use pv_core::transversality::BivariatePolynomial;

use crate::CliError;

type Poly = BTreeMap<(usize, usize), f64>;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn constant(c: f64) -> Poly {
    BTreeMap::from([((0, 0), c)])
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (&(i, j), x) in a {
        for (&(k, l), y) in b {
            *out.entry((i + k, j + l)).or_insert(0.0) += x * y;
        }
    }
    out
}

fn add(a: &Poly, b: &Poly, sign: f64) -> Poly {
    let mut out = a.clone();
    for (&e, y) in b {
        *out.entry(e).or_insert(0.0) += sign * y;
    }
    out
}

impl Parser<'_> {
    fn err(&self, what: &str) -> CliError {
        CliError::Usage(format!("polynomial parse error at byte {}: {what}", self.pos))
    }

    fn skip(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly, CliError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = add(&acc, &rhs, if c == b'+' { 1.0 } else { -1.0 });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly, CliError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = mul(&acc, &self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.unary()?;
                    let c = match d.iter().filter(|(_, v)| **v != 0.0).collect::<Vec<_>>().as_slice() {
                        [(&(0, 0), &c)] => c,
                        _ => return Err(self.err("division only by nonzero constants")),
                    };
                    acc.values_mut().for_each(|v| *v /= c);
                }
                Some(b't' | b's' | b'(' | b'0'..=b'9' | b'.') => acc = mul(&acc, &self.unary()?),
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, CliError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(mul(&constant(-1.0), &self.unary()?));
        }
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .filter(|&e| e <= 64)
                .ok_or_else(|| self.err("expected a small exponent"))?;
            let mut out = constant(1.0);
            for _ in 0..e {
                out = mul(&out, &base);
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Poly, CliError> {
        match self.peek() {
            Some(b't') => {
                self.pos += 1;
                Ok(BTreeMap::from([((1, 0), 1.0)]))
            }
            Some(b's') => {
                self.pos += 1;
                Ok(BTreeMap::from([((0, 1), 1.0)]))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'0'..=b'9' | b'.') => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || matches!(self.src[self.pos], b'.' | b'e' | b'E'))
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let v: f64 = text.parse().map_err(|_| self.err("bad number"))?;
                Ok(constant(v))
            }
            _ => Err(self.err("expected t, s, a number or '('")),
        }
    }
}

/// Parses into a polynomial whose degree bound is the expression's total degree.
pub fn parse_polynomial(text: &str) -> Result<BivariatePolynomial, CliError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let poly = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    let degree = poly
        .iter()
        .filter(|(_, v)| **v != 0.0)
        .map(|(&(a, b), _)| a + b)
        .max()
        .unwrap_or(0);
    let terms: Vec<_> = poly.into_iter().filter(|(_, v)| *v != 0.0).collect();
    BivariatePolynomial::from_terms(degree, &terms).map_err(CliError::from)
}
