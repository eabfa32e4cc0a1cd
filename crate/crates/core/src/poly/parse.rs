//! Text and JSON readers for polynomial systems.
//!
//! Text grammar, one polynomial per line after a `vars <n>` header:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := INT | VAR ('^' INT)? | '(' expr ')'
//! VAR    := 'x' INT            (1-based)
//! ```
//!
//! A sign in front of the first term of an `expr` is also accepted.
//! Blank lines and lines starting with `#` are skipped.

use super::{Form, JsonSystem, Monomial, PolySystem};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

const MAX_EXPONENT: u32 = 256;

/// Parses either format, choosing JSON when the input starts with `{`.
pub fn parse_system(src: &str) -> Result<PolySystem> {
    if src.trim_start().starts_with('{') {
        parse_json(src)
    } else {
        parse_text(src)
    }
}

pub fn parse_text(src: &str) -> Result<PolySystem> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
    let (hline, header) = lines.next().ok_or(Error::Syntax {
        line: 1,
        column: 1,
        message: "missing `vars <n>` header".into(),
    })?;
    let n = parse_header(hline, header)?;
    let mut forms = Vec::new();
    for (lineno, text) in lines {
        let poly = Parser::new(text, lineno, n).parse_line()?;
        forms.push(into_form(poly, lineno, n)?);
    }
    if forms.is_empty() {
        return Err(Error::EmptySystem);
    }
    PolySystem::new(n, forms)
}

fn parse_header(line: usize, text: &str) -> Result<usize> {
    let mut parts = text.split_whitespace();
    let bad = |column: usize, message: &str| Error::Syntax {
        line,
        column,
        message: message.into(),
    };
    let column_of = |word: &str| text.find(word).map_or(1, |c| c + 1);
    match parts.next() {
        Some("vars") => {}
        Some(w) => return Err(bad(column_of(w), "expected `vars <n>` header")),
        None => return Err(bad(1, "expected `vars <n>` header")),
    }
    let word = parts
        .next()
        .ok_or_else(|| bad(text.len() + 1, "missing variable count"))?;
    let n: usize = word
        .parse()
        .map_err(|_| bad(column_of(word), "variable count must be a positive integer"))?;
    if n == 0 {
        return Err(bad(column_of(word), "variable count must be positive"));
    }
    if let Some(w) = parts.next() {
        return Err(bad(column_of(w), "unexpected text after header"));
    }
    Ok(n)
}

type Poly = BTreeMap<Vec<u32>, BigInt>;

fn into_form(poly: Poly, line: usize, n: usize) -> Result<Form> {
    let monomials: Vec<Monomial> = poly
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(exps, coeff)| Monomial { coeff, exps })
        .collect();
    if monomials.is_empty() {
        return Err(Error::ZeroPolynomial { line });
    }
    let mut degrees: Vec<u32> = monomials.iter().map(Monomial::degree).collect();
    degrees.sort_unstable();
    degrees.dedup();
    if degrees.len() > 1 {
        return Err(Error::NonHomogeneous {
            line,
            found: degrees,
        });
    }
    if degrees[0] < 2 {
        return Err(Error::DegreeTooLow {
            line,
            degree: degrees[0],
        });
    }
    Form::new(n, monomials).map_err(|e| match e {
        Error::NonHomogeneous { found, .. } => Error::NonHomogeneous { line, found },
        other => other,
    })
}

fn add(a: &mut Poly, b: Poly, sign: i32) {
    for (e, c) in b {
        let slot = a.entry(e).or_insert_with(BigInt::zero);
        if sign < 0 {
            *slot -= c;
        } else {
            *slot += c;
        }
    }
    a.retain(|_, c| !c.is_zero());
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert_with(BigInt::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    n: usize,
}

impl Parser {
    fn new(src: &str, line: usize, n: usize) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
            line,
            n,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn constant(&self, c: BigInt) -> Poly {
        Poly::from([(vec![0; self.n], c)])
    }

    fn parse_line(mut self) -> Result<Poly> {
        let p = self.expr()?;
        match self.peek() {
            None => Ok(p),
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
        }
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut sign = 1;
        match self.peek() {
            Some('-') => {
                sign = -1;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        let mut acc = Poly::new();
        let first = self.term()?;
        add(&mut acc, first, sign);
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    add(&mut acc, t, 1);
                }
                Some('-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    add(&mut acc, t, -1);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let f = self.factor()?;
            acc = mul(&acc, &f);
        }
        Ok(acc)
    }

    fn integer(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn factor(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let digits = self.integer()?;
                let v: BigInt = digits.parse().expect("ascii digits");
                Ok(self.constant(v))
            }
            Some('x') => {
                self.pos += 1;
                if !matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_digit()) {
                    return Err(self.err("expected variable index after `x`"));
                }
                let digits = self.integer()?;
                let index: u64 = digits.parse().unwrap_or(u64::MAX);
                if index == 0 || index > self.n as u64 {
                    return Err(Error::VariableOutOfRange {
                        line: self.line,
                        index,
                        n: self.n,
                    });
                }
                let mut exp = 1u32;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    let d = self.integer()?;
                    exp = match d.parse::<u32>() {
                        Ok(e) if e <= MAX_EXPONENT => e,
                        _ => return Err(self.err(format!("exponent exceeds {MAX_EXPONENT}"))),
                    };
                }
                let mut e = vec![0u32; self.n];
                e[index as usize - 1] = exp;
                Ok(Poly::from([(e, BigInt::one())]))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
            None => Err(self.err("unexpected end of line")),
        }
    }
}

pub fn parse_json(src: &str) -> Result<PolySystem> {
    let js: JsonSystem = serde_json::from_str(src).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if js.n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let mut forms = Vec::new();
    for (k, jf) in js.forms.iter().enumerate() {
        let line = k + 1;
        let mut poly = Poly::new();
        for m in &jf.monomials {
            if m.e.len() != js.n {
                return Err(Error::invalid(format!(
                    "form {line}: exponent vector has length {}, expected {}",
                    m.e.len(),
                    js.n
                )));
            }
            let c: BigInt = m.c.trim().parse().map_err(|_| {
                Error::invalid(format!(
                    "form {line}: coefficient `{}` is not an integer",
                    m.c
                ))
            })?;
            *poly.entry(m.e.clone()).or_insert_with(BigInt::zero) += c;
        }
        let form = into_form(poly, line, js.n)?;
        if form.degree != jf.degree {
            return Err(Error::invalid(format!(
                "form {line}: declared degree {} but monomials have degree {}",
                jf.degree, form.degree
            )));
        }
        forms.push(form);
    }
    if forms.is_empty() {
        return Err(Error::EmptySystem);
    }
    PolySystem::new(js.n, forms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadric_has_four_monomials() {
        let s = parse_text("vars 4\nx1^2 + x2^2 - x3^2 - x4^2").unwrap();
        let f: Vec<_> = s.forms().collect();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].degree, 2);
        assert_eq!(f[0].monomials.len(), 4);
    }

    #[test]
    fn rejects_non_homogeneous() {
        let e = parse_text("vars 2\nx1^2 + x1*x2 - x2").unwrap_err();
        assert_eq!(
            e,
            Error::NonHomogeneous {
                line: 2,
                found: vec![1, 2]
            }
        );
    }

    #[test]
    fn cancellation_leaves_single_monomial() {
        let s = parse_text("vars 2\n2*x1^3 - 2*x1^3 + x2^3").unwrap();
        let f = s.forms().next().unwrap();
        assert_eq!(f.degree, 3);
        assert_eq!(f.monomials.len(), 1);
        assert_eq!(f.monomials[0].exps, vec![0, 3]);
    }

    #[test]
    fn reports_syntax_location() {
        match parse_text("vars 2\nx1^2 + * x2^2").unwrap_err() {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 8)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn rejects_low_degree_and_bad_variables() {
        assert!(matches!(
            parse_text("vars 2\nx1 + x2").unwrap_err(),
            Error::DegreeTooLow { line: 2, degree: 1 }
        ));
        assert!(matches!(
            parse_text("vars 2\nx1^2 + x3^2").unwrap_err(),
            Error::VariableOutOfRange { index: 3, n: 2, .. }
        ));
        assert!(matches!(
            parse_text("vars 2\nx0^2").unwrap_err(),
            Error::VariableOutOfRange { index: 0, .. }
        ));
        assert!(matches!(
            parse_text("vars 2\nx1^2 - x1^2").unwrap_err(),
            Error::ZeroPolynomial { line: 2 }
        ));
    }

    #[test]
    fn header_is_required() {
        assert!(matches!(
            parse_text("x1^2").unwrap_err(),
            Error::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_text("vars 2\n").unwrap_err(),
            Error::EmptySystem
        ));
    }

    #[test]
    fn parentheses_expand() {
        let s = parse_text("vars 2\n(x1 + x2)*(x1 - x2)").unwrap();
        let t = parse_text("vars 2\nx1^2 - x2^2").unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn comments_and_unused_variables() {
        let s = parse_text("# a comment\nvars 5\n\n# another\nx1^2 - x2^2\n").unwrap();
        assert_eq!(s.n(), 5);
        assert_eq!(s.r(), 1);
    }

    #[test]
    fn json_matches_text() {
        let t = parse_text("vars 3\nx1^2 - 3*x2*x3\nx1^3 + x2^3 + x3^3").unwrap();
        let j = serde_json::to_string(&t.to_json()).unwrap();
        assert_eq!(parse_system(&j).unwrap(), t);
        let bad = r#"{"n":2,"forms":[{"degree":3,"monomials":[{"c":"1","e":[2,0]}]}]}"#;
        assert!(parse_json(bad).is_err());
        let inhom = r#"{"n":2,"forms":[{"degree":2,"monomials":[{"c":"1","e":[2,0]},{"c":"1","e":[1,0]}]}]}"#;
        assert!(matches!(
            parse_json(inhom).unwrap_err(),
            Error::NonHomogeneous { .. }
        ));
    }

    #[test]
    fn huge_coefficients_survive() {
        let s = parse_text("vars 2\n123456789012345678901234567890*x1^2 - x2^2").unwrap();
        let v = s.evaluate_i64(&[1, 0]).unwrap();
        assert_eq!(v[0].to_string(), "123456789012345678901234567890");
    }
}
