//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ident  := letter (letter | digit | '_')* '\''*
//! ```
//!
//! Multiplication is always explicit. Decimal literals are read exactly.
//! Exponents must reduce to rational constants.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Expr, ExprError, Kernel, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    Unknown { column: usize, name: String },
    #[error("at column {column}: {source}")]
    Expr {
        column: usize,
        #[source]
        source: ExprError,
    },
}

impl ParseError {
    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { column, .. } | ParseError::Unknown { column, .. } | ParseError::Expr { column, .. } => {
                *column
            }
        }
    }
}

/// Resolves identifiers in expression text to symbols.
pub trait Names {
    fn resolve(&self, ident: &str) -> Option<Symbol>;
}

/// A set of admissible names plus aliases (e.g. `y'` for a jet coordinate).
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    names: BTreeSet<String>,
    aliases: BTreeMap<String, String>,
    permissive: bool,
}

impl Vocabulary {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Vocabulary {
            names: names.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    /// Accepts every identifier that is not a function name.
    pub fn permissive() -> Self {
        Vocabulary {
            permissive: true,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.names.insert(name.into());
    }

    pub fn alias(&mut self, alias: impl Into<String>, target: impl Into<String>) {
        self.aliases.insert(alias.into(), target.into());
    }

    pub fn extend(&mut self, other: &Vocabulary) {
        self.names.extend(other.names.iter().cloned());
        self.aliases.extend(other.aliases.iter().map(|(a, b)| (a.clone(), b.clone())));
        self.permissive |= other.permissive;
    }

    pub fn contains(&self, name: &str) -> bool {
        self.resolve(name).is_some()
    }
}

impl Names for Vocabulary {
    fn resolve(&self, ident: &str) -> Option<Symbol> {
        if let Some(t) = self.aliases.get(ident) {
            return Some(Symbol::new(t));
        }
        if self.permissive || self.names.contains(ident) {
            return Some(Symbol::new(ident));
        }
        None
    }
}

/// Parse and normalize.
pub fn parse_expr(text: &str, names: &dyn Names) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        names,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    e.normalize().map_err(|source| ParseError::Expr { column: 1, source })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a dyn Names,
}

impl Parser<'_> {
    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax {
            column: self.pos + 1,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                let t = self.term()?;
                terms.push(Expr::raw_mul(vec![Expr::int(-1), t]));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::raw_add(terms) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                let f = self.unary()?;
                factors.push(Expr::raw_pow(f, -BigRational::one()));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::raw_mul(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let e = self.unary()?;
            return Ok(Expr::raw_mul(vec![Expr::int(-1), e]));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let column = self.pos + 1;
            let exp = self.unary()?;
            let q = exp
                .normalize()
                .map_err(|source| ParseError::Expr { column, source })?;
            return match q.as_rational() {
                Some(q) => Ok(Expr::raw_pow(base, q.clone())),
                None => Err(ParseError::Expr {
                    column,
                    source: ExprError::NonConstantExponent(q.to_string()),
                }),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut int = String::new();
        let mut frac = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            int.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                frac.push(self.src[self.pos] as char);
                self.pos += 1;
            }
        }
        if int.is_empty() && frac.is_empty() {
            self.pos = start;
            return Err(self.syntax("malformed number".into()));
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
        let d = num_traits::pow(BigInt::from(10), frac.len());
        Ok(Expr::num(BigRational::new(n, d)))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos] == b'\'' {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        if self.peek() == Some(b'(') {
            let column = start + 1;
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax("expected `)`".into()));
            }
            if name == "sqrt" {
                return Ok(Expr::raw_pow(arg, BigRational::new(1.into(), 2.into())));
            }
            return match Kernel::from_name(&name) {
                Some(k) => Ok(Expr::raw_call(k, arg)),
                None => Err(ParseError::Unknown { column, name }),
            };
        }
        match self.names.resolve(&name) {
            Some(s) if Kernel::from_name(&name).is_none() && name != "sqrt" => Ok(Expr::symbol(&s)),
            _ => Err(ParseError::Unknown {
                column: start + 1,
                name,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rat;

    fn v(names: &[&str]) -> Vocabulary {
        Vocabulary::new(names.iter().copied())
    }

    #[test]
    fn bernoulli_rhs() {
        let e = parse_expr("(1+x)*yp^2 + yp", &v(&["x", "yp"])).unwrap();
        assert_eq!(e.term_count(), 3);
        let again = parse_expr("yp + yp^2 + x*yp^2", &v(&["x", "yp"])).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn zero_and_rational_power() {
        assert!(parse_expr("0", &v(&[])).unwrap().is_zero());
        let e = parse_expr("u^(-4/3)", &v(&["u"])).unwrap();
        match e.node() {
            crate::expr::Node::Pow(b, q) => {
                assert_eq!(b, &Expr::var("u"));
                assert_eq!(q, &rat(-4, 3));
            }
            other => panic!("expected power, got {other:?}"),
        }
    }

    #[test]
    fn decimals_exact() {
        assert_eq!(parse_expr("0.25", &v(&[])).unwrap(), Expr::frac(1, 4));
        assert_eq!(parse_expr("1.5*x", &v(&["x"])).unwrap(), parse_expr("3/2*x", &v(&["x"])).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_expr("x + * 2", &v(&["x"])).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { column: 5, .. }), "{err:?}");
        let err = parse_expr("x + z", &v(&["x"])).unwrap_err();
        assert_eq!(err, ParseError::Unknown { column: 5, name: "z".into() });
        assert!(matches!(parse_expr("2 x", &v(&["x"])), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("foo(x)", &v(&["x"])), Err(ParseError::Unknown { .. })));
        assert!(matches!(
            parse_expr("x^y", &v(&["x", "y"])),
            Err(ParseError::Expr { source: ExprError::NonConstantExponent(_), .. })
        ));
        assert!(matches!(parse_expr("(x", &v(&["x"])), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn aliases_and_primes() {
        let mut voc = v(&["x", "y", "y_1"]);
        voc.alias("y'", "y_1");
        let e = parse_expr("y' - y_1", &voc).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse_expr("-x^2", &v(&["x"])).unwrap();
        assert_eq!(e, -&parse_expr("x^2", &v(&["x"])).unwrap());
        let e = parse_expr("2^-1", &v(&[])).unwrap();
        assert_eq!(e, Expr::frac(1, 2));
    }
}
