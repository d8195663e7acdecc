//! Immutable symbolic expressions over exact rationals.
//!
//! Every public constructor and arithmetic operation returns an expression in
//! normal form: an expanded sum of monomials with exact rational coefficients,
//! where variables, kernel applications, and powers of sums are treated as
//! atoms. Kernels and fractional powers are never expanded.

mod calculus;
mod fraction;
mod numeric;
mod parse;
mod poly;
mod render;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use calculus::{free_vars, substitute};
pub use fraction::{content_free_numerator, is_zero_structural, numerator_denominator};
pub use numeric::{
    eval_numeric, equiv, equiv_zero, sample_points, sampled_nonzero, Config, EvalError, Exec, Point, DEFAULT_SEED,
};
pub use parse::{parse_expr, Names, ParseError, Vocabulary};

use poly::Poly;

/// Interned variable name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// Named transcendental functions of one argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kernel {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Exp => "exp",
            Kernel::Log => "log",
            Kernel::Sin => "sin",
            Kernel::Cos => "cos",
            Kernel::Tan => "tan",
            Kernel::Sinh => "sinh",
            Kernel::Cosh => "cosh",
            Kernel::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Kernel> {
        Some(match name {
            "exp" => Kernel::Exp,
            "log" | "ln" => Kernel::Log,
            "sin" => Kernel::Sin,
            "cos" => Kernel::Cos,
            "tan" => Kernel::Tan,
            "sinh" => Kernel::Sinh,
            "cosh" => Kernel::Cosh,
            "tanh" => Kernel::Tanh,
            _ => return None,
        })
    }
}

/// Expression tree node. Exponents are restricted to rational constants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(BigRational),
    Var(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, BigRational),
    Call(Kernel, Expr),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent must be a rational constant, got `{0}`")]
    NonConstantExponent(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no valid sample points: {0}")]
    SamplingDomainEmpty(String),
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    pub(crate) fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: BigRational) -> Expr {
        Expr::from_node(Node::Num(q))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::num(rat(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Symbol::new(name)))
    }

    pub fn symbol(sym: &Symbol) -> Expr {
        Expr::from_node(Node::Var(sym.clone()))
    }

    /// Unnormalized sum, for building raw trees (tests, parser).
    pub fn raw_add(terms: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Add(terms))
    }

    pub fn raw_mul(factors: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Mul(factors))
    }

    pub fn raw_pow(base: Expr, exp: BigRational) -> Expr {
        Expr::from_node(Node::Pow(base, exp))
    }

    pub fn raw_call(k: Kernel, arg: Expr) -> Expr {
        Expr::from_node(Node::Call(k, arg))
    }

    /// Bring an arbitrary tree into normal form.
    pub fn normalize(&self) -> Result<Expr, ExprError> {
        Ok(Poly::from_expr(self)?.to_expr())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Var(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        poly_of(self).scale(c).to_expr()
    }

    pub fn pow(&self, q: &BigRational) -> Result<Expr, ExprError> {
        Ok(poly_of(self).pow(q)?.to_expr())
    }

    pub fn powi(&self, k: i64) -> Result<Expr, ExprError> {
        self.pow(&BigRational::from_integer(BigInt::from(k)))
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        self.powi(-1)
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self * &other.recip()?)
    }

    pub fn apply(k: Kernel, arg: &Expr) -> Result<Expr, ExprError> {
        Ok(Poly::kernel(k, poly_of(arg))?.to_expr())
    }

    pub fn exp(arg: &Expr) -> Expr {
        Expr::apply(Kernel::Exp, arg).expect("exp of a normalized expression is total")
    }

    pub fn log(arg: &Expr) -> Result<Expr, ExprError> {
        Expr::apply(Kernel::Log, arg)
    }

    /// Number of top-level terms in normal form.
    pub fn term_count(&self) -> usize {
        match self.node() {
            Node::Add(ts) => ts.len(),
            Node::Num(q) if q.is_zero() => 0,
            _ => 1,
        }
    }

    /// Top-level terms of a normalized expression.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            Node::Num(q) if q.is_zero() => vec![],
            _ => vec![self.clone()],
        }
    }

    /// Split a normalized term into its rational coefficient and the rest.
    pub fn coefficient_split(&self) -> (BigRational, Expr) {
        match self.node() {
            Node::Num(q) => (q.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(q) => {
                    let rest: Vec<Expr> = fs[1..].to_vec();
                    let rest = if rest.len() == 1 {
                        rest.into_iter().next().unwrap()
                    } else {
                        Expr::raw_mul(rest)
                    };
                    (q.clone(), rest)
                }
                _ => (BigRational::one(), self.clone()),
            },
            _ => (BigRational::one(), self.clone()),
        }
    }

    /// Polynomial coefficients with respect to `v`, if `e` is a polynomial in `v`
    /// (nonnegative integer powers, and `v` nowhere inside an atom).
    pub fn polynomial_coeffs(&self, v: &Symbol) -> Option<Vec<Expr>> {
        poly_of(self).coeffs_in(v).map(|cs| cs.into_iter().map(|p| p.to_expr()).collect())
    }
}

pub(crate) fn poly_of(e: &Expr) -> Poly {
    Poly::from_expr(e).expect("normalized expressions convert without error")
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        poly_of(self).add(&poly_of(rhs)).to_expr()
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        poly_of(self).add(&poly_of(rhs).neg()).to_expr()
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        poly_of(self).mul(&poly_of(rhs)).to_expr()
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        poly_of(self).neg().to_expr()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut acc = Poly::zero();
        for e in iter {
            acc = acc.add(&poly_of(&e));
        }
        acc.to_expr()
    }
}

impl<'a> std::iter::Sum<&'a Expr> for Expr {
    fn sum<I: Iterator<Item = &'a Expr>>(iter: I) -> Expr {
        iter.cloned().sum()
    }
}

#[cfg(test)]
mod tests;
