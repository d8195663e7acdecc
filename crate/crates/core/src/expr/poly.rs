//! Expanded-rational normal form.
//!
//! A `Poly` is a finite sum of `coefficient * monomial`, where a monomial maps
//! atoms to nonzero rational exponents. Atoms are variables, kernel
//! applications, constant bases under fractional powers, and sums that cannot
//! be expanded (negative or fractional powers). Canonical invariants:
//!
//! * `exp` atoms appear at most once per monomial, always with exponent 1;
//! * constant atoms carry an exponent in `(0, 1)` (or `(0, 2)` for base -1);
//! * sum atoms never carry a positive integer exponent (those are expanded);
//! * sum atoms are primitive: no common monomial factor, leading coefficient
//!   1, or -1 when the sign had to stay under a fractional power.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, ExprError, Kernel, Node, Symbol};

pub(crate) type Mono = BTreeMap<Expr, BigRational>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Mono, BigRational>,
}

fn is_integer(q: &BigRational) -> bool {
    q.denom().is_one()
}

fn exp_arg(atom: &Expr) -> Option<&Expr> {
    match atom.node() {
        Node::Call(Kernel::Exp, a) => Some(a),
        _ => None,
    }
}

fn is_sum_atom(atom: &Expr) -> bool {
    matches!(atom.node(), Node::Add(_))
}

fn num_atom(atom: &Expr) -> Option<&BigRational> {
    match atom.node() {
        Node::Num(q) => Some(q),
        _ => None,
    }
}

/// Exact k-th root of a nonnegative integer, if it exists.
fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

fn rational_pow_int(c: &BigRational, k: &BigInt) -> BigRational {
    let k = k.to_i64().expect("exponent fits in i64");
    if k >= 0 {
        num_traits::pow(c.clone(), k as usize)
    } else {
        num_traits::pow(c.recip(), (-k) as usize)
    }
}

impl Poly {
    pub(crate) fn zero() -> Poly {
        Poly::default()
    }

    pub(crate) fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::new(), c);
        }
        p
    }

    pub(crate) fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub(crate) fn atom(a: Expr) -> Poly {
        Poly::atom_pow(a, BigRational::one())
    }

    fn atom_pow(a: Expr, e: BigRational) -> Poly {
        let mut m = Mono::new();
        m.insert(a, e);
        Poly::canon_term(BigRational::one(), m)
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn add_poly_scaled(&mut self, other: &Poly, k: &BigRational) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * k);
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.terms.len() >= other.terms.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub(crate) fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    /// Canonicalize a single `coef * mono`; may expand into several terms.
    fn canon_term(mut coef: BigRational, mono: Mono) -> Poly {
        if coef.is_zero() {
            return Poly::zero();
        }
        let mut clean = Mono::new();
        let mut exp_sum: Option<Poly> = None;
        let mut expand: Vec<(Expr, BigInt)> = Vec::new();
        for (atom, e) in mono {
            if e.is_zero() {
                continue;
            }
            if let Some(arg) = exp_arg(&atom) {
                let scaled = poly_of_normal(arg).scale(&e);
                exp_sum = Some(match exp_sum {
                    None => scaled,
                    Some(acc) => acc.add(&scaled),
                });
                continue;
            }
            if let Some(b) = num_atom(&atom) {
                let (extra, rest) = split_num_power(b, &e);
                coef *= extra;
                if !rest.is_zero() {
                    clean.insert(atom, rest);
                }
                continue;
            }
            if is_sum_atom(&atom) && is_integer(&e) && e.is_positive() {
                expand.push((atom, e.to_integer()));
                continue;
            }
            clean.insert(atom, e);
        }
        if let Some(arg) = exp_sum {
            if !arg.is_zero() {
                clean.insert(Expr::from_node(Node::Call(Kernel::Exp, arg.to_expr())), BigRational::one());
            }
        }
        let mut out = Poly::zero();
        out.terms.insert(clean, coef);
        for (atom, k) in expand {
            let base = poly_of_normal(&atom);
            let mut p = Poly::one();
            for _ in 0..k.to_u64().expect("small exponent") {
                p = p.mul(&base);
            }
            out = out.mul(&p);
        }
        out
    }

    fn needs_canon(m: &Mono) -> bool {
        let mut exps = 0;
        for (a, e) in m {
            if exp_arg(a).is_some() {
                exps += 1;
                if !e.is_one() {
                    return true;
                }
            } else if let Some(b) = num_atom(a) {
                let (extra, _) = split_num_power(b, e);
                if !extra.is_one() {
                    return true;
                }
            } else if is_sum_atom(a) && is_integer(e) && e.is_positive() {
                return true;
            }
        }
        exps > 1
    }

    fn mono_mul(a: &Mono, b: &Mono) -> Mono {
        let mut m = a.clone();
        for (atom, e) in b {
            let s = m.get(atom).map(|x| x + e).unwrap_or_else(|| e.clone());
            if s.is_zero() {
                m.remove(atom);
            } else {
                m.insert(atom.clone(), s);
            }
        }
        m
    }

    fn mul_raw(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = Poly::mono_mul(ma, mb);
                let c = ca * cb;
                if Poly::needs_canon(&m) {
                    let t = Poly::canon_term(c, m);
                    out.add_poly_scaled(&t, &BigRational::one());
                } else {
                    out.add_term(m, c);
                }
            }
        }
        out
    }

    /// If `self` (multi-term) equals `c * m * S` where `S` (or `-S`) is already
    /// an atom of `other` with a non-expandable exponent, return it as a single
    /// term so that `S^-k * S` cancels instead of distributing.
    fn as_known_atom(&self, other: &Poly) -> Option<Poly> {
        if self.terms.len() < 2 {
            return None;
        }
        let (c, m, s) = self.factor();
        let s_expr = s.to_expr();
        let neg_expr = s.neg().to_expr();
        for mono in other.terms.keys() {
            for (atom, e) in mono {
                if !is_sum_atom(atom) || (is_integer(e) && e.is_positive()) {
                    continue;
                }
                let (sign, hit) = if *atom == s_expr {
                    (BigRational::one(), true)
                } else if *atom == neg_expr {
                    (-BigRational::one(), true)
                } else {
                    (BigRational::one(), false)
                };
                if hit {
                    let mut mm = m.clone();
                    let cur = mm.get(atom).cloned().unwrap_or_else(BigRational::zero);
                    mm.insert(atom.clone(), cur + BigRational::one());
                    let mut p = Poly::zero();
                    p.terms.insert(mm, c * sign);
                    return Some(p);
                }
            }
        }
        None
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(p) = other.as_known_atom(self) {
            return self.mul_raw(&p);
        }
        if let Some(p) = self.as_known_atom(other) {
            return p.mul_raw(other);
        }
        self.mul_raw(other)
    }

    /// Decompose into `c * m * S` with `S` primitive (leading coefficient 1, no
    /// common monomial factor).
    pub(crate) fn factor(&self) -> (BigRational, Mono, Poly) {
        let mut common: Option<Mono> = None;
        for m in self.terms.keys() {
            common = Some(match common {
                None => m.clone(),
                Some(acc) => {
                    let mut out = Mono::new();
                    let keys: std::collections::BTreeSet<&Expr> = acc.keys().chain(m.keys()).collect();
                    for k in keys {
                        let a = acc.get(k).cloned().unwrap_or_else(BigRational::zero);
                        let b = m.get(k).cloned().unwrap_or_else(BigRational::zero);
                        let mn = if a < b { a } else { b };
                        if !mn.is_zero() {
                            out.insert(k.clone(), mn);
                        }
                    }
                    out
                }
            });
        }
        let common = common.unwrap_or_default();
        let mut s = Poly::zero();
        for (m, c) in &self.terms {
            let mut mm = m.clone();
            for (k, e) in &common {
                let v = mm.get(k).cloned().unwrap_or_else(BigRational::zero) - e;
                if v.is_zero() {
                    mm.remove(k);
                } else {
                    mm.insert(k.clone(), v);
                }
            }
            s.terms.insert(mm, c.clone());
        }
        let lead = s.terms.values().next().cloned().unwrap_or_else(BigRational::one);
        let s = s.scale(&lead.recip());
        (lead, common, s)
    }

    pub(crate) fn pow(&self, q: &BigRational) -> Result<Poly, ExprError> {
        if q.is_zero() {
            return Ok(Poly::one());
        }
        if self.is_zero() {
            return if q.is_positive() { Ok(Poly::zero()) } else { Err(ExprError::DivisionByZero) };
        }
        if q.is_one() {
            return Ok(self.clone());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return Ok(Poly::mono_pow(c, m, q));
        }
        if is_integer(q) && q.is_positive() {
            let k = q.to_integer().to_u64().expect("small exponent");
            let mut result = Poly::one();
            let mut base = self.clone();
            let mut k = k;
            while k > 0 {
                if k & 1 == 1 {
                    result = result.mul(&base);
                }
                k >>= 1;
                if k > 0 {
                    base = base.mul(&base);
                }
            }
            return Ok(result);
        }
        let (c, m, s) = self.factor();
        let (c, s) = if !is_integer(q) && c.is_negative() { (-c, s.neg()) } else { (c, s) };
        let outer = Poly::mono_pow(&c, &m, q);
        let atom = Poly::atom_pow(s.to_expr(), q.clone());
        Ok(outer.mul(&atom))
    }

    fn mono_pow(c: &BigRational, m: &Mono, q: &BigRational) -> Poly {
        let mut mono = Mono::new();
        for (a, e) in m {
            mono.insert(a.clone(), e * q);
        }
        let (coef, extra) = rational_power(c, q);
        for (a, e) in extra {
            let cur = mono.get(&a).cloned().unwrap_or_else(BigRational::zero);
            mono.insert(a, cur + e);
        }
        Poly::canon_term(coef, mono)
    }

    pub(crate) fn kernel(k: Kernel, arg: Poly) -> Result<Poly, ExprError> {
        match k {
            Kernel::Exp => Poly::exp(arg),
            Kernel::Log => Poly::log(arg),
            _ => {
                if arg.is_zero() {
                    return Ok(match k {
                        Kernel::Cos | Kernel::Cosh => Poly::one(),
                        _ => Poly::zero(),
                    });
                }
                Ok(Poly::atom(Expr::from_node(Node::Call(k, arg.to_expr()))))
            }
        }
    }

    fn exp(arg: Poly) -> Result<Poly, ExprError> {
        let mut rest = Poly::zero();
        let mut out = Poly::one();
        for (m, c) in arg.terms {
            if m.len() == 1 {
                let (a, e) = m.iter().next().unwrap();
                if let Node::Call(Kernel::Log, inner) = a.node() {
                    if e.is_one() {
                        out = out.mul(&poly_of_normal(inner).pow(&c)?);
                        continue;
                    }
                }
            }
            rest.add_term(m, c);
        }
        if !rest.is_zero() {
            out = out.mul(&Poly::atom(Expr::from_node(Node::Call(Kernel::Exp, rest.to_expr()))));
        }
        Ok(out)
    }

    fn log(arg: Poly) -> Result<Poly, ExprError> {
        if arg.is_zero() {
            return Ok(Poly::atom(Expr::from_node(Node::Call(Kernel::Log, Expr::zero()))));
        }
        let (c, m, s) = if arg.terms.len() == 1 {
            let (m, c) = arg.terms.iter().next().unwrap();
            (c.clone(), m.clone(), Poly::one())
        } else {
            arg.factor()
        };
        let (c, s) = if c.is_negative() { (-c, s.neg()) } else { (c, s) };
        let mut out = Poly::zero();
        if !c.is_one() {
            out = out.add(&log_atom(Expr::num(c)));
        }
        for (a, e) in m {
            let piece = if let Some(inner) = exp_arg(&a) {
                poly_of_normal(inner)
            } else if let Node::Num(b) = a.node() {
                log_atom(Expr::num(b.clone()))
            } else {
                log_atom(a.clone())
            };
            out = out.add(&piece.scale(&e));
        }
        if s.as_constant() != Some(BigRational::one()) {
            out = out.add(&log_atom(s.to_expr()));
        }
        Ok(out)
    }

    pub(crate) fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self.terms.iter().map(|(m, c)| term_expr(c, m)).collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::from_node(Node::Add(terms)),
        }
    }

    pub(crate) fn from_expr(e: &Expr) -> Result<Poly, ExprError> {
        Ok(match e.node() {
            Node::Num(q) => Poly::constant(q.clone()),
            Node::Var(_) => Poly::atom(e.clone()),
            Node::Add(ts) => {
                let mut acc = Poly::zero();
                for t in ts {
                    acc = acc.add(&Poly::from_expr(t)?);
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = Poly::one();
                for f in fs {
                    acc = acc.mul(&Poly::from_expr(f)?);
                }
                acc
            }
            Node::Pow(b, q) => Poly::from_expr(b)?.pow(q)?,
            Node::Call(k, a) => Poly::kernel(*k, Poly::from_expr(a)?)?,
        })
    }

    /// Coefficients as a polynomial in the variable `v`.
    pub(crate) fn coeffs_in(&self, v: &Symbol) -> Option<Vec<Poly>> {
        let var = Expr::symbol(v);
        let mut out: Vec<Poly> = Vec::new();
        for (m, c) in &self.terms {
            let mut deg = 0usize;
            let mut rest = Mono::new();
            for (a, e) in m {
                if *a == var {
                    if !is_integer(e) || e.is_negative() {
                        return None;
                    }
                    deg = e.to_integer().to_usize()?;
                } else {
                    if super::calculus::contains_var(a, v) {
                        return None;
                    }
                    rest.insert(a.clone(), e.clone());
                }
            }
            if out.len() <= deg {
                out.resize(deg + 1, Poly::zero());
            }
            out[deg].add_term(rest, c.clone());
        }
        Some(out)
    }
}

fn log_atom(a: Expr) -> Poly {
    Poly::atom(Expr::from_node(Node::Call(Kernel::Log, a)))
}

/// Convert an expression known to be in normal form.
pub(crate) fn poly_of_normal(e: &Expr) -> Poly {
    Poly::from_expr(e).expect("normal form converts without error")
}

fn term_expr(c: &BigRational, m: &Mono) -> Expr {
    let mut factors: Vec<Expr> = Vec::with_capacity(m.len() + 1);
    if !c.is_one() || m.is_empty() {
        factors.push(Expr::num(c.clone()));
    }
    for (a, e) in m {
        if e.is_one() {
            factors.push(a.clone());
        } else {
            factors.push(Expr::from_node(Node::Pow(a.clone(), e.clone())));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::from_node(Node::Mul(factors))
    }
}

/// `b^e` for a constant atom: integer part folded into a coefficient, the
/// remaining exponent reduced into the canonical range.
fn split_num_power(b: &BigRational, e: &BigRational) -> (BigRational, BigRational) {
    if b == &-BigRational::one() {
        if !(e.denom() % BigInt::from(2)).is_zero() {
            // odd root of -1 is real
            let odd = !(e.numer() % BigInt::from(2)).is_zero();
            let sign = if odd { -BigRational::one() } else { BigRational::one() };
            return (sign, BigRational::zero());
        }
        // (-1)^e, e reduced mod 2
        let two = BigRational::from_integer(BigInt::from(2));
        let mut r = e - (e / &two).floor() * &two;
        let mut sign = BigRational::one();
        if r >= BigRational::one() {
            sign = -sign;
            r -= BigRational::one();
        }
        if r.is_zero() {
            return (sign, BigRational::zero());
        }
        // (-1)^(1+r) with 0<r<1 keeps the sign factor outside
        return (sign, r);
    }
    let fl = e.floor();
    let rest = e - &fl;
    (rational_pow_int(b, &fl.to_integer()), rest)
}

/// `c^q` as an exact rational times leftover constant atoms.
fn rational_power(c: &BigRational, q: &BigRational) -> (BigRational, Vec<(Expr, BigRational)>) {
    if is_integer(q) {
        return (rational_pow_int(c, &q.to_integer()), vec![]);
    }
    let mut coef = BigRational::one();
    let mut extra = Vec::new();
    let mut base = c.clone();
    if base.is_negative() {
        extra.push((Expr::num(-BigRational::one()), q.clone()));
        base = -base;
    }
    if base.is_one() {
        return (coef, extra);
    }
    let den = q.denom().to_u32().unwrap_or(u32::MAX);
    let num_root = exact_root(base.numer(), den);
    let den_root = exact_root(base.denom(), den);
    match (num_root, den_root) {
        (Some(n), Some(d)) => {
            let root = BigRational::new(n, d);
            coef = rational_pow_int(&root, q.numer());
        }
        _ => {
            // integer part of the exponent folds into the coefficient later
            extra.push((Expr::num(base), q.clone()));
        }
    }
    (coef, extra)
}
