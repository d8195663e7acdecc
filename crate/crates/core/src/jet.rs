//! Jet spaces, total derivatives, and prolongation of point generators.
//!
//! Jet coordinates are plain symbols. With several independent variables a
//! derivative of `u` is named `u_` followed by its sorted 1-based indices
//! (`u_12` is ∂²u/∂x₁∂x₂). With one independent variable primes are used
//! (`y'`, `y''`), and `y_1`, `y_11` are accepted as aliases when parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::exec::{self, Exec};
use crate::expr::{free_vars, parse_expr, Expr, ExprError, Names, ParseError, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("duplicate variable name `{0}`")]
    Duplicate(String),
    #[error("invalid variable name `{0}`")]
    BadName(String),
    #[error("at most 9 independent variables are supported, got {0}")]
    TooManyIndependents(usize),
    #[error("jet space needs at least one independent and one dependent variable")]
    Empty,
    #[error("coefficient of {coordinate} depends on `{var}`, which is not a base coordinate")]
    NotPointField { coordinate: String, var: String },
    #[error("expression has order {expr_order} but the prolongation only reaches order {field_order}")]
    OrderTooHigh { expr_order: usize, field_order: usize },
    #[error("expected {expected} coefficients, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Independent,
    Dependent,
    Jet,
    Parameter,
}

/// A derivative coordinate: dependent variable index and sorted 0-based
/// multi-index of independent variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub dep: usize,
    pub index: Vec<usize>,
}

impl JetVar {
    pub fn new(dep: usize, mut index: Vec<usize>) -> JetVar {
        index.sort_unstable();
        JetVar { dep, index }
    }

    pub fn order(&self) -> usize {
        self.index.len()
    }

    /// The coordinate one derivative higher in direction `j`.
    pub fn raised(&self, j: usize) -> JetVar {
        let mut index = self.index.clone();
        index.push(j);
        JetVar::new(self.dep, index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    independents: Vec<Symbol>,
    dependents: Vec<Symbol>,
    parameters: Vec<Symbol>,
    order: usize,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !s.contains('_')
}

impl JetSpace {
    pub fn new(independents: &[&str], dependents: &[&str], order: usize) -> Result<JetSpace, JetError> {
        JetSpace::with_parameters(independents, dependents, &[], order)
    }

    pub fn with_parameters(
        independents: &[&str],
        dependents: &[&str],
        parameters: &[&str],
        order: usize,
    ) -> Result<JetSpace, JetError> {
        if independents.is_empty() || dependents.is_empty() {
            return Err(JetError::Empty);
        }
        if independents.len() > 9 {
            return Err(JetError::TooManyIndependents(independents.len()));
        }
        let mut seen = BTreeSet::new();
        for n in independents.iter().chain(dependents).chain(parameters) {
            if !valid_name(n) || crate::expr::Kernel::from_name(n).is_some() || *n == "sqrt" {
                return Err(JetError::BadName(n.to_string()));
            }
            if !seen.insert(*n) {
                return Err(JetError::Duplicate(n.to_string()));
            }
        }
        let sym = |xs: &[&str]| xs.iter().map(|s| Symbol::new(s)).collect::<Vec<_>>();
        Ok(JetSpace {
            independents: sym(independents),
            dependents: sym(dependents),
            parameters: sym(parameters),
            order,
        })
    }

    pub fn independents(&self) -> &[Symbol] {
        &self.independents
    }

    pub fn dependents(&self) -> &[Symbol] {
        &self.dependents
    }

    pub fn parameters(&self) -> &[Symbol] {
        &self.parameters
    }

    pub fn p(&self) -> usize {
        self.independents.len()
    }

    pub fn m(&self) -> usize {
        self.dependents.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_ode(&self) -> bool {
        self.p() == 1
    }

    /// Same space with maximum order raised to at least `n`.
    pub fn extended_to(&self, n: usize) -> JetSpace {
        let mut s = self.clone();
        s.order = s.order.max(n);
        s
    }

    pub fn with_order(&self, n: usize) -> JetSpace {
        let mut s = self.clone();
        s.order = n;
        s
    }

    /// Independent variables followed by dependent variables.
    pub fn base_coords(&self) -> Vec<Symbol> {
        self.independents.iter().chain(&self.dependents).cloned().collect()
    }

    pub fn independent_index(&self, s: &Symbol) -> Option<usize> {
        self.independents.iter().position(|x| x == s)
    }

    pub fn dependent_index(&self, s: &Symbol) -> Option<usize> {
        self.dependents.iter().position(|x| x == s)
    }

    pub fn dependent_named(&self, name: &str) -> Option<usize> {
        self.dependents.iter().position(|x| x.as_str() == name)
    }

    pub fn jet_name(&self, v: &JetVar) -> String {
        let base = self.dependents[v.dep].as_str();
        if v.index.is_empty() {
            return base.to_string();
        }
        if self.is_ode() {
            format!("{base}{}", "'".repeat(v.order()))
        } else {
            let digits: String = v.index.iter().map(|i| char::from(b'1' + *i as u8)).collect();
            format!("{base}_{digits}")
        }
    }

    pub fn jet_symbol(&self, v: &JetVar) -> Symbol {
        Symbol::new(&self.jet_name(v))
    }

    pub fn jet_expr(&self, v: &JetVar) -> Expr {
        Expr::symbol(&self.jet_symbol(v))
    }

    /// Shorthand for `jet_expr(JetVar::new(dep, index))`.
    pub fn u(&self, dep: usize, index: &[usize]) -> Expr {
        self.jet_expr(&JetVar::new(dep, index.to_vec()))
    }

    /// Recognize a jet coordinate name (of any order, including order 0).
    pub fn jet_of_name(&self, name: &str) -> Option<JetVar> {
        for (d, dep) in self.dependents.iter().enumerate() {
            let Some(rest) = name.strip_prefix(dep.as_str()) else {
                continue;
            };
            if rest.is_empty() {
                return Some(JetVar::new(d, vec![]));
            }
            if self.is_ode() && rest.chars().all(|c| c == '\'') {
                return Some(JetVar::new(d, vec![0; rest.len()]));
            }
            if let Some(digits) = rest.strip_prefix('_') {
                if digits.is_empty() {
                    continue;
                }
                let mut index = Vec::with_capacity(digits.len());
                for c in digits.chars() {
                    let k = c.to_digit(10)? as usize;
                    if k == 0 || k > self.p() {
                        return None;
                    }
                    index.push(k - 1);
                }
                return Some(JetVar::new(d, index));
            }
        }
        None
    }

    pub fn jet_of(&self, s: &Symbol) -> Option<JetVar> {
        self.jet_of_name(s.as_str())
    }

    pub fn role(&self, s: &Symbol) -> Option<Role> {
        if self.independent_index(s).is_some() {
            Some(Role::Independent)
        } else if self.dependent_index(s).is_some() {
            Some(Role::Dependent)
        } else if self.parameters.contains(s) {
            Some(Role::Parameter)
        } else if self.jet_of(s).is_some() {
            Some(Role::Jet)
        } else {
            None
        }
    }

    /// Jet coordinates (order ≥ 0) occurring in `e`.
    pub fn jets_in(&self, e: &Expr) -> BTreeSet<JetVar> {
        free_vars(e).iter().filter_map(|s| self.jet_of(s)).collect()
    }

    /// Highest derivative order occurring in `e` (0 if none).
    pub fn expr_order(&self, e: &Expr) -> usize {
        self.jets_in(e).iter().map(JetVar::order).max().unwrap_or(0)
    }

    /// All jet coordinates of exactly order `k`.
    pub fn jets_of_order(&self, k: usize) -> Vec<JetVar> {
        let mut out = Vec::new();
        for d in 0..self.m() {
            for idx in multi_indices(self.p(), k) {
                out.push(JetVar { dep: d, index: idx });
            }
        }
        out
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        parse_expr(text, self)
    }
}

impl Names for JetSpace {
    fn resolve(&self, ident: &str) -> Option<Symbol> {
        let s = Symbol::new(ident);
        if self.independent_index(&s).is_some() || self.parameters.contains(&s) {
            return Some(s);
        }
        self.jet_of_name(ident).map(|v| self.jet_symbol(&v))
    }
}

impl fmt::Display for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[Symbol]| xs.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
        write!(f, "J^{}(({}) -> ({}))", self.order, join(&self.independents), join(&self.dependents))
    }
}

/// Sorted multi-indices of length `k` over `p` directions.
pub fn multi_indices(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(p: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..p {
            cur.push(i);
            rec(p, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(p, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// D_j e = ∂e/∂x_j + Σ u_{J∪j} ∂e/∂u_J over the jet coordinates in `e`.
pub fn total_derivative(space: &JetSpace, e: &Expr, j: usize) -> Expr {
    let mut acc = e.diff(&space.independents[j]);
    for v in space.jets_in(e) {
        let d = e.diff(&space.jet_symbol(&v));
        if !d.is_zero() {
            acc = acc + space.jet_expr(&v.raised(j)) * d;
        }
    }
    acc
}

/// Total derivative along a multi-index (applied in order).
pub fn total_derivative_multi(space: &JetSpace, e: &Expr, index: &[usize]) -> Expr {
    index.iter().fold(e.clone(), |acc, &j| total_derivative(space, &acc, j))
}

/// Point-symmetry generator ξ_j ∂/∂x_j + η^μ ∂/∂u^μ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    space: JetSpace,
    pub xi: Vec<Expr>,
    pub eta: Vec<Expr>,
}

impl VectorField {
    pub fn new(space: &JetSpace, xi: Vec<Expr>, eta: Vec<Expr>) -> Result<VectorField, JetError> {
        if xi.len() != space.p() {
            return Err(JetError::Arity { expected: space.p(), got: xi.len() });
        }
        if eta.len() != space.m() {
            return Err(JetError::Arity { expected: space.m(), got: eta.len() });
        }
        let allowed: BTreeSet<Symbol> = space.base_coords().into_iter().chain(space.parameters.iter().cloned()).collect();
        let names = space.base_coords();
        for (c, name) in xi.iter().chain(&eta).zip(&names) {
            if let Some(bad) = free_vars(c).into_iter().find(|s| !allowed.contains(s)) {
                return Err(JetError::NotPointField {
                    coordinate: name.to_string(),
                    var: bad.to_string(),
                });
            }
        }
        Ok(VectorField {
            space: space.clone(),
            xi,
            eta,
        })
    }

    /// Parse coefficients given as text, in base-coordinate order.
    pub fn parse(space: &JetSpace, coeffs: &[&str]) -> Result<VectorField, JetError> {
        let p = space.p();
        if coeffs.len() != p + space.m() {
            return Err(JetError::Arity {
                expected: p + space.m(),
                got: coeffs.len(),
            });
        }
        let es = coeffs.iter().map(|c| space.parse(c)).collect::<Result<Vec<_>, _>>()?;
        VectorField::new(space, es[..p].to_vec(), es[p..].to_vec())
    }

    pub fn zero(space: &JetSpace) -> VectorField {
        VectorField {
            space: space.clone(),
            xi: vec![Expr::zero(); space.p()],
            eta: vec![Expr::zero(); space.m()],
        }
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    /// Coefficients in base-coordinate order (ξ then η).
    pub fn coefficients(&self) -> Vec<Expr> {
        self.xi.iter().chain(&self.eta).cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.xi.iter().chain(&self.eta).all(Expr::is_zero)
    }

    /// Action on a function of the base coordinates (jet variables inert).
    pub fn apply_base(&self, f: &Expr) -> Expr {
        self.space
            .base_coords()
            .iter()
            .zip(self.coefficients())
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| c * f.diff(v))
            .sum()
    }

    pub fn scale(&self, c: &num_rational::BigRational) -> VectorField {
        VectorField {
            space: self.space.clone(),
            xi: self.xi.iter().map(|e| e.scale(c)).collect(),
            eta: self.eta.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            space: self.space.clone(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
            eta: self.eta.iter().zip(&other.eta).map(|(a, b)| a + b).collect(),
        }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (v, c) in self.space.base_coords().iter().zip(self.coefficients()) {
            if !c.is_zero() {
                parts.push(format!("({c})*d/d{v}"));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// A generator extended to jet coordinates up to `order`.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    pub field: VectorField,
    pub order: usize,
    /// Coefficient for every jet coordinate of order 0..=order.
    pub coeffs: BTreeMap<JetVar, Expr>,
}

impl ProlongedField {
    pub fn coefficient(&self, v: &JetVar) -> Option<&Expr> {
        self.coeffs.get(v)
    }

    /// X^(n) e: ξ_j ∂e/∂x_j + Σ η_J ∂e/∂u_J.
    pub fn apply(&self, e: &Expr) -> Result<Expr, JetError> {
        let space = self.field.space();
        let order = space.expr_order(e);
        if order > self.order {
            return Err(JetError::OrderTooHigh {
                expr_order: order,
                field_order: self.order,
            });
        }
        let mut acc = Expr::zero();
        for (j, x) in space.independents().iter().enumerate() {
            if !self.field.xi[j].is_zero() {
                acc = acc + &self.field.xi[j] * e.diff(x);
            }
        }
        for v in space.jets_in(e) {
            let c = &self.coeffs[&v];
            if !c.is_zero() {
                acc = acc + c * e.diff(&space.jet_symbol(&v));
            }
        }
        Ok(acc)
    }
}

pub fn prolong(x: &VectorField, n: usize) -> ProlongedField {
    prolong_with(x, n, Exec::default())
}

/// η_{J∪j} = D_j η_J − Σ_i (D_j ξ_i) u_{J∪i}, level by level; each level's
/// coefficients are independent and computed as one batch.
pub fn prolong_with(x: &VectorField, n: usize, exec: Exec) -> ProlongedField {
    let space = x.space().extended_to(n);
    let p = space.p();
    let dxi: Vec<Vec<Expr>> = (0..p)
        .map(|j| x.xi.iter().map(|xi| total_derivative(&space, xi, j)).collect())
        .collect();
    let mut coeffs = BTreeMap::new();
    for (d, eta) in x.eta.iter().enumerate() {
        coeffs.insert(JetVar::new(d, vec![]), eta.clone());
    }
    for k in 1..=n {
        let level = space.jets_of_order(k);
        let computed = exec::map(exec, &level, |v| {
            let j = *v.index.last().unwrap();
            let parent = JetVar::new(v.dep, v.index[..k - 1].to_vec());
            let mut acc = total_derivative(&space, &coeffs[&parent], j);
            for (i, dx) in dxi[j].iter().enumerate() {
                if !dx.is_zero() {
                    acc = acc - dx * space.jet_expr(&parent.raised(i));
                }
            }
            acc
        });
        coeffs.extend(level.into_iter().zip(computed));
    }
    ProlongedField {
        field: x.clone(),
        order: n,
        coeffs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let v = JetVar::new(0, vec![1, 0]);
        assert_eq!(s.jet_name(&v), "u_12");
        assert_eq!(s.jet_of_name("u_21"), Some(v.clone()));
        assert_eq!(s.jet_of_name("u_3"), None);
        let o = JetSpace::new(&["x"], &["y"], 3).unwrap();
        assert_eq!(o.jet_name(&JetVar::new(0, vec![0, 0])), "y''");
        assert_eq!(o.parse("y_11 - y''").unwrap(), Expr::zero());
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(matches!(JetSpace::new(&["x"], &["x"], 1), Err(JetError::Duplicate(_))));
        assert!(matches!(JetSpace::new(&["x"], &["u_1"], 1), Err(JetError::BadName(_))));
        assert!(matches!(JetSpace::new(&[], &["u"], 1), Err(JetError::Empty)));
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert_eq!(multi_indices(1, 4), vec![vec![0, 0, 0, 0]]);
    }

    #[test]
    fn ode_total_derivatives() {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let d = total_derivative(&s, &s.parse("x*y").unwrap(), 0);
        assert_eq!(d, s.parse("y + x*y'").unwrap());
        let yp = s.parse("y'").unwrap();
        let e = d - yp * total_derivative(&s, &s.parse("x^2").unwrap(), 0);
        assert_eq!(e, s.parse("y - x*y'").unwrap());
    }

    #[test]
    fn pde_total_derivative() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        assert_eq!(total_derivative(&s, &s.parse("u_1").unwrap(), 1), s.parse("u_12").unwrap());
    }

    #[test]
    fn field_rejects_jet_dependence() {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        assert!(matches!(VectorField::parse(&s, &["y'", "0"]), Err(JetError::NotPointField { .. })));
    }

    #[test]
    fn prolong_scaling_fields() {
        let s = JetSpace::new(&["x"], &["y"], 3).unwrap();
        let x2 = VectorField::parse(&s, &["x", "1/2*y"]).unwrap();
        let p = prolong(&x2, 1);
        assert_eq!(p.coeffs[&JetVar::new(0, vec![0])], s.parse("-1/2*y'").unwrap());

        let x2 = VectorField::parse(&s, &["x", "-y"]).unwrap();
        let p = prolong(&x2, 3);
        assert_eq!(p.coeffs[&JetVar::new(0, vec![0])], s.parse("-2*y'").unwrap());
        assert_eq!(p.coeffs[&JetVar::new(0, vec![0, 0])], s.parse("-3*y''").unwrap());
        assert_eq!(p.coeffs[&JetVar::new(0, vec![0, 0, 0])], s.parse("-4*y'''").unwrap());
    }

    #[test]
    fn prolong_pde_scaling() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let x2 = VectorField::parse(&s, &["x1", "2*x2", "u"]).unwrap();
        let p = prolong(&x2, 1);
        assert!(p.coeffs[&JetVar::new(0, vec![0])].is_zero());
        assert_eq!(p.coeffs[&JetVar::new(0, vec![1])], s.parse("-u_2").unwrap());
    }

    #[test]
    fn apply_wrong_field() {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let x = VectorField::parse(&s, &["0", "x"]).unwrap();
        let p = prolong(&x, 2);
        let e = s.parse("y'' - (1+x)*y'^2 - y'").unwrap();
        assert_eq!(p.apply(&e).unwrap(), s.parse("-2*(1+x)*y' - 1").unwrap());
        assert!(p.apply(&Expr::int(5)).unwrap().is_zero());
        assert!(matches!(prolong(&x, 1).apply(&e), Err(JetError::OrderTooHigh { .. })));
    }

    #[test]
    fn translation_kills_u_free_equation() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let du = VectorField::parse(&s, &["0", "0", "1"]).unwrap();
        let e = s.parse("u_11 - u_2 + exp(x2)*u_1^2").unwrap();
        assert!(prolong(&du, 2).apply(&e).unwrap().is_zero());
    }
}
