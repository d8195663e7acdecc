use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::{poly_of_normal, Mono, Poly};
use super::{Expr, ExprError, Kernel, Node, Symbol};

pub(crate) fn contains_var(e: &Expr, v: &Symbol) -> bool {
    match e.node() {
        Node::Num(_) => false,
        Node::Var(s) => s == v,
        Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| contains_var(x, v)),
        Node::Pow(b, _) => contains_var(b, v),
        Node::Call(_, a) => contains_var(a, v),
    }
}

/// Variables occurring in `e`. For normalized input, structurally cancelled
/// variables are absent.
pub fn free_vars(e: &Expr) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    collect(e, &mut out);
    out
}

fn collect(e: &Expr, out: &mut BTreeSet<Symbol>) {
    match e.node() {
        Node::Num(_) => {}
        Node::Var(s) => {
            out.insert(s.clone());
        }
        Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| collect(x, out)),
        Node::Pow(b, _) => collect(b, out),
        Node::Call(_, a) => collect(a, out),
    }
}

/// Simultaneous substitution followed by normalization.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr, ExprError> {
    if bindings.is_empty() {
        return Ok(e.clone());
    }
    let replaced = replace(e, bindings);
    Ok(Poly::from_expr(&replaced)?.to_expr())
}

fn replace(e: &Expr, b: &BTreeMap<Symbol, Expr>) -> Expr {
    match e.node() {
        Node::Num(_) => e.clone(),
        Node::Var(s) => b.get(s).cloned().unwrap_or_else(|| e.clone()),
        Node::Add(xs) => Expr::raw_add(xs.iter().map(|x| replace(x, b)).collect()),
        Node::Mul(xs) => Expr::raw_mul(xs.iter().map(|x| replace(x, b)).collect()),
        Node::Pow(base, q) => Expr::raw_pow(replace(base, b), q.clone()),
        Node::Call(k, a) => Expr::raw_call(*k, replace(a, b)),
    }
}

impl Expr {
    /// Partial derivative with respect to `v`, all other symbols held fixed.
    pub fn diff(&self, v: &Symbol) -> Expr {
        diff_poly(&poly_of_normal(self), v).to_expr()
    }

    pub fn depends_syntactically_on(&self, v: &Symbol) -> bool {
        contains_var(self, v)
    }
}

fn diff_poly(p: &Poly, v: &Symbol) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        for (atom, e) in m {
            if !contains_var(atom, v) {
                continue;
            }
            let da = diff_atom(atom, v);
            if da.is_zero() {
                continue;
            }
            let mut rest: Mono = m.clone();
            let lowered = e - BigRational::one();
            if lowered.is_zero() {
                rest.remove(atom);
            } else {
                rest.insert(atom.clone(), lowered);
            }
            let mut t = Poly::zero();
            t.terms.insert(Mono::new(), c * e);
            // rebuild through multiplication so canonical invariants hold
            let rest_poly = mono_poly(rest);
            out = out.add(&t.mul(&rest_poly).mul(&da));
        }
    }
    out
}

fn mono_poly(m: Mono) -> Poly {
    let mut acc = Poly::one();
    for (a, e) in m {
        let mut single = Mono::new();
        single.insert(a, e);
        let mut p = Poly::zero();
        p.terms.insert(single, BigRational::one());
        acc = acc.mul(&p);
    }
    acc
}

fn diff_atom(atom: &Expr, v: &Symbol) -> Poly {
    match atom.node() {
        Node::Num(_) => Poly::zero(),
        Node::Var(s) => {
            if s == v {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Node::Add(_) => diff_poly(&poly_of_normal(atom), v),
        Node::Mul(_) | Node::Pow(..) => diff_poly(&poly_of_normal(atom), v),
        Node::Call(k, arg) => {
            let darg = diff_poly(&poly_of_normal(arg), v);
            if darg.is_zero() {
                return Poly::zero();
            }
            let a = poly_of_normal(arg);
            let call = |k: Kernel| Poly::kernel(k, a.clone()).expect("kernel of normalized arg");
            let outer = match k {
                Kernel::Exp => call(Kernel::Exp),
                Kernel::Log => a.pow(&-BigRational::one()).expect("log argument is nonzero"),
                Kernel::Sin => call(Kernel::Cos),
                Kernel::Cos => call(Kernel::Sin).neg(),
                Kernel::Tan => {
                    let t = call(Kernel::Tan);
                    Poly::one().add(&t.mul(&t))
                }
                Kernel::Sinh => call(Kernel::Cosh),
                Kernel::Cosh => call(Kernel::Sinh),
                Kernel::Tanh => {
                    let t = call(Kernel::Tanh);
                    Poly::one().add(&t.mul(&t).neg())
                }
            };
            outer.mul(&darg)
        }
    }
}
