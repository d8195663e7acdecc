use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{Mono, Poly};
use super::{poly_of, Expr, Kernel, Node};

const MAX_CLEAR_PASSES: usize = 8;

/// Write a normalized expression as `numerator / denominator` where the
/// denominator is a single monomial and the numerator carries no negative
/// exponents at its top level.
pub fn numerator_denominator(e: &Expr) -> (Expr, Expr) {
    let mut num = poly_of(e);
    let mut den = Poly::one();
    for _ in 0..MAX_CLEAR_PASSES {
        let m = negative_part(&num);
        if m.is_empty() {
            break;
        }
        let mut clear = Poly::zero();
        clear.terms.insert(m, BigRational::one());
        num = num.mul(&clear);
        den = den.mul(&clear);
    }
    (num.to_expr(), den.to_expr())
}

/// For each atom the largest negative exponent over all terms, flipped.
fn negative_part(p: &Poly) -> Mono {
    let mut out = Mono::new();
    for m in p.terms.keys() {
        for (a, e) in m {
            if e.is_negative() {
                let need = -e.clone();
                let cur = out.get(a).cloned().unwrap_or_else(BigRational::zero);
                if need > cur {
                    out.insert(a.clone(), need);
                }
            }
        }
    }
    out
}

/// Structural zero test: the normal form is zero, or the numerator after
/// clearing denominators is.
pub fn is_zero_structural(e: &Expr) -> bool {
    if e.is_zero() {
        return true;
    }
    numerator_denominator(e).0.is_zero()
}

/// Numerator with common monomial factors and rational content removed
/// (leading coefficient 1). Zero stays zero.
pub fn content_free_numerator(e: &Expr) -> Expr {
    let (n, _) = numerator_denominator(e);
    let n = strip_exp_factor(&n);
    let p = poly_of(&n);
    if p.is_zero() {
        return Expr::zero();
    }
    if p.terms.len() == 1 {
        return Expr::one();
    }
    let (_, _, s) = p.factor();
    s.to_expr()
}

fn exp_arg(m: &Mono) -> Option<Expr> {
    m.iter().find_map(|(a, k)| match a.node() {
        Node::Call(Kernel::Exp, arg) if k.is_one() => Some(arg.clone()),
        _ => None,
    })
}

/// Merged exponentials differ term by term, so a common `exp` factor is not
/// a common atom. Divide by the first term's exponential when every term
/// carries one.
fn strip_exp_factor(n: &Expr) -> Expr {
    let p = poly_of(n);
    let Some(first) = p.terms.keys().next().and_then(exp_arg) else {
        return n.clone();
    };
    if !p.terms.keys().all(|m| exp_arg(m).is_some()) {
        return n.clone();
    }
    n * Expr::exp(&-first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Vocabulary};

    fn p(s: &str) -> Expr {
        parse_expr(s, &Vocabulary::permissive()).unwrap()
    }

    #[test]
    fn clears_sum_denominators() {
        let e = p("1/(x+1) - 1/(x+2)");
        let (n, d) = numerator_denominator(&e);
        assert!(n.is_constant());
        let back = n.checked_div(&d).unwrap();
        assert!(crate::expr::equiv(&back, &e, &Default::default()).unwrap());
    }

    #[test]
    fn structural_zero_through_denominators() {
        let e = p("1/(x+1) + x/(x+1) - 1");
        assert!(is_zero_structural(&e));
    }

    #[test]
    fn content_removed() {
        let e = p("(6*x^2*y + 4*x*y)/z");
        assert_eq!(content_free_numerator(&e), p("1 + 3/2*x"));
    }
}
