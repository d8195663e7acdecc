//! Rendering in the parser's grammar. `parse(render(e)) == e` for
//! normalized `e`.

use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Node};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    let (c, rest) = t.coefficient_split();
                    if i == 0 {
                        write_term(f, &c, &rest)?;
                    } else if c.is_negative() {
                        f.write_str(" - ")?;
                        write_term(f, &-c, &rest)?;
                    } else {
                        f.write_str(" + ")?;
                        write_term(f, &c, &rest)?;
                    }
                }
                Ok(())
            }
            _ => {
                let (c, rest) = self.coefficient_split();
                write_term(f, &c, &rest)
            }
        }
    }
}

fn write_rational(f: &mut dyn Write, q: &BigRational) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// `c * rest` where `rest` is a product of atoms (or 1).
fn write_term(f: &mut fmt::Formatter<'_>, c: &BigRational, rest: &Expr) -> fmt::Result {
    let factors: Vec<Expr> = match rest.node() {
        Node::Mul(fs) => fs.clone(),
        Node::Num(q) if q.is_one() => vec![],
        _ => vec![rest.clone()],
    };
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    for x in &factors {
        match x.node() {
            // an integer power of a sum would re-expand when read back
            Node::Pow(b, q) if q.is_negative() && !(matches!(b.node(), Node::Add(_)) && q.denom().is_one() && !(-q).is_one()) => {
                den.push(power(b, &-q.clone()))
            }
            Node::Pow(b, q) => num.push(power(b, q)),
            _ => num.push(atom(x)),
        }
    }
    if c.is_negative() {
        f.write_char('-')?;
    }
    let a = c.abs();
    let mut first = true;
    if !a.is_one() || num.is_empty() {
        write_rational(f, &a)?;
        first = false;
    }
    for s in &num {
        if !first {
            f.write_char('*')?;
        }
        f.write_str(s)?;
        first = false;
    }
    for s in &den {
        write!(f, "/{s}")?;
    }
    Ok(())
}

fn power(b: &Expr, q: &BigRational) -> String {
    let base = atom(b);
    if q.is_one() {
        return base;
    }
    let mut s = base;
    s.push('^');
    if q.denom().is_one() && q.is_positive() {
        write!(s, "{}", q.numer()).unwrap();
    } else {
        s.push('(');
        write_rational(&mut s, q).unwrap();
        s.push(')');
    }
    s
}

/// An atom rendered so that it binds tighter than `*`, `/` and `^`.
fn atom(e: &Expr) -> String {
    match e.node() {
        Node::Var(s) => s.to_string(),
        Node::Call(k, a) => format!("{}({})", k.name(), a),
        Node::Num(q) if q.denom().is_one() && !q.is_negative() => q.numer().to_string(),
        _ => format!("({e})"),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse_expr, Vocabulary};

    fn rt(s: &str) {
        let voc = Vocabulary::permissive();
        let e = parse_expr(s, &voc).unwrap();
        let text = e.to_string();
        let back = parse_expr(&text, &voc).unwrap();
        assert_eq!(e, back, "{s} -> {text}");
    }

    #[test]
    fn round_trips() {
        for s in [
            "0",
            "-3/4",
            "x - y",
            "-x",
            "1/2*x^2 - 3*x*y/z",
            "u^(-4/3)*u_11",
            "exp(-x2)*log(u)",
            "1/(exp(-x) - x)",
            "(x^2 + 1)^(1/2)",
            "2^(1/2)*x",
            "(-x)^(1/2)",
            "sin(x)/cos(y)^2",
            "y'' - (1+x)*y'^2 - y'",
        ] {
            rt(s);
        }
    }

    #[test]
    fn readable() {
        let voc = Vocabulary::permissive();
        let e = parse_expr("y - x*yp", &voc).unwrap();
        assert_eq!(e.to_string(), "-x*yp + y");
        let e = parse_expr("-1/2*yp", &voc).unwrap();
        assert_eq!(e.to_string(), "-1/2*yp");
    }
}
