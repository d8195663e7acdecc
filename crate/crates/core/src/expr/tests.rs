use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;

fn p(s: &str) -> Expr {
    parse_expr(s, &Vocabulary::permissive()).unwrap()
}

fn sym(s: &str) -> Symbol {
    Symbol::new(s)
}

#[test]
fn diff_examples() {
    assert_eq!(p("(1+x)*a^2 + a").diff(&sym("a")), p("2*(1+x)*a + 1"));
    assert_eq!(p("exp(-x2)*log(u)").diff(&sym("u")), p("exp(-x2)/u"));
    assert!(Expr::frac(7, 3).diff(&sym("x")).is_zero());
    assert_eq!(p("sin(x^2)").diff(&sym("x")), p("2*x*cos(x^2)"));
    assert_eq!(p("(x^2+1)^(1/2)").diff(&sym("x")), p("x*(x^2+1)^(-1/2)"));
}

#[test]
fn substitute_examples() {
    let mut b = BTreeMap::new();
    b.insert(sym("yp"), p("a"));
    assert_eq!(substitute(&p("yp*x"), &b).unwrap(), p("a*x"));
    assert_eq!(substitute(&p("yp*x"), &BTreeMap::new()).unwrap(), p("yp*x"));

    // auxiliary chart denominator: u1 and u2 written through the inverse chart
    let mut b = BTreeMap::new();
    b.insert(sym("u"), p("r2*exp(s)"));
    b.insert(sym("x1"), p("exp(s)"));
    b.insert(sym("x2"), p("r1*exp(2*s)"));
    let e = substitute(&p("x1*u1 + 2*x2*u2 - u"), &b).unwrap();
    assert_eq!(e, p("exp(s)*u1 + 2*r1*exp(2*s)*u2 - r2*exp(s)"));
}

#[test]
fn free_vars_after_cancellation() {
    let fv = |s: &str| free_vars(&p(s)).into_iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert_eq!(fv("r*exp(s)"), vec!["r", "s"]);
    assert!(fv("y - y").is_empty());
    assert_eq!(fv("2*(1+x)*a + 1"), vec!["a", "x"]);
}

#[test]
fn normal_form_rules() {
    assert_eq!(p("exp(x)*exp(y)"), p("exp(x+y)"));
    assert_eq!(p("exp(2*log(x))"), p("x^2"));
    assert_eq!(p("log(x^3*y)"), p("3*log(x) + log(y)"));
    assert_eq!(p("log(exp(s))"), p("s"));
    assert_eq!(p("(x+1)^2"), p("x^2 + 2*x + 1"));
    assert_eq!(p("(x+1)^(-1)*(x+1)"), Expr::one());
    assert_eq!(p("((r*exp(s))^(1/2))^2"), p("r*exp(s)"));
    assert_eq!(p("4^(1/2)"), Expr::int(2));
    assert_eq!(p("(-8)^(1/3)"), Expr::int(-2));
    assert_eq!(p("(2*x+2)^(-1)"), p("1/2*(x+1)^(-1)"));
}

#[test]
fn equiv_examples() {
    let cfg = Config::default();
    assert!(equiv(&p("y + x*yp - 2*x*yp"), &p("y - x*yp"), &cfg).unwrap());
    assert!(!equiv(&p("x"), &p("x + 1"), &cfg).unwrap());
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        Just(Expr::var("z")),
        (1i64..5).prop_map(Expr::int),
        (1i64..5, 2i64..4).prop_map(|(n, d)| Expr::frac(n, d)),
    ]
}

/// Positive on positive samples: used under logs and fractional powers.
fn positive() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::raw_add),
            prop::collection::vec(inner, 2..3).prop_map(Expr::raw_mul),
        ]
    })
}

fn general() -> impl Strategy<Value = Expr> {
    let base = prop_oneof![
        4 => leaf(),
        1 => positive().prop_map(|e| Expr::raw_call(Kernel::Log, e)),
        1 => (positive(), prop_oneof![Just(rat(1, 2)), Just(rat(-1, 1)), Just(rat(-2, 3))])
            .prop_map(|(e, q)| Expr::raw_pow(e, q)),
    ];
    base.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            3 => prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::raw_add),
            3 => prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::raw_mul),
            1 => inner.clone().prop_map(|e| Expr::raw_mul(vec![Expr::int(-1), e])),
            1 => (inner.clone(), 0i64..3).prop_map(|(e, k)| Expr::raw_pow(e, rat(k, 1))),
            1 => inner.clone().prop_map(|e| Expr::raw_call(Kernel::Sin, e)),
            1 => inner.prop_map(|e| Expr::raw_call(Kernel::Exp, Expr::raw_mul(vec![Expr::frac(1, 4), e]))),
        ]
    })
}

fn normal() -> impl Strategy<Value = Expr> {
    general().prop_filter_map("normalizes", |e| e.normalize().ok())
}

fn var() -> impl Strategy<Value = Symbol> {
    prop_oneof![Just(sym("x")), Just(sym("y")), Just(sym("z"))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_idempotent(e in general()) {
        if let Ok(n) = e.normalize() {
            prop_assert_eq!(n.normalize().unwrap(), n);
        }
    }

    #[test]
    fn render_round_trip(e in normal()) {
        let back = parse_expr(&e.to_string(), &Vocabulary::permissive()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn product_rule(a in normal(), b in normal(), v in var()) {
        let lhs = (&a * &b).diff(&v);
        let rhs = &a.diff(&v) * &b + &a * &b.diff(&v);
        prop_assert!(equiv(&lhs, &rhs, &Config::default()).unwrap());
    }

    #[test]
    fn mixed_partials_commute(e in normal(), v in var(), w in var()) {
        let a = e.diff(&v).diff(&w);
        let b = e.diff(&w).diff(&v);
        prop_assert!(equiv(&a, &b, &Config::default()).unwrap());
    }

    #[test]
    fn identity_substitution(e in normal(), v in var()) {
        let mut b = BTreeMap::new();
        b.insert(v.clone(), Expr::symbol(&v));
        prop_assert_eq!(substitute(&e, &b).unwrap(), e);
    }

    #[test]
    fn equiv_reflexive_symmetric(a in normal(), b in normal()) {
        let cfg = Config::default();
        prop_assert!(equiv(&a, &a, &cfg).unwrap());
        prop_assert_eq!(equiv(&a, &b, &cfg).unwrap(), equiv(&b, &a, &cfg).unwrap());
    }
}
