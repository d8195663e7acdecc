use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use crate::exec::Exec;

use super::{free_vars, is_zero_structural, Expr, ExprError, Kernel, Node, Symbol};

pub const DEFAULT_SEED: u64 = 0x5eed_1e5a;

/// Numeric policy shared by every equivalence and sampling check.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Samples are rationals `k / denominator` inside `[low, high]`.
    pub low: f64,
    pub high: f64,
    pub denominator: u32,
    /// Pass bound for on-manifold substitution.
    pub max_passes: usize,
    pub exec: Exec,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            samples: 16,
            tolerance: 1e-9,
            seed: DEFAULT_SEED,
            low: 0.5,
            high: 2.0,
            denominator: 64,
            max_passes: 10,
            exec: Exec::default(),
        }
    }
}

impl Config {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain violation: {0}")]
    Domain(String),
}

pub type Point = BTreeMap<Symbol, f64>;

/// IEEE double evaluation.
pub fn eval_numeric(e: &Expr, point: &Point) -> Result<f64, EvalError> {
    let v = eval(e, point)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(format!("non-finite value of `{e}`")))
    }
}

fn eval(e: &Expr, point: &Point) -> Result<f64, EvalError> {
    Ok(match e.node() {
        Node::Num(q) => q.to_f64().unwrap_or(f64::NAN),
        Node::Var(s) => *point.get(s).ok_or_else(|| EvalError::Unbound(s.to_string()))?,
        Node::Add(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += eval(t, point)?;
            }
            acc
        }
        Node::Mul(fs) => {
            let mut acc = 1.0;
            for f in fs {
                acc *= eval(f, point)?;
            }
            acc
        }
        Node::Pow(b, q) => {
            let base = eval(b, point)?;
            if q.denom() == &1.into() {
                let k = q.numer().to_i32().unwrap_or(i32::MAX);
                if base == 0.0 && k < 0 {
                    return Err(EvalError::Domain(format!("division by zero in `{e}`")));
                }
                base.powi(k)
            } else if base > 0.0 {
                base.powf(q.to_f64().unwrap_or(f64::NAN))
            } else if base == 0.0 && q.is_positive() {
                0.0
            } else if base < 0.0 && !(q.denom() % 2u32).is_zero() {
                let mag = (-base).powf(q.to_f64().unwrap_or(f64::NAN));
                if (q.numer() % 2u32).is_zero() {
                    mag
                } else {
                    -mag
                }
            } else {
                return Err(EvalError::Domain(format!("fractional power of nonpositive base in `{e}`")));
            }
        }
        Node::Call(k, a) => {
            let x = eval(a, point)?;
            match k {
                Kernel::Exp => x.exp(),
                Kernel::Log => {
                    if x <= 0.0 {
                        return Err(EvalError::Domain(format!("log of nonpositive value in `{e}`")));
                    }
                    x.ln()
                }
                Kernel::Sin => x.sin(),
                Kernel::Cos => x.cos(),
                Kernel::Tan => x.tan(),
                Kernel::Sinh => x.sinh(),
                Kernel::Cosh => x.cosh(),
                Kernel::Tanh => x.tanh(),
            }
        }
    })
}

/// `count` candidate points for `vars`, deterministic in the seed.
pub fn sample_points(vars: &[Symbol], count: usize, cfg: &Config) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    candidates(&mut rng, vars, count, cfg)
}

fn candidates(rng: &mut ChaCha8Rng, vars: &[Symbol], count: usize, cfg: &Config) -> Vec<Point> {
    let d = cfg.denominator.max(1) as f64;
    let lo = (cfg.low * d).ceil() as i64;
    let hi = ((cfg.high * d).floor() as i64).max(lo);
    (0..count)
        .map(|_| {
            vars.iter()
                .map(|v| (v.clone(), rng.random_range(lo..=hi) as f64 / d))
                .collect()
        })
        .collect()
}

/// Evaluate the top-level terms of `e` at valid sample points and return
/// `(value, scale)` per point, where scale is the sum of term magnitudes.
fn sampled_terms(e: &Expr, cfg: &Config) -> Result<Vec<(f64, f64)>, ExprError> {
    let vars: Vec<Symbol> = free_vars(e).into_iter().collect();
    let terms = e.terms();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.samples);
    let max_rounds = 16;
    for _ in 0..max_rounds {
        if out.len() >= cfg.samples {
            break;
        }
        let batch = candidates(&mut rng, &vars, cfg.samples, cfg);
        let evals = crate::exec::map(cfg.exec, &batch, |pt| {
            let mut sum = 0.0;
            let mut scale = 0.0;
            for t in &terms {
                let v = eval_numeric(t, pt)?;
                sum += v;
                scale += v.abs();
            }
            Ok::<_, EvalError>((sum, scale))
        });
        out.extend(evals.into_iter().filter_map(Result::ok));
    }
    if out.len() < cfg.samples {
        return Err(ExprError::SamplingDomainEmpty(format!(
            "only {} of {} sample points valid for `{e}`",
            out.len(),
            cfg.samples
        )));
    }
    out.truncate(cfg.samples);
    Ok(out)
}

/// Zero test: structural first, then numeric sampling with a tolerance
/// relative to the magnitude of the individual terms.
pub fn equiv_zero(e: &Expr, cfg: &Config) -> Result<bool, ExprError> {
    if is_zero_structural(e) {
        return Ok(true);
    }
    if e.is_constant() {
        return Ok(false);
    }
    let vals = sampled_terms(e, cfg)?;
    Ok(vals.iter().all(|(v, scale)| v.abs() <= cfg.tolerance * scale.max(1.0)))
}

pub fn equiv(a: &Expr, b: &Expr, cfg: &Config) -> Result<bool, ExprError> {
    if a == b {
        return Ok(true);
    }
    equiv_zero(&(a - b), cfg)
}

/// True if `e` is nonzero at every sample point (a sampled-nonzero factor).
pub fn sampled_nonzero(e: &Expr, cfg: &Config) -> Result<bool, ExprError> {
    if is_zero_structural(e) {
        return Ok(false);
    }
    if e.is_constant() {
        return Ok(true);
    }
    let vals = sampled_terms(e, cfg)?;
    Ok(vals.iter().all(|(v, scale)| v.abs() > cfg.tolerance * scale.max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Vocabulary};

    fn p(s: &str) -> Expr {
        parse_expr(s, &Vocabulary::permissive()).unwrap()
    }

    fn at(pairs: &[(&str, f64)]) -> Point {
        pairs.iter().map(|(k, v)| (Symbol::new(k), *v)).collect()
    }

    #[test]
    fn evaluates_bernoulli_solution() {
        let v = eval_numeric(&p("1/(exp(-x)-x)"), &at(&[("x", 0.5)])).unwrap();
        assert!((v - 1.0 / ((-0.5f64).exp() - 0.5)).abs() < 1e-12);
        assert!((v - 9.38697).abs() < 1e-4);
        assert_eq!(eval_numeric(&p("x^2"), &at(&[("x", 3.0)])).unwrap(), 9.0);
        assert_eq!(eval_numeric(&Expr::zero(), &Point::new()).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(eval_numeric(&p("log(x)"), &at(&[("x", -1.0)])), Err(EvalError::Domain(_))));
        assert!(matches!(eval_numeric(&p("x^(1/2)"), &at(&[("x", -1.0)])), Err(EvalError::Domain(_))));
        assert!(matches!(eval_numeric(&p("x"), &Point::new()), Err(EvalError::Unbound(_))));
    }

    #[test]
    fn empty_domain_reported() {
        let cfg = Config {
            low: -2.0,
            high: -0.5,
            ..Config::default()
        };
        let e = p("log(x) - x");
        assert!(matches!(equiv_zero(&e, &cfg), Err(ExprError::SamplingDomainEmpty(_))));
    }

    #[test]
    fn equivalences() {
        let cfg = Config::default();
        assert!(equiv(&p("y + x*yp - 2*x*yp"), &p("y - x*yp"), &cfg).unwrap());
        assert!(!equiv(&p("x"), &p("x+1"), &cfg).unwrap());
        assert!(equiv(&p("8^(1/2)"), &p("2*2^(1/2)"), &cfg).unwrap());
        assert!(equiv(&p("sin(x)^2 + cos(x)^2"), &Expr::one(), &cfg).unwrap());
    }

    #[test]
    fn sequential_matches_parallel() {
        let e = p("sin(x)^2 + cos(x)^2 - 1 + y*10^(-12)");
        let a = equiv_zero(&e, &Config::default().with_exec(Exec::Parallel)).unwrap();
        let b = equiv_zero(&e, &Config::default().with_exec(Exec::Sequential)).unwrap();
        assert_eq!(a, b);
    }
}
