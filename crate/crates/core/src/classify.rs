//! Point or nonlocal: classification of pushed-forward generators on a
//! reduced system, and the lift test for reduced point symmetries.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::expr::{equiv, equiv_zero, free_vars, Config, Expr, Symbol};
use crate::jet::{JetError, VectorField};
use crate::reduction::ReducedSystem;
use crate::system::{check_point_symmetry, DESystem, SystemError};
use crate::transform::{pushforward_field, PointTransformation, Pushforward};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Point,
    Nonlocal,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Point => "point",
            Verdict::Nonlocal => "nonlocal",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The rule that decided a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// A coefficient depends on a variable outside the reduced coordinates.
    ExplicitDependence,
    /// Coefficients are local and the field passes the symmetry check.
    LocalAndSymmetric,
    /// Coefficients are local but the symmetry check failed.
    NotSymmetric,
    /// Coefficients could not be rewritten in target coordinates.
    RawCoefficients,
    /// An independent-variable component depends on the gradient variables.
    BaseComponent,
    /// A gradient-variable component is not affine in the gradient variables.
    Affinity,
    /// Cross terms do not come from a base-component Jacobian.
    OffDiagonal,
    /// Diagonal terms do not share one constant dependent-variable weight.
    Diagonal,
    /// Inhomogeneous terms are not a gradient.
    Gradient,
    /// Every matching condition holds.
    Lifted,
    /// Parent has further dependent variables.
    Unsupported,
    /// A check could not be evaluated.
    Evaluation,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::ExplicitDependence => "explicit-dependence",
            Criterion::LocalAndSymmetric => "local-and-symmetric",
            Criterion::NotSymmetric => "not-symmetric",
            Criterion::RawCoefficients => "raw-coefficients",
            Criterion::BaseComponent => "base-component",
            Criterion::Affinity => "affinity",
            Criterion::OffDiagonal => "off-diagonal",
            Criterion::Diagonal => "diagonal",
            Criterion::Gradient => "gradient",
            Criterion::Lifted => "lifted",
            Criterion::Unsupported => "unsupported",
            Criterion::Evaluation => "evaluation",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub criterion: Criterion,
    /// Offending variable for nonlocal verdicts; unresolved condition otherwise.
    pub witness: Option<String>,
    pub detail: String,
}

impl Classification {
    fn new(verdict: Verdict, criterion: Criterion, witness: Option<String>, detail: impl Into<String>) -> Self {
        Classification {
            verdict,
            criterion,
            witness,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.verdict, self.criterion.name())?;
        if let Some(w) = &self.witness {
            write!(f, ", witness {w}")?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Variables a normalized expression really depends on.
fn essential_vars(e: &Expr, cfg: &Config) -> BTreeSet<Symbol> {
    free_vars(e)
        .into_iter()
        .filter(|v| !matches!(equiv_zero(&e.diff(v), cfg), Ok(true)))
        .collect()
}

/// Classify `x` after pushing it through `t` onto the reduced system.
/// Components along the translated canonical variables do not act on the
/// reduced system and are ignored.
pub fn classify_pushforward(
    x: &VectorField,
    t: &PointTransformation,
    aux: &[(Symbol, Expr)],
    reduced: &DESystem,
    cfg: &Config,
) -> (Classification, Option<Pushforward>) {
    let pf = match pushforward_field(x, t, aux, cfg) {
        Ok(pf) => pf,
        Err(e) => return (Classification::new(Verdict::Inconclusive, Criterion::Evaluation, None, e.to_string()), None),
    };
    (classify_coefficients(&pf, reduced, cfg), Some(pf))
}

pub fn classify_coefficients(pf: &Pushforward, reduced: &DESystem, cfg: &Config) -> Classification {
    if pf.raw {
        return Classification::new(Verdict::Inconclusive, Criterion::RawCoefficients, None, "coefficients left in source variables");
    }
    let space = &reduced.space;
    let local: BTreeSet<Symbol> = space.base_coords().into_iter().chain(space.parameters().iter().cloned()).collect();
    let translated: BTreeSet<Symbol> = pf.translated.iter().map(|(s, _)| s.clone()).collect();
    let mut offending: Vec<(Symbol, Symbol)> = Vec::new();
    for (coord, c) in &pf.coefficients {
        for v in essential_vars(c, cfg) {
            if !local.contains(&v) {
                offending.push((coord.clone(), v));
            }
        }
    }
    if !offending.is_empty() {
        let (coord, w) = offending
            .iter()
            .find(|(_, v)| translated.contains(v))
            .unwrap_or(&offending[0])
            .clone();
        return Classification::new(
            Verdict::Nonlocal,
            Criterion::ExplicitDependence,
            Some(w.to_string()),
            format!("coefficient of {coord} depends on {w}"),
        );
    }
    if let Some((coord, _)) = pf.coefficients.iter().find(|(s, c)| !local.contains(s) && !c.is_zero()) {
        return Classification::new(
            Verdict::Inconclusive,
            Criterion::Unsupported,
            Some(coord.to_string()),
            "coefficient on a coordinate the reduced system does not have",
        );
    }
    let field = match pf.as_field(space) {
        Ok(f) => f,
        Err(e) => return Classification::new(Verdict::Inconclusive, Criterion::Evaluation, None, e.to_string()),
    };
    match check_point_symmetry(reduced, &field, cfg) {
        Ok(r) if r.symmetric => Classification::new(Verdict::Point, Criterion::LocalAndSymmetric, None, format!("{field}")),
        Ok(r) => Classification::new(
            Verdict::Inconclusive,
            Criterion::NotSymmetric,
            None,
            format!("residuals {}", join(&r.residuals)),
        ),
        Err(e) => Classification::new(Verdict::Inconclusive, Criterion::Evaluation, None, e.to_string()),
    }
}

fn join(es: &[Expr]) -> String {
    es.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("field is not a point symmetry of the reduced system; residuals: {0}")]
    NotASymmetry(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Parent generator found by [`lift_test`]: `ξ_i(x)`, and `η = c·u + g(x)`
/// with `∇g` given. `eta` is filled in when `∇g ≡ 0`.
#[derive(Clone, Debug)]
pub struct Lift {
    pub xi: Vec<Expr>,
    pub weight: Expr,
    pub grad_g: Vec<Expr>,
    pub eta: Option<Expr>,
}

/// Does a point symmetry `y` of the reduced system come from a point symmetry
/// of the parent? The parent must have the eliminated variable as its only
/// dependent variable.
///
/// A parent point generator `(ξ(x,u), η(x,u))` acts on `α_j = u_j` by
/// `D_j η − (D_j ξ_i) α_i`. Matching against `y`, whose coefficients do not
/// involve `u`, forces `ξ = ξ(x)`, `η = c·u + g(x)`, so each `α_j` component
/// must be `g_j + c·α_j − (∂_j ξ_i) α_i`. The checks run in that order and the
/// first failure names the criterion.
pub fn lift_test(y: &VectorField, reduced: &ReducedSystem, cfg: &Config) -> Result<(Classification, Option<Lift>), LiftError> {
    let report = check_point_symmetry(&reduced.system, y, cfg)?;
    if !report.symmetric {
        return Err(LiftError::NotASymmetry(join(&report.residuals)));
    }
    let conn = &reduced.connection;
    if !conn.kept.is_empty() {
        return Ok((
            Classification::new(Verdict::Inconclusive, Criterion::Unsupported, None, "parent has more than one dependent variable"),
            None,
        ));
    }
    match lift_conditions(y, reduced, cfg) {
        Ok(r) => Ok(r),
        Err(e) => Ok((Classification::new(Verdict::Inconclusive, Criterion::Evaluation, None, e.to_string()), None)),
    }
}

fn lift_conditions(
    y: &VectorField,
    reduced: &ReducedSystem,
    cfg: &Config,
) -> Result<(Classification, Option<Lift>), crate::expr::ExprError> {
    let conn = &reduced.connection;
    let space = &reduced.system.space;
    let xs = space.independents();
    let p = xs.len();
    let alphas: Vec<Symbol> = conn.aux_deps.iter().map(|&d| space.dependents()[d].clone()).collect();
    let nonlocal = |c: Criterion, w: String, d: String| Ok((Classification::new(Verdict::Nonlocal, c, Some(w), d), None));

    for (i, xi) in y.xi.iter().enumerate() {
        for a in &alphas {
            if !equiv_zero(&xi.diff(a), cfg)? {
                return nonlocal(
                    Criterion::BaseComponent,
                    a.to_string(),
                    format!("component along {} depends on {a}", xs[i]),
                );
            }
        }
    }
    // a[j][i] = coefficient of alpha_i in the alpha_j component, a0[j] the rest
    let eta: Vec<Expr> = conn.aux_deps.iter().map(|&d| y.eta[d].clone()).collect();
    let mut a = vec![vec![Expr::zero(); p]; p];
    let mut a0 = vec![Expr::zero(); p];
    let zero_alpha: std::collections::BTreeMap<Symbol, Expr> = alphas.iter().map(|s| (s.clone(), Expr::zero())).collect();
    for j in 0..p {
        for (i, ai) in alphas.iter().enumerate() {
            let d = eta[j].diff(ai);
            for ak in &alphas {
                if !equiv_zero(&d.diff(ak), cfg)? {
                    return nonlocal(
                        Criterion::Affinity,
                        ai.to_string(),
                        format!("component along {} is not affine in {ai}, {ak}", alphas[j]),
                    );
                }
            }
            a[j][i] = crate::expr::substitute(&d, &zero_alpha)?;
        }
        a0[j] = crate::expr::substitute(&eta[j], &zero_alpha)?;
    }
    for j in 0..p {
        for i in 0..p {
            if i != j && !equiv(&a[j][i], &-y.xi[i].diff(&xs[j]), cfg)? {
                return nonlocal(
                    Criterion::OffDiagonal,
                    alphas[i].to_string(),
                    format!("coefficient of {} in the {} component is {}, needs {}", alphas[i], alphas[j], a[j][i], -y.xi[i].diff(&xs[j])),
                );
            }
        }
    }
    let weights: Vec<Expr> = (0..p).map(|j| &a[j][j] + &y.xi[j].diff(&xs[j])).collect();
    for (j, w) in weights.iter().enumerate() {
        let varies = !w.is_constant() && !free_vars(w).iter().all(|v| matches!(equiv_zero(&w.diff(v), cfg), Ok(true)));
        if varies || (j > 0 && !equiv(w, &weights[0], cfg)?) {
            return nonlocal(
                Criterion::Diagonal,
                alphas[j].to_string(),
                format!("weight {w} along {} is not one shared constant", alphas[j]),
            );
        }
    }
    for j in 0..p {
        for k in j + 1..p {
            if !equiv(&a0[j].diff(&xs[k]), &a0[k].diff(&xs[j]), cfg)? {
                return nonlocal(
                    Criterion::Gradient,
                    format!("{}, {}", alphas[j], alphas[k]),
                    "inhomogeneous terms are not a gradient".into(),
                );
            }
        }
    }
    let u = Expr::symbol(&conn.parent.dependents()[conn.eliminated]);
    let weight = weights.first().cloned().unwrap_or_else(Expr::zero);
    let eta = a0.iter().all(Expr::is_zero).then(|| &weight * &u);
    let lift = Lift {
        xi: y.xi.clone(),
        weight,
        grad_g: a0,
        eta,
    };
    let detail = match &lift.eta {
        Some(e) => format!("xi = ({}), eta = {e}", join(&lift.xi)),
        None => format!("xi = ({}), eta = {}*{u} + g with grad g = ({})", join(&lift.xi), lift.weight, join(&lift.grad_g)),
    };
    Ok((Classification::new(Verdict::Point, Criterion::Lifted, None, detail), Some(lift)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;
    use crate::reduction::{reduce_ode, reduce_pde};

    fn cfg() -> Config {
        Config::default()
    }

    fn bernoulli() -> ReducedSystem {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let sys = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        reduce_ode(&sys, None, None, &cfg()).unwrap()
    }

    #[test]
    fn bernoulli_symmetry_is_nonlocal_for_parent() {
        let red = bernoulli();
        let y = VectorField::parse(&red.system.space, &["0", "alpha*(1+x*alpha)"]).unwrap();
        let (c, lift) = lift_test(&y, &red, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Nonlocal);
        assert_eq!(c.criterion, Criterion::Affinity);
        assert!(lift.is_none());
    }

    #[test]
    fn translation_lifts() {
        // ∂x is not a symmetry of the Bernoulli equation (explicit x), so use
        // an autonomous one
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let sys = DESystem::parse(&s, &["y'' - y'^2"], &cfg()).unwrap();
        let red = reduce_ode(&sys, None, None, &cfg()).unwrap();
        let y = VectorField::parse(&red.system.space, &["1", "0"]).unwrap();
        let (c, lift) = lift_test(&y, &red, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Point);
        let lift = lift.unwrap();
        assert!(lift.xi[0].is_one());
        assert!(lift.eta.unwrap().is_zero());
    }

    #[test]
    fn non_symmetry_is_an_error() {
        let red = bernoulli();
        for c in [["0", "1"], ["1", "0"]] {
            let y = VectorField::parse(&red.system.space, &c).unwrap();
            assert!(matches!(lift_test(&y, &red, &cfg()), Err(LiftError::NotASymmetry(_))));
        }
    }

    #[test]
    fn gradient_system_symmetry() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let sys = DESystem::parse(&s, &["u_2 - u_1^(-4/3)*u_11"], &cfg()).unwrap();
        let red = reduce_pde(&sys, None, None, &cfg()).unwrap();
        let sp = &red.system.space;
        let y = VectorField::parse(sp, &["x1^2", "0", "-3*x1*alpha", "-3*alpha^(-1/3) - x1*beta"]).unwrap();
        let (c, _) = lift_test(&y, &red, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Nonlocal);
        // the scaling lifts with weight 1
        let x2 = VectorField::parse(sp, &["x1", "2*x2", "0", "-beta"]).unwrap();
        let (c, lift) = lift_test(&x2, &red, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Point, "{c}");
        assert!(lift.unwrap().weight.is_one());
    }
}
