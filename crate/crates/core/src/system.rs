//! Differential-equation systems with solved forms, on-manifold reduction,
//! point-symmetry verification, and solution checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::expr::{equiv_zero, substitute, Config, Expr, ExprError, Symbol};
use crate::jet::{prolong_with, total_derivative, total_derivative_multi, JetError, JetSpace, JetVar, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("system has no equations")]
    NoEquations,
    #[error("equation {index} (`{equation}`) is not affine in any of its highest-order jet variables; supply a solved form")]
    NotSolvable { index: usize, equation: String },
    #[error("no assignment of pairwise distinct leading jet variables exists")]
    LeadsNotDistinct,
    #[error("equation {index} is not affine in `{lead}`")]
    NotAffine { index: usize, lead: String },
    #[error("on-manifold reduction did not settle within {0} passes")]
    NoFixedPoint(usize),
    #[error("candidate must depend on independent variables and parameters only; found `{0}`")]
    BadCandidate(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqRole {
    Given,
    Reduced,
    Integrability,
}

impl EqRole {
    pub fn name(self) -> &'static str {
        match self {
            EqRole::Given => "given",
            EqRole::Reduced => "reduced-equation",
            EqRole::Integrability => "integrability",
        }
    }
}

/// `lead = rhs` equivalent to the equation on its solution set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolvedForm {
    pub lead: JetVar,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub expr: Expr,
    pub role: EqRole,
    pub solved: SolvedForm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DESystem {
    pub space: JetSpace,
    pub equations: Vec<Equation>,
}

/// Solve `e` for `v` when `e` is affine in `v` with a coefficient that is not
/// identically zero.
fn solve_affine(space: &JetSpace, e: &Expr, v: &JetVar, cfg: &Config) -> Result<Option<Expr>, ExprError> {
    let s = space.jet_symbol(v);
    let a = e.diff(&s);
    if equiv_zero(&a, cfg)? {
        return Ok(None);
    }
    if !equiv_zero(&a.diff(&s), cfg)? {
        return Ok(None);
    }
    let mut at0 = BTreeMap::new();
    at0.insert(s, Expr::zero());
    let b = substitute(e, &at0)?;
    Ok(Some((-b).checked_div(&a)?))
}

impl DESystem {
    /// Build a system, choosing leading jet variables automatically: for each
    /// equation a highest-order jet variable it is affine in, pairwise distinct.
    pub fn new(space: &JetSpace, equations: Vec<(Expr, EqRole)>, cfg: &Config) -> Result<DESystem, SystemError> {
        let leads = vec![None; equations.len()];
        DESystem::with_leads(space, equations, leads, cfg)
    }

    /// Like [`DESystem::new`] with optional user-chosen leading variables.
    pub fn with_leads(
        space: &JetSpace,
        equations: Vec<(Expr, EqRole)>,
        leads: Vec<Option<JetVar>>,
        cfg: &Config,
    ) -> Result<DESystem, SystemError> {
        if equations.is_empty() {
            return Err(SystemError::NoEquations);
        }
        let mut options: Vec<Vec<SolvedForm>> = Vec::with_capacity(equations.len());
        for (i, ((e, _), lead)) in equations.iter().zip(&leads).enumerate() {
            let mut opts = Vec::new();
            match lead {
                Some(v) => match solve_affine(space, e, v, cfg)? {
                    Some(rhs) => opts.push(SolvedForm { lead: v.clone(), rhs }),
                    None => {
                        return Err(SystemError::NotAffine {
                            index: i,
                            lead: space.jet_name(v),
                        })
                    }
                },
                None => {
                    let jets = space.jets_in(e);
                    let top = jets.iter().map(JetVar::order).max().unwrap_or(0);
                    for v in jets.iter().filter(|v| v.order() == top) {
                        if let Some(rhs) = solve_affine(space, e, v, cfg)? {
                            opts.push(SolvedForm { lead: v.clone(), rhs });
                        }
                    }
                }
            }
            if opts.is_empty() {
                return Err(SystemError::NotSolvable {
                    index: i,
                    equation: e.to_string(),
                });
            }
            options.push(opts);
        }
        let choice = assign_distinct(&options).ok_or(SystemError::LeadsNotDistinct)?;
        let order = equations.iter().map(|(e, _)| space.expr_order(e)).max().unwrap_or(0);
        Ok(DESystem {
            space: space.extended_to(order),
            equations: equations
                .into_iter()
                .zip(choice)
                .map(|((expr, role), solved)| Equation { expr, role, solved })
                .collect(),
        })
    }

    /// Parse equations of role `Given`.
    pub fn parse(space: &JetSpace, equations: &[&str], cfg: &Config) -> Result<DESystem, SystemError> {
        let eqs = equations
            .iter()
            .map(|t| space.parse(t).map(|e| (e, EqRole::Given)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(JetError::from)?;
        DESystem::new(space, eqs, cfg)
    }

    pub fn order(&self) -> usize {
        self.equations.iter().map(|e| self.space.expr_order(&e.expr)).max().unwrap_or(0)
    }

    pub fn exprs(&self) -> Vec<Expr> {
        self.equations.iter().map(|e| e.expr.clone()).collect()
    }

    /// Substitute solved forms and their total-derivative consequences until
    /// no leading jet variable (or derivative of one) remains.
    pub fn reduce_on_manifold(&self, e: &Expr, cfg: &Config) -> Result<Expr, SystemError> {
        let mut cache: BTreeMap<JetVar, Expr> = BTreeMap::new();
        let mut cur = e.clone();
        for _ in 0..cfg.max_passes {
            let mut bindings = BTreeMap::new();
            for v in self.space.jets_in(&cur) {
                if let Some(r) = self.consequence(&v, &mut cache) {
                    bindings.insert(self.space.jet_symbol(&v), r);
                }
            }
            if bindings.is_empty() {
                return Ok(cur);
            }
            cur = substitute(&cur, &bindings)?;
        }
        if self.space.jets_in(&cur).iter().any(|v| self.lead_for(v).is_some()) {
            return Err(SystemError::NoFixedPoint(cfg.max_passes));
        }
        Ok(cur)
    }

    /// Equation whose leading variable `v` is a derivative of, with the
    /// remaining multi-index.
    fn lead_for(&self, v: &JetVar) -> Option<(usize, Vec<usize>)> {
        for (k, eq) in self.equations.iter().enumerate() {
            let lead = &eq.solved.lead;
            if lead.dep != v.dep || lead.order() > v.order() {
                continue;
            }
            if let Some(rest) = multiset_difference(&v.index, &lead.index) {
                return Some((k, rest));
            }
        }
        None
    }

    fn consequence(&self, v: &JetVar, cache: &mut BTreeMap<JetVar, Expr>) -> Option<Expr> {
        if let Some(r) = cache.get(v) {
            return Some(r.clone());
        }
        let (k, rest) = self.lead_for(v)?;
        let r = total_derivative_multi(&self.space, &self.equations[k].solved.rhs, &rest);
        cache.insert(v.clone(), r.clone());
        Some(r)
    }
}

/// `a − b` as multisets of sorted indices, if `b ⊆ a`.
fn multiset_difference(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let mut rest = a.to_vec();
    for x in b {
        let pos = rest.iter().position(|y| y == x)?;
        rest.remove(pos);
    }
    Some(rest)
}

fn assign_distinct(options: &[Vec<SolvedForm>]) -> Option<Vec<SolvedForm>> {
    fn go(options: &[Vec<SolvedForm>], used: &mut BTreeSet<JetVar>, out: &mut Vec<SolvedForm>) -> bool {
        let i = out.len();
        if i == options.len() {
            return true;
        }
        for o in &options[i] {
            if used.insert(o.lead.clone()) {
                out.push(o.clone());
                if go(options, used, out) {
                    return true;
                }
                out.pop();
                used.remove(&o.lead);
            }
        }
        false
    }
    let mut out = Vec::new();
    go(options, &mut BTreeSet::new(), &mut out).then_some(out)
}

impl fmt::Display for DESystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.equations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} = 0", e.expr)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SymmetryReport {
    pub symmetric: bool,
    pub residuals: Vec<Expr>,
}

/// Apply the prolonged generator to every equation and reduce on the
/// solution manifold.
pub fn check_point_symmetry(sys: &DESystem, x: &VectorField, cfg: &Config) -> Result<SymmetryReport, SystemError> {
    let n = sys.order().max(1);
    let px = prolong_with(x, n, cfg.exec);
    let mut residuals = Vec::with_capacity(sys.equations.len());
    let mut symmetric = true;
    for eq in &sys.equations {
        let raw = px.apply(&eq.expr)?;
        let r = sys.reduce_on_manifold(&raw, cfg)?;
        if !equiv_zero(&r, cfg)? {
            symmetric = false;
        }
        residuals.push(r);
    }
    Ok(SymmetryReport { symmetric, residuals })
}

/// Replace every jet coordinate of the candidate's dependent variables by the
/// matching partial derivative of the candidate.
pub fn substitute_candidate(
    space: &JetSpace,
    e: &Expr,
    candidate: &BTreeMap<usize, Expr>,
) -> Result<Expr, SystemError> {
    let mut bindings = BTreeMap::new();
    for v in space.jets_in(e) {
        if let Some(c) = candidate.get(&v.dep) {
            let mut d = c.clone();
            for &j in &v.index {
                d = d.diff(&space.independents()[j]);
            }
            bindings.insert(space.jet_symbol(&v), d);
        }
    }
    Ok(substitute(e, &bindings)?)
}

/// Residuals of every equation after inserting the candidate.
pub fn solution_residuals(sys: &DESystem, candidate: &BTreeMap<usize, Expr>) -> Result<Vec<Expr>, SystemError> {
    let allowed: BTreeSet<Symbol> = sys
        .space
        .independents()
        .iter()
        .chain(sys.space.parameters())
        .cloned()
        .collect();
    for c in candidate.values() {
        if let Some(bad) = crate::expr::free_vars(c).into_iter().find(|s| !allowed.contains(s)) {
            return Err(SystemError::BadCandidate(bad.to_string()));
        }
    }
    sys.equations
        .iter()
        .map(|eq| substitute_candidate(&sys.space, &eq.expr, candidate))
        .collect()
}

pub fn verify_solution(sys: &DESystem, candidate: &BTreeMap<usize, Expr>, cfg: &Config) -> Result<bool, SystemError> {
    for r in solution_residuals(sys, candidate)? {
        if !equiv_zero(&r, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every equation of `b` vanishes on the solution manifold of `a`, and
/// conversely. Both systems must share jet-variable names.
pub fn systems_equivalent(a: &DESystem, b: &DESystem, cfg: &Config) -> Result<bool, SystemError> {
    Ok(vanishes_on(a, b, cfg)? && vanishes_on(b, a, cfg)?)
}

fn vanishes_on(manifold: &DESystem, other: &DESystem, cfg: &Config) -> Result<bool, SystemError> {
    for eq in &other.equations {
        let r = manifold.reduce_on_manifold(&eq.expr, cfg)?;
        if !equiv_zero(&r, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Single-equation comparison up to a nonzero factor, on a shared space.
pub fn equations_equivalent(space: &JetSpace, a: &Expr, b: &Expr, cfg: &Config) -> Result<bool, SystemError> {
    let sa = DESystem::new(space, vec![(a.clone(), EqRole::Given)], cfg)?;
    let sb = DESystem::new(space, vec![(b.clone(), EqRole::Given)], cfg)?;
    systems_equivalent(&sa, &sb, cfg)
}

/// Convenience: total derivative in the system's space.
pub fn d(sys: &DESystem, e: &Expr, j: usize) -> Expr {
    total_derivative(&sys.space, e, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::default()
    }

    fn ode() -> JetSpace {
        JetSpace::new(&["x"], &["y"], 2).unwrap()
    }

    #[test]
    fn solved_form_of_bernoulli_parent() {
        let s = ode();
        let sys = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        let sf = &sys.equations[0].solved;
        assert_eq!(s.jet_name(&sf.lead), "y''");
        assert_eq!(sf.rhs, s.parse("(1+x)*y'^2 + y'").unwrap());
    }

    #[test]
    fn non_affine_rejected() {
        let s = ode();
        let err = DESystem::parse(&s, &["y''^2 - y"], &cfg()).unwrap_err();
        assert!(matches!(err, SystemError::NotSolvable { .. }));
    }

    #[test]
    fn translation_and_wrong_field() {
        let s = ode();
        let sys = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        let dy = VectorField::parse(&s, &["0", "1"]).unwrap();
        assert!(check_point_symmetry(&sys, &dy, &cfg()).unwrap().symmetric);
        let xdy = VectorField::parse(&s, &["0", "x"]).unwrap();
        let rep = check_point_symmetry(&sys, &xdy, &cfg()).unwrap();
        assert!(!rep.symmetric);
        assert_eq!(rep.residuals[0], s.parse("-2*(1+x)*y' - 1").unwrap());
    }

    #[test]
    fn factor_invariance() {
        let s = ode();
        let dy = VectorField::parse(&s, &["0", "1"]).unwrap();
        let a = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        let b = DESystem::parse(&s, &["(x^2+1)*(y'' - (1+x)*y'^2 - y')"], &cfg()).unwrap();
        assert!(check_point_symmetry(&b, &dy, &cfg()).unwrap().symmetric);
        assert!(systems_equivalent(&a, &b, &cfg()).unwrap());
    }

    #[test]
    fn solutions_of_bernoulli_parent() {
        let s = ode();
        let sys = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        let mut c = BTreeMap::new();
        c.insert(0, s.parse("-log(x)").unwrap());
        assert!(verify_solution(&sys, &c, &cfg()).unwrap());
        c.insert(0, s.parse("log(x)").unwrap());
        assert!(!verify_solution(&sys, &c, &cfg()).unwrap());
    }

    #[test]
    fn heat_like_symmetry() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let sys = DESystem::parse(&s, &["u_11 - u_2 + u*log(u)"], &cfg()).unwrap();
        let x = VectorField::parse(&s, &["0", "0", "exp(x2)*u"]).unwrap();
        assert!(check_point_symmetry(&sys, &x, &cfg()).unwrap().symmetric);
        let x = VectorField::parse(&s, &["0", "0", "u"]).unwrap();
        assert!(!check_point_symmetry(&sys, &x, &cfg()).unwrap().symmetric);
    }
}
