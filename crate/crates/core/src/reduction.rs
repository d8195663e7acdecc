//! Reduction of order: replace a translation-invariant dependent variable by
//! its gradient, adding integrability conditions for PDEs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{equiv, free_vars, rat, substitute, Config, Expr, Symbol};
use crate::jet::{JetError, JetSpace, JetVar};
use crate::system::{verify_solution, DESystem, EqRole, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("`{0}` appears undifferentiated; transform to canonical coordinates first")]
    Undifferentiated(String),
    #[error("reduce_ode needs one independent variable, found {0}")]
    NotOde(usize),
    #[error("reduce_pde needs at least two independent variables, found {0}")]
    NotPde(usize),
    #[error("no dependent variable named `{0}`")]
    UnknownTarget(String),
    #[error("system has order 0; nothing to reduce")]
    OrderZero,
    #[error("expected {expected} auxiliary names, got {got}")]
    Names { expected: usize, got: usize },
    #[error("need a parent solution or a reduced solution")]
    NoDirection,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl From<crate::expr::ExprError> for ReductionError {
    fn from(e: crate::expr::ExprError) -> Self {
        ReductionError::System(SystemError::Expr(e))
    }
}

/// How reduced variables relate to the parent.
#[derive(Clone, Debug)]
pub struct Connection {
    pub parent: JetSpace,
    /// Parent dependent index of the eliminated variable.
    pub eliminated: usize,
    /// Auxiliary variables with their definitions `∂u/∂x_i` in parent jets.
    pub aux: Vec<(Symbol, Expr)>,
    /// Reduced dependent index of each auxiliary variable.
    pub aux_deps: Vec<usize>,
    /// (parent dependent, reduced dependent) for the untouched variables.
    pub kept: Vec<(usize, usize)>,
    /// Name of the quadrature constant.
    pub constant: Symbol,
}

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub system: DESystem,
    pub connection: Connection,
}

impl ReducedSystem {
    pub fn integrability_count(&self) -> usize {
        self.system.equations.iter().filter(|e| e.role == EqRole::Integrability).count()
    }
}

pub fn default_aux_names(p: usize) -> Vec<String> {
    match p {
        1 => vec!["alpha".into()],
        2 => vec!["alpha".into(), "beta".into()],
        _ => (1..=p).map(|i| format!("alpha{i}")).collect(),
    }
}

pub fn reduce_ode(sys: &DESystem, target: Option<&str>, name: Option<&str>, cfg: &Config) -> Result<ReducedSystem, ReductionError> {
    if sys.space.p() != 1 {
        return Err(ReductionError::NotOde(sys.space.p()));
    }
    let names = name.map(|n| vec![n.to_string()]);
    reduce(sys, target, names, cfg)
}

pub fn reduce_pde(sys: &DESystem, target: Option<&str>, names: Option<Vec<String>>, cfg: &Config) -> Result<ReducedSystem, ReductionError> {
    if sys.space.p() < 2 {
        return Err(ReductionError::NotPde(sys.space.p()));
    }
    reduce(sys, target, names, cfg)
}

fn reduce(sys: &DESystem, target: Option<&str>, names: Option<Vec<String>>, cfg: &Config) -> Result<ReducedSystem, ReductionError> {
    let space = &sys.space;
    let p = space.p();
    let t = match target {
        Some(n) => space.dependent_named(n).ok_or_else(|| ReductionError::UnknownTarget(n.into()))?,
        None => space.m() - 1,
    };
    let u = space.dependents()[t].clone();
    for eq in &sys.equations {
        if free_vars(&eq.expr).contains(&u) {
            return Err(ReductionError::Undifferentiated(u.to_string()));
        }
    }
    let n = sys.order();
    if n == 0 {
        return Err(ReductionError::OrderZero);
    }
    let names = names.unwrap_or_else(|| default_aux_names(p));
    if names.len() != p {
        return Err(ReductionError::Names { expected: p, got: names.len() });
    }

    let mut deps: Vec<String> = Vec::new();
    let mut kept = Vec::new();
    let mut aux_deps = Vec::new();
    for (k, d) in space.dependents().iter().enumerate() {
        if k == t {
            for nm in &names {
                aux_deps.push(deps.len());
                deps.push(nm.clone());
            }
        } else {
            kept.push((k, deps.len()));
            deps.push(d.to_string());
        }
    }
    let indeps: Vec<&str> = space.independents().iter().map(Symbol::as_str).collect();
    let params: Vec<&str> = space.parameters().iter().map(Symbol::as_str).collect();
    let dep_refs: Vec<&str> = deps.iter().map(String::as_str).collect();
    let rspace = JetSpace::with_parameters(&indeps, &dep_refs, &params, n - 1)?;

    // u_J -> alpha_{min J} differentiated by the rest of J; kept jets renamed.
    let rename = |e: &Expr| -> Result<Expr, ReductionError> {
        let mut b = BTreeMap::new();
        for v in space.jets_in(e) {
            let new = if v.dep == t {
                let (first, rest) = v.index.split_first().expect("order checked above");
                rspace.jet_expr(&JetVar::new(aux_deps[*first], rest.to_vec()))
            } else {
                let (_, rd) = kept.iter().find(|(pd, _)| *pd == v.dep).expect("kept dependent");
                rspace.jet_expr(&JetVar::new(*rd, v.index.clone()))
            };
            b.insert(space.jet_symbol(&v), new);
        }
        Ok(substitute(e, &b)?)
    };
    let mut eqs = Vec::new();
    for eq in &sys.equations {
        eqs.push((rename(&eq.expr)?, EqRole::Reduced));
    }
    for i in 0..p {
        for j in i + 1..p {
            let c = rspace.u(aux_deps[i], &[j]) - rspace.u(aux_deps[j], &[i]);
            eqs.push((c, EqRole::Integrability));
        }
    }
    let system = DESystem::new(&rspace, eqs, cfg)?;
    let aux = names
        .iter()
        .enumerate()
        .map(|(i, nm)| (Symbol::new(nm), space.u(t, &[i])))
        .collect();
    Ok(ReducedSystem {
        system,
        connection: Connection {
            parent: space.clone(),
            eliminated: t,
            aux,
            aux_deps,
            kept,
            constant: Symbol::new("C"),
        },
    })
}

/// Which checks ran and how they came out.
#[derive(Clone, Debug, Default)]
pub struct ConnectionReport {
    pub parent_solves: Option<bool>,
    pub gradient_solves_reduced: Option<bool>,
    pub gradient_matches: Option<bool>,
    pub reduced_solves: Option<bool>,
    pub antiderivative_matches: Option<bool>,
    /// (C, parent solved with U + C)
    pub shifted: Vec<(i64, bool)>,
}

impl ConnectionReport {
    pub fn passed(&self) -> bool {
        [
            self.parent_solves,
            self.gradient_solves_reduced,
            self.gradient_matches,
            self.reduced_solves,
            self.antiderivative_matches,
        ]
        .iter()
        .all(|c| c.unwrap_or(true))
            && self.shifted.iter().all(|(_, ok)| *ok)
    }
}

pub const SHIFT_CONSTANTS: [i64; 3] = [0, 1, -2];

/// Check the quadrature connection in whichever directions are supplied.
/// Candidates map dependent indices (of the parent or reduced space) to
/// expressions in the independent variables. With a reduced solution and an
/// antiderivative `U` of it, `u = U + C` is checked in the parent for each
/// constant in [`SHIFT_CONSTANTS`].
pub fn verify_connection(
    parent: &DESystem,
    reduced: &ReducedSystem,
    parent_solution: Option<&BTreeMap<usize, Expr>>,
    reduced_solution: Option<&BTreeMap<usize, Expr>>,
    antiderivative: Option<&Expr>,
    cfg: &Config,
) -> Result<ConnectionReport, ReductionError> {
    if parent_solution.is_none() && reduced_solution.is_none() {
        return Err(ReductionError::NoDirection);
    }
    let conn = &reduced.connection;
    let xs = parent.space.independents();
    let mut rep = ConnectionReport::default();

    if let Some(ps) = parent_solution {
        rep.parent_solves = Some(verify_solution(parent, ps, cfg)?);
        let u = ps.get(&conn.eliminated).cloned().unwrap_or_else(Expr::zero);
        let mut grad = BTreeMap::new();
        for (i, &d) in conn.aux_deps.iter().enumerate() {
            grad.insert(d, u.diff(&xs[i]));
        }
        for &(pd, rd) in &conn.kept {
            if let Some(e) = ps.get(&pd) {
                grad.insert(rd, e.clone());
            }
        }
        rep.gradient_solves_reduced = Some(verify_solution(&reduced.system, &grad, cfg)?);
        if let Some(rs) = reduced_solution {
            let mut same = true;
            for (d, g) in &grad {
                if let Some(r) = rs.get(d) {
                    same &= equiv(g, r, cfg)?;
                }
            }
            rep.gradient_matches = Some(same);
        }
    }

    if let Some(rs) = reduced_solution {
        rep.reduced_solves = Some(verify_solution(&reduced.system, rs, cfg)?);
        if let Some(big_u) = antiderivative {
            let mut ok = true;
            for (i, &d) in conn.aux_deps.iter().enumerate() {
                let a = rs.get(&d).cloned().unwrap_or_else(Expr::zero);
                ok &= equiv(&big_u.diff(&xs[i]), &a, cfg)?;
            }
            rep.antiderivative_matches = Some(ok);
            for c in SHIFT_CONSTANTS {
                let mut cand: BTreeMap<usize, Expr> = BTreeMap::new();
                cand.insert(conn.eliminated, big_u + Expr::num(rat(c, 1)));
                for &(pd, rd) in &conn.kept {
                    if let Some(e) = rs.get(&rd) {
                        cand.insert(pd, e.clone());
                    }
                }
                rep.shifted.push((c, verify_solution(parent, &cand, cfg)?));
            }
        }
    }
    Ok(rep)
}

/// Symbolic form of the shift check: `U + C` with `C` left as a parameter
/// makes every parent equation vanish identically.
pub fn verify_shift_symbolic(parent: &DESystem, reduced: &ReducedSystem, antiderivative: &Expr, cfg: &Config) -> Result<bool, ReductionError> {
    let conn = &reduced.connection;
    let shifted = antiderivative + Expr::symbol(&conn.constant);
    let mut b = BTreeMap::new();
    let xs = parent.space.independents();
    for eq in &parent.equations {
        for v in parent.space.jets_in(&eq.expr) {
            if v.dep == conn.eliminated {
                let mut d = shifted.clone();
                for &j in &v.index {
                    d = d.diff(&xs[j]);
                }
                b.insert(parent.space.jet_symbol(&v), d);
            }
        }
    }
    for eq in &parent.equations {
        let r = substitute(&eq.expr, &b)?;
        if !crate::expr::equiv_zero(&r, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::equations_equivalent;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn bernoulli() {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let sys = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        let red = reduce_ode(&sys, None, None, &cfg()).unwrap();
        assert_eq!(red.system.space.order(), 1);
        assert_eq!(red.integrability_count(), 0);
        let want = red.system.space.parse("alpha' - (1+x)*alpha^2 - alpha").unwrap();
        assert_eq!(red.system.equations[0].expr, want);
    }

    #[test]
    fn undifferentiated_rejected() {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let sys = DESystem::parse(&s, &["x*y^2*y'' + x*y' - y"], &cfg()).unwrap();
        assert!(matches!(reduce_ode(&sys, None, None, &cfg()), Err(ReductionError::Undifferentiated(_))));
    }

    #[test]
    fn reaction_diffusion_system() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let sys = DESystem::parse(&s, &["u_11 - u_2 + exp(x2)*u_1^2"], &cfg()).unwrap();
        let red = reduce_pde(&sys, None, None, &cfg()).unwrap();
        let sp = &red.system.space;
        assert_eq!(red.integrability_count(), 1);
        let e0 = sp.parse("alpha_1 - beta + exp(x2)*alpha^2").unwrap();
        let e1 = sp.parse("alpha_2 - beta_1").unwrap();
        assert!(equations_equivalent(sp, &red.system.equations[0].expr, &e0, &cfg()).unwrap());
        assert_eq!(red.system.equations[1].expr, e1);
    }

    #[test]
    fn mixed_derivative_uses_smallest_index() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let sys = DESystem::parse(&s, &["u_12 - u_1"], &cfg()).unwrap();
        let red = reduce_pde(&sys, None, None, &cfg()).unwrap();
        assert_eq!(red.system.equations[0].expr, red.system.space.parse("alpha_2 - alpha").unwrap());
    }

    #[test]
    fn curl_counts() {
        for p in [3usize, 4, 5] {
            let xs: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
            let xr: Vec<&str> = xs.iter().map(String::as_str).collect();
            let s = JetSpace::new(&xr, &["u"], 2).unwrap();
            let lap: Vec<String> = (1..=p).map(|i| format!("u_{i}{i}")).collect();
            let sys = DESystem::parse(&s, &[lap.join(" + ").as_str()], &cfg()).unwrap();
            let red = reduce_pde(&sys, None, None, &cfg()).unwrap();
            assert_eq!(red.integrability_count(), p * (p - 1) / 2);
        }
    }

    #[test]
    fn connection_ex21() {
        let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
        let sys = DESystem::parse(&s, &["y'' - (1+x)*y'^2 - y'"], &cfg()).unwrap();
        let red = reduce_ode(&sys, None, None, &cfg()).unwrap();
        let ps = BTreeMap::from([(0, s.parse("-log(x)").unwrap())]);
        let rs = BTreeMap::from([(0, red.system.space.parse("-1/x").unwrap())]);
        let rep = verify_connection(&sys, &red, Some(&ps), Some(&rs), None, &cfg()).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.gradient_matches, Some(true));
        let wrong = BTreeMap::from([(0, red.system.space.parse("1/x").unwrap())]);
        assert!(!verify_connection(&sys, &red, None, Some(&wrong), None, &cfg()).unwrap().passed());
        assert!(matches!(verify_connection(&sys, &red, None, None, None, &cfg()), Err(ReductionError::NoDirection)));
    }

    #[test]
    fn connection_ex31() {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
        let sys = DESystem::parse(&s, &["u_11 - u_2 + exp(x2)*u_1^2"], &cfg()).unwrap();
        let red = reduce_pde(&sys, None, None, &cfg()).unwrap();
        let sp = &red.system.space;
        let rs = BTreeMap::from([
            (0, sp.parse("-1/2*x1*exp(-x2)").unwrap()),
            (1, sp.parse("1/4*(x1^2 - 2)*exp(-x2)").unwrap()),
        ]);
        let big_u = s.parse("1/4*(2 - x1^2)*exp(-x2)").unwrap();
        let rep = verify_connection(&sys, &red, None, Some(&rs), Some(&big_u), &cfg()).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.shifted.len(), 3);
        assert!(verify_shift_symbolic(&sys, &red, &big_u, &cfg()).unwrap());

        let ps = BTreeMap::from([(0, s.parse("x1 + exp(x2)").unwrap())]);
        let rs = BTreeMap::from([(0, Expr::one()), (1, sp.parse("exp(x2)").unwrap())]);
        let rep = verify_connection(&sys, &red, Some(&ps), Some(&rs), None, &cfg()).unwrap();
        assert!(rep.passed());
    }
}
