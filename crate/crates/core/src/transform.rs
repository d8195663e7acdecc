//! Point transformations: canonical-coordinate checks, change of variables of
//! DE systems, and push-forward of generators into new coordinates.

use std::collections::BTreeMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::exec;
use crate::expr::{
    content_free_numerator, equiv, equiv_zero, free_vars, substitute, Config, Expr, ExprError, Symbol,
};
use crate::jet::{prolong_with, total_derivative, JetError, JetSpace, JetVar, VectorField};
use crate::linalg::{self, Matrix};
use crate::system::{DESystem, EqRole, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("map needs {expected} component expressions, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("Jacobian determinant of the map is identically zero")]
    SingularJacobian,
    #[error("an inverse map is required to rewrite equations in the new variables")]
    NeedsInverse,
    #[error("inverse map does not compose to the identity on `{0}`")]
    BadInverse(String),
    #[error("order {order} exceeds the supported cap of {cap} for this kind of system")]
    OrderCap { order: usize, cap: usize },
    #[error("target space has {target} independent variables, source has {source_count}")]
    Shape { target: usize, source_count: usize },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl From<crate::expr::ParseError> for TransformError {
    fn from(e: crate::expr::ParseError) -> Self {
        TransformError::Jet(JetError::Parse(e))
    }
}

/// A change of base coordinates (x, u) -> (r, s).
#[derive(Clone, Debug)]
pub struct PointTransformation {
    pub source: JetSpace,
    pub target: JetSpace,
    /// Target base coordinates (r then s) in source base coordinates.
    pub forward: Vec<Expr>,
    /// Source base coordinates (x then u) in target base coordinates.
    pub inverse: Option<Vec<Expr>>,
}

impl PointTransformation {
    pub fn new(
        source: &JetSpace,
        target: &JetSpace,
        forward: Vec<Expr>,
        inverse: Option<Vec<Expr>>,
    ) -> Result<PointTransformation, TransformError> {
        let n = source.p() + source.m();
        if target.p() != source.p() {
            return Err(TransformError::Shape {
                target: target.p(),
                source_count: source.p(),
            });
        }
        if forward.len() != n || target.p() + target.m() != n {
            return Err(TransformError::Arity {
                expected: n,
                got: forward.len(),
            });
        }
        if let Some(inv) = &inverse {
            if inv.len() != n {
                return Err(TransformError::Arity { expected: n, got: inv.len() });
            }
        }
        Ok(PointTransformation {
            source: source.clone(),
            target: target.clone(),
            forward,
            inverse,
        })
    }

    pub fn identity(space: &JetSpace, target: &JetSpace) -> Result<PointTransformation, TransformError> {
        let fwd: Vec<Expr> = space.base_coords().iter().map(Expr::symbol).collect();
        let inv: Vec<Expr> = target.base_coords().iter().map(Expr::symbol).collect();
        PointTransformation::new(space, target, fwd, Some(inv))
    }

    /// Jacobian ∂(r, s)/∂(x, u).
    pub fn jacobian(&self) -> Matrix {
        let coords = self.source.base_coords();
        self.forward
            .iter()
            .map(|f| coords.iter().map(|c| f.diff(c)).collect())
            .collect()
    }

    pub fn jacobian_det(&self) -> Expr {
        linalg::det(&self.jacobian())
    }

    pub fn check_nonsingular(&self, cfg: &Config) -> Result<(), TransformError> {
        if equiv_zero(&self.jacobian_det(), cfg)? {
            return Err(TransformError::SingularJacobian);
        }
        Ok(())
    }

    fn inverse_bindings(&self) -> Result<BTreeMap<Symbol, Expr>, TransformError> {
        let inv = self.inverse.as_ref().ok_or(TransformError::NeedsInverse)?;
        Ok(self.source.base_coords().into_iter().zip(inv.iter().cloned()).collect())
    }

    /// Both compositions reduce to the identity.
    pub fn check_inverse(&self, cfg: &Config) -> Result<(), TransformError> {
        let inv = self.inverse.as_ref().ok_or(TransformError::NeedsInverse)?;
        let to_source = self.inverse_bindings()?;
        for (t, f) in self.target.base_coords().iter().zip(&self.forward) {
            let back = substitute(f, &to_source)?;
            if !equiv(&back, &Expr::symbol(t), cfg)? {
                return Err(TransformError::BadInverse(t.to_string()));
            }
        }
        let to_target: BTreeMap<Symbol, Expr> =
            self.target.base_coords().into_iter().zip(self.forward.iter().cloned()).collect();
        for (s, g) in self.source.base_coords().iter().zip(inv) {
            let back = substitute(g, &to_target)?;
            if !equiv(&back, &Expr::symbol(s), cfg)? {
                return Err(TransformError::BadInverse(s.to_string()));
            }
        }
        Ok(())
    }

    /// Source base coordinates written in target coordinates.
    pub fn to_target(&self, e: &Expr) -> Result<Expr, TransformError> {
        Ok(substitute(e, &self.inverse_bindings()?)?)
    }

    /// Every source jet coordinate up to `order` written in target jet
    /// coordinates, by the chain rule through the inverse map:
    /// `u_{J∪i} = Σ_j (A⁻¹)_{ij} D_j(u_J)` with `A_{ji} = D_j x_i`.
    pub fn source_jets_in_target(
        &self,
        order: usize,
        cfg: &Config,
    ) -> Result<BTreeMap<JetVar, Expr>, TransformError> {
        let inv = self.inverse.as_ref().ok_or(TransformError::NeedsInverse)?;
        let p = self.source.p();
        let tspace = self.target.extended_to(order + 1);
        let a: Matrix = (0..p)
            .map(|j| (0..p).map(|i| total_derivative(&tspace, &inv[i], j)).collect())
            .collect();
        let (ainv, d) = linalg::inverse(&a)?;
        if equiv_zero(&d, cfg)? {
            return Err(TransformError::SingularJacobian);
        }
        let mut out: BTreeMap<JetVar, Expr> = BTreeMap::new();
        for mu in 0..self.source.m() {
            out.insert(JetVar::new(mu, vec![]), inv[p + mu].clone());
        }
        for k in 1..=order {
            let parents: Vec<JetVar> = out.keys().filter(|v| v.order() == k - 1).cloned().collect();
            let computed = exec::map(cfg.exec, &parents, |parent| {
                let dj: Vec<Expr> = (0..p).map(|j| total_derivative(&tspace, &out[parent], j)).collect();
                (0..p)
                    .map(|i| {
                        let e: Expr = (0..p)
                            .filter(|&j| !ainv[i][j].is_zero() && !dj[j].is_zero())
                            .map(|j| &ainv[i][j] * &dj[j])
                            .sum();
                        (parent.raised(i), e)
                    })
                    .collect::<Vec<_>>()
            });
            for (v, e) in computed.into_iter().flatten() {
                out.entry(v).or_insert(e);
            }
        }
        Ok(out)
    }

    /// Rewrite a source-jet expression in target jets.
    pub fn rewrite(&self, e: &Expr, jets: &BTreeMap<JetVar, Expr>) -> Result<Expr, TransformError> {
        let mut b = self.inverse_bindings()?;
        for v in self.source.jets_in(e) {
            if let Some(t) = jets.get(&v) {
                b.insert(self.source.jet_symbol(&v), t.clone());
            }
        }
        Ok(substitute(e, &b)?)
    }
}

/// X r_i ≡ 0 for every target coordinate except the canonical one, which
/// satisfies X s ≡ 1. `canonical` indexes the target dependent variables.
pub fn verify_canonical(
    x: &VectorField,
    t: &PointTransformation,
    canonical: usize,
    cfg: &Config,
) -> Result<bool, TransformError> {
    let p = t.target.p();
    for (k, f) in t.forward.iter().enumerate() {
        let v = x.apply_base(f);
        let want = if k == p + canonical { Expr::one() } else { Expr::zero() };
        if !equiv(&v, &want, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn order_cap(space: &JetSpace) -> usize {
    if space.is_ode() {
        3
    } else {
        2
    }
}

/// Rewrite a system in the target variables. Each output equation is the
/// numerator of the rewritten equation with common monomial factors and
/// rational content removed, so it agrees with the input up to a nonzero
/// factor.
pub fn transform_de(sys: &DESystem, t: &PointTransformation, cfg: &Config) -> Result<DESystem, TransformError> {
    let n = sys.order();
    let cap = order_cap(&sys.space);
    if n > cap {
        return Err(TransformError::OrderCap { order: n, cap });
    }
    t.check_nonsingular(cfg)?;
    let jets = t.source_jets_in_target(n, cfg)?;
    let rewritten = exec::map(cfg.exec, &sys.equations, |eq| {
        t.rewrite(&eq.expr, &jets).map(|e| content_free_numerator(&e))
    });
    let mut eqs = Vec::with_capacity(rewritten.len());
    for e in rewritten {
        eqs.push((e?, EqRole::Given));
    }
    Ok(DESystem::new(&t.target.extended_to(n), eqs, cfg)?)
}

/// A generator written in new coordinates.
#[derive(Clone, Debug)]
pub struct Pushforward {
    /// Target independents, untranslated target dependents, and auxiliary
    /// variables, with their coefficients.
    pub coefficients: Vec<(Symbol, Expr)>,
    /// Components along the translated (canonical) target variables.
    pub translated: Vec<(Symbol, Expr)>,
    /// Coefficients could not be re-expressed; they are in source variables.
    pub raw: bool,
    /// Common rational factor of all nonzero coefficients, when there is one
    /// other than 1. Reported, never divided out.
    pub scale: Option<BigRational>,
}

impl Pushforward {
    pub fn coefficient(&self, name: &str) -> Option<&Expr> {
        self.coefficients.iter().find(|(s, _)| s.as_str() == name).map(|(_, e)| e)
    }

    /// Generator on the reduced space, matching coordinates by name.
    /// Coordinates of the space absent from the push-forward get 0.
    pub fn as_field(&self, space: &JetSpace) -> Result<VectorField, JetError> {
        let get = |s: &Symbol| self.coefficients.iter().find(|(n, _)| n == s).map(|(_, e)| e.clone()).unwrap_or_else(Expr::zero);
        let xi = space.independents().iter().map(get).collect();
        let eta = space.dependents().iter().map(get).collect();
        VectorField::new(space, xi, eta)
    }
}

fn common_scale(coeffs: &[Expr]) -> Option<BigRational> {
    let mut scale: Option<BigRational> = None;
    for c in coeffs.iter().filter(|c| !c.is_zero()) {
        let lead = c.terms()[0].coefficient_split().0;
        match &scale {
            None => scale = Some(lead),
            Some(s) if *s == lead => {}
            Some(_) => return None,
        }
    }
    scale.filter(|s| *s != BigRational::from_integer(1.into()))
}

/// Push `x` forward through `t`. `aux` lists auxiliary variables by name with
/// their definitions in source jet coordinates. Each auxiliary variable is
/// identified with the target first-derivative coordinate it equals; that
/// coordinate is then renamed to the auxiliary name everywhere.
pub fn pushforward_field(
    x: &VectorField,
    t: &PointTransformation,
    aux: &[(Symbol, Expr)],
    cfg: &Config,
) -> Result<Pushforward, TransformError> {
    let aux_order = aux.iter().map(|(_, d)| t.source.expr_order(d)).max().unwrap_or(0);
    let px = prolong_with(x, aux_order.max(1), cfg.exec);
    let base: Vec<Expr> = t.forward.iter().map(|f| x.apply_base(f)).collect();
    let aux_raw = aux
        .iter()
        .map(|(_, d)| px.apply(d))
        .collect::<Result<Vec<_>, _>>()?;

    let tnames = t.target.base_coords();
    let p = t.target.p();
    if t.inverse.is_none() {
        let mut coefficients: Vec<(Symbol, Expr)> = tnames[..p].iter().cloned().zip(base[..p].iter().cloned()).collect();
        coefficients.extend(aux.iter().map(|(n, _)| n.clone()).zip(aux_raw));
        let translated = tnames[p..].iter().cloned().zip(base[p..].iter().cloned()).collect();
        return Ok(Pushforward {
            scale: None,
            coefficients,
            translated,
            raw: true,
        });
    }

    let jets = t.source_jets_in_target(aux_order, cfg)?;
    // which target first-order jet each auxiliary variable equals
    let mut rename: BTreeMap<Symbol, Expr> = BTreeMap::new();
    let mut translated_deps = std::collections::BTreeSet::new();
    let first_jets = t.target.jets_of_order(1);
    for (name, def) in aux {
        let in_target = t.rewrite(def, &jets)?;
        for w in &first_jets {
            let wexpr = t.target.jet_expr(w);
            if in_target == wexpr || equiv(&in_target, &wexpr, cfg)? {
                rename.insert(t.target.jet_symbol(w), Expr::symbol(name));
                translated_deps.insert(w.dep);
                break;
            }
        }
    }
    let finish = |e: &Expr| -> Result<Expr, TransformError> {
        let e = t.rewrite(e, &jets)?;
        Ok(substitute(&e, &rename)?)
    };
    let mut coefficients = Vec::new();
    let mut translated = Vec::new();
    for (k, name) in tnames.iter().enumerate() {
        let c = finish(&base[k])?;
        if k >= p && translated_deps.contains(&(k - p)) {
            translated.push((name.clone(), c));
        } else {
            coefficients.push((name.clone(), c));
        }
    }
    for ((name, _), c) in aux.iter().zip(&aux_raw) {
        coefficients.push((name.clone(), finish(c)?));
    }
    // anything outside the target space means re-expression failed
    let raw = coefficients.iter().any(|(_, c)| {
        free_vars(c)
            .iter()
            .any(|v| t.target.role(v).is_none() && !aux.iter().any(|(n, _)| n == v))
    });
    let all: Vec<Expr> = coefficients.iter().map(|(_, c)| c.clone()).collect();
    Ok(Pushforward {
        scale: common_scale(&all),
        coefficients,
        translated,
        raw,
    })
}

/// Canonical coordinates from a small catalog: translations (constant
/// coefficients), diagonal scalings (`c_v·v` coefficients), and fiber fields
/// `f(x)·u∂u` on one dependent variable. `target` names the new coordinates
/// and must have the source's shape. Returns the chart and the index of the
/// canonical target dependent, or `None` when the field is not in the catalog.
pub fn find_canonical(x: &VectorField, target: &JetSpace) -> Option<(PointTransformation, usize)> {
    let space = x.space();
    let (p, m) = (space.p(), space.m());
    if target.p() != p || target.m() != m {
        return None;
    }
    let coords = space.base_coords();
    let coeffs = x.coefficients();
    let tcoords = target.base_coords();
    let texpr = |k: usize| Expr::symbol(&tcoords[k]);
    let cvar = |k: usize| Expr::symbol(&coords[k]);

    // Pick the coordinate that becomes s: the last dependent with a nonzero
    // weight, else the first independent (only when m = 1).
    let pick = |weights: &[Option<BigRational>]| -> Option<usize> {
        let nz = |k: &usize| weights[*k].as_ref().is_some_and(|c| !num_traits::Zero::is_zero(c));
        (p..p + m).rev().find(nz).or_else(|| if m == 1 { (0..p).find(nz) } else { None })
    };
    // Source coordinate k maps to target slot slot(k).
    let slots = |w: usize| -> Vec<usize> {
        let mut s: Vec<usize> = (0..p + m).collect();
        if w < p {
            s.swap(w, p);
        }
        s
    };

    let consts: Vec<Option<BigRational>> = coeffs.iter().map(|c| c.as_rational().cloned()).collect();
    if consts.iter().all(Option::is_some) {
        let w = pick(&consts)?;
        let cw = consts[w].clone()?;
        let slot = slots(w);
        let mut fwd = vec![Expr::zero(); p + m];
        let mut inv = vec![Expr::zero(); p + m];
        let s_t = texpr(slot[w]);
        for k in 0..p + m {
            if k == w {
                fwd[slot[k]] = cvar(k).scale(&cw.recip());
                inv[k] = s_t.scale(&cw);
            } else {
                let ratio = consts[k].clone()? / &cw;
                fwd[slot[k]] = cvar(k) - cvar(w).scale(&ratio);
                inv[k] = texpr(slot[k]) + s_t.scale(&consts[k].clone()?);
            }
        }
        let t = PointTransformation::new(space, target, fwd, Some(inv)).ok()?;
        return Some((t, slot[w] - p));
    }

    let weights: Vec<Option<BigRational>> = coeffs
        .iter()
        .zip(&coords)
        .map(|(c, v)| if c.is_zero() { Some(BigRational::from_integer(0.into())) } else { c.checked_div(&Expr::symbol(v)).ok()?.as_rational().cloned() })
        .collect();
    if weights.iter().all(Option::is_some) {
        let w = pick(&weights)?;
        let cw = weights[w].clone()?;
        let slot = slots(w);
        let mut fwd = vec![Expr::zero(); p + m];
        let mut inv = vec![Expr::zero(); p + m];
        let s_t = texpr(slot[w]);
        for k in 0..p + m {
            let ck = weights[k].clone()?;
            if k == w {
                fwd[slot[k]] = Expr::log(&cvar(k)).ok()?.scale(&cw.recip());
                inv[k] = Expr::exp(&s_t.scale(&cw));
            } else if num_traits::Zero::is_zero(&ck) {
                fwd[slot[k]] = cvar(k);
                inv[k] = texpr(slot[k]);
            } else {
                fwd[slot[k]] = cvar(k) * cvar(w).pow(&(-(&ck / &cw))).ok()?;
                inv[k] = texpr(slot[k]) * Expr::exp(&s_t.scale(&ck));
            }
        }
        let t = PointTransformation::new(space, target, fwd, Some(inv)).ok()?;
        return Some((t, slot[w] - p));
    }

    // f(x)·u∂u
    let nonzero: Vec<usize> = (0..p + m).filter(|&k| !coeffs[k].is_zero()).collect();
    if let [w] = nonzero[..] {
        if w >= p {
            let f = coeffs[w].checked_div(&cvar(w)).ok()?;
            if free_vars(&f).iter().all(|v| space.independent_index(v).is_some()) {
                let mut fwd: Vec<Expr> = (0..p + m).map(cvar).collect();
                fwd[w] = Expr::log(&cvar(w)).ok()? * f.recip().ok()?;
                let mut inv: Vec<Expr> = (0..p + m).map(texpr).collect();
                let to_target: BTreeMap<Symbol, Expr> = (0..p).map(|k| (coords[k].clone(), texpr(k))).collect();
                let f_t = substitute(&f, &to_target).ok()?;
                inv[w] = Expr::exp(&(f_t * texpr(w)));
                let t = PointTransformation::new(space, target, fwd, Some(inv)).ok()?;
                return Some((t, w - p));
            }
        }
    }
    None
}
