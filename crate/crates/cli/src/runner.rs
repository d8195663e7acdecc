//! Executes problem-file checks through the core operations.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_rational::BigRational;
use symred_core::algebra::{commutator, express_in_span, render_combination, structure_constants, Bracket, Prediction};
use symred_core::classify::{classify_pushforward, lift_test, LiftError, Verdict as Cv};
use symred_core::expr::{equiv, parse_expr, Config, Expr, Symbol, Vocabulary};
use symred_core::jet::{prolong_with, JetSpace, VectorField};
use symred_core::reduction::{reduce_ode, reduce_pde, verify_connection, verify_shift_symbolic, ReducedSystem};
use symred_core::system::{check_point_symmetry, equations_equivalent, systems_equivalent, DESystem, EqRole};
use symred_core::transform::{pushforward_field, transform_de, verify_canonical, PointTransformation};
use toml::Value;

use crate::problem::{strs, CheckDecl, ProblemFile};
use crate::report::{Record, Verdict};

type Res<T> = Result<T, String>;

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Clone)]
enum Saved {
    System(DESystem),
    Reduced(ReducedSystem),
}

impl Saved {
    fn system(&self) -> &DESystem {
        match self {
            Saved::System(s) => s,
            Saved::Reduced(r) => &r.system,
        }
    }
}

pub struct Chart {
    pub map: PointTransformation,
    pub aux: Vec<(Symbol, Expr)>,
    pub canonical: usize,
}

type Matcher = Box<dyn Fn(&Value) -> Res<bool>>;

/// What an operation produced, and how to hold it against an expectation.
struct Computed {
    render: String,
    /// Does the result match this expected value?
    matches: Matcher,
    /// Verdict when the check carries no expectation (ad hoc CLI runs).
    natural: bool,
    /// Secondary expectations (witness, residual, ...), already compared.
    extras: Vec<(String, bool)>,
    inconclusive: bool,
    saved: Option<Saved>,
}

impl Computed {
    fn new(render: String, natural: bool, matches: impl Fn(&Value) -> Res<bool> + 'static) -> Computed {
        Computed {
            render,
            matches: Box::new(matches),
            natural,
            extras: Vec::new(),
            inconclusive: false,
            saved: None,
        }
    }
}

pub struct Context<'a> {
    pub problem: &'a ProblemFile,
    pub cfg: Config,
    saved: RefCell<HashMap<String, Saved>>,
}

impl<'a> Context<'a> {
    pub fn new(problem: &'a ProblemFile, cfg: Config) -> Context<'a> {
        Context {
            problem,
            cfg,
            saved: RefCell::new(HashMap::new()),
        }
    }

    fn resolve(&self, name: &str) -> Res<Saved> {
        if let Some(s) = self.saved.borrow().get(name) {
            return Ok(s.clone());
        }
        let out = if let Some(decl) = self.problem.systems.get(name) {
            let space = self.problem.declared_space(name).expect("declared").map_err(e2s)?;
            let eqs: Vec<&str> = decl.equations.iter().map(String::as_str).collect();
            Saved::System(DESystem::parse(&space, &eqs, &self.cfg).map_err(e2s)?)
        } else {
            let k = self.problem.saved(name).ok_or_else(|| format!("unknown system `{name}`"))?;
            let c = self.compute(&self.problem.checks[k])?;
            c.saved.ok_or_else(|| format!("check producing `{name}` saved nothing"))?
        };
        self.saved.borrow_mut().insert(name.to_string(), out.clone());
        Ok(out)
    }

    pub fn system(&self, name: &str) -> Res<DESystem> {
        Ok(self.resolve(name)?.system().clone())
    }

    pub fn reduced(&self, name: &str) -> Res<ReducedSystem> {
        match self.resolve(name)? {
            Saved::Reduced(r) => Ok(r),
            Saved::System(_) => Err(format!("`{name}` is not a reduced system")),
        }
    }

    fn default_system(&self) -> Res<&str> {
        self.problem.default_system().ok_or_else(|| "no systems declared".to_string())
    }

    /// System a field lives on.
    pub fn field_home(&self, name: &str) -> Res<String> {
        let coeffs = self.problem.fields.get(name).ok_or_else(|| format!("unknown field `{name}`"))?;
        Ok(match coeffs.get("on") {
            Some(on) => on.clone(),
            None => self.default_system()?.to_string(),
        })
    }

    pub fn field(&self, name: &str) -> Res<VectorField> {
        let coeffs = &self.problem.fields[name];
        let space = self.system(&self.field_home(name)?)?.space;
        let texts: Vec<&str> = space
            .base_coords()
            .iter()
            .map(|c| coeffs.get(c.as_str()).map(String::as_str).unwrap_or("0"))
            .collect();
        for k in coeffs.keys().filter(|k| *k != "on") {
            if !space.base_coords().iter().any(|c| c.as_str() == k) {
                return Err(format!("field `{name}`: undeclared variable `{k}`"));
            }
        }
        VectorField::parse(&space, &texts).map_err(|e| format!("field `{name}`: {e}"))
    }

    /// Fields declared on the same system as `name`, in file order.
    fn siblings(&self, name: &str) -> Res<Vec<String>> {
        let home = self.field_home(name)?;
        let mut out = Vec::new();
        for f in self.problem.fields.keys() {
            if self.field_home(f)? == home {
                out.push(f.clone());
            }
        }
        Ok(out)
    }

    pub fn chart(&self, name: &str) -> Res<Chart> {
        let decl = self.problem.charts.get(name).ok_or_else(|| format!("unknown chart `{name}`"))?;
        let from = decl.from.clone().map(Ok).unwrap_or_else(|| self.default_system().map(String::from))?;
        let src = self.system(&from)?.space;
        let tgt = JetSpace::new(&strs(&decl.independent), &strs(&decl.dependent), src.order()).map_err(e2s)?;
        let forward = decl
            .independent
            .iter()
            .chain(&decl.dependent)
            .map(|t| src.parse(&decl.forward[t]).map_err(|e| format!("chart `{name}`: {e}")))
            .collect::<Res<Vec<_>>>()?;
        let inverse = match &decl.inverse {
            Some(inv) => Some(
                src.base_coords()
                    .iter()
                    .map(|c| {
                        let text = inv.get(c.as_str()).ok_or_else(|| format!("chart `{name}`: no inverse for `{c}`"))?;
                        tgt.parse(text).map_err(|e| format!("chart `{name}`: {e}"))
                    })
                    .collect::<Res<Vec<_>>>()?,
            ),
            None => None,
        };
        let map = PointTransformation::new(&src, &tgt, forward, inverse).map_err(e2s)?;
        let aux = decl
            .aux
            .iter()
            .map(|(k, v)| Ok((Symbol::new(k), src.parse(v).map_err(e2s)?)))
            .collect::<Res<Vec<_>>>()?;
        let canonical = match &decl.canonical {
            Some(c) => tgt.dependent_named(c).ok_or_else(|| format!("chart `{name}`: `{c}` is not a target dependent"))?,
            None => 0,
        };
        Ok(Chart { map, aux, canonical })
    }

    fn need<'c>(v: &'c Option<String>, what: &str) -> Res<&'c str> {
        v.as_deref().ok_or_else(|| format!("check needs `{what}`"))
    }

    fn system_for(&self, c: &CheckDecl) -> Res<String> {
        if let Some(s) = &c.system {
            return Ok(s.clone());
        }
        if let Some(ch) = &c.chart {
            if let Some(from) = &self.problem.charts[ch].from {
                return Ok(from.clone());
            }
        }
        if let Some(f) = c.field.as_ref().or(c.fields.first()) {
            return self.field_home(f);
        }
        Ok(self.default_system()?.to_string())
    }

    fn compute(&self, c: &CheckDecl) -> Res<Computed> {
        match c.op.as_str() {
            "prolong" => self.prolong(c),
            "check-symmetry" => self.check_symmetry(c),
            "canonical-verify" => self.canonical_verify(c),
            "transform" => self.transform(c),
            "reduce-ode" | "reduce-pde" => self.reduce(c),
            "pushforward" => self.pushforward(c),
            "classify" => self.classify(c),
            "lift-test" => self.lift(c),
            "commutator" => self.commutator(c),
            "algebra" => self.algebra(c),
            "advice" => self.advice(c),
            "connection" => self.connection(c),
            other => Err(format!("unknown operation `{other}`")),
        }
    }

    fn prolong(&self, c: &CheckDecl) -> Res<Computed> {
        let name = Self::need(&c.field, "field")?;
        let x = self.field(name)?;
        let n = c.order.unwrap_or(1);
        let pr = prolong_with(&x, n, self.cfg.exec);
        let space = x.space().extended_to(n);
        let mut lines = Vec::new();
        for k in 1..=n {
            for v in space.jets_of_order(k) {
                let e = pr.coefficient(&v).cloned().unwrap_or_else(Expr::zero);
                lines.push(format!("{}: {}", space.jet_name(&v), e));
            }
        }
        let matches = move |want: &Value| -> Res<bool> {
            let table = want.as_table().ok_or("prolong expects a table of jet coefficients")?;
            for (jet, text) in table {
                let v = space.jet_of_name(jet).ok_or_else(|| format!("`{jet}` is not a jet coordinate"))?;
                let text = text.as_str().ok_or("coefficients are strings")?;
                let e = space.parse(text).map_err(e2s)?;
                if pr.coefficient(&v).cloned().unwrap_or_else(Expr::zero) != e {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        Ok(Computed::new(lines.join(", "), true, matches))
    }

    fn check_symmetry(&self, c: &CheckDecl) -> Res<Computed> {
        let sys = self.system(&self.system_for(c)?)?;
        let x = self.field(Self::need(&c.field, "field")?)?;
        let rep = check_point_symmetry(&sys, &x, &self.cfg).map_err(e2s)?;
        let render = if rep.symmetric {
            "symmetric".to_string()
        } else {
            let rs: Vec<String> = rep.residuals.iter().map(ToString::to_string).collect();
            format!("not symmetric, residual {}", rs.join("; "))
        };
        let symmetric = rep.symmetric;
        let mut out = Computed::new(render, symmetric, move |want| Ok(want.as_bool() == Some(symmetric)));
        if let Some(text) = &c.residual {
            let space = sys.space.extended_to(sys.order().max(1));
            let want = space.parse(text).map_err(e2s)?;
            let got = rep.residuals.first().cloned().unwrap_or_else(Expr::zero);
            out.extras.push((format!("residual {text}"), equiv(&got, &want, &self.cfg).map_err(e2s)?));
        }
        Ok(out)
    }

    fn canonical_field(&self, c: &CheckDecl, chart: &str) -> Res<VectorField> {
        let name = match (&c.field, &self.problem.charts[chart].for_field) {
            (Some(f), _) | (None, Some(f)) => f,
            _ => return Err("check needs `field`".into()),
        };
        self.field(name)
    }

    fn canonical_verify(&self, c: &CheckDecl) -> Res<Computed> {
        let name = Self::need(&c.chart, "chart")?;
        let chart = self.chart(name)?;
        let x = self.canonical_field(c, name)?;
        let t = &chart.map;
        let ok = verify_canonical(&x, t, chart.canonical, &self.cfg).map_err(e2s)?;
        let parts: Vec<String> = t
            .target
            .base_coords()
            .iter()
            .zip(&t.forward)
            .map(|(s, f)| format!("X({s}) = {}", x.apply_base(f)))
            .collect();
        Ok(Computed::new(parts.join(", "), ok, move |want| Ok(want.as_bool() == Some(ok))))
    }

    fn transform(&self, c: &CheckDecl) -> Res<Computed> {
        let chart = self.chart(Self::need(&c.chart, "chart")?)?;
        let sys = self.system(&self.system_for(c)?)?;
        let out = transform_de(&sys, &chart.map, &self.cfg).map_err(e2s)?;
        let mut comp = self.system_result(&out, None);
        comp.saved = Some(Saved::System(out));
        Ok(comp)
    }

    fn system_result(&self, sys: &DESystem, integrability: Option<(usize, usize)>) -> Computed {
        let render = sys.equations.iter().map(|e| e.expr.to_string()).collect::<Vec<_>>().join("; ");
        let (got, cfg) = (sys.clone(), self.cfg.clone());
        let matches = move |want: &Value| -> Res<bool> {
            let exprs = string_list(want)?
                .iter()
                .map(|t| Ok((got.space.parse(t).map_err(e2s)?, EqRole::Given)))
                .collect::<Res<Vec<_>>>()?;
            // equation by equation first, in any order; then the solution manifolds
            if exprs.len() == got.equations.len() {
                let mut free: Vec<&Expr> = got.equations.iter().map(|e| &e.expr).collect();
                for (w, _) in &exprs {
                    let mut hit = None;
                    for (k, g) in free.iter().enumerate() {
                        if equations_equivalent(&got.space, g, w, &cfg).unwrap_or(false) {
                            hit = Some(k);
                            break;
                        }
                    }
                    match hit {
                        Some(k) => {
                            free.remove(k);
                        }
                        None => break,
                    }
                }
                if free.is_empty() {
                    return Ok(true);
                }
            }
            let want = DESystem::new(&got.space, exprs, &cfg).map_err(e2s)?;
            systems_equivalent(&got, &want, &cfg).map_err(e2s)
        };
        let mut comp = Computed::new(render, true, matches);
        if let Some((got, want)) = integrability {
            comp.extras.push((format!("{want} integrability conditions"), got == want));
        }
        comp
    }

    fn reduce(&self, c: &CheckDecl) -> Res<Computed> {
        let sys = self.system(&self.system_for(c)?)?;
        let target = c.target.as_deref();
        let red = if c.op == "reduce-ode" {
            let name = c.names.as_ref().and_then(|n| n.first()).map(String::as_str);
            reduce_ode(&sys, target, name, &self.cfg)
        } else {
            reduce_pde(&sys, target, c.names.clone(), &self.cfg)
        }
        .map_err(e2s)?;
        let mut comp = self.system_result(&red.system, c.integrability.map(|n| (red.integrability_count(), n)));
        comp.render = format!("{} [{} integrability]", comp.render, red.integrability_count());
        comp.saved = Some(Saved::Reduced(red));
        Ok(comp)
    }

    fn pushforward(&self, c: &CheckDecl) -> Res<Computed> {
        let chart = self.chart(Self::need(&c.chart, "chart")?)?;
        let x = self.field(Self::need(&c.field, "field")?)?;
        let pf = pushforward_field(&x, &chart.map, &chart.aux, &self.cfg).map_err(e2s)?;
        let mut parts: Vec<String> = pf.coefficients.iter().map(|(s, e)| format!("{s}: {e}")).collect();
        parts.extend(pf.translated.iter().map(|(s, e)| format!("{s} (translated): {e}")));
        if pf.raw {
            parts.push("raw".into());
        }
        let scale = pf.scale.clone();
        let cfg = self.cfg.clone();
        let all: BTreeMap<String, Expr> = pf
            .coefficients
            .iter()
            .chain(&pf.translated)
            .map(|(s, e)| (s.to_string(), e.clone()))
            .collect();
        let matches = move |want: &Value| -> Res<bool> {
            let table = want.as_table().ok_or("pushforward expects a table of coefficients")?;
            let voc = Vocabulary::permissive();
            for (coord, text) in table {
                let w = parse_expr(text.as_str().ok_or("coefficients are strings")?, &voc).map_err(e2s)?;
                let g = all.get(coord).cloned().unwrap_or_else(Expr::zero);
                if !equiv(&g, &w, &cfg).map_err(e2s)? {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        let mut comp = Computed::new(parts.join(", "), !pf.raw, matches);
        if let Some(s) = &c.scale {
            let want: Option<BigRational> = s.parse().ok();
            comp.extras.push((format!("scale {s}"), want.is_some() && want == scale));
        }
        Ok(comp)
    }

    fn classify(&self, c: &CheckDecl) -> Res<Computed> {
        let (cl, _) = self.classification(c)?;
        let verdict = cl.verdict;
        let mut comp = Computed::new(cl.to_string(), verdict != Cv::Inconclusive, move |want| {
            Ok(want.as_str() == Some(verdict.name()))
        });
        comp.inconclusive = verdict == Cv::Inconclusive;
        if let Some(w) = &c.witness {
            comp.extras.push((format!("witness {w}"), cl.witness.as_deref() == Some(w.as_str())));
        }
        Ok(comp)
    }

    fn classification(&self, c: &CheckDecl) -> Res<(symred_core::classify::Classification, String)> {
        let chart_name = Self::need(&c.chart, "chart")?;
        let chart = self.chart(chart_name)?;
        let field = Self::need(&c.field, "field")?;
        let x = self.field(field)?;
        let reduced = self.system(Self::need(&c.reduced, "reduced")?)?;
        let (cl, _) = classify_pushforward(&x, &chart.map, &chart.aux, &reduced, &self.cfg);
        Ok((cl, field.to_string()))
    }

    fn lift(&self, c: &CheckDecl) -> Res<Computed> {
        let red = self.reduced(Self::need(&c.reduced, "reduced")?)?;
        let y = self.field(Self::need(&c.field, "field")?)?;
        match lift_test(&y, &red, &self.cfg) {
            Ok((cl, lift)) => {
                let verdict = cl.verdict;
                let mut render = cl.to_string();
                if let Some(l) = &lift {
                    let xi: Vec<String> = l.xi.iter().map(ToString::to_string).collect();
                    render.push_str(&format!("; xi = ({}), weight {}", xi.join(", "), l.weight));
                }
                let mut comp = Computed::new(render, verdict != Cv::Inconclusive, move |want| {
                    Ok(want.as_str() == Some(verdict.name()))
                });
                comp.inconclusive = verdict == Cv::Inconclusive;
                if let Some(k) = &c.criterion {
                    comp.extras.push((format!("criterion {k}"), cl.criterion.name() == k));
                }
                Ok(comp)
            }
            Err(LiftError::NotASymmetry(msg)) => {
                let render = format!("not a symmetry: {msg}");
                Ok(Computed::new(render, false, |want| Ok(want.as_str() == Some("not-a-symmetry"))))
            }
            Err(e) => Err(e.to_string()),
        }
    }

    fn pair(&self, c: &CheckDecl) -> Res<(String, String)> {
        match c.fields.as_slice() {
            [a, b] => Ok((a.clone(), b.clone())),
            _ => Err("check needs exactly two `fields`".into()),
        }
    }

    fn commutator(&self, c: &CheckDecl) -> Res<Computed> {
        let (a, b) = self.pair(c)?;
        let names = self.siblings(&a)?;
        let gens = names.iter().map(|n| self.field(n)).collect::<Res<Vec<_>>>()?;
        let br = commutator(&self.field(&a)?, &self.field(&b)?).map_err(e2s)?;
        match express_in_span(&br, &gens, &self.cfg).map_err(e2s)? {
            Bracket::InSpan(coeffs) => {
                let render = render_combination(&coeffs, &names);
                Ok(Computed::new(render, true, move |want| {
                    let text = want.as_str().ok_or("commutator expects a combination string")?;
                    Ok(parse_combination(text, &names)? == coeffs)
                }))
            }
            Bracket::NotInSpan { bracket, .. } => {
                Ok(Computed::new(format!("not in span: {bracket}"), false, |_| Ok(false)))
            }
        }
    }

    fn generators(&self, c: &CheckDecl) -> Res<Vec<String>> {
        if !c.fields.is_empty() {
            return Ok(c.fields.clone());
        }
        let sys = self.system_for(c)?;
        let mut out = Vec::new();
        for f in self.problem.fields.keys() {
            if self.field_home(f)? == sys {
                out.push(f.clone());
            }
        }
        Ok(out)
    }

    fn algebra(&self, c: &CheckDecl) -> Res<Computed> {
        let names = self.generators(c)?;
        let gens = names.iter().map(|n| self.field(n)).collect::<Res<Vec<_>>>()?;
        let table = structure_constants(&names, &gens, &self.cfg).map_err(e2s)?;
        let closed = table.is_closed();
        let (solvable, series) = if closed { table.is_solvable().map_err(e2s)? } else { (false, Vec::new()) };
        let jacobi = closed && table.jacobi_holds().map_err(e2s)?;
        let series_txt = series.iter().map(ToString::to_string).collect::<Vec<_>>().join("\u{2192}");
        let render = format!(
            "{}, {}, derived series {series_txt}; {}",
            if closed { "closed" } else { "not closed" },
            if solvable { "solvable" } else { "not solvable" },
            table.to_string().replace('\n', "; ")
        );
        let matches = move |want: &Value| -> Res<bool> {
            let t = want.as_table().ok_or("algebra expects a table")?;
            for (k, v) in t {
                let ok = match k.as_str() {
                    "closed" => v.as_bool() == Some(closed),
                    "solvable" => v.as_bool() == Some(solvable),
                    "jacobi" => v.as_bool() == Some(jacobi),
                    "series" => {
                        let want: Vec<usize> = v
                            .as_array()
                            .ok_or("series is an array")?
                            .iter()
                            .map(|d| d.as_integer().map(|d| d as usize).ok_or("series entries are integers"))
                            .collect::<Result<_, _>>()?;
                        want == series
                    }
                    "brackets" => {
                        let mut ok = true;
                        for (pair, comb) in v.as_table().ok_or("brackets is a table")? {
                            let (i, j) = pair.split_once(',').ok_or("bracket keys look like \"X1,X2\"")?;
                            let idx = |n: &str| names.iter().position(|m| m == n.trim()).ok_or(format!("unknown generator `{n}`"));
                            let got = table.constants(idx(i)?, idx(j)?);
                            let want = parse_combination(comb.as_str().ok_or("brackets are strings")?, &names)?;
                            ok &= got == Some(want);
                        }
                        ok
                    }
                    other => return Err(format!("unknown algebra key `{other}`")),
                };
                if !ok {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        Ok(Computed::new(render, closed, matches))
    }

    fn advice(&self, c: &CheckDecl) -> Res<Computed> {
        let (a, b) = self.pair(c)?;
        let names = self.siblings(&a)?;
        let gens = names.iter().map(|n| self.field(n)).collect::<Res<Vec<_>>>()?;
        let table = structure_constants(&names, &gens, &self.cfg).map_err(e2s)?;
        let idx = |n: &str| names.iter().position(|m| m == n).ok_or(format!("`{n}` is not on the same system as `{a}`"));
        let adv = table.reduction_order_advice(idx(&a)?, idx(&b)?).map_err(e2s)?;
        let first = names[adv.first].clone();
        let mut render = match adv.prediction {
            Prediction::Ordered => format!("reduce by {first} first ({})", adv.reason),
            Prediction::EitherOrder => format!("either order ({})", adv.reason),
        };
        // agreement with every classification of this pair in the problem
        let mut agree = true;
        let mut seen = 0;
        for other in self.problem.checks.iter().filter(|k| k.op == "classify") {
            let (Some(chart), Some(field)) = (&other.chart, &other.field) else { continue };
            let Some(by) = &self.problem.charts[chart].for_field else { continue };
            if !(by == &a || by == &b) || !(field == &a || field == &b) || by == field {
                continue;
            }
            let (cl, _) = self.classification(other)?;
            let predicted = adv.predicts_point(idx(by)?, idx(field)?);
            let actual = cl.verdict == Cv::Point;
            agree &= cl.verdict != Cv::Inconclusive && predicted == actual;
            seen += 1;
            render.push_str(&format!("; {field} after {by}: predicted {}, classified {}", if predicted { "point" } else { "nonlocal" }, cl.verdict));
        }
        let mut comp = Computed::new(render, agree, move |want| Ok(want.as_str() == Some(first.as_str())));
        comp.extras.push((format!("agrees with {seen} classifications"), agree));
        Ok(comp)
    }

    fn connection(&self, c: &CheckDecl) -> Res<Computed> {
        let sname = Self::need(&c.solution, "solution")?;
        let sol = &self.problem.solutions[sname];
        let parent_name = match &sol.system {
            Some(s) => s.clone(),
            None => self.default_system()?.to_string(),
        };
        let parent = self.system(&parent_name)?;
        let red = self.reduced(&sol.reduced)?;
        let candidate = |space: &JetSpace, m: &Option<indexmap::IndexMap<String, String>>| -> Res<Option<BTreeMap<usize, Expr>>> {
            let Some(m) = m else { return Ok(None) };
            let mut out = BTreeMap::new();
            for (dep, text) in m {
                let d = space.dependent_named(dep).ok_or_else(|| format!("`{dep}` is not a dependent variable"))?;
                out.insert(d, space.parse(text).map_err(e2s)?);
            }
            Ok(Some(out))
        };
        let ps = candidate(&parent.space, &sol.parent)?;
        let rs = candidate(&red.system.space, &sol.reduced_solution)?;
        let big_u = sol.antiderivative.as_ref().map(|t| parent.space.parse(t)).transpose().map_err(e2s)?;
        let rep = verify_connection(&parent, &red, ps.as_ref(), rs.as_ref(), big_u.as_ref(), &self.cfg).map_err(e2s)?;
        let symbolic = match &big_u {
            Some(u) => Some(verify_shift_symbolic(&parent, &red, u, &self.cfg).map_err(e2s)?),
            None => None,
        };
        let mut parts = Vec::new();
        let flag = |label: &str, v: Option<bool>, parts: &mut Vec<String>| {
            if let Some(v) = v {
                parts.push(format!("{label} {}", if v { "ok" } else { "FAILED" }));
            }
        };
        flag("parent solves", rep.parent_solves, &mut parts);
        flag("gradient solves reduced", rep.gradient_solves_reduced, &mut parts);
        flag("gradient matches", rep.gradient_matches, &mut parts);
        flag("reduced solves", rep.reduced_solves, &mut parts);
        flag("antiderivative matches", rep.antiderivative_matches, &mut parts);
        for (k, ok) in &rep.shifted {
            flag(&format!("C = {k}"), Some(*ok), &mut parts);
        }
        flag("symbolic C", symbolic, &mut parts);
        let ok = rep.passed() && symbolic != Some(false);
        Ok(Computed::new(parts.join(", "), ok, move |want| Ok(want.as_bool() == Some(ok))))
    }

    /// Run one check and compare against its expectations.
    pub fn evaluate(&self, c: &CheckDecl) -> (Verdict, String, String) {
        let expected = render_expected(c);
        let comp = match self.compute(c) {
            Ok(comp) => comp,
            Err(e) => return (Verdict::Fail, format!("error: {e}"), expected),
        };
        let extras_ok = comp.extras.iter().all(|(_, ok)| *ok);
        let failed: Vec<&str> = comp.extras.iter().filter(|(_, ok)| !ok).map(|(l, _)| l.as_str()).collect();
        let mut computed = comp.render.clone();
        if !failed.is_empty() {
            computed.push_str(&format!(" [mismatch: {}]", failed.join(", ")));
        }
        let main = match &c.expect {
            None => Ok(comp.natural),
            Some(v) => (comp.matches)(v),
        };
        let verdict = match main {
            Err(e) => {
                computed.push_str(&format!(" [bad expectation: {e}]"));
                Verdict::Fail
            }
            Ok(true) if extras_ok => match &c.paper_expect {
                Some(p) if c.conflict_note.is_some() && !(comp.matches)(p).unwrap_or(false) => Verdict::DiscrepancyDocumented,
                _ => Verdict::Pass,
            },
            _ if comp.inconclusive => Verdict::Inconclusive,
            _ => Verdict::Fail,
        };
        (verdict, computed, expected)
    }
}

fn string_list(v: &Value) -> Res<Vec<String>> {
    match v {
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Array(a) => a.iter().map(|x| x.as_str().map(String::from).ok_or_else(|| "expected strings".to_string())).collect(),
        _ => Err("expected an equation string or a list of them".into()),
    }
}

/// `-X1`, `2*X3 - X4`, `−1·X1`: rational coefficients over `names`.
pub fn parse_combination(text: &str, names: &[String]) -> Res<Vec<BigRational>> {
    let clean = text.replace('\u{2212}', "-").replace('\u{b7}', "*");
    let voc = Vocabulary::new(names.iter().map(String::as_str));
    let e = parse_expr(&clean, &voc).map_err(e2s)?;
    let mut coeffs = Vec::with_capacity(names.len());
    let mut rest = e.clone();
    for n in names {
        let s = Symbol::new(n);
        let d = e.diff(&s);
        let q = d.as_rational().cloned().ok_or_else(|| format!("`{text}` is not a constant combination"))?;
        rest = rest - Expr::symbol(&s) * Expr::num(q.clone());
        coeffs.push(q);
    }
    if !rest.is_zero() {
        return Err(format!("`{text}` is not a linear combination"));
    }
    Ok(coeffs)
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(render_value).collect::<Vec<_>>().join("; "),
        Value::Table(t) => t.iter().map(|(k, v)| format!("{k}: {}", render_value(v))).collect::<Vec<_>>().join(", "),
        other => other.to_string(),
    }
}

fn render_expected(c: &CheckDecl) -> String {
    let mut out = match &c.expect {
        Some(v) => render_value(v),
        None => "(none)".into(),
    };
    for (label, v) in [
        ("witness", &c.witness),
        ("criterion", &c.criterion),
        ("residual", &c.residual),
        ("scale", &c.scale),
    ] {
        if let Some(v) = v {
            out.push_str(&format!(", {label} {v}"));
        }
    }
    if let Some(n) = c.integrability {
        out.push_str(&format!(", {n} integrability"));
    }
    if let Some(p) = &c.paper_expect {
        out.push_str(&format!(" (stated: {}", render_value(p)));
        if let Some(n) = &c.conflict_note {
            out.push_str(&format!("; {n}"));
        }
        out.push(')');
    }
    out
}

/// Every check of one problem, in file order.
pub fn run_problem(p: &ProblemFile, cfg: &Config, timing: bool) -> Vec<Record> {
    let ctx = Context::new(p, cfg.clone());
    p.checks
        .iter()
        .map(|c| {
            let start = Instant::now();
            let (verdict, computed, expected) = ctx.evaluate(c);
            Record {
                problem: p.id.clone(),
                operation: c.op.clone(),
                verdict,
                computed,
                expected,
                wall_time_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
            }
        })
        .collect()
}
