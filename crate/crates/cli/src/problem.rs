//! Problem files: TOML with named sections. Expressions stay strings in the
//! core grammar and are parsed against the space they live on.

use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Deserialize;
use symred_core::expr::ParseError;
use symred_core::jet::{JetError, JetSpace};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDecl {
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    #[serde(default)]
    pub parameters: Vec<String>,
    pub order: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDecl {
    pub independent: Option<Vec<String>>,
    pub dependent: Option<Vec<String>>,
    pub parameters: Option<Vec<String>>,
    pub order: Option<usize>,
    pub equations: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDecl {
    /// Source system; defaults to the first declared system.
    pub from: Option<String>,
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    /// Target coordinate name -> expression in source coordinates.
    pub forward: IndexMap<String, String>,
    /// Source coordinate name -> expression in target coordinates.
    pub inverse: Option<IndexMap<String, String>>,
    /// Auxiliary variable -> definition in source jet coordinates.
    #[serde(default)]
    pub aux: IndexMap<String, String>,
    /// Translated target dependent; defaults to the first.
    pub canonical: Option<String>,
    /// Generator this chart straightens out.
    pub for_field: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDecl {
    pub system: Option<String>,
    pub reduced: String,
    pub parent: Option<IndexMap<String, String>>,
    pub reduced_solution: Option<IndexMap<String, String>>,
    pub antiderivative: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Derived,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDecl {
    pub op: String,
    pub provenance: Provenance,
    pub system: Option<String>,
    pub field: Option<String>,
    #[serde(default)]
    pub fields: Vec<String>,
    pub chart: Option<String>,
    pub reduced: Option<String>,
    pub solution: Option<String>,
    pub target: Option<String>,
    pub names: Option<Vec<String>>,
    pub order: Option<usize>,
    pub save_as: Option<String>,
    pub expect: Option<toml::Value>,
    pub paper_expect: Option<toml::Value>,
    pub conflict_note: Option<String>,
    pub witness: Option<String>,
    pub criterion: Option<String>,
    pub residual: Option<String>,
    pub scale: Option<String>,
    pub integrability: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub id: String,
    pub anchor: String,
    pub space: Option<SpaceDecl>,
    #[serde(default)]
    pub systems: IndexMap<String, SystemDecl>,
    /// Field name -> coordinate -> coefficient; the reserved key `on` names
    /// the system whose space the field lives on.
    #[serde(default)]
    pub fields: IndexMap<String, IndexMap<String, String>>,
    #[serde(default)]
    pub charts: IndexMap<String, ChartDecl>,
    #[serde(default)]
    pub solutions: IndexMap<String, SolutionDecl>,
    #[serde(default)]
    pub checks: Vec<CheckDecl>,
}

pub const OPERATIONS: &[&str] = &[
    "prolong",
    "check-symmetry",
    "canonical-verify",
    "transform",
    "reduce-ode",
    "reduce-pde",
    "pushforward",
    "classify",
    "lift-test",
    "commutator",
    "algebra",
    "advice",
    "connection",
];

#[derive(Debug)]
pub struct LoadError {
    pub path: PathBuf,
    pub location: String,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.path.display(), self.location, self.message)
    }
}

impl std::error::Error for LoadError {}

impl ProblemFile {
    pub fn parse(text: &str, path: &Path) -> Result<ProblemFile, LoadError> {
        let p: ProblemFile = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    format!("line {line}")
                }
                None => "file".into(),
            };
            LoadError {
                path: path.to_path_buf(),
                location,
                message: e.message().to_string(),
            }
        })?;
        p.validate(path)?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<ProblemFile, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError {
            path: path.to_path_buf(),
            location: "file".into(),
            message: e.to_string(),
        })?;
        ProblemFile::parse(&text, path)
    }

    pub fn default_system(&self) -> Option<&str> {
        self.systems.keys().next().map(String::as_str)
    }

    /// Space of a declared system (falls back to the top-level space).
    pub fn declared_space(&self, name: &str) -> Option<Result<JetSpace, JetError>> {
        let sys = self.systems.get(name)?;
        let top = self.space.as_ref();
        let pick = |own: &Option<Vec<String>>, f: fn(&SpaceDecl) -> &Vec<String>| -> Vec<String> {
            own.clone().or_else(|| top.map(|t| f(t).clone())).unwrap_or_default()
        };
        let ind = pick(&sys.independent, |t| &t.independent);
        let dep = pick(&sys.dependent, |t| &t.dependent);
        let par = pick(&sys.parameters, |t| &t.parameters);
        let order = sys.order.or(top.map(|t| t.order)).unwrap_or(1);
        Some(JetSpace::with_parameters(&strs(&ind), &strs(&dep), &strs(&par), order))
    }

    /// Names produced by `save_as`, with the index of the producing check.
    pub fn saved(&self, name: &str) -> Option<usize> {
        self.checks.iter().position(|c| c.save_as.as_deref() == Some(name))
    }

    fn system_known(&self, name: &str) -> bool {
        self.systems.contains_key(name) || self.saved(name).is_some()
    }

    fn validate(&self, path: &Path) -> Result<(), LoadError> {
        let err = |location: String, message: String| LoadError {
            path: path.to_path_buf(),
            location,
            message,
        };
        let parse_err = |location: String, text: &str, e: ParseError| match e {
            ParseError::Unknown { name, .. } => err(location, format!("undeclared variable `{name}` in `{text}`")),
            other => err(location, format!("{other} in `{text}`")),
        };
        if self.systems.is_empty() {
            return Err(err("systems".into(), "no systems declared".into()));
        }
        for (name, sys) in &self.systems {
            let loc = format!("systems.{name}");
            if sys.equations.is_empty() {
                return Err(err(loc, "empty equations list".into()));
            }
            let space = self
                .declared_space(name)
                .expect("declared")
                .map_err(|e| err(loc.clone(), e.to_string()))?;
            for eq in &sys.equations {
                space.parse(eq).map_err(|e| parse_err(loc.clone(), eq, e))?;
            }
        }
        for (name, coeffs) in &self.fields {
            let loc = format!("fields.{name}");
            let on = coeffs.get("on").map(String::as_str).or(self.default_system()).unwrap_or("");
            if !self.system_known(on) {
                return Err(err(loc, format!("unknown system `{on}`")));
            }
            if let Some(space) = self.declared_space(on) {
                let space = space.map_err(|e| err(loc.clone(), e.to_string()))?;
                let coords: Vec<String> = space.base_coords().iter().map(ToString::to_string).collect();
                for (coord, text) in coeffs.iter().filter(|(k, _)| *k != "on") {
                    if !coords.contains(coord) {
                        return Err(err(loc.clone(), format!("undeclared variable `{coord}`")));
                    }
                    space.parse(text).map_err(|e| parse_err(loc.clone(), text, e))?;
                }
            }
        }
        for (name, chart) in &self.charts {
            let loc = format!("charts.{name}");
            let from = chart.from.as_deref().or(self.default_system()).unwrap_or("");
            if !self.system_known(from) {
                return Err(err(loc, format!("unknown system `{from}`")));
            }
            for t in chart.independent.iter().chain(&chart.dependent) {
                if !chart.forward.contains_key(t) {
                    return Err(err(loc, format!("no forward expression for `{t}`")));
                }
            }
            if let Some(space) = self.declared_space(from) {
                let space = space.map_err(|e| err(loc.clone(), e.to_string()))?;
                for text in chart.forward.values().chain(chart.aux.values()) {
                    space.parse(text).map_err(|e| parse_err(loc.clone(), text, e))?;
                }
            }
        }
        for (k, c) in self.checks.iter().enumerate() {
            let loc = format!("checks[{k}]");
            if !OPERATIONS.contains(&c.op.as_str()) {
                return Err(err(loc, format!("unknown operation `{}`", c.op)));
            }
            for s in c.system.iter().chain(&c.reduced) {
                if !self.system_known(s) {
                    return Err(err(loc, format!("unknown system `{s}`")));
                }
            }
            for f in c.field.iter().chain(&c.fields) {
                if !self.fields.contains_key(f) {
                    return Err(err(loc, format!("unknown field `{f}`")));
                }
            }
            if let Some(ch) = &c.chart {
                if !self.charts.contains_key(ch) {
                    return Err(err(loc, format!("unknown chart `{ch}`")));
                }
            }
            if let Some(s) = &c.solution {
                if !self.solutions.contains_key(s) {
                    return Err(err(loc, format!("unknown solution `{s}`")));
                }
            }
            if c.expect.is_none() {
                return Err(err(loc, "check has no expected result".into()));
            }
            if c.paper_expect.is_some() && c.conflict_note.is_none() {
                return Err(err(loc, "paper_expect needs a conflict_note".into()));
            }
            if let Some(name) = &c.save_as {
                if !matches!(c.op.as_str(), "transform" | "reduce-ode" | "reduce-pde") {
                    return Err(err(loc, format!("`{}` produces nothing to save", c.op)));
                }
                if self.systems.contains_key(name) || self.saved(name) != Some(k) {
                    return Err(err(loc, format!("`{name}` is already defined")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
id = "t"
anchor = "test"
[space]
independent = ["x"]
dependent = ["y"]
order = 2
[systems.main]
equations = ["y'' - y'"]
[fields]
X = { y = "1" }
"#;

    #[test]
    fn loads_minimal() {
        let p = ProblemFile::parse(MINIMAL, Path::new("t.prob")).unwrap();
        assert_eq!(p.systems.len(), 1);
        assert_eq!(p.fields["X"]["y"], "1");
    }

    #[test]
    fn rejects_empty_equations() {
        let text = MINIMAL.replace(r#"equations = ["y'' - y'"]"#, "equations = []");
        let e = ProblemFile::parse(&text, Path::new("t.prob")).unwrap_err();
        assert!(e.message.contains("empty equations"), "{e}");
    }

    #[test]
    fn names_undeclared_variable() {
        let text = MINIMAL.replace(r#"y'' - y'"#, "y'' - z*y'");
        let e = ProblemFile::parse(&text, Path::new("t.prob")).unwrap_err();
        assert!(e.message.contains("`z`"), "{e}");
        let text = MINIMAL.replace(r#"X = { y = "1" }"#, r#"X = { w = "1" }"#);
        let e = ProblemFile::parse(&text, Path::new("t.prob")).unwrap_err();
        assert!(e.message.contains("`w`"), "{e}");
    }

    #[test]
    fn syntax_error_has_line() {
        let e = ProblemFile::parse("id = \"t\"\nanchor = \n", Path::new("t.prob")).unwrap_err();
        assert_eq!(e.location, "line 2");
    }
}
