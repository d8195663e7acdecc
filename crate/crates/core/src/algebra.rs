//! Commutators, structure constants, derived series, and which generator to
//! reduce by first.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exec;
use crate::expr::{equiv_zero, Config, Expr, ExprError};
use crate::jet::VectorField;
use crate::linalg::{rank, row_basis, solve};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("fields live on different spaces")]
    SpaceMismatch,
    #[error("bracket [{0}, {1}] is not in the span of the generators")]
    NotClosed(String, String),
    #[error("[{0}, {1}] is not a constant multiple of either generator")]
    NotProportional(String, String),
    #[error("no generators")]
    Empty,
    #[error("generator index {0} out of range")]
    Index(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `[X, Y]` with components `X(Y_v) − Y(X_v)`.
pub fn commutator(x: &VectorField, y: &VectorField) -> Result<VectorField, AlgebraError> {
    if x.space().base_coords() != y.space().base_coords() {
        return Err(AlgebraError::SpaceMismatch);
    }
    let xc = x.coefficients();
    let yc = y.coefficients();
    let comps: Vec<Expr> = xc.iter().zip(&yc).map(|(a, b)| x.apply_base(b) - y.apply_base(a)).collect();
    let p = x.space().p();
    Ok(VectorField::new(x.space(), comps[..p].to_vec(), comps[p..].to_vec()).expect("bracket of point fields is a point field"))
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Bracket {
    /// Rational coordinates in the generator basis.
    InSpan(Vec<BigRational>),
    /// The bracket, and what is left after the best constant fit.
    NotInSpan { bracket: VectorField, residual: VectorField },
}

#[derive(Clone, Debug)]
pub struct AlgebraTable {
    pub names: Vec<String>,
    pub generators: Vec<VectorField>,
    /// Entries for i < j.
    entries: BTreeMap<(usize, usize), Bracket>,
}

/// Write `target` as a constant combination of `gens`: match the rational
/// coefficient of every monomial in every component, solve exactly, then
/// confirm the fit with `equiv` since normal forms are not fully canonical.
pub fn express_in_span(target: &VectorField, gens: &[VectorField], cfg: &Config) -> Result<Bracket, AlgebraError> {
    let q = gens.len();
    let tc = target.coefficients();
    let gc: Vec<Vec<Expr>> = gens.iter().map(VectorField::coefficients).collect();
    let mut rows: BTreeMap<(usize, Expr), (Vec<BigRational>, BigRational)> = BTreeMap::new();
    let zero_row = || (vec![BigRational::zero(); q], BigRational::zero());
    for (v, comp) in tc.iter().enumerate() {
        for t in comp.terms() {
            let (c, m) = t.coefficient_split();
            rows.entry((v, m)).or_insert_with(zero_row).1 += c;
        }
    }
    for (k, g) in gc.iter().enumerate() {
        for (v, comp) in g.iter().enumerate() {
            for t in comp.terms() {
                let (c, m) = t.coefficient_split();
                rows.entry((v, m)).or_insert_with(zero_row).0[k] += c;
            }
        }
    }
    let (a, b): (Vec<_>, Vec<_>) = rows.into_values().unzip();
    let coeffs = if q == 0 { None } else { solve(&a, &b) };
    let fit = coeffs.clone().unwrap_or_else(|| vec![BigRational::zero(); q]);
    let mut residual = target.clone();
    for (k, c) in fit.iter().enumerate() {
        if !c.is_zero() {
            residual = residual.add(&gens[k].scale(&-c));
        }
    }
    let mut closes = coeffs.is_some();
    if closes {
        for r in residual.coefficients() {
            if !equiv_zero(&r, cfg)? {
                closes = false;
                break;
            }
        }
    }
    Ok(match (closes, coeffs) {
        (true, Some(c)) => Bracket::InSpan(c),
        _ => Bracket::NotInSpan {
            bracket: target.clone(),
            residual,
        },
    })
}

pub fn structure_constants(names: &[String], gens: &[VectorField], cfg: &Config) -> Result<AlgebraTable, AlgebraError> {
    if gens.is_empty() {
        return Err(AlgebraError::Empty);
    }
    let q = gens.len();
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i + 1..q).map(move |j| (i, j))).collect();
    let results = exec::map(cfg.exec, &pairs, |&(i, j)| {
        let b = commutator(&gens[i], &gens[j])?;
        express_in_span(&b, gens, cfg)
    });
    let mut entries = BTreeMap::new();
    for (pair, r) in pairs.into_iter().zip(results) {
        entries.insert(pair, r?);
    }
    Ok(AlgebraTable {
        names: names.to_vec(),
        generators: gens.to_vec(),
        entries,
    })
}

impl AlgebraTable {
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Coordinates of `[X_i, X_j]`, using antisymmetry for i > j. `None` when
    /// the bracket is not in the span.
    pub fn constants(&self, i: usize, j: usize) -> Option<Vec<BigRational>> {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Some(vec![BigRational::zero(); self.dim()]),
            Less => match &self.entries[&(i, j)] {
                Bracket::InSpan(c) => Some(c.clone()),
                Bracket::NotInSpan { .. } => None,
            },
            Greater => self.constants(j, i).map(|c| c.into_iter().map(|x| -x).collect()),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&Bracket> {
        self.entries.get(&(i.min(j), i.max(j)))
    }

    pub fn is_closed(&self) -> bool {
        self.entries.values().all(|b| matches!(b, Bracket::InSpan(_)))
    }

    fn check_index(&self, i: usize) -> Result<(), AlgebraError> {
        if i < self.dim() {
            Ok(())
        } else {
            Err(AlgebraError::Index(i))
        }
    }

    fn closed_constants(&self) -> Result<Vec<Vec<Vec<BigRational>>>, AlgebraError> {
        let q = self.dim();
        let mut c = vec![vec![Vec::new(); q]; q];
        for i in 0..q {
            for j in 0..q {
                c[i][j] = self
                    .constants(i, j)
                    .ok_or_else(|| AlgebraError::NotClosed(self.names[i.min(j)].clone(), self.names[i.max(j)].clone()))?;
            }
        }
        Ok(c)
    }

    /// Jacobi identity on the structure constants.
    pub fn jacobi_holds(&self) -> Result<bool, AlgebraError> {
        let c = self.closed_constants()?;
        let q = self.dim();
        // [[X_i, X_j], X_k] = Σ_l c_ij^l c_lk^m
        let br2 = |i: usize, j: usize, k: usize| -> Vec<BigRational> {
            let mut out = vec![BigRational::zero(); q];
            for l in 0..q {
                if c[i][j][l].is_zero() {
                    continue;
                }
                for m in 0..q {
                    out[m] += &c[i][j][l] * &c[l][k][m];
                }
            }
            out
        };
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    let a = br2(i, j, k);
                    let b = br2(j, k, i);
                    let d = br2(k, i, j);
                    if (0..q).any(|m| !(&a[m] + &b[m] + &d[m]).is_zero()) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Dimensions of the derived series, starting with the whole algebra and
    /// stopping at 0 or when it stabilizes.
    pub fn derived_series(&self) -> Result<Vec<usize>, AlgebraError> {
        let c = self.closed_constants()?;
        let q = self.dim();
        let mut basis: Vec<Vec<BigRational>> = (0..q)
            .map(|i| (0..q).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        let mut dims = vec![q];
        loop {
            let mut brackets = Vec::new();
            for (a, v) in basis.iter().enumerate() {
                for w in &basis[a + 1..] {
                    let mut out = vec![BigRational::zero(); q];
                    for i in 0..q {
                        for j in 0..q {
                            let f = &v[i] * &w[j];
                            if f.is_zero() {
                                continue;
                            }
                            for (k, o) in out.iter_mut().enumerate() {
                                *o += &f * &c[i][j][k];
                            }
                        }
                    }
                    brackets.push(out);
                }
            }
            let next = if brackets.is_empty() { Vec::new() } else { row_basis(&brackets) };
            let d = if next.is_empty() { 0 } else { rank(&next) };
            if d == *dims.last().expect("nonempty") {
                return Ok(dims);
            }
            dims.push(d);
            if d == 0 {
                return Ok(dims);
            }
            basis = next;
        }
    }

    pub fn is_solvable(&self) -> Result<(bool, Vec<usize>), AlgebraError> {
        let dims = self.derived_series()?;
        Ok((dims.last() == Some(&0), dims))
    }

    /// `[X_i, X_j]` written as a combination, e.g. `−1·X1`.
    pub fn render(&self, i: usize, j: usize) -> String {
        match self.constants(i, j) {
            Some(c) => render_combination(&c, &self.names),
            None => match self.entry(i, j) {
                Some(Bracket::NotInSpan { bracket, .. }) if i < j => format!("not in span: {bracket}"),
                Some(Bracket::NotInSpan { bracket, .. }) => format!("not in span: -({bracket})"),
                _ => "not in span".into(),
            },
        }
    }

    pub fn reduction_order_advice(&self, i: usize, j: usize) -> Result<Advice, AlgebraError> {
        self.check_index(i)?;
        self.check_index(j)?;
        let (ni, nj) = (self.names[i].clone(), self.names[j].clone());
        let c = self.constants(i, j).ok_or_else(|| AlgebraError::NotClosed(ni.clone(), nj.clone()))?;
        let only = |k: usize| c.iter().enumerate().all(|(l, x)| l == k || x.is_zero());
        if c.iter().all(Zero::is_zero) {
            return Ok(Advice {
                first: i,
                second: j,
                prediction: Prediction::EitherOrder,
                reason: format!("[{ni}, {nj}] = 0"),
            });
        }
        let ideal = if only(i) {
            i
        } else if only(j) {
            j
        } else {
            return Err(AlgebraError::NotProportional(ni, nj));
        };
        let other = if ideal == i { j } else { i };
        Ok(Advice {
            first: ideal,
            second: other,
            prediction: Prediction::Ordered,
            reason: format!(
                "[{ni}, {nj}] = {}; {} spans the derived ideal",
                render_combination(&c, &self.names),
                self.names[ideal]
            ),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prediction {
    /// Reducing by `first` keeps `second` as a point symmetry; the reverse
    /// order turns `first` nonlocal.
    Ordered,
    /// Commuting pair: either order keeps the other as a point symmetry.
    EitherOrder,
}

#[derive(Clone, Debug)]
pub struct Advice {
    pub first: usize,
    pub second: usize,
    pub prediction: Prediction,
    pub reason: String,
}

impl Advice {
    /// Predicted inheritance of `inherited` after reducing by `reduce_by`:
    /// true for point, false for nonlocal.
    pub fn predicts_point(&self, reduce_by: usize, inherited: usize) -> bool {
        match self.prediction {
            Prediction::EitherOrder => true,
            Prediction::Ordered => reduce_by == self.first && inherited == self.second,
        }
    }
}

/// `2·X3`, `−1·X1`, `X1 − 2·X3` style; `0` for the zero combination.
pub fn render_combination(c: &[BigRational], names: &[String]) -> String {
    let mut out = String::new();
    for (k, x) in c.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let mag = x.abs();
        let name = names.get(k).cloned().unwrap_or_else(|| format!("X{}", k + 1));
        if out.is_empty() {
            if x.is_negative() {
                out.push('\u{2212}');
            }
        } else {
            out.push_str(if x.is_negative() { " \u{2212} " } else { " + " });
        }
        out.push_str(&format!("{mag}\u{b7}{name}"));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for AlgebraTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.dim();
        let mut first = true;
        for i in 0..q {
            for j in i + 1..q {
                if !first {
                    writeln!(f)?;
                }
                first = false;
                write!(f, "[{}, {}] = {}", self.names[i], self.names[j], self.render(i, j))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rat;
    use crate::jet::JetSpace;

    fn cfg() -> Config {
        Config::default()
    }

    fn names(q: usize) -> Vec<String> {
        (1..=q).map(|i| format!("X{i}")).collect()
    }

    fn ex32() -> Vec<VectorField> {
        let s = JetSpace::new(&["x1", "x2"], &["u"], 1).unwrap();
        [
            ["0", "0", "1"],
            ["x1", "2*x2", "u"],
            ["1", "0", "0"],
            ["0", "1", "0"],
            ["2*x1", "0", "-u"],
        ]
        .iter()
        .map(|c| VectorField::parse(&s, c).unwrap())
        .collect()
    }

    #[test]
    fn blasius_pair() {
        let s = JetSpace::new(&["x"], &["y"], 1).unwrap();
        let g = vec![
            VectorField::parse(&s, &["0", "1"]).unwrap(),
            VectorField::parse(&s, &["x", "-y"]).unwrap(),
        ];
        let t = structure_constants(&names(2), &g, &cfg()).unwrap();
        assert_eq!(t.constants(0, 1).unwrap(), vec![rat(-1, 1), rat(0, 1)]);
        assert_eq!(t.render(0, 1), "\u{2212}1\u{b7}X1");
        assert_eq!(t.render(1, 0), "1\u{b7}X1");
        let adv = t.reduction_order_advice(0, 1).unwrap();
        assert_eq!(adv.first, 0);
        assert!(adv.predicts_point(0, 1));
        assert!(!adv.predicts_point(1, 0));
    }

    #[test]
    fn ex32_table() {
        let t = structure_constants(&names(5), &ex32(), &cfg()).unwrap();
        assert!(t.is_closed());
        let c = |i: usize, j: usize| t.constants(i - 1, j - 1).unwrap();
        let e = |k: usize, v: i64| {
            let mut out = vec![rat(0, 1); 5];
            out[k - 1] = rat(v, 1);
            out
        };
        assert_eq!(c(1, 2), e(1, 1));
        assert_eq!(c(1, 5), e(1, -1));
        assert_eq!(c(3, 5), e(3, 2));
        assert_eq!(c(5, 2), vec![rat(0, 1); 5]);
        assert_eq!(c(2, 3), e(3, -1));
        assert_eq!(c(2, 4), e(4, -2));
        assert!(t.jacobi_holds().unwrap());
        assert_eq!(t.is_solvable().unwrap(), (true, vec![5, 3, 0]));
    }

    #[test]
    fn abelian_and_not_closed() {
        let s = JetSpace::new(&["x"], &["y"], 1).unwrap();
        let g = vec![
            VectorField::parse(&s, &["1", "0"]).unwrap(),
            VectorField::parse(&s, &["0", "1"]).unwrap(),
        ];
        let t = structure_constants(&names(2), &g, &cfg()).unwrap();
        assert_eq!(t.is_solvable().unwrap(), (true, vec![2, 0]));
        assert_eq!(t.reduction_order_advice(0, 1).unwrap().prediction, Prediction::EitherOrder);
        assert_eq!(t.render(0, 1), "0");

        let g = vec![
            VectorField::parse(&s, &["1", "0"]).unwrap(),
            VectorField::parse(&s, &["x^2", "0"]).unwrap(),
        ];
        let t = structure_constants(&names(2), &g, &cfg()).unwrap();
        assert!(!t.is_closed());
        assert!(matches!(t.is_solvable(), Err(AlgebraError::NotClosed(..))));
    }

    #[test]
    fn sl2_is_not_solvable() {
        let s = JetSpace::new(&["x"], &["y"], 1).unwrap();
        let g: Vec<VectorField> = [["1", "0"], ["x", "0"], ["x^2", "0"]]
            .iter()
            .map(|c| VectorField::parse(&s, c).unwrap())
            .collect();
        let t = structure_constants(&names(3), &g, &cfg()).unwrap();
        assert_eq!(t.is_solvable().unwrap(), (false, vec![3]));
    }
}
