//! Small dense linear algebra: symbolic determinants and inverses by
//! cofactor expansion, and exact rational elimination.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::expr::{Expr, ExprError};

pub type Matrix = Vec<Vec<Expr>>;

fn minor(m: &Matrix, row: usize, col: usize) -> Matrix {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, e)| e.clone()).collect())
        .collect()
}

/// Determinant by Laplace expansion along the row with most zeros. Only ring
/// operations are used, so no spurious denominators appear.
pub fn det(m: &Matrix) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let row = (0..n)
                .max_by_key(|&i| (m[i].iter().filter(|e| e.is_zero()).count(), std::cmp::Reverse(i)))
                .unwrap();
            let mut acc = Expr::zero();
            for col in 0..n {
                if m[row][col].is_zero() {
                    continue;
                }
                let term = &m[row][col] * det(&minor(m, row, col));
                acc = if (row + col) % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Adjugate (transpose of the cofactor matrix).
pub fn adjugate(m: &Matrix) -> Matrix {
    let n = m.len();
    if n == 1 {
        return vec![vec![Expr::one()]];
    }
    let mut adj = vec![vec![Expr::zero(); n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let c = det(&minor(m, j, i));
            *slot = if (i + j) % 2 == 0 { c } else { -c };
        }
    }
    adj
}

/// Inverse as adjugate over determinant.
pub fn inverse(m: &Matrix) -> Result<(Matrix, Expr), ExprError> {
    let d = det(m);
    let inv_d = d.recip()?;
    let adj = adjugate(m);
    let inv = adj.into_iter().map(|r| r.into_iter().map(|e| e * &inv_d).collect()).collect();
    Ok((inv, d))
}

pub type QMatrix = Vec<Vec<BigRational>>;

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut QMatrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let v = &m[r][j] * &f;
                    m[i][j] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Solve `A x = b` exactly. `None` if inconsistent; free variables are set
/// to zero.
pub fn solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.first().map_or(0, Vec::len);
    let mut aug: QMatrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&n) {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    Some(x)
}

/// Basis (as rows) of the row space.
pub fn row_basis(rows: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let mut m = rows.to_vec();
    let k = rref(&mut m).len();
    m.truncate(k);
    m
}

pub fn identity(n: usize) -> QMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equiv, parse_expr, rat, Config, Vocabulary};

    fn p(s: &str) -> Expr {
        parse_expr(s, &Vocabulary::permissive()).unwrap()
    }

    #[test]
    fn symbolic_inverse() {
        let m = vec![vec![p("a"), p("b")], vec![p("c"), p("d")]];
        let (inv, d) = inverse(&m).unwrap();
        assert_eq!(d, p("a*d - b*c"));
        // m * inv = I
        for i in 0..2 {
            for j in 0..2 {
                let s: Expr = (0..2).map(|k| &m[i][k] * &inv[k][j]).sum();
                let want = if i == j { Expr::one() } else { Expr::zero() };
                assert!(equiv(&s, &want, &Config::default()).unwrap());
            }
        }
    }

    #[test]
    fn det_3x3() {
        let m = vec![
            vec![p("1"), p("2"), p("3")],
            vec![p("0"), p("x"), p("1")],
            vec![p("0"), p("0"), p("y")],
        ];
        assert_eq!(det(&m), p("x*y"));
    }

    #[test]
    fn rational_solve() {
        let a = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(1, 1), rat(-1, 1)]];
        assert_eq!(solve(&a, &[rat(3, 1), rat(1, 1)]).unwrap(), vec![rat(2, 1), rat(1, 1)]);
        let a = vec![vec![rat(1, 1)], vec![rat(1, 1)]];
        assert!(solve(&a, &[rat(1, 1), rat(2, 1)]).is_none());
        assert_eq!(rank(&identity(3)), 3);
    }
}
