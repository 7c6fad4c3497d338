//! Exact rational matrix helpers (small sizes only).

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use crate::rat::{to_f64, Rat};

pub type RMat = Vec<Vec<Rat>>;

pub fn is_symmetric(m: &RMat) -> bool {
    let n = m.len();
    m.iter().all(|row| row.len() == n)
        && (0..n).all(|i| (0..n).all(|j| m[i][j] == m[j][i]))
}

/// Exact rank by Gaussian elimination.
pub fn rank(m: &RMat) -> usize {
    let mut a = m.clone();
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut rk = 0;
    for c in 0..cols {
        let Some(p) = (rk..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rk, p);
        for i in 0..rows {
            if i != rk && !a[i][c].is_zero() {
                let f = &a[i][c] / &a[rk][c];
                for j in c..cols {
                    let t = &f * &a[rk][j];
                    a[i][j] -= t;
                }
            }
        }
        rk += 1;
    }
    rk
}

/// Leading principal minors via exact LDLᵀ; returns the pivots (None if a zero pivot
/// is hit before the end, meaning the matrix is not positive definite).
fn ldl_pivots(m: &RMat) -> Option<Vec<Rat>> {
    let n = m.len();
    let mut a = m.clone();
    let mut piv = Vec::with_capacity(n);
    for k in 0..n {
        let p = a[k][k].clone();
        if p.is_zero() {
            return None;
        }
        for i in k + 1..n {
            let f = &a[i][k] / &p;
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
        piv.push(p);
    }
    Some(piv)
}

pub fn is_positive_definite(m: &RMat) -> bool {
    if !is_symmetric(m) {
        return false;
    }
    match ldl_pivots(m) {
        Some(p) => p.iter().all(|x| x.is_positive()),
        None => false,
    }
}

/// Eigenvalues of a symmetric matrix in floating point.
pub fn eigenvalues(m: &RMat) -> Vec<f64> {
    let n = m.len();
    let dm = DMatrix::from_fn(n, n, |i, j| to_f64(&m[i][j]));
    let mut ev: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_eigenvalue(m: &RMat) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Positive semidefinite test: exact rank plus non-negative float spectrum.
pub fn is_positive_semidefinite(m: &RMat) -> bool {
    is_symmetric(m) && min_eigenvalue(m) > -1e-9
}

/// Exact inverse by Gauss-Jordan.
pub fn inverse(m: &RMat) -> Option<RMat> {
    let n = m.len();
    let mut a: RMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::from_integer(1.into()) } else { Rat::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(c, p);
        let pv = a[c][c].clone();
        for j in 0..2 * n {
            a[c][j] = &a[c][j] / &pv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let t = &f * &a[c][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// vᵀ M w.
pub fn bilinear(m: &RMat, v: &[Rat], w: &[Rat]) -> Rat {
    let mut s = Rat::zero();
    for (i, vi) in v.iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        for (j, wj) in w.iter().enumerate() {
            if !wj.is_zero() && !m[i][j].is_zero() {
                s += vi * &m[i][j] * wj;
            }
        }
    }
    s
}

/// P M Pᵀ for a permutation given as `perm[i]` = source index of new row i.
pub fn permute(m: &RMat, perm: &[usize]) -> RMat {
    perm.iter()
        .map(|&i| perm.iter().map(|&j| m[i][j].clone()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{r, rat_mat, ri};

    #[test]
    fn rank_and_pd() {
        let a = rat_mat(&[&[2, -1], &[-1, 2]]);
        assert!(is_positive_definite(&a));
        assert_eq!(rank(&a), 2);
        let b = rat_mat(&[&[1, 1], &[1, 1]]);
        assert!(!is_positive_definite(&b));
        assert!(is_positive_semidefinite(&b));
        assert_eq!(rank(&b), 1);
    }

    #[test]
    fn inverse_cartan() {
        let a = rat_mat(&[&[2, -1], &[-1, 2]]);
        let inv = inverse(&a).unwrap();
        assert_eq!(inv[0][0], r(2, 3));
        assert_eq!(inv[0][1], r(1, 3));
        assert_eq!(bilinear(&a, &[ri(1), ri(0)], &[ri(0), ri(1)]), ri(-1));
    }
}
