//! Dense SVD via one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of the working matrix are rotated in cyclic pair order until all
//! are mutually orthogonal; their norms are then the singular values. The
//! method computes small singular values to high relative accuracy, which
//! matters here because thresholding near delta is the whole point.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use crate::spectral::SvdFactors;

const MAX_SWEEPS: usize = 64;

// Orthogonality tolerance for the Gram off-diagonals. Dots of length-m
// columns carry roundoff around sqrt(m) * eps relative to the norms, so
// the threshold scales with m; a flat machine-level tolerance makes
// clustered singular values cycle forever on noise-level rotations.
fn ortho_tol(m: usize) -> f64 {
    8.0 * libm::sqrt(m as f64) * f64::EPSILON
}

/// Full SVD of a square matrix.
///
/// Singular values are sorted nonincreasing; `U` and `V` are N x N with
/// orthonormal columns (columns for zero singular values are completed from
/// the canonical basis).
pub fn dense_svd(matrix: &Matrix) -> Result<SvdFactors> {
    if matrix.rows() == 0 || matrix.cols() == 0 {
        return Err(Error::EmptyOperator);
    }
    if matrix.rows() != matrix.cols() {
        return Err(Error::Input(format!(
            "dense_svd expects a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if !matrix.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    Ok(jacobi_svd(matrix))
}

/// One-sided Jacobi on an m x n matrix with m >= n; returns thin factors
/// (U m x n, V n x n).
pub(crate) fn jacobi_svd(matrix: &Matrix) -> SvdFactors {
    let m = matrix.rows();
    let n = matrix.cols();
    debug_assert!(m >= n);

    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| matrix.col(j)).collect();
    let mut v_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    // Columns whose norm falls to the roundoff floor of the matrix scale
    // are numerically zero; rotating them only churns noise.
    let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let floor = f64::EPSILON * scale;
    let floor_sq = floor * floor;
    let tol = ortho_tol(m);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                if alpha <= floor_sq || beta <= floor_sq {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if libm::fabs(gamma) <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v_cols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    // Stable order on ties keeps the factorisation deterministic.
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let mut values = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut right = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        let sigma = norms[old_j];
        if sigma > floor {
            values.push(sigma);
            u_cols.push(cols[old_j].iter().map(|v| v / sigma).collect());
        } else {
            // Numerically zero: the leftover direction is roundoff junk, so
            // report an exact zero and take a completed basis vector.
            values.push(0.0);
            u_cols.push(vec![0.0; m]); // completed below
        }
        for i in 0..n {
            right[(i, new_j)] = v_cols[old_j][i];
        }
    }
    complete_zero_columns(&mut u_cols, &values);

    let mut left = Matrix::zeros(m, n);
    for (j, col) in u_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            left[(i, j)] = v;
        }
    }
    SvdFactors::new(left, values, right, !converged)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Replace the placeholder columns for zero singular values with canonical
/// basis vectors orthogonalised against every other column.
fn complete_zero_columns(u_cols: &mut [Vec<f64>], values: &[f64]) {
    let zero_idx: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 0.0)
        .map(|(j, _)| j)
        .collect();
    if zero_idx.is_empty() {
        return;
    }
    let m = u_cols[0].len();
    let mut filled: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, _)| j)
        .collect();
    let mut candidate = 0usize;
    for &j in &zero_idx {
        loop {
            assert!(candidate < m, "ran out of basis candidates completing U");
            let mut vec_j = vec![0.0; m];
            vec_j[candidate] = 1.0;
            candidate += 1;
            // Two orthogonalisation passes keep the completion orthonormal.
            for _ in 0..2 {
                for &f in &filled {
                    let proj = dot(&vec_j, &u_cols[f]);
                    for (vj, uf) in vec_j.iter_mut().zip(&u_cols[f]) {
                        *vj -= proj * uf;
                    }
                }
            }
            let len = norm(&vec_j);
            if len > 0.5 {
                for v in &mut vec_j {
                    *v /= len;
                }
                u_cols[j] = vec_j;
                filled.push(j);
                break;
            }
        }
    }
}
