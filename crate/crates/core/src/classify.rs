//! Matrix-class decisions: P, S, completely-S, M and positive definiteness.
//!
//! Principal-minor and principal-submatrix checks enumerate all `2^d - 1`
//! index subsets, so they are limited to `d <= MAX_ENUM_DIM`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{nonempty_subsets, Matrix};
use crate::simplex::{maximize, LpOutcome};

pub const MAX_ENUM_DIM: usize = 16;
/// A principal minor must exceed this (relative to `‖sub‖∞^k`) to count as positive.
pub const MINOR_TOL: f64 = 1e-10;
/// Optimal `t*` of the S-matrix LP must exceed this.
pub const S_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-8;
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub is_completely_s: bool,
    pub is_p_matrix: bool,
    pub is_m_matrix: bool,
    /// For a nonsymmetric input this refers to the symmetric part, i.e.
    /// `xᵀMx > 0` for all `x ≠ 0`.
    pub is_positive_definite: bool,
    /// S-matrix witness `w ≥ 0` with `Mw > 0` for the full matrix, if any.
    pub witness: Option<Vec<f64>>,
    pub min_principal_minor: f64,
}

fn check_dim(m: &Matrix) -> Result<()> {
    if m.dim() > MAX_ENUM_DIM {
        return Err(Error::DimensionTooLarge {
            dim: m.dim(),
            max: MAX_ENUM_DIM,
        });
    }
    Ok(())
}

/// Returns whether every principal minor is positive, and the smallest
/// principal minor encountered.
pub fn is_p_matrix(m: &Matrix) -> Result<(bool, f64)> {
    check_dim(m)?;
    let mut min_minor = f64::INFINITY;
    let mut all_positive = true;
    for idx in nonempty_subsets(m.dim()) {
        let sub = m.principal(&idx);
        let det = sub.det();
        min_minor = min_minor.min(det);
        let scale = sub.det_scale().max(f64::MIN_POSITIVE);
        if !(det > MINOR_TOL * scale) {
            all_positive = false;
        }
    }
    Ok((all_positive, min_minor))
}

/// Solves `max t s.t. Mw ≥ t·1, 0 ≤ w ≤ 1, t ≥ 0`.
///
/// Returns `(t* > S_TOL, w*)`. Restricting `t ≥ 0` does not change the
/// sign test and keeps the slack basis feasible.
pub fn is_s_matrix(m: &Matrix) -> (bool, Vec<f64>) {
    let (t, w) = s_matrix_lp(m);
    (t > S_TOL, w)
}

pub(crate) fn s_matrix_lp(m: &Matrix) -> (f64, Vec<f64>) {
    let n = m.dim();
    // variables: w_0..w_{n-1}, t
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut a = Vec::with_capacity(2 * n);
    let mut b = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut row: Vec<f64> = m.row(i).iter().map(|v| -v).collect();
        row.push(1.0);
        a.push(row);
        b.push(0.0);
    }
    for j in 0..n {
        let mut row = vec![0.0; n + 1];
        row[j] = 1.0;
        a.push(row);
        b.push(1.0);
    }
    match maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, value } => (value, x[..n].to_vec()),
        // t is bounded by row sums of |M|, so this is unreachable for finite M
        LpOutcome::Unbounded => (f64::INFINITY, vec![1.0; n]),
    }
}

pub fn is_completely_s(m: &Matrix) -> Result<bool> {
    check_dim(m)?;
    Ok(nonempty_subsets(m.dim()).all(|idx| is_s_matrix(&m.principal(&idx)).0))
}

/// Nonsingular M-matrix: a Z-matrix (nonpositive off-diagonal) that is also a P-matrix.
pub fn is_m_matrix(m: &Matrix) -> Result<bool> {
    let n = m.dim();
    let z_matrix = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] <= 0.0));
    if !z_matrix {
        check_dim(m)?;
        return Ok(false);
    }
    Ok(is_p_matrix(m)?.0)
}

/// Cholesky test on `(M + Mᵀ)/2`; errors when `M` is visibly asymmetric.
pub fn is_positive_definite(m: &Matrix) -> Result<bool> {
    let scale = m.max_abs().max(1.0);
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(m.cholesky(CHOLESKY_PIVOT_TOL * scale).is_some())
}

pub fn classify(m: &Matrix) -> Result<ClassificationReport> {
    let (is_p, min_minor) = is_p_matrix(m)?;
    let is_cs = is_completely_s(m)?;
    let is_m = is_m_matrix(m)?;
    let scale = m.max_abs().max(1.0);
    let is_pd = m.cholesky(CHOLESKY_PIVOT_TOL * scale).is_some();
    let (s_ok, w) = is_s_matrix(m);
    Ok(ClassificationReport {
        is_completely_s: is_cs,
        is_p_matrix: is_p,
        is_m_matrix: is_m,
        is_positive_definite: is_pd,
        witness: s_ok.then_some(w),
        min_principal_minor: min_minor,
    })
}
