//! Product-form decisions.
//!
//! Two independent routes are provided: the algebraic skew-symmetry test on
//! `(Σ, R)`, and the geometric test that every pair of symmetry points
//! coincides (with R a P-matrix). A second geometric formulation checks that
//! `f^ij(τ^ij)` lies on the ellipse together with the non-degeneracy
//! conditions; the report records all three.

use serde::{Deserialize, Serialize};

use crate::classify::is_p_matrix;
use crate::error::{Error, Result};
use crate::geometry::{compute_rays, GeometryBundle, PairGeometry};
use crate::matrix::{norm_inf, Matrix};
use crate::model::SrbmData;

/// Default relative tolerance for both verdicts.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    NotPMatrix,
    SymmetryMismatch,
    DegeneratePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub i: usize,
    pub j: usize,
    pub reason: FailureReason,
    /// `γ(f^ij(τ^ij))`, when the pair is non-degenerate.
    pub gamma_at_tau: Option<f64>,
    /// `‖sym_i − sym_j‖∞`, when the pair is non-degenerate.
    pub mismatch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricVerdict {
    /// R is a P-matrix and all symmetry points coincide.
    pub ok: bool,
    /// Every `A^ij` is a P-matrix, `γ(f^ij(τ^ij)) = 0`, and the
    /// non-degeneracy conditions hold.
    pub pair_conditions_ok: bool,
    pub r_is_p_matrix: bool,
    pub failing_pairs: Vec<PairFailure>,
    pub pairs: Vec<PairGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductFormReport {
    pub skew_ok: bool,
    pub skew_residual: f64,
    pub geometric_ok: bool,
    pub pair_conditions_ok: bool,
    pub failing_pairs: Vec<PairFailure>,
    /// Exponential rates, present when the instance has product form.
    pub alpha: Option<Vec<f64>>,
    /// `C_i = Σ_ii / (2 R_ii)`.
    pub c_consts: Option<Vec<f64>>,
    /// Coefficient mismatch of the characterization identity at the
    /// formula value of α.
    pub characterization_residual: Option<f64>,
    /// `skew_ok == geometric_ok`.
    pub agree: bool,
    pub tol: f64,
}

impl ProductFormReport {
    pub fn product_form(&self) -> bool {
        self.skew_ok && self.geometric_ok
    }
}

fn check_diag(r: &Matrix) -> Result<()> {
    match r.diag().iter().position(|&v| v == 0.0) {
        Some(index) => Err(Error::ZeroDiagonalR { index }),
        None => Ok(()),
    }
}

/// Residual `‖2Σ − (R diag(R)⁻¹ diag(Σ) + diag(Σ) diag(R)⁻¹ Rᵀ)‖∞` and
/// whether it is within `tol · ‖Σ‖∞`.
pub fn check_skew_symmetry(data: &SrbmData, tol: f64) -> Result<(bool, f64)> {
    let r = data.r();
    let s = data.sigma();
    check_diag(r)?;
    let d = data.dim();
    let diff = Matrix::from_fn(d, |i, j| {
        let rhs = r[(i, j)] * s[(j, j)] / r[(j, j)] + s[(i, i)] * r[(j, i)] / r[(i, i)];
        2.0 * s[(i, j)] - rhs
    });
    let residual = diff.norm_inf();
    Ok((residual <= tol * s.norm_inf(), residual))
}

/// `α = −2 diag(Σ)⁻¹ diag(R) R⁻¹ μ`.
pub fn alpha_formula(data: &SrbmData) -> Result<Vec<f64>> {
    let rinv = data.r_inverse()?;
    let rmu = rinv.mul_vec(data.mu());
    Ok((0..data.dim())
        .map(|i| -2.0 * data.r()[(i, i)] * rmu[i] / data.sigma()[(i, i)])
        .collect())
}

pub fn c_consts(data: &SrbmData) -> Result<Vec<f64>> {
    check_diag(data.r())?;
    Ok((0..data.dim())
        .map(|i| data.sigma()[(i, i)] / (2.0 * data.r()[(i, i)]))
        .collect())
}

/// A quadratic polynomial in θ: `Σ_{i≤j} q_ij θ_iθ_j + Σ l_i θ_i + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPoly {
    /// Upper-triangular storage; `quad[(i,j)]` for `i ≤ j`.
    pub quad: Matrix,
    pub lin: Vec<f64>,
    pub constant: f64,
}

impl QuadPoly {
    pub fn max_coefficient_gap(&self, other: &QuadPoly) -> f64 {
        let d = self.lin.len();
        let mut gap = (self.constant - other.constant).abs();
        for i in 0..d {
            gap = gap.max((self.lin[i] - other.lin[i]).abs());
            for j in i..d {
                gap = gap.max((self.quad[(i, j)] - other.quad[(i, j)]).abs());
            }
        }
        gap
    }
}

/// Coefficients of `γ(θ)`.
pub fn gamma_poly(data: &SrbmData) -> QuadPoly {
    let d = data.dim();
    let s = data.sigma();
    QuadPoly {
        quad: Matrix::from_fn(d, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => -0.5 * s[(i, i)],
            std::cmp::Ordering::Less => -0.5 * (s[(i, j)] + s[(j, i)]),
            std::cmp::Ordering::Greater => 0.0,
        }),
        lin: data.mu().iter().map(|m| -m).collect(),
        constant: 0.0,
    }
}

/// Coefficients of `Σ_k C_k γ_k(θ)(α_k − θ_k)`.
pub fn characterization_poly(data: &SrbmData, c: &[f64], alpha: &[f64]) -> QuadPoly {
    let d = data.dim();
    let r = data.r();
    let mut quad = Matrix::zeros(d);
    let mut lin = vec![0.0; d];
    for k in 0..d {
        for l in 0..d {
            // C_k R_lk θ_l (α_k − θ_k)
            let w = c[k] * r[(l, k)];
            lin[l] += w * alpha[k];
            let (a, b) = if l <= k { (l, k) } else { (k, l) };
            quad[(a, b)] -= w;
        }
    }
    QuadPoly {
        quad,
        lin,
        constant: 0.0,
    }
}

/// Largest coefficient gap between `γ(θ)` and `Σ_i C_i γ_i(θ)(α_i − θ_i)`
/// with `C_i = Σ_ii/(2R_ii)`.
pub fn characterization_residual(data: &SrbmData, alpha: &[f64]) -> Result<f64> {
    let c = c_consts(data)?;
    if alpha.len() != data.dim() {
        return Err(Error::DimensionMismatch("alpha length".into()));
    }
    Ok(gamma_poly(data).max_coefficient_gap(&characterization_poly(data, &c, alpha)))
}

fn gamma_scale(data: &SrbmData, tau_norm: f64) -> f64 {
    (data.sigma().norm_inf() * tau_norm * tau_norm + norm_inf(data.mu()) * tau_norm).max(1.0)
}

/// Geometric product-form test over all pairs.
///
/// The verdict requires R to be a P-matrix first. Pair geometry is still
/// evaluated for the report; pairs with `c_ij ≈ 0` are reported as degenerate
/// and never divided through.
pub fn check_geometric(data: &SrbmData, bundle: &GeometryBundle, tol: f64) -> Result<GeometricVerdict> {
    let d = data.dim();
    let (r_is_p, _) = is_p_matrix(data.r())?;
    let tau_norm = norm_inf(&bundle.tau);
    let point_tol = tol * tau_norm.max(1.0);
    let gamma_tol = tol * gamma_scale(data, tau_norm);

    let mut failing_pairs = Vec::new();
    let mut pairs = Vec::new();
    let mut pair_conditions_ok = true;
    for i in 0..d {
        for j in (i + 1)..d {
            if bundle.is_degenerate(i, j) {
                pair_conditions_ok = false;
                failing_pairs.push(PairFailure {
                    i,
                    j,
                    reason: FailureReason::DegeneratePair,
                    gamma_at_tau: None,
                    mismatch: None,
                });
                continue;
            }
            let pg = bundle.symmetry_point(data, i, j)?;
            let f_tau = bundle.map_f_ij(i, j, [bundle.tau[i], bundle.tau[j]])?;
            let gamma_at_tau = data.gamma(&f_tau);
            let mismatch = pg
                .sym_i
                .iter()
                .zip(&pg.sym_j)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

            let a = &pg.a_ij;
            let a_is_p = a[(0, 0)] > 0.0 && a[(1, 1)] > 0.0 && pg.c_ij > 0.0;
            let ray_i = &bundle.theta_ray[i];
            let ray_j = &bundle.theta_ray[j];
            let nondeg_i = pg.tangent_i || (ray_i[j] - bundle.tau[j]).abs() > point_tol;
            let nondeg_j = pg.tangent_j || (ray_j[i] - bundle.tau[i]).abs() > point_tol;
            if !(a_is_p && gamma_at_tau.abs() <= gamma_tol && nondeg_i && nondeg_j) {
                pair_conditions_ok = false;
            }

            let reason = if !a_is_p {
                Some(FailureReason::NotPMatrix)
            } else if mismatch > point_tol {
                Some(FailureReason::SymmetryMismatch)
            } else {
                None
            };
            if let Some(reason) = reason {
                failing_pairs.push(PairFailure {
                    i,
                    j,
                    reason,
                    gamma_at_tau: Some(gamma_at_tau),
                    mismatch: Some(mismatch),
                });
            }
            pairs.push(pg);
        }
    }
    Ok(GeometricVerdict {
        ok: r_is_p && failing_pairs.is_empty(),
        pair_conditions_ok,
        r_is_p_matrix: r_is_p,
        failing_pairs,
        pairs,
    })
}

/// Runs both product-form routes on validated data.
pub fn diagnose(data: &SrbmData, tol: f64) -> Result<(GeometryBundle, GeometricVerdict, ProductFormReport)> {
    let bundle = compute_rays(data)?;
    let (skew_ok, skew_residual) = check_skew_symmetry(data, tol)?;
    let geo = check_geometric(data, &bundle, tol)?;
    let alpha = alpha_formula(data)?;
    let characterization_residual = characterization_residual(data, &alpha)?;
    let product_form = skew_ok && geo.ok;
    let report = ProductFormReport {
        skew_ok,
        skew_residual,
        geometric_ok: geo.ok,
        pair_conditions_ok: geo.pair_conditions_ok,
        failing_pairs: geo.failing_pairs.clone(),
        alpha: product_form.then_some(alpha),
        c_consts: Some(c_consts(data)?),
        characterization_residual: Some(characterization_residual),
        agree: skew_ok == geo.ok,
        tol,
    };
    Ok((bundle, geo, report))
}

/// Product of independent exponentials with rates `alpha`, and the boundary
/// measure scales `Σ_ii α_i / (2 R_ii)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpProductLaw {
    pub alpha: Vec<f64>,
    pub boundary_scale: Vec<f64>,
}

impl ExpProductLaw {
    pub fn new(data: &SrbmData, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != data.dim() {
            return Err(Error::DimensionMismatch("alpha length".into()));
        }
        let c = c_consts(data)?;
        let boundary_scale = c.iter().zip(&alpha).map(|(c, a)| c * a).collect();
        Ok(Self {
            alpha,
            boundary_scale,
        })
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        match theta.iter().zip(&self.alpha).position(|(t, a)| !(t < a)) {
            Some(index) => Err(Error::DomainError { index }),
            None => Ok(()),
        }
    }

    fn factor(&self, k: usize, theta: &[f64]) -> f64 {
        self.alpha[k] / (self.alpha[k] - theta[k])
    }

    /// `φ(θ) = ∏ α_i / (α_i − θ_i)`.
    pub fn stationary_mgf(&self, theta: &[f64]) -> Result<f64> {
        self.check_domain(theta)?;
        Ok((0..self.alpha.len()).map(|k| self.factor(k, theta)).product())
    }

    /// `φ_i(θ) = (Σ_ii/(2R_ii)) α_i ∏_{k≠i} α_k / (α_k − θ_k)`.
    pub fn boundary_mgf(&self, i: usize, theta: &[f64]) -> Result<f64> {
        let d = self.alpha.len();
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, dim: d });
        }
        self.check_domain(theta)?;
        Ok(self.boundary_scale[i]
            * (0..d)
                .filter(|&k| k != i)
                .map(|k| self.factor(k, theta))
                .product::<f64>())
    }

    /// `γ(θ)φ(θ) − Σ_i γ_i(θ)φ_i(θ)`.
    pub fn bar_residual(&self, data: &SrbmData, theta: &[f64]) -> Result<f64> {
        let mut rhs = 0.0;
        for i in 0..data.dim() {
            rhs += data.gamma_i(i, theta)? * self.boundary_mgf(i, theta)?;
        }
        Ok(data.gamma(theta) * self.stationary_mgf(theta)? - rhs)
    }
}
