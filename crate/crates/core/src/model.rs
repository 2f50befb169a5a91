//! SRBM data `(Σ, μ, R)`, its validation, and the polynomials `γ`, `γ_i`.

use serde::{Deserialize, Serialize};

use crate::classify::{self, ClassificationReport, SYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Margin for the strict inequality `R⁻¹μ < 0`.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// Covariance `sigma`, drift `mu` and reflection matrix `r` of a
/// d-dimensional SRBM on the nonnegative orthant.
///
/// `sigma` is stored symmetrized. Construction checks shapes, finiteness and
/// symmetry; positive definiteness and completely-S are checked by
/// [`SrbmData::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSrbm", into = "RawSrbm")]
pub struct SrbmData {
    sigma: Matrix,
    mu: Vec<f64>,
    r: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSrbm {
    sigma: Matrix,
    mu: Vec<f64>,
    r: Matrix,
}

impl TryFrom<RawSrbm> for SrbmData {
    type Error = Error;
    fn try_from(raw: RawSrbm) -> Result<Self> {
        SrbmData::new(raw.sigma, raw.mu, raw.r)
    }
}

impl From<SrbmData> for RawSrbm {
    fn from(d: SrbmData) -> Self {
        RawSrbm {
            sigma: d.sigma,
            mu: d.mu,
            r: d.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// R is completely-S, so the SRBM exists.
    pub exists: bool,
    /// R is nonsingular and every entry of `R⁻¹μ` is below `-STABILITY_MARGIN`.
    pub stable_necessary: bool,
    /// Some entry of `R⁻¹μ` lies within the margin of zero.
    pub stability_marginal: bool,
    /// `b = -R⁻¹μ`, present when R is nonsingular.
    pub b: Option<Vec<f64>>,
    pub r_classification: ClassificationReport,
    pub sigma_classification: ClassificationReport,
}

impl SrbmData {
    pub fn new(sigma: Matrix, mu: Vec<f64>, r: Matrix) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
        }
        if sigma.dim() != d || r.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "sigma is {0}x{0}, r is {1}x{1}, mu has {2} entries",
                sigma.dim(),
                r.dim(),
                d
            )));
        }
        if !sigma.is_finite() {
            return Err(Error::NonFinite("sigma"));
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("r"));
        }
        if !mu.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mu"));
        }
        let asym = sigma.max_asymmetry();
        if asym > SYMMETRY_TOL * sigma.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self {
            sigma: sigma.symmetric_part(),
            mu,
            r,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `γ(θ) = -½⟨θ, Σθ⟩ - ⟨μ, θ⟩`.
    pub fn gamma(&self, theta: &[f64]) -> f64 {
        -0.5 * self.sigma.quad_form(theta, theta) - dot(&self.mu, theta)
    }

    /// `γ_i(θ) = ⟨R^(i), θ⟩` with `R^(i)` the i-th column (zero-based).
    pub fn gamma_i(&self, i: usize, theta: &[f64]) -> Result<f64> {
        let d = self.dim();
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, dim: d });
        }
        Ok((0..d).map(|k| self.r[(k, i)] * theta[k]).sum())
    }

    /// `n(θ) = Σθ + μ`, the (negated) gradient of γ.
    pub fn normal(&self, theta: &[f64]) -> Vec<f64> {
        self.sigma
            .mul_vec(theta)
            .iter()
            .zip(&self.mu)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn r_inverse(&self) -> Result<Matrix> {
        self.r.inverse().map_err(|_| Error::SingularR)
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        let sigma_classification = classify::classify(&self.sigma)?;
        if !sigma_classification.is_positive_definite {
            return Err(Error::InvalidSigma);
        }
        let r_classification = classify::classify(&self.r)?;
        let (b, stable, marginal) = match self.r.inverse() {
            Ok(rinv) => {
                let rmu = rinv.mul_vec(&self.mu);
                let stable = rmu.iter().all(|&v| v < -STABILITY_MARGIN);
                let marginal = rmu.iter().any(|&v| v.abs() <= STABILITY_MARGIN);
                (Some(rmu.iter().map(|v| -v).collect()), stable, marginal)
            }
            Err(_) => (None, false, false),
        };
        Ok(ValidationReport {
            exists: r_classification.is_completely_s,
            stable_necessary: stable,
            stability_marginal: marginal,
            b,
            r_classification,
            sigma_classification,
        })
    }
}
