//! Two-dimensional SRBMs obtained by restricting the data to the plane
//! spanned by a pair of ray points.

use serde::{Deserialize, Serialize};

use crate::classify::is_p_matrix;
use crate::error::{Error, Result};
use crate::geometry::{compute_rays, GeometryBundle, PairGeometry};
use crate::matrix::{dot, Matrix};
use crate::model::SrbmData;
use crate::product_form::{check_geometric, check_skew_symmetry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSrbm {
    pub i: usize,
    pub j: usize,
    pub sigma_tilde: Matrix,
    pub mu_tilde: [f64; 2],
    pub r_tilde: Matrix,
    /// `R̃^ij` is a P-matrix.
    pub is_p: bool,
}

impl PairSrbm {
    pub fn to_srbm(&self) -> Result<SrbmData> {
        SrbmData::new(
            self.sigma_tilde.clone(),
            self.mu_tilde.to_vec(),
            self.r_tilde.clone(),
        )
    }

    /// `γ̃(z) = -½⟨z, Σ̃z⟩ - ⟨μ̃, z⟩`.
    pub fn gamma_tilde(&self, z: [f64; 2]) -> f64 {
        -0.5 * self.sigma_tilde.quad_form(&z, &z) - dot(&self.mu_tilde, &z)
    }

    /// `Σ̃ z + μ̃`.
    pub fn velocity(&self, z: [f64; 2]) -> [f64; 2] {
        let v = self.sigma_tilde.mul_vec(&z);
        [v[0] + self.mu_tilde[0], v[1] + self.mu_tilde[1]]
    }
}

/// `Σ* = AᵀΣA` and `μ* = Aᵀμ`.
pub fn sigma_mu_star(data: &SrbmData, bundle: &GeometryBundle) -> (Matrix, Vec<f64>) {
    let a = &bundle.a_matrix;
    let sigma_star = a.transpose().mul(&data.sigma().mul(a));
    let mu_star = a.tr_mul_vec(data.mu());
    (sigma_star.symmetric_part(), mu_star)
}

pub fn pair_srbm(data: &SrbmData, bundle: &GeometryBundle, i: usize, j: usize) -> Result<PairSrbm> {
    let (sigma_star, mu_star) = sigma_mu_star(data, bundle);
    pair_from_star(bundle, &sigma_star, &mu_star, i, j)
}

pub(crate) fn pair_from_star(
    bundle: &GeometryBundle,
    sigma_star: &Matrix,
    mu_star: &[f64],
    i: usize,
    j: usize,
) -> Result<PairSrbm> {
    // validates indices and degeneracy
    bundle.map_f_ij(i, j, [0.0, 0.0])?;
    let a_ij = bundle.a_ij(i, j);
    let a_inv = a_ij.inverse().map_err(|_| Error::DegeneratePair {
        i,
        j,
        c: bundle.c[(i, j)],
    })?;
    let a_inv_t = a_inv.transpose();
    let s_ij = sigma_star.principal(&[i, j]);
    let sigma_tilde = a_inv_t.mul(&s_ij.mul(&a_inv)).symmetric_part();
    let m = a_inv_t.mul_vec(&[mu_star[i], mu_star[j]]);
    let r_tilde = a_inv_t.mul(&Matrix::diagonal(&[bundle.delta[i], bundle.delta[j]]));
    let (is_p, _) = is_p_matrix(&r_tilde)?;
    Ok(PairSrbm {
        i,
        j,
        sigma_tilde,
        mu_tilde: [m[0], m[1]],
        r_tilde,
        is_p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub pair: PairSrbm,
    /// Geometric verdict of the two-dimensional SRBM.
    pub product_form: bool,
    pub skew_ok: bool,
    /// Symmetry points of the two-dimensional SRBM.
    pub geometry: Option<PairGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub pairs: Vec<PairVerdict>,
    pub all_product_form: bool,
}

/// Product-form verdict of one projected pair, computed by running the
/// d-dimensional routines on the two-dimensional data.
pub fn pair_verdict(pair: PairSrbm, tol: f64) -> Result<PairVerdict> {
    let data2 = pair.to_srbm()?;
    let bundle2 = compute_rays(&data2)?;
    let geo = check_geometric(&data2, &bundle2, tol)?;
    let (skew_ok, _) = check_skew_symmetry(&data2, tol)?;
    Ok(PairVerdict {
        i: pair.i,
        j: pair.j,
        product_form: geo.ok,
        skew_ok,
        geometry: geo.pairs.into_iter().next(),
        pair,
    })
}

/// Per-pair two-dimensional verdicts. Requires R to be a P-matrix.
pub fn pairwise_independence_report(data: &SrbmData, tol: f64) -> Result<PairTable> {
    if !is_p_matrix(data.r())?.0 {
        return Err(Error::NotPMatrix);
    }
    let bundle = compute_rays(data)?;
    let (sigma_star, mu_star) = sigma_mu_star(data, &bundle);
    let d = data.dim();
    let mut pairs = Vec::with_capacity(d * (d.saturating_sub(1)) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let pair = pair_from_star(&bundle, &sigma_star, &mu_star, i, j)?;
            pairs.push(pair_verdict(pair, tol)?);
        }
    }
    let all_product_form = pairs.iter().all(|p| p.product_form);
    Ok(PairTable {
        pairs,
        all_product_form,
    })
}
