#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use srbm_core::classify::{is_completely_s, is_p_matrix, is_positive_definite};
use srbm_core::{Matrix, SrbmData, TandemSpec};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Σ built to satisfy skew symmetry.
    ProductForm,
    /// Product-form Σ with a 1e-4 symmetric perturbation.
    NearProductForm,
    /// Random Σ, P-matrix R.
    Generic,
    /// Nonnegative completely-S R that is not a P-matrix.
    NotP,
    /// Raw data of a random tandem network.
    Tandem,
}

const KINDS: [Kind; 5] = [
    Kind::ProductForm,
    Kind::NearProductForm,
    Kind::Generic,
    Kind::NotP,
    Kind::Tandem,
];

/// `R = (I + E) diag(r)` with random off-diagonal `E`, kept when P.
pub fn random_p_matrix(rng: &mut impl Rng, d: usize) -> Matrix {
    let a = if d > 1 { 1.2 / (d - 1) as f64 } else { 0.0 };
    loop {
        let scale: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
        let r = Matrix::from_fn(d, |i, j| {
            let e = if i == j { 1.0 } else { rng.random_range(-a..a) };
            e * scale[j]
        });
        if is_p_matrix(&r).unwrap().0 {
            return r;
        }
    }
}

/// `Σ_ii = s_i`, `Σ_ij = (R_ij s_j / R_jj + s_i R_ji / R_ii) / 2`.
pub fn skew_symmetric_sigma(r: &Matrix, s: &[f64]) -> Matrix {
    let d = r.dim();
    Matrix::from_fn(d, |i, j| {
        if i == j {
            s[i]
        } else {
            0.5 * (r[(i, j)] * s[j] / r[(j, j)] + s[i] * r[(j, i)] / r[(i, i)])
        }
    })
}

pub fn random_spd(rng: &mut impl Rng, d: usize) -> Matrix {
    let l = Matrix::from_fn(d, |i, j| {
        if i == j {
            rng.random_range(0.5..1.5)
        } else if j < i {
            rng.random_range(-0.7..0.7)
        } else {
            0.0
        }
    });
    l.mul(&l.transpose())
}

/// `μ = -R b` with `b > 0`, so `R⁻¹μ = -b < 0`.
pub fn stable_mu(rng: &mut impl Rng, r: &Matrix) -> Vec<f64> {
    let b: Vec<f64> = (0..r.dim()).map(|_| rng.random_range(0.3..2.0)).collect();
    r.mul_vec(&b).iter().map(|v| -v).collect()
}

pub fn product_form_instance(rng: &mut impl Rng, d: usize) -> SrbmData {
    loop {
        let r = random_p_matrix(rng, d);
        let s: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
        let sigma = skew_symmetric_sigma(&r, &s);
        if is_positive_definite(&sigma).unwrap() {
            let mu = stable_mu(rng, &r);
            return SrbmData::new(sigma, mu, r).unwrap();
        }
    }
}

pub fn near_product_form_instance(rng: &mut impl Rng, d: usize) -> SrbmData {
    loop {
        let base = product_form_instance(rng, d);
        let e = Matrix::from_fn(d, |_, _| rng.random_range(-1.0..1.0)).symmetric_part();
        let sigma = base.sigma().sub(&e.scale(-1e-4));
        if is_positive_definite(&sigma).unwrap() {
            return SrbmData::new(sigma, base.mu().to_vec(), base.r().clone()).unwrap();
        }
    }
}

pub fn generic_instance(rng: &mut impl Rng, d: usize) -> SrbmData {
    let r = random_p_matrix(rng, d);
    let sigma = random_spd(rng, d);
    let mu = stable_mu(rng, &r);
    SrbmData::new(sigma, mu, r).unwrap()
}

pub fn not_p_instance(rng: &mut impl Rng, d: usize) -> SrbmData {
    loop {
        let r = Matrix::from_fn(d, |i, j| {
            if i == j {
                rng.random_range(0.5..1.5)
            } else {
                rng.random_range(0.0..2.0)
            }
        });
        if is_p_matrix(&r).unwrap().0 || r.is_singular() || !is_completely_s(&r).unwrap() {
            continue;
        }
        let sigma = random_spd(rng, d);
        let mu = stable_mu(rng, &r);
        return SrbmData::new(sigma, mu, r).unwrap();
    }
}

/// Random tandem spec with `d` stations; roughly half satisfy the
/// product-form condition.
pub fn random_tandem(rng: &mut impl Rng, d: usize) -> TandemSpec {
    loop {
        let beta0 = rng.random_range(0.5..2.0);
        let beta: Vec<f64> = std::iter::once(beta0)
            .chain((0..d).map(|_| beta0 + rng.random_range(0.2..3.0)))
            .collect();
        let draw = |rng: &mut dyn rand::RngCore| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.2..2.0)
            }
        };
        let c0 = draw(rng);
        let c: Vec<f64> = if rng.random_bool(0.5) {
            (0..=d).map(|k| if k < d { c0 } else { draw(rng) }).collect()
        } else {
            std::iter::once(c0).chain((0..d).map(|_| draw(rng))).collect()
        };
        let Ok(spec) = TandemSpec::new(beta, c) else {
            continue;
        };
        if spec.build_srbm().is_ok() {
            return spec;
        }
    }
}

pub fn instance_of(kind: Kind, rng: &mut impl Rng, d: usize) -> SrbmData {
    match kind {
        Kind::ProductForm => product_form_instance(rng, d),
        Kind::NearProductForm => near_product_form_instance(rng, d),
        Kind::Generic => generic_instance(rng, d),
        Kind::NotP => not_p_instance(rng, d),
        Kind::Tandem => random_tandem(rng, d).build_srbm().unwrap(),
    }
}

/// Mixed corpus cycling through kinds and dimensions 2..=5.
pub fn corpus(seed: u64, n: usize) -> Vec<(Kind, SrbmData)> {
    let mut rng = rng(seed);
    (0..n)
        .map(|k| {
            let kind = KINDS[k % KINDS.len()];
            let d = 2 + (k / KINDS.len()) % 4;
            (kind, instance_of(kind, &mut rng, d))
        })
        .collect()
}
