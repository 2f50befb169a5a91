//! Rays, the ray matrix `A`, pair minors `c_ij`, the hyperplane maps `f^ij`,
//! and the symmetry points on each two-dimensional slice of the ellipse
//! `E = {θ : γ(θ) = 0}`.
//!
//! All indices are zero-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::model::SrbmData;

/// `|c_ij|` at or below this (relative to the size of `A^ij`) makes `f^ij` undefined.
pub const DEGENERATE_TOL: f64 = 1e-10;
/// Relative root separation below which a slice line counts as tangent.
pub const TANGENCY_TOL: f64 = 1e-9;
pub const MIN_SLICE_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryBundle {
    /// `Δ_i = -2⟨μ, B^(i)⟩ / ⟨B^(i), Σ B^(i)⟩` with `B = (R⁻¹)ᵀ`.
    pub delta: Vec<f64>,
    /// `θ^(i,r) = Δ_i B^(i)`; entry `i` is the i-th ray point.
    pub theta_ray: Vec<Vec<f64>>,
    /// Columns are the ray points.
    pub a_matrix: Matrix,
    /// `c[(i,j)] = det(A^ij)` off the diagonal; the diagonal holds `A_ii`.
    pub c: Matrix,
    /// `τ_i = θ^(i,r)_i`.
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub i: usize,
    pub j: usize,
    pub a_ij: Matrix,
    pub c_ij: f64,
    /// Symmetry point of `θ^(i,r)` on the slice, as a d-vector.
    pub sym_i: Vec<f64>,
    pub sym_j: Vec<f64>,
    pub tangent_i: bool,
    pub tangent_j: bool,
}

/// `γ(f^ij(z))` restricted to a line in pair coordinates on which one
/// coordinate is held fixed: `a2 s² + a1 s + a0` in the free coordinate `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineQuadratic {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl LineQuadratic {
    pub fn eval(&self, s: f64) -> f64 {
        (self.a2 * s + self.a1) * s + self.a0
    }

    /// Given one root, returns the other from the root sum `-a1/a2`.
    pub fn other_root(&self, known: f64) -> f64 {
        -self.a1 / self.a2 - known
    }
}

pub fn compute_rays(data: &SrbmData) -> Result<GeometryBundle> {
    let d = data.dim();
    let rinv = data.r_inverse()?;
    let mut delta = Vec::with_capacity(d);
    let mut theta_ray = Vec::with_capacity(d);
    for i in 0..d {
        // B^(i) is the i-th row of R⁻¹
        let b_i = rinv.row(i).to_vec();
        let denom = data.sigma().quad_form(&b_i, &b_i);
        let dl = -2.0 * dot(data.mu(), &b_i) / denom;
        theta_ray.push(b_i.iter().map(|v| dl * v).collect::<Vec<_>>());
        delta.push(dl);
    }
    let a_matrix = Matrix::from_fn(d, |r, c| theta_ray[c][r]);
    let c = Matrix::from_fn(d, |i, j| {
        if i == j {
            a_matrix[(i, i)]
        } else {
            a_matrix[(i, i)] * a_matrix[(j, j)] - a_matrix[(i, j)] * a_matrix[(j, i)]
        }
    });
    let tau = (0..d).map(|i| theta_ray[i][i]).collect();
    Ok(GeometryBundle {
        delta,
        theta_ray,
        a_matrix,
        c,
        tau,
    })
}

impl GeometryBundle {
    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let d = self.dim();
        for k in [i, j] {
            if k >= d {
                return Err(Error::IndexOutOfRange { index: k, dim: d });
            }
        }
        if i == j {
            return Err(Error::DegeneratePair { i, j, c: 0.0 });
        }
        Ok(())
    }

    /// `A^ij = [[θ^(i)_i, θ^(j)_i], [θ^(i)_j, θ^(j)_j]]`.
    pub fn a_ij(&self, i: usize, j: usize) -> Matrix {
        let a = &self.a_matrix;
        Matrix::from_rows(&[[a[(i, i)], a[(i, j)]], [a[(j, i)], a[(j, j)]]]).expect("2x2 rows are square")
    }

    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        let a = &self.a_matrix;
        let scale = (a[(i, i)] * a[(j, j)]).abs() + (a[(i, j)] * a[(j, i)]).abs();
        !(self.c[(i, j)].abs() > DEGENERATE_TOL * scale.max(1.0))
    }

    fn nondegenerate(&self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        if self.is_degenerate(i, j) {
            return Err(Error::DegeneratePair {
                i,
                j,
                c: self.c[(i, j)],
            });
        }
        Ok(())
    }

    /// The point of `Γ_{i,j}` whose `(i, j)` coordinates are `z`.
    ///
    /// Writes the result as `a θ^(i,r) + b θ^(j,r)` with `(a, b) = (A^ij)⁻¹ z`
    /// solved by Cramer's rule.
    pub fn map_f_ij(&self, i: usize, j: usize, z: [f64; 2]) -> Result<Vec<f64>> {
        self.nondegenerate(i, j)?;
        Ok(self.f_unchecked(i, j, z))
    }

    fn f_unchecked(&self, i: usize, j: usize, z: [f64; 2]) -> Vec<f64> {
        let th_i = &self.theta_ray[i];
        let th_j = &self.theta_ray[j];
        let c = self.c[(i, j)];
        let a = (th_j[j] * z[0] - th_j[i] * z[1]) / c;
        let b = (-th_i[j] * z[0] + th_i[i] * z[1]) / c;
        th_i.iter().zip(th_j).map(|(x, y)| a * x + b * y).collect()
    }

    /// `γ ∘ f^ij` along the line with pair coordinate `fixed_index`
    /// (0 for `z_i`, 1 for `z_j`) held at `value`.
    pub fn line_quadratic(
        &self,
        data: &SrbmData,
        i: usize,
        j: usize,
        fixed_index: usize,
        value: f64,
    ) -> Result<LineQuadratic> {
        self.nondegenerate(i, j)?;
        let (base, dir) = if fixed_index == 0 {
            (
                self.f_unchecked(i, j, [value, 0.0]),
                self.f_unchecked(i, j, [0.0, 1.0]),
            )
        } else {
            (
                self.f_unchecked(i, j, [0.0, value]),
                self.f_unchecked(i, j, [1.0, 0.0]),
            )
        };
        let sigma = data.sigma();
        Ok(LineQuadratic {
            a2: -0.5 * sigma.quad_form(&dir, &dir),
            a1: -sigma.quad_form(&base, &dir) - dot(data.mu(), &dir),
            a0: data.gamma(&base),
        })
    }

    /// Both symmetry points of the pair `(i, j)`.
    pub fn symmetry_point(&self, data: &SrbmData, i: usize, j: usize) -> Result<PairGeometry> {
        self.nondegenerate(i, j)?;
        let (sym_i, tangent_i) = self.reflect(data, i, j, i, j, 0)?;
        let (sym_j, tangent_j) = self.reflect(data, i, j, j, i, 1)?;
        Ok(PairGeometry {
            i,
            j,
            a_ij: self.a_ij(i, j),
            c_ij: self.c[(i, j)],
            sym_i,
            sym_j,
            tangent_i,
            tangent_j,
        })
    }

    /// Second intersection of the slice ellipse with the line through
    /// `θ^(own,r)` that holds coordinate `own` fixed.
    fn reflect(
        &self,
        data: &SrbmData,
        i: usize,
        j: usize,
        own: usize,
        other: usize,
        fixed_index: usize,
    ) -> Result<(Vec<f64>, bool)> {
        let ray = &self.theta_ray[own];
        let q = self.line_quadratic(data, i, j, fixed_index, ray[own])?;
        let known = ray[other];
        let second = q.other_root(known);
        let scale = 1f64.max(known.abs()).max(second.abs());
        if !((second - known).abs() > TANGENCY_TOL * scale) {
            return Ok((ray.clone(), true));
        }
        let z = if fixed_index == 0 {
            [ray[own], second]
        } else {
            [second, ray[own]]
        };
        Ok((self.f_unchecked(i, j, z), false))
    }

    /// `γ̃^ij` as `(S, m)` with `γ̃(z) = -½⟨z, S z⟩ - ⟨m, z⟩`, built from the
    /// images of the unit vectors under `f^ij`.
    pub fn slice_form(&self, data: &SrbmData, i: usize, j: usize) -> Result<(Matrix, [f64; 2])> {
        self.nondegenerate(i, j)?;
        let q = [
            self.f_unchecked(i, j, [1.0, 0.0]),
            self.f_unchecked(i, j, [0.0, 1.0]),
        ];
        let s = Matrix::from_fn(2, |a, b| data.sigma().quad_form(&q[a], &q[b]));
        Ok((s, [dot(data.mu(), &q[0]), dot(data.mu(), &q[1])]))
    }

    /// `n` points on the slice ellipse `γ(f^ij(z)) = 0`, in pair coordinates,
    /// counterclockwise by angle around the ellipse center.
    pub fn sample_ellipse_slice(
        &self,
        data: &SrbmData,
        i: usize,
        j: usize,
        n: usize,
    ) -> Result<Vec<[f64; 2]>> {
        if n < MIN_SLICE_SAMPLES {
            return Err(Error::TooFewSamples {
                min: MIN_SLICE_SAMPLES,
                got: n,
            });
        }
        let ellipse = SliceEllipse::new(self, data, i, j)?;
        Ok((0..n)
            .map(|k| ellipse.point(2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect())
    }
}

/// The slice ellipse in pair coordinates, `(z - center)ᵀ S (z - center) = k`.
#[derive(Debug, Clone)]
pub struct SliceEllipse {
    pub center: [f64; 2],
    pub form: Matrix,
    pub level: f64,
    chol: Matrix,
}

impl SliceEllipse {
    pub fn new(bundle: &GeometryBundle, data: &SrbmData, i: usize, j: usize) -> Result<Self> {
        let (s, m) = bundle.slice_form(data, i, j)?;
        let scale = s.max_abs().max(f64::MIN_POSITIVE);
        let chol = s.cholesky(1e-12 * scale).ok_or(Error::EmptySlice { i, j })?;
        let c = s.solve(&m).map_err(|_| Error::EmptySlice { i, j })?;
        let center = [-c[0], -c[1]];
        let level = s.quad_form(&center, &center);
        Ok(Self {
            center,
            form: s,
            level,
            chol,
        })
    }

    /// Point at parameter angle `phi`: `center + √k L⁻ᵀ (cos φ, sin φ)`.
    pub fn point(&self, phi: f64) -> [f64; 2] {
        let r = self.level.max(0.0).sqrt();
        let (v0, v1) = (r * phi.cos(), r * phi.sin());
        let l = &self.chol;
        // solve Lᵀ u = v (upper triangular)
        let u1 = v1 / l[(1, 1)];
        let u0 = (v0 - l[(1, 0)] * u1) / l[(0, 0)];
        [self.center[0] + u0, self.center[1] + u1]
    }

    /// Largest value of pair coordinate `k` (0 or 1) over the ellipse.
    pub fn max_coordinate(&self, k: usize) -> f64 {
        let inv = self.form.inverse().expect("form is positive definite");
        self.center[k] + (self.level.max(0.0) * inv[(k, k)]).sqrt()
    }
}
