//! SRBMs arising from d stations in series, with closed forms for τ, the
//! product-form condition, symmetry points, entrance velocities and the
//! conjectured three-segment optimal path for d = 3.
//!
//! `beta[0]` is the arrival rate and `beta[k]` the service rate of station
//! `k` (k = 1..=d); `c` holds the matching squared coefficients of variation.
//! Station indices in the returned structures are zero-based, so station
//! `i` corresponds to `beta[i + 1]`.

use serde::{Deserialize, Serialize};

use crate::classify::is_positive_definite;
use crate::error::{Error, Result};
use crate::geometry::compute_rays;
use crate::matrix::Matrix;
use crate::model::SrbmData;
use crate::projection::{pair_from_star, sigma_mu_star};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TandemSpec {
    pub beta: Vec<f64>,
    pub c: Vec<f64>,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * 1f64.max(a.abs()).max(b.abs())
}

impl TandemSpec {
    pub fn new(beta: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let spec = Self { beta, c };
        spec.check()?;
        Ok(spec)
    }

    /// Number of stations.
    pub fn dim(&self) -> usize {
        self.beta.len().saturating_sub(1)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.beta.len() != self.c.len() {
            return bad("beta and c must have the same length");
        }
        if self.beta.len() < 2 {
            return bad("at least one station is required");
        }
        if !self.beta.iter().chain(&self.c).all(|v| v.is_finite()) {
            return bad("rates and SCVs must be finite");
        }
        if !(self.beta[0] > 0.0) {
            return bad("arrival rate beta_0 must be positive");
        }
        if let Some(k) = self.beta[1..].iter().position(|&b| !(b > self.beta[0])) {
            return Err(Error::InvalidSpec(format!(
                "service rate beta_{} must exceed the arrival rate",
                k + 1
            )));
        }
        if self.c.iter().any(|&c| c < 0.0) {
            return bad("SCVs must be nonnegative");
        }
        if self.c.iter().all(|&c| c == 0.0) {
            return bad("at least one SCV must be positive");
        }
        Ok(())
    }

    /// `R_{i,i−1} = −1`, `R_ii = 1`, `Σ_{i,i−1} = −c_{i−1}`,
    /// `Σ_ii = c_{i−1} + c_i`, `μ_i = β_{i−1} − β_i`.
    pub fn build_srbm(&self) -> Result<SrbmData> {
        self.check()?;
        let d = self.dim();
        let c = &self.c;
        let r = Matrix::from_fn(d, |i, j| {
            if i == j {
                1.0
            } else if j + 1 == i {
                -1.0
            } else {
                0.0
            }
        });
        // row i of the matrix is station i+1
        let sigma = Matrix::from_fn(d, |i, j| {
            if i == j {
                c[i] + c[i + 1]
            } else if j + 1 == i || i + 1 == j {
                -c[i.min(j) + 1]
            } else {
                0.0
            }
        });
        let mu = (0..d).map(|i| self.beta[i] - self.beta[i + 1]).collect();
        if !is_positive_definite(&sigma)? {
            return Err(Error::InvalidSpec(
                "covariance matrix is not positive definite".into(),
            ));
        }
        SrbmData::new(sigma, mu, r)
    }

    /// `b_i = β_i − β_0`, which equals `−R⁻¹μ`.
    pub fn b(&self) -> Vec<f64> {
        self.beta[1..].iter().map(|b| b - self.beta[0]).collect()
    }

    /// `τ_i = 2 b_i / (c_0 + c_i)`.
    pub fn tau_closed_form(&self) -> Vec<f64> {
        self.b()
            .iter()
            .enumerate()
            .map(|(i, b)| 2.0 * b / (self.c[0] + self.c[i + 1]))
            .collect()
    }

    /// `c_0 = c_i` for every station except the last.
    pub fn product_form_condition(&self) -> bool {
        let d = self.dim();
        (1..d).all(|i| same(self.c[0], self.c[i]))
    }

    /// Symmetry points of stations `i < j` in pair coordinates
    /// `(z_i, z_j)`: `(τ_i, (2c_iτ_i + 2b_j − 2b_i)/(c_i + c_j))` and
    /// `((2b_i + c_iτ_j − c_0τ_j)/(c_0 + c_i), τ_j)`.
    pub fn symmetry_points_closed_form(&self, i: usize, j: usize) -> Result<([f64; 2], [f64; 2])> {
        let d = self.dim();
        if i >= j || j >= d {
            return Err(Error::IndexOutOfRange { index: j, dim: d });
        }
        let tau = self.tau_closed_form();
        let b = self.b();
        let (c0, ci, cj) = (self.c[0], self.c[i + 1], self.c[j + 1]);
        let sym_i = [tau[i], (2.0 * ci * tau[i] + 2.0 * b[j] - 2.0 * b[i]) / (ci + cj)];
        let sym_j = [(2.0 * b[i] + ci * tau[j] - c0 * tau[j]) / (c0 + ci), tau[j]];
        Ok((sym_i, sym_j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVelocity {
    pub i: usize,
    pub j: usize,
    /// Closed form in terms of the rates and SCVs.
    pub closed_form: [f64; 2],
    /// `Σ̃^ij θ̃ + μ̃^ij` at the projected symmetry point.
    pub matrix_form: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub direction: Vec<f64>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjecturedPath {
    pub status: String,
    pub proven_optimal: bool,
    pub target: Vec<f64>,
    pub segments: Vec<PathSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpReport {
    pub velocities: Vec<PairVelocity>,
    /// `ã^J = Στ + μ`.
    pub normal: Vec<f64>,
    /// `(β_1−β_2, …, β_{d−1}−β_d, β_d−β_0)`, valid when `c_0 = c_d`.
    pub normal_closed_form: Option<Vec<f64>>,
    pub path: Option<ConjecturedPath>,
}

/// Entrance velocities for every pair plus the normal vector at τ.
/// Requires the product-form condition.
pub fn entrance_velocities(spec: &TandemSpec) -> Result<VpReport> {
    let data = spec.build_srbm()?;
    if !spec.product_form_condition() {
        return Err(Error::NotProductForm);
    }
    let d = spec.dim();
    let beta = &spec.beta;
    let (c0, cd) = (spec.c[0], spec.c[d]);
    let bundle = compute_rays(&data)?;
    let (sigma_star, mu_star) = sigma_mu_star(&data, &bundle);

    let mut velocities = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let closed_form = if j + 1 < d {
                [beta[i + 1] - beta[j + 1], beta[j + 1] - beta[0]]
            } else {
                [
                    beta[i + 1] - (2.0 * c0 * beta[d] + (cd - c0) * beta[0]) / (c0 + cd),
                    beta[d] - beta[0],
                ]
            };
            let pair = pair_from_star(&bundle, &sigma_star, &mu_star, i, j)?;
            let pg = bundle.symmetry_point(&data, i, j)?;
            let matrix_form = pair.velocity([pg.sym_i[i], pg.sym_i[j]]);
            velocities.push(PairVelocity {
                i,
                j,
                closed_form,
                matrix_form,
            });
        }
    }
    let normal = data.normal(&bundle.tau);
    let normal_closed_form = same(c0, cd).then(|| {
        (0..d)
            .map(|k| {
                if k + 1 < d {
                    beta[k + 1] - beta[k + 2]
                } else {
                    beta[d] - beta[0]
                }
            })
            .collect()
    });
    Ok(VpReport {
        velocities,
        normal,
        normal_closed_form,
        path: None,
    })
}

/// Three-segment path from the origin to `z` for d = 3 under
/// `c_0 = c_1 = c_2 = c_3` and `β_1 < β_2 < β_3`: along the first axis, then
/// within the face `x_3 = 0` with direction `ã^{1,2}`, then to `z` with
/// direction `ã^J`. Junctions are solved backwards from `z`.
pub fn conjectured_path(spec: &TandemSpec, z: [f64; 3]) -> Result<ConjecturedPath> {
    spec.check()?;
    if spec.dim() != 3 {
        return Err(Error::InvalidSpec(
            "the conjectured path is defined for three stations".into(),
        ));
    }
    if !spec.product_form_condition() {
        return Err(Error::NotProductForm);
    }
    if !same(spec.c[0], spec.c[3]) {
        return Err(Error::InvalidSpec(
            "the conjectured path requires c_0 = c_3".into(),
        ));
    }
    let beta = &spec.beta;
    if !(beta[1] < beta[2] && beta[2] < beta[3]) {
        return Err(Error::InvalidSpec(
            "the conjectured path requires beta_1 < beta_2 < beta_3".into(),
        ));
    }
    if !z.iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::InfeasiblePath(
            "target must lie in the nonnegative orthant".into(),
        ));
    }
    if !(z[2] > 0.0) {
        return Err(Error::InfeasiblePath("target must have z_3 > 0".into()));
    }
    let vp = entrance_velocities(spec)?;
    let a_j = vp.normal.clone();
    let a12 = vp
        .velocities
        .iter()
        .find(|v| (v.i, v.j) == (0, 1))
        .map(|v| v.closed_form)
        .expect("pair (0, 1) exists for d = 3");

    // last segment: y = z − t ã^J with y_3 = 0
    let t = z[2] / a_j[2];
    let y = [z[0] - t * a_j[0], z[1] - t * a_j[1], 0.0];
    // second segment: x = y − s ã^{1,2} with x_2 = 0
    let s = y[1] / a12[1];
    let x = [y[0] - s * a12[0], 0.0, 0.0];
    if !(t > 0.0 && s >= 0.0 && y[0] >= 0.0 && y[1] >= 0.0 && x[0] >= 0.0) {
        return Err(Error::InfeasiblePath(format!(
            "junctions x = {x:?}, y = {y:?} leave the orthant"
        )));
    }
    let segments = vec![
        PathSegment {
            start: vec![0.0; 3],
            end: x.to_vec(),
            direction: vec![1.0, 0.0, 0.0],
            label: "first coordinate axis".into(),
        },
        PathSegment {
            start: x.to_vec(),
            end: y.to_vec(),
            direction: vec![a12[0], a12[1], 0.0],
            label: "face x3 = 0".into(),
        },
        PathSegment {
            start: y.to_vec(),
            end: z.to_vec(),
            direction: a_j,
            label: "interior".into(),
        },
    ];
    Ok(ConjecturedPath {
        status: "conjecture".into(),
        proven_optimal: false,
        target: z.to_vec(),
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::zero_scv_tandem;

    fn pf() -> TandemSpec {
        TandemSpec::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4]).unwrap()
    }

    #[test]
    fn builds_banded_data() {
        let d = pf().build_srbm().unwrap();
        assert_eq!(
            d.sigma().rows(),
            vec![vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]
        );
        assert_eq!(d.mu(), &[-1.0, -1.0, -1.0]);
        assert_eq!(
            d.r().rows(),
            vec![vec![1.0, 0.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0]]
        );
    }

    #[test]
    fn reproduces_zero_scv_example() {
        let spec = TandemSpec::new(vec![2.0, 2.5, 4.0, 2.5], vec![0.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(spec.build_srbm().unwrap(), zero_scv_tandem());
        assert_eq!(spec.tau_closed_form(), vec![1.0, 2.0, 1.0]);
        assert!(!spec.product_form_condition());
    }

    #[test]
    fn single_station() {
        let spec = TandemSpec::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let d = spec.build_srbm().unwrap();
        assert_eq!(d.sigma().rows(), vec![vec![2.0]]);
        assert_eq!(d.mu(), &[-1.0]);
        assert_eq!(spec.tau_closed_form(), vec![1.0]);
        assert!(spec.product_form_condition());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TandemSpec::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(TandemSpec::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(TandemSpec::new(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
        assert!(TandemSpec::new(vec![1.0, 2.0], vec![-1.0, 1.0]).is_err());
    }

    #[test]
    fn tau_and_condition() {
        assert_eq!(pf().tau_closed_form(), vec![1.0, 2.0, 3.0]);
        let last_free = TandemSpec::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 1.0, 1.0, 5.0]).unwrap();
        assert!(last_free.product_form_condition());
    }

    #[test]
    fn velocities_and_normal() {
        let vp = entrance_velocities(&pf()).unwrap();
        let v12 = vp.velocities.iter().find(|v| (v.i, v.j) == (0, 1)).unwrap();
        assert_eq!(v12.closed_form, [-1.0, 2.0]);
        for v in &vp.velocities {
            assert!((v.closed_form[0] - v.matrix_form[0]).abs() < 1e-10);
            assert!((v.closed_form[1] - v.matrix_form[1]).abs() < 1e-10);
        }
        for (got, want) in vp.normal.iter().zip([-1.0, -1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(vp.normal_closed_form.unwrap(), vec![-1.0, -1.0, 3.0]);

        let tie = TandemSpec::new(vec![1.0, 2.0, 2.0, 3.0], vec![1.0; 4]).unwrap();
        let vp = entrance_velocities(&tie).unwrap();
        assert_eq!(vp.velocities[0].closed_form, [0.0, 1.0]);

        let non_pf = TandemSpec::new(vec![2.0, 2.5, 4.0, 2.5], vec![0.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(entrance_velocities(&non_pf), Err(Error::NotProductForm));
    }

    #[test]
    fn symmetry_points_match_geometry() {
        let specs = [
            TandemSpec::new(vec![2.0, 2.5, 4.0, 2.5], vec![0.0, 1.0, 2.0, 1.0]).unwrap(),
            TandemSpec::new(vec![0.7, 1.3, 0.9, 2.2, 1.1], vec![0.5, 1.7, 0.2, 1.1, 0.8]).unwrap(),
        ];
        for spec in specs {
            let data = spec.build_srbm().unwrap();
            let g = compute_rays(&data).unwrap();
            for (t, want) in g.tau.iter().zip(spec.tau_closed_form()) {
                assert!((t - want).abs() < 1e-12);
            }
            let d = spec.dim();
            for i in 0..d {
                for j in (i + 1)..d {
                    let (si, sj) = spec.symmetry_points_closed_form(i, j).unwrap();
                    let pg = g.symmetry_point(&data, i, j).unwrap();
                    let want_i = g.map_f_ij(i, j, si).unwrap();
                    let want_j = g.map_f_ij(i, j, sj).unwrap();
                    for k in 0..d {
                        assert!((pg.sym_i[k] - want_i[k]).abs() < 1e-9, "{i} {j} {pg:?}");
                        assert!((pg.sym_j[k] - want_j[k]).abs() < 1e-9, "{i} {j} {pg:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn path_junctions() {
        let path = conjectured_path(&pf(), [0.0, 0.0, 3.0]).unwrap();
        assert_eq!(path.status, "conjecture");
        assert!(!path.proven_optimal);
        let s = &path.segments;
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].start, vec![1.0, 1.0, 0.0]);
        assert_eq!(s[1].start, vec![1.5, 0.0, 0.0]);
        for w in s.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert!(matches!(
            conjectured_path(&pf(), [1.0, 1.0, 0.0]),
            Err(Error::InfeasiblePath(_))
        ));
    }
}
