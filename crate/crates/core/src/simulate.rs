//! Monte Carlo oracle: discretized SRBM paths with a complementarity
//! reflection step, and batch-means estimates of the stationary law.
//!
//! Increments are `μh + √h·Lξ` with `LLᵀ = Σ`. Normal and uniform variates
//! come from ChaCha20 (`rand_chacha::ChaCha20Rng`, a counter-based stream
//! cipher generator) seeded with `seed + replication`, so results are
//! bit-reproducible for a given configuration.
//!
//! Two reflection schemes are offered. [`Scheme::Endpoint`] projects the
//! Euler endpoint `z + ΔX` with one LCP solve. [`Scheme::Bridge`] (the
//! default) feeds the LCP with the per-coordinate running minimum of the
//! Brownian bridge over the step, sampled exactly given the endpoint, and
//! then adds the remaining increment. In one dimension the bridge scheme
//! reproduces the reflected process exactly on the time grid; in higher
//! dimensions it removes most of the `O(√h)` downward bias of the endpoint
//! scheme.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::classify::CHOLESKY_PIVOT_TOL;
use crate::error::{Error, Result};
use crate::lcp::LcpSolver;
use crate::matrix::Matrix;
use crate::model::SrbmData;

/// Number of step halvings tried after an LCP failure.
pub const MAX_RETRIES: u32 = 3;
/// Tolerance on the empirical rate check, relative to α.
pub const RATE_REL_TOL: f64 = 0.05;
/// Bound on pairwise correlations for the empirical independence check.
pub const CORRELATION_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Bridge,
    Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub step: f64,
    /// Simulated time per replication, burn-in included.
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    /// Batches per replication.
    pub batches: usize,
    /// Defaults to the origin.
    pub initial_state: Option<Vec<f64>>,
    pub replications: usize,
    pub scheme: Scheme,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 2e4,
            burn_in: 2e3,
            seed: 0,
            batches: 20,
            initial_state: None,
            replications: 1,
            scheme: Scheme::Bridge,
        }
    }
}

impl SimConfig {
    pub fn check(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.horizon.is_finite() && self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return bad("need 0 <= burn_in < horizon".into());
        }
        if self.step > self.horizon / 1000.0 {
            return bad("step must not exceed horizon / 1000".into());
        }
        if self.batches < 2 {
            return bad("at least two batches are required".into());
        }
        if self.replications == 0 {
            return bad("at least one replication is required".into());
        }
        let post = self.post_steps();
        if post < self.batches as u64 {
            return bad("fewer post-burn-in steps than batches".into());
        }
        if let Some(z) = &self.initial_state {
            if z.len() != d {
                return bad(format!("initial_state has length {}, expected {d}", z.len()));
            }
            if !z.iter().all(|v| v.is_finite() && *v >= 0.0) {
                return bad("initial_state must be finite and nonnegative".into());
            }
        }
        Ok(())
    }

    fn total_steps(&self) -> u64 {
        (self.horizon / self.step).round() as u64
    }

    fn burn_steps(&self) -> u64 {
        (self.burn_in / self.step).round() as u64
    }

    fn post_steps(&self) -> u64 {
        self.total_steps().saturating_sub(self.burn_steps())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub marginal_mean: Vec<f64>,
    /// `1 / marginal_mean`.
    pub marginal_rate: Vec<f64>,
    pub covariance: Matrix,
    pub correlation: Matrix,
    /// Total pushing `ΔY_i` per unit time after burn-in.
    pub boundary_push: Vec<f64>,
    /// 95% batch-means half-width for `marginal_rate` (delta method).
    pub ci_halfwidth: Vec<f64>,
    /// 95% batch-means half-width for `marginal_mean`.
    pub mean_ci_halfwidth: Vec<f64>,
    /// 95% batch-means half-width for each correlation.
    pub correlation_ci: Matrix,
    pub samples: u64,
    pub batches: usize,
    /// Steps that needed halving after an LCP failure.
    pub retries: u64,
}

#[derive(Debug, Clone)]
struct Batch {
    n: u64,
    sum: Vec<f64>,
    cross: Vec<f64>,
}

impl Batch {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; d],
            cross: vec![0.0; d * d],
        }
    }

    fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.n as f64).collect()
    }

    fn covariance(&self) -> Matrix {
        let d = self.sum.len();
        let m = self.mean();
        let n = self.n as f64;
        Matrix::from_fn(d, |i, j| self.cross[i * d + j] / n - m[i] * m[j])
    }
}

fn correlation_of(cov: &Matrix) -> Matrix {
    let d = cov.dim();
    Matrix::from_fn(d, |i, j| {
        let s = (cov[(i, i)] * cov[(j, j)]).sqrt();
        if i == j {
            1.0
        } else if s > 0.0 {
            cov[(i, j)] / s
        } else {
            0.0
        }
    })
}

/// Streaming moments split into consecutive batches.
#[derive(Debug, Clone)]
pub struct Accumulator {
    d: usize,
    batch_len: u64,
    batches: Vec<Batch>,
    current: Batch,
    push: Vec<f64>,
    elapsed: f64,
    retries: u64,
}

impl Accumulator {
    pub fn new(d: usize, batch_len: u64) -> Self {
        Self {
            d,
            batch_len: batch_len.max(1),
            batches: Vec::new(),
            current: Batch::new(d),
            push: vec![0.0; d],
            elapsed: 0.0,
            retries: 0,
        }
    }

    pub fn add(&mut self, z: &[f64]) {
        let d = self.d;
        let b = &mut self.current;
        b.n += 1;
        for i in 0..d {
            b.sum[i] += z[i];
            for j in i..d {
                b.cross[i * d + j] += z[i] * z[j];
            }
        }
        if b.n == self.batch_len {
            self.close_batch();
        }
    }

    /// Records reflection pushing over `dt` time units.
    pub fn add_push(&mut self, dy: &[f64], dt: f64) {
        for (p, v) in self.push.iter_mut().zip(dy) {
            *p += v;
        }
        self.elapsed += dt;
    }

    fn close_batch(&mut self) {
        let d = self.d;
        let mut b = std::mem::replace(&mut self.current, Batch::new(d));
        for i in 0..d {
            for j in 0..i {
                b.cross[i * d + j] = b.cross[j * d + i];
            }
        }
        self.batches.push(b);
    }

    pub fn merge(&mut self, other: Accumulator) {
        self.batches.extend(other.batches);
        for (p, v) in self.push.iter_mut().zip(&other.push) {
            *p += v;
        }
        self.elapsed += other.elapsed;
        self.retries += other.retries;
    }

    /// Pooled estimate. A trailing partial batch is folded into the last
    /// complete one.
    pub fn finish(mut self) -> Result<SimEstimate> {
        let d = self.d;
        if self.current.n > 0 {
            let tail = std::mem::replace(&mut self.current, Batch::new(d));
            match self.batches.last_mut() {
                Some(last) => {
                    last.n += tail.n;
                    for i in 0..d {
                        last.sum[i] += tail.sum[i];
                        for j in 0..d {
                            let (a, b) = (i.min(j), i.max(j));
                            last.cross[i * d + j] += tail.cross[a * d + b];
                        }
                    }
                }
                None => {
                    self.current = tail;
                    self.close_batch();
                }
            }
        }
        let nb = self.batches.len();
        if nb < 2 {
            return Err(Error::InvalidConfig("at least two batches are required".into()));
        }
        let mut pooled = Batch::new(d);
        for b in &self.batches {
            pooled.n += b.n;
            for k in 0..d {
                pooled.sum[k] += b.sum[k];
            }
            for k in 0..d * d {
                pooled.cross[k] += b.cross[k];
            }
        }
        let mean = pooled.mean();
        let covariance = pooled.covariance();
        let correlation = correlation_of(&covariance);

        let t = StudentsT::new(0.0, 1.0, (nb - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975);
        let halfwidth = |values: &[f64]| {
            let m = values.iter().sum::<f64>() / nb as f64;
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (nb - 1) as f64;
            t * (var / nb as f64).sqrt()
        };
        let batch_means: Vec<Vec<f64>> = self.batches.iter().map(Batch::mean).collect();
        let mean_ci: Vec<f64> = (0..d)
            .map(|i| halfwidth(&batch_means.iter().map(|m| m[i]).collect::<Vec<_>>()))
            .collect();
        let batch_corr: Vec<Matrix> = self
            .batches
            .iter()
            .map(|b| correlation_of(&b.covariance()))
            .collect();
        let correlation_ci = Matrix::from_fn(d, |i, j| {
            if i == j {
                0.0
            } else {
                halfwidth(&batch_corr.iter().map(|c| c[(i, j)]).collect::<Vec<_>>())
            }
        });
        let elapsed = if self.elapsed > 0.0 { self.elapsed } else { 1.0 };
        Ok(SimEstimate {
            marginal_rate: mean.iter().map(|m| 1.0 / m).collect(),
            ci_halfwidth: mean.iter().zip(&mean_ci).map(|(m, h)| h / (m * m)).collect(),
            marginal_mean: mean,
            covariance,
            correlation,
            boundary_push: self.push.iter().map(|p| p / elapsed).collect(),
            mean_ci_halfwidth: mean_ci,
            correlation_ci,
            samples: pooled.n,
            batches: nb,
            retries: self.retries,
        })
    }
}

impl SimEstimate {
    /// Estimate from independent samples split into `batches` batches.
    pub fn from_samples(samples: &[Vec<f64>], batches: usize) -> Result<Self> {
        let d = samples.first().map_or(0, Vec::len);
        if d == 0 || samples.iter().any(|s| s.len() != d) {
            return Err(Error::DimensionMismatch(
                "samples must share a positive length".into(),
            ));
        }
        if batches < 2 || samples.len() < batches {
            return Err(Error::InvalidConfig("need at least two nonempty batches".into()));
        }
        let mut acc = Accumulator::new(d, (samples.len() / batches) as u64);
        for s in samples {
            acc.add(s);
        }
        acc.finish()
    }
}

struct Path<'a> {
    d: usize,
    sigma_diag: Vec<f64>,
    mu: &'a [f64],
    chol: Matrix,
    solver: LcpSolver,
    scheme: Scheme,
    rng: ChaCha20Rng,
    z: Vec<f64>,
    xi: Vec<f64>,
    dx: Vec<f64>,
    q: Vec<f64>,
    out: Vec<f64>,
    dy: Vec<f64>,
    retries: u64,
}

impl Path<'_> {
    /// Advances by `h`, adding the pushing to `dy_total`.
    fn advance(&mut self, h: f64, depth: u32, dy_total: &mut [f64]) -> Result<()> {
        let d = self.d;
        let sh = h.sqrt();
        for v in self.xi.iter_mut() {
            *v = self.rng.sample(StandardNormal);
        }
        for i in 0..d {
            let row = self.chol.row(i);
            let noise: f64 = row[..=i].iter().zip(&self.xi).map(|(a, b)| a * b).sum();
            self.dx[i] = self.mu[i] * h + sh * noise;
        }
        match self.scheme {
            Scheme::Endpoint => {
                for i in 0..d {
                    self.q[i] = self.z[i] + self.dx[i];
                }
            }
            Scheme::Bridge => {
                for i in 0..d {
                    let u: f64 = self.rng.random();
                    let x = self.dx[i];
                    let spread = (x * x - 2.0 * self.sigma_diag[i] * h * (1.0 - u).ln()).sqrt();
                    self.q[i] = self.z[i] + 0.5 * (x - spread);
                }
            }
        }
        match self.solver.solve_into(&self.q, &mut self.out, &mut self.dy) {
            Ok(()) => {
                for i in 0..d {
                    // out = q + R dy; the endpoint adds back what the bridge minimum removed
                    self.z[i] = match self.scheme {
                        Scheme::Endpoint => self.out[i],
                        Scheme::Bridge => self.out[i] + (self.z[i] + self.dx[i] - self.q[i]),
                    };
                    dy_total[i] += self.dy[i];
                }
                Ok(())
            }
            Err(Error::LcpRayTermination { .. }) if depth < MAX_RETRIES => {
                self.retries += 1;
                self.advance(h / 2.0, depth + 1, dy_total)?;
                self.advance(h / 2.0, depth + 1, dy_total)
            }
            Err(e) => Err(e),
        }
    }
}

/// Optional raw-path output: every `every`-th step is written as
/// `t,z1,...,zd,dy1,...,dyd`, with `dy` summed since the previous row.
pub struct Dump<'w> {
    pub writer: &'w mut (dyn Write + Send),
    pub every: u64,
}

fn run_replication(
    data: &SrbmData,
    config: &SimConfig,
    chol: &Matrix,
    replication: u64,
    mut dump: Option<Dump<'_>>,
) -> Result<Accumulator> {
    let d = data.dim();
    let mut path = Path {
        d,
        sigma_diag: data.sigma().diag(),
        mu: data.mu(),
        chol: chol.clone(),
        solver: LcpSolver::new(data.r())?,
        scheme: config.scheme,
        rng: ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(replication)),
        z: config.initial_state.clone().unwrap_or_else(|| vec![0.0; d]),
        xi: vec![0.0; d],
        dx: vec![0.0; d],
        q: vec![0.0; d],
        out: vec![0.0; d],
        dy: vec![0.0; d],
        retries: 0,
    };
    let h = config.step;
    let (total, burn) = (config.total_steps(), config.burn_steps());
    let mut acc = Accumulator::new(d, config.post_steps() / config.batches as u64);
    let mut step_dy = vec![0.0; d];
    let mut dump_dy = vec![0.0; d];
    if let Some(dump) = dump.as_mut() {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=d).map(|k| format!("z{k}")))
            .chain((1..=d).map(|k| format!("dy{k}")))
            .collect();
        writeln!(dump.writer, "{}", header.join(","))?;
    }
    for step in 1..=total {
        step_dy.fill(0.0);
        path.advance(h, 0, &mut step_dy)?;
        if step > burn {
            acc.add(&path.z);
            acc.add_push(&step_dy, h);
        }
        if let Some(dump) = dump.as_mut() {
            for (a, b) in dump_dy.iter_mut().zip(&step_dy) {
                *a += b;
            }
            if step % dump.every.max(1) == 0 {
                let mut line = format!("{:.16e}", step as f64 * h);
                for v in path.z.iter().chain(&dump_dy) {
                    line.push_str(&format!(",{v:.16e}"));
                }
                writeln!(dump.writer, "{line}")?;
                dump_dy.fill(0.0);
            }
        }
    }
    acc.retries = path.retries;
    Ok(acc)
}

fn prepare(data: &SrbmData, config: &SimConfig) -> Result<Matrix> {
    config.check(data.dim())?;
    let report = data.validate()?;
    if !report.exists {
        return Err(Error::InvalidInstance("R is not completely-S".into()));
    }
    data.sigma()
        .cholesky(CHOLESKY_PIVOT_TOL)
        .ok_or(Error::InvalidSigma)
}

/// Simulates `config.replications` independent paths (concurrently when
/// more than one) and pools their batches.
pub fn simulate(data: &SrbmData, config: &SimConfig) -> Result<SimEstimate> {
    simulate_with_dump(data, config, None)
}

/// As [`simulate`], writing the first replication's path to `dump`.
pub fn simulate_with_dump(
    data: &SrbmData,
    config: &SimConfig,
    dump: Option<Dump<'_>>,
) -> Result<SimEstimate> {
    let chol = prepare(data, config)?;
    let reps = config.replications as u64;
    let results: Vec<Result<Accumulator>> = if reps == 1 {
        vec![run_replication(data, config, &chol, 0, dump)]
    } else {
        std::thread::scope(|s| {
            let chol = &chol;
            let mut dump = dump;
            let handles: Vec<_> = (0..reps)
                .map(|k| {
                    let dk = if k == 0 { dump.take() } else { None };
                    s.spawn(move || run_replication(data, config, chol, k, dk))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("replication thread panicked"))
                .collect()
        })
    };
    let mut pooled: Option<Accumulator> = None;
    for r in results {
        let acc = r?;
        match pooled.as_mut() {
            None => pooled = Some(acc),
            Some(p) => p.merge(acc),
        }
    }
    pooled.expect("at least one replication").finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateCheck {
    pub i: usize,
    pub rate: f64,
    pub alpha: f64,
    /// `max(0.05·α_i, 3·ci_halfwidth_i)`.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    pub correlation: f64,
    pub ci_halfwidth: f64,
    /// `|corr| ≤ 0.05`.
    pub pass: bool,
    /// Zero lies outside the correlation's confidence interval.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVerdict {
    pub coordinates: Vec<CoordinateCheck>,
    pub pairs: Vec<PairCheck>,
    pub all_pass: bool,
}

/// Compares simulated rates with `alpha` and checks pairwise correlations.
pub fn empirical_product_form_test(est: &SimEstimate, alpha: &[f64]) -> EmpiricalVerdict {
    let d = est.marginal_rate.len();
    let coordinates: Vec<CoordinateCheck> = (0..d)
        .map(|i| {
            let (rate, a) = (est.marginal_rate[i], alpha.get(i).copied().unwrap_or(f64::NAN));
            let tolerance = (RATE_REL_TOL * a).max(3.0 * est.ci_halfwidth[i]);
            CoordinateCheck {
                i,
                rate,
                alpha: a,
                tolerance,
                pass: (rate - a).abs() <= tolerance,
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let correlation = est.correlation[(i, j)];
            let ci = est.correlation_ci[(i, j)];
            pairs.push(PairCheck {
                i,
                j,
                correlation,
                ci_halfwidth: ci,
                pass: correlation.abs() <= CORRELATION_TOL,
                significant: correlation.abs() > ci,
            });
        }
    }
    let all_pass = coordinates.iter().all(|c| c.pass) && pairs.iter().all(|p| p.pass);
    EmpiricalVerdict {
        coordinates,
        pairs,
        all_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use rand_distr::{Distribution, Exp};

    fn short(seed: u64) -> SimConfig {
        SimConfig {
            step: 1e-3,
            horizon: 200.0,
            burn_in: 20.0,
            seed,
            batches: 10,
            ..SimConfig::default()
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let d = one_dim(1.0, -1.0, 1.0);
        for c in [
            SimConfig {
                step: 0.0,
                ..short(0)
            },
            SimConfig {
                burn_in: 300.0,
                ..short(0)
            },
            SimConfig {
                step: 1.0,
                ..short(0)
            },
            SimConfig {
                batches: 1,
                ..short(0)
            },
            SimConfig {
                initial_state: Some(vec![-1.0]),
                ..short(0)
            },
            SimConfig {
                initial_state: Some(vec![1.0, 1.0]),
                ..short(0)
            },
        ] {
            assert!(matches!(simulate(&d, &c), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let data = tandem_pf();
        let a = simulate(&data, &short(7)).unwrap();
        let b = simulate(&data, &short(7)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&data, &short(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn replications_are_deterministic() {
        let data = tandem_pf();
        let cfg = SimConfig {
            replications: 3,
            ..short(1)
        };
        let a = simulate(&data, &cfg).unwrap();
        assert_eq!(a, simulate(&data, &cfg).unwrap());
        assert_eq!(a.batches, 30);
    }

    #[test]
    fn dump_has_header_and_rows() {
        let data = one_dim(1.0, -1.0, 1.0);
        let mut buf: Vec<u8> = Vec::new();
        let cfg = short(3);
        simulate_with_dump(
            &data,
            &cfg,
            Some(Dump {
                writer: &mut buf,
                every: 1000,
            }),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,z1,dy1"));
        assert_eq!(lines.count(), 200);
    }

    #[test]
    fn iid_exponential_samples_pass() {
        let alpha = [1.0, 2.0, 3.0];
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let samples: Vec<Vec<f64>> = (0..200_000)
            .map(|_| {
                alpha
                    .iter()
                    .map(|&a| Exp::new(a).unwrap().sample(&mut rng))
                    .collect()
            })
            .collect();
        let est = SimEstimate::from_samples(&samples, 20).unwrap();
        let v = empirical_product_form_test(&est, &alpha);
        assert!(v.all_pass, "{v:?}");
    }

    #[test]
    fn one_dim_bridge_is_unbiased_for_coarse_steps() {
        let data = one_dim(1.0, -1.0, 1.0);
        let cfg = SimConfig {
            step: 0.05,
            horizon: 2e4,
            burn_in: 100.0,
            ..SimConfig::default()
        };
        let est = simulate(&data, &cfg).unwrap();
        assert!((est.marginal_rate[0] - 2.0).abs() < 0.04, "{est:?}");
    }
}
