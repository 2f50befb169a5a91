//! Acceptance checks. Each test prints one `PASS`/`FAIL` line to stderr
//! (bypassing output capture) before asserting.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use srbm_core::classify::{is_completely_s, is_p_matrix};
use srbm_core::product_form::{alpha_formula, characterization_residual, diagnose, DEFAULT_TOL};
use srbm_core::projection::{pair_srbm, pairwise_independence_report};
use srbm_core::simulate::{simulate, SimConfig};
use srbm_core::tandem::{conjectured_path, entrance_velocities};
use srbm_core::{compute_rays, ExpProductLaw, Matrix, SrbmData, TandemSpec};

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance {criterion}: {} - {title} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn zero_scv_tandem() -> SrbmData {
    SrbmData::new(
        Matrix::from_rows(&[[1.0, -1.0, 0.0], [-1.0, 3.0, -2.0], [0.0, -2.0, 3.0]]).unwrap(),
        vec![-0.5, -1.5, 1.5],
        Matrix::from_rows(&[[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]]).unwrap(),
    )
    .unwrap()
}

fn non_p_degenerate() -> SrbmData {
    SrbmData::new(
        Matrix::identity(4),
        vec![-1.1, -1.1, -1.0, -1.0],
        Matrix::from_rows(&[
            [1.0, 0.5, 1.0, 0.0],
            [2.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
        ])
        .unwrap(),
    )
    .unwrap()
}

fn tandem_pf() -> TandemSpec {
    TandemSpec::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4]).unwrap()
}

/// `f^ij(z) = [θ^(i,r) θ^(j,r)] (A^ij)⁻¹ z`, built directly from the rays.
fn f_ij_oracle(rays: &[Vec<f64>], i: usize, j: usize, z: [f64; 2]) -> Vec<f64> {
    let (a, b, c, d) = (rays[i][i], rays[j][i], rays[i][j], rays[j][j]);
    let det = a * d - b * c;
    let u = (d * z[0] - b * z[1]) / det;
    let v = (-c * z[0] + a * z[1]) / det;
    rays[i].iter().zip(&rays[j]).map(|(p, q)| u * p + v * q).collect()
}

#[test]
fn criterion_1_zero_scv_tandem_golden() {
    let start = Instant::now();
    let data = zero_scv_tandem();
    let (bundle, _, rep) = diagnose(&data, DEFAULT_TOL).unwrap();
    let f12 = f_ij_oracle(&bundle.theta_ray, 0, 1, [bundle.tau[0], bundle.tau[1]]);
    let mapped = bundle.map_f_ij(0, 1, [bundle.tau[0], bundle.tau[1]]).unwrap();
    let elapsed = start.elapsed();

    let tol = 1e-9;
    let checks = [
        close(&bundle.theta_ray[0], &[1.0, 0.0, 0.0], tol),
        close(&bundle.theta_ray[1], &[2.0, 2.0, 0.0], tol),
        close(&bundle.theta_ray[2], &[1.0, 1.0, 1.0], tol),
        close(&bundle.tau, &[1.0, 2.0, 1.0], tol),
        data.gamma(&bundle.tau).abs() <= tol,
        close(&f12, &[1.0, 2.0, 0.0], tol),
        close(&mapped, &[1.0, 2.0, 0.0], tol),
        (data.gamma(&mapped) + 1.0).abs() <= tol,
        !rep.product_form() && !rep.skew_ok && !rep.geometric_ok,
    ];
    let fast = elapsed < Duration::from_millis(10);
    let pass = checks.iter().all(|&c| c) && fast;
    report(
        1,
        "zero-SCV tandem golden values",
        pass,
        &format!("checks {checks:?}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_non_p_degenerate_golden() {
    let data = non_p_degenerate();
    let printed = Matrix::from_rows(&[
        [0.0, 0.5, 0.0, -0.5],
        [2.0, 0.0, -2.0, 0.0],
        [0.0, -0.5, 1.0, 0.5],
        [-2.0, 0.0, 2.0, 1.0],
    ])
    .unwrap();
    let rinv = data.r_inverse().unwrap();
    let inv_err = rinv.sub(&printed).max_abs();
    let validation = data.validate().unwrap();
    let bundle = compute_rays(&data).unwrap();
    let c34 = bundle.c[(2, 3)];
    let p = is_p_matrix(data.r()).unwrap().0;
    let cs = is_completely_s(data.r()).unwrap();

    let pass =
        inv_err <= 1e-10 && cs && validation.exists && validation.stable_necessary && c34.abs() < 1e-10 && !p;
    report(
        2,
        "non-P degenerate-pair golden values",
        pass,
        &format!(
            "R^-1 err {inv_err:.1e}, completely-S {cs}, stable {}, c_34 {c34:.1e}, P {p}",
            validation.stable_necessary
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_verdict_equivalence() {
    let start = Instant::now();
    let corpus = common::corpus(3, 1000);
    let mut disagreements = Vec::new();
    let mut positives = 0;
    for (k, (kind, data)) in corpus.iter().enumerate() {
        let (_, _, rep) = diagnose(data, DEFAULT_TOL).unwrap();
        if rep.skew_ok != rep.geometric_ok {
            disagreements.push((k, *kind));
        }
        positives += rep.product_form() as usize;
    }
    let elapsed = start.elapsed();
    let pass = disagreements.is_empty()
        && positives > 0
        && positives < corpus.len()
        && elapsed < Duration::from_secs(30);
    report(
        3,
        "skew-symmetry and geometric verdicts agree",
        pass,
        &format!(
            "{} instances, {positives} product form, disagreements {disagreements:?}, {elapsed:?}",
            corpus.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_tandem_condition() {
    let mut rng = common::rng(4);
    let mut mismatches = Vec::new();
    let mut positives = 0;
    for k in 0..200 {
        let spec = common::random_tandem(&mut rng, 3 + k % 2);
        let cond = spec.product_form_condition();
        let (_, _, rep) = diagnose(&spec.build_srbm().unwrap(), DEFAULT_TOL).unwrap();
        if cond != rep.skew_ok || cond != rep.geometric_ok {
            mismatches.push(spec);
        }
        positives += cond as usize;
    }
    let pass = mismatches.is_empty() && positives > 0 && positives < 200;
    report(
        4,
        "tandem condition matches both verdicts",
        pass,
        &format!("200 specs, {positives} satisfy the condition, mismatches {mismatches:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_product_form_law() {
    let mut rng = common::rng(5);
    let mut instances: Vec<SrbmData> = common::corpus(3, 1000).into_iter().map(|(_, d)| d).collect();
    instances.push(tandem_pf().build_srbm().unwrap());
    let mut checked = 0;
    let (mut worst_gamma, mut worst_char, mut worst_bar) = (0.0f64, 0.0f64, 0.0f64);
    for data in &instances {
        let (_, _, rep) = diagnose(data, DEFAULT_TOL).unwrap();
        if !rep.product_form() {
            continue;
        }
        checked += 1;
        let alpha = alpha_formula(data).unwrap();
        let scale = data.sigma().max_abs() * alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())).powi(2);
        worst_gamma = worst_gamma.max(data.gamma(&alpha).abs() / scale.max(1.0));
        worst_char = worst_char.max(characterization_residual(data, &alpha).unwrap());
        let law = ExpProductLaw::new(data, alpha.clone()).unwrap();
        for _ in 0..100 {
            let theta: Vec<f64> = alpha.iter().map(|&a| rng.random_range(-a..0.5 * a)).collect();
            worst_bar = worst_bar.max(law.bar_residual(data, &theta).unwrap().abs());
        }
    }
    let pass = checked > 0 && worst_gamma <= 1e-9 && worst_char < 1e-8 && worst_bar < 1e-9;
    report(
        5,
        "product-form law identities",
        pass,
        &format!(
            "{checked} instances, |gamma(alpha)| {worst_gamma:.1e}, characterization {worst_char:.1e}, BAR {worst_bar:.1e}"
        ),
    );
    assert!(pass);
}

/// Nearly degenerate pairs map moderate `z` to huge `θ`, where an absolute
/// 1e-9 bound is finer than double precision.
const MAX_PAIR_CONDITION: f64 = 1e3;

#[test]
fn criterion_6_pair_gamma_identity() {
    let mut rng = common::rng(6);
    let corpus = common::corpus(3, 1000);
    let mut worst = 0.0f64;
    let mut triples = 0;
    while triples < 500 {
        let (_, data) = &corpus[rng.random_range(0..corpus.len())];
        let d = data.dim();
        let i = rng.random_range(0..d);
        let j = (i + rng.random_range(1..d)) % d;
        let bundle = compute_rays(data).unwrap();
        let a = bundle.a_ij(i, j);
        let well_conditioned = a
            .inverse()
            .is_ok_and(|inv| a.norm_inf() * inv.norm_inf() <= MAX_PAIR_CONDITION);
        if !well_conditioned {
            continue;
        }
        let Ok(pair) = pair_srbm(data, &bundle, i, j) else {
            continue;
        };
        // pair coordinates measured in units of the ray points
        let z = [
            bundle.tau[i] * rng.random_range(-2.0..2.0),
            bundle.tau[j] * rng.random_range(-2.0..2.0),
        ];
        let theta = f_ij_oracle(&bundle.theta_ray, i, j, z);
        worst = worst.max((pair.gamma_tilde(z) - data.gamma(&theta)).abs());
        triples += 1;
    }
    let pass = worst < 1e-9;
    report(
        6,
        "projected gamma identity",
        pass,
        &format!("{triples} triples, max error {worst:.1e}"),
    );
    assert!(pass);
}

fn criterion_7_config() -> SimConfig {
    SimConfig {
        step: 1e-3,
        horizon: 2e4,
        burn_in: 2e3,
        seed: 42,
        ..SimConfig::default()
    }
}

#[test]
fn criterion_7_simulation_tandem() {
    let start = Instant::now();
    let est = simulate(&tandem_pf().build_srbm().unwrap(), &criterion_7_config()).unwrap();
    let elapsed = start.elapsed();
    let alpha = [1.0, 2.0, 3.0];
    let rates_ok = est
        .marginal_rate
        .iter()
        .zip(alpha)
        .all(|(r, a)| (r - a).abs() <= 0.05 * a);
    let mut max_corr = 0.0f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            max_corr = max_corr.max(est.correlation[(i, j)].abs());
        }
    }
    let pass = rates_ok && max_corr < 0.05 && elapsed < Duration::from_secs(120);
    report(
        7,
        "tandem simulation matches exponential product law",
        pass,
        &format!(
            "rates {:?}, max |corr| {max_corr:.3}, {elapsed:?}",
            est.marginal_rate
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_simulation_one_dim() {
    let start = Instant::now();
    let data = SrbmData::new(Matrix::identity(1), vec![-1.0], Matrix::identity(1)).unwrap();
    let est = simulate(&data, &criterion_7_config()).unwrap();
    let elapsed = start.elapsed();
    let rate = est.marginal_rate[0];
    let pass = (rate - 2.0).abs() <= 0.1 && elapsed < Duration::from_secs(120);
    report(
        7,
        "one-dimensional simulation rate",
        pass,
        &format!("rate {rate:.4}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_projection_consistency() {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (k, (kind, data)) in common::corpus(3, 1000).iter().enumerate() {
        if !is_p_matrix(data.r()).unwrap().0 {
            continue;
        }
        checked += 1;
        let (_, _, rep) = diagnose(data, DEFAULT_TOL).unwrap();
        let table = pairwise_independence_report(data, DEFAULT_TOL).unwrap();
        if table.all_product_form != rep.product_form() {
            mismatches.push((k, *kind));
        }
    }
    let pass = checked > 0 && mismatches.is_empty();
    report(
        8,
        "pairwise verdicts agree with the full verdict",
        pass,
        &format!("{checked} P-matrix instances, mismatches {mismatches:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_9_vp_report() {
    let spec = tandem_pf();
    let vp = entrance_velocities(&spec).unwrap();
    let tol = 1e-10;
    let v12 = vp.velocities.iter().find(|v| v.i == 0 && v.j == 1).unwrap();
    let velocity_ok = close(&v12.closed_form, &[-1.0, 2.0], tol)
        && close(&v12.matrix_form, &v12.closed_form, tol)
        && vp
            .velocities
            .iter()
            .all(|v| close(&v.matrix_form, &v.closed_form, tol));
    let data = spec.build_srbm().unwrap();
    let tau = spec.tau_closed_form();
    let sigma_tau = data.sigma().mul_vec(&tau);
    let normal_oracle: Vec<f64> = sigma_tau.iter().zip(data.mu()).map(|(a, b)| a + b).collect();
    let normal_ok = close(&vp.normal, &[-1.0, -1.0, 3.0], tol) && close(&vp.normal, &normal_oracle, tol);

    let path = conjectured_path(&spec, [0.0, 0.0, 3.0]).unwrap();
    let segs = &path.segments;
    let continuous = segs.windows(2).all(|w| close(&w[0].end, &w[1].start, tol));
    let path_ok = segs.len() == 3
        && continuous
        && close(&segs[0].start, &[0.0, 0.0, 0.0], tol)
        && close(&segs[2].end, &[0.0, 0.0, 3.0], tol)
        && close(&segs[1].end, &[1.0, 1.0, 0.0], tol)
        && !path.proven_optimal;
    let pass = velocity_ok && normal_ok && path_ok;
    report(
        9,
        "entrance velocities, normal vector and conjectured path",
        pass,
        &format!(
            "a12 {:?}, normal {:?}, junction {:?}",
            v12.closed_form,
            vp.normal,
            segs.get(1).map(|s| &s.end)
        ),
    );
    assert!(pass);
}
