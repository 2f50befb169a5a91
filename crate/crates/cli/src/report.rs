//! JSON documents emitted by the command-line tool. Station and pair
//! indices in every document are one-based.

use serde::{Deserialize, Serialize};
use srbm_core::geometry::PairGeometry;
use srbm_core::product_form::{diagnose, FailureReason, PairFailure};
use srbm_core::projection::{pair_srbm, pair_verdict};
use srbm_core::simulate::{EmpiricalVerdict, SimConfig, SimEstimate};
use srbm_core::tandem::{entrance_velocities, PairVelocity, VpReport};
use srbm_core::{
    compute_rays, Error, Matrix, PairSrbm, ProductFormReport, Result, SrbmData, TandemSpec, ValidationReport,
};

use crate::instance::{Instance, RawData};

pub const DEFAULT_TOL: f64 = srbm_core::product_form::DEFAULT_TOL;

/// Exit status for a failed command: 2 for anything wrong with the input,
/// 1 for runtime failures.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidInstance(_)
        | Error::InvalidSigma
        | Error::NotSymmetric { .. }
        | Error::DimensionMismatch(_)
        | Error::DimensionTooLarge { .. }
        | Error::NonFinite(_)
        | Error::InvalidSpec(_)
        | Error::IndexOutOfRange { .. }
        | Error::DegeneratePair { .. }
        | Error::EmptySlice { .. }
        | Error::TooFewSamples { .. }
        | Error::InvalidConfig(_)
        | Error::SingularR
        | Error::ZeroDiagonalR { .. }
        | Error::NotPMatrix
        | Error::InfeasiblePath(_) => 2,
        _ => 1,
    }
}

/// Renumbers index-carrying errors one-based for display.
pub fn one_based_error(err: Error) -> Error {
    match err {
        Error::IndexOutOfRange { index, dim } => Error::IndexOutOfRange {
            index: index + 1,
            dim,
        },
        Error::DegeneratePair { i, j, c } => Error::DegeneratePair {
            i: i + 1,
            j: j + 1,
            c,
        },
        Error::EmptySlice { i, j } => Error::EmptySlice { i: i + 1, j: j + 1 },
        Error::ZeroDiagonalR { index } => Error::ZeroDiagonalR { index: index + 1 },
        Error::DomainError { index } => Error::DomainError { index: index + 1 },
        other => other,
    }
}

pub fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

fn one_based_failure(mut f: PairFailure) -> PairFailure {
    f.i += 1;
    f.j += 1;
    f
}

fn one_based_geometry(mut g: PairGeometry) -> PairGeometry {
    g.i += 1;
    g.j += 1;
    g
}

fn one_based_velocity(mut v: PairVelocity) -> PairVelocity {
    v.i += 1;
    v.j += 1;
    v
}

fn one_based_pair(mut p: PairSrbm) -> PairSrbm {
    p.i += 1;
    p.j += 1;
    p
}

/// Validated data with a stationary law possible: Σ positive definite,
/// R completely-S and `R⁻¹μ < 0`.
pub fn validated(instance: &Instance) -> Result<(SrbmData, ValidationReport)> {
    let data = instance.data()?;
    let validation = data.validate()?;
    if !validation.exists {
        return Err(Error::InvalidInstance("R is not completely-S".into()));
    }
    if !validation.stable_necessary {
        let msg = if validation.b.is_none() {
            "R is singular"
        } else {
            "stability condition fails: every entry of R^-1 mu must be negative"
        };
        return Err(Error::InvalidInstance(msg.into()));
    }
    Ok((data, validation))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceEcho {
    pub sigma: Matrix,
    pub mu: Vec<f64>,
    pub r: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tandem: Option<TandemSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CEntry {
    pub i: usize,
    pub j: usize,
    /// `det A^ij`.
    pub c_ij: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub delta: Vec<f64>,
    pub tau: Vec<f64>,
    /// Ray points `θ^(i,r)`, one per station.
    pub rays: Vec<Vec<f64>>,
    pub c_table: Vec<CEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairStatus {
    Ok,
    SymmetryMismatch,
    NotPMatrix,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub status: PairStatus,
    pub c_ij: f64,
    /// `γ(f^ij(τ_i, τ_j))`.
    pub gamma_at_tau: Option<f64>,
    pub sym_i: Option<Vec<f64>>,
    pub sym_j: Option<Vec<f64>>,
    pub mismatch: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ProductForm,
    NotProductForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosisDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub instance: InstanceEcho,
    pub validation: ValidationReport,
    pub geometry: GeometrySummary,
    pub product_form: ProductFormReport,
    pub pairs: Vec<PairRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vp: Option<VpReport>,
}

pub fn build_diagnosis(instance: &Instance, tol: f64) -> Result<DiagnosisDocument> {
    check_tol(tol)?;
    let (data, validation) = validated(instance)?;
    let (bundle, geo, mut report) = diagnose(&data, tol)?;
    let d = data.dim();

    let mut c_table = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let degenerate = bundle.is_degenerate(i, j);
            let c_ij = bundle.c[(i, j)];
            c_table.push(CEntry {
                i: i + 1,
                j: j + 1,
                c_ij,
                degenerate,
            });
            let failure = geo.failing_pairs.iter().find(|f| (f.i, f.j) == (i, j));
            let status = match failure.map(|f| f.reason) {
                None => PairStatus::Ok,
                Some(FailureReason::DegeneratePair) => PairStatus::Degenerate,
                Some(FailureReason::NotPMatrix) => PairStatus::NotPMatrix,
                Some(FailureReason::SymmetryMismatch) => PairStatus::SymmetryMismatch,
            };
            let pg = geo.pairs.iter().find(|p| (p.i, p.j) == (i, j));
            let gamma_at_tau = if degenerate {
                None
            } else {
                Some(data.gamma(&bundle.map_f_ij(i, j, [bundle.tau[i], bundle.tau[j]])?))
            };
            pairs.push(PairRow {
                i: i + 1,
                j: j + 1,
                status,
                c_ij,
                gamma_at_tau,
                sym_i: pg.map(|p| p.sym_i.clone()),
                sym_j: pg.map(|p| p.sym_j.clone()),
                mismatch: pg.map(|p| {
                    p.sym_i
                        .iter()
                        .zip(&p.sym_j)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                }),
            });
        }
    }

    report.failing_pairs = report.failing_pairs.into_iter().map(one_based_failure).collect();
    let vp = match instance.tandem() {
        Some(spec) if spec.product_form_condition() => Some(one_based_vp(entrance_velocities(spec)?)),
        _ => None,
    };
    let raw = RawData::from(&data);
    Ok(DiagnosisDocument {
        generated_at: None,
        tolerance: tol,
        verdict: if report.product_form() {
            Verdict::ProductForm
        } else {
            Verdict::NotProductForm
        },
        instance: InstanceEcho {
            sigma: raw.sigma,
            mu: raw.mu,
            r: raw.r,
            tandem: instance.tandem().cloned(),
        },
        validation,
        geometry: GeometrySummary {
            delta: bundle.delta.clone(),
            tau: bundle.tau.clone(),
            rays: bundle.theta_ray.clone(),
            c_table,
        },
        product_form: report,
        pairs,
        vp,
    })
}

impl DiagnosisDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))
    }

    /// The instance the document was computed from.
    pub fn instance(&self) -> Result<Instance> {
        match &self.instance.tandem {
            Some(spec) => Ok(Instance::Tandem(spec.clone())),
            None => Ok(Instance::Raw(SrbmData::new(
                self.instance.sigma.clone(),
                self.instance.mu.clone(),
                self.instance.r.clone(),
            )?)),
        }
    }

    /// Internal consistency problems, empty when none.
    pub fn inconsistencies(&self) -> Vec<String> {
        let mut out = Vec::new();
        let pf = &self.product_form;
        let is_pf = pf.skew_ok && pf.geometric_ok;
        if (self.verdict == Verdict::ProductForm) != is_pf {
            out.push("verdict disagrees with the product-form report".into());
        }
        if pf.alpha.is_some() != is_pf {
            out.push("alpha must be present exactly when the verdict is product form".into());
        }
        if pf.agree != (pf.skew_ok == pf.geometric_ok) {
            out.push("agree flag is inconsistent".into());
        }
        if pf.tol != self.tolerance {
            out.push("report tolerance differs from document tolerance".into());
        }
        let d = self.instance.mu.len();
        if self.pairs.len() != d * d.saturating_sub(1) / 2 {
            out.push("pair table has the wrong length".into());
        }
        let failing = self.pairs.iter().filter(|p| p.status != PairStatus::Ok).count();
        if failing != pf.failing_pairs.len() {
            out.push("pair table and failing pairs disagree".into());
        }
        if pf.geometric_ok && failing > 0 {
            out.push("geometric verdict holds despite failing pairs".into());
        }
        if let Some(spec) = &self.instance.tandem {
            if self.vp.is_some() != spec.product_form_condition() {
                out.push("vp report must be present exactly for product-form tandem specs".into());
            }
        }
        out
    }

    /// Recomputes the document from its own instance and tolerance and
    /// lists every difference, together with internal inconsistencies.
    pub fn revalidate(&self) -> Result<Vec<String>> {
        let mut out = self.inconsistencies();
        let fresh = build_diagnosis(&self.instance()?, self.tolerance)?;
        let mine = DiagnosisDocument {
            generated_at: None,
            ..self.clone()
        };
        if fresh != mine {
            for (name, same) in [
                ("verdict", fresh.verdict == mine.verdict),
                ("validation", fresh.validation == mine.validation),
                ("geometry", fresh.geometry == mine.geometry),
                ("product_form", fresh.product_form == mine.product_form),
                ("pairs", fresh.pairs == mine.pairs),
                ("vp", fresh.vp == mine.vp),
                ("instance", fresh.instance == mine.instance),
            ] {
                if !same {
                    out.push(format!("recomputed {name} differs"));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDocument {
    pub tolerance: f64,
    pub i: usize,
    pub j: usize,
    pub c_ij: f64,
    pub degenerate: bool,
    pub pair: Option<PairSrbm>,
    /// Symmetry points of the two-dimensional SRBM, stations numbered 1, 2.
    pub geometry_2d: Option<PairGeometry>,
    pub product_form_2d: Option<bool>,
    pub skew_ok_2d: Option<bool>,
}

/// Projection onto the pair `(i, j)`, zero-based. A degenerate pair yields
/// a document with `degenerate = true` and no projected data.
pub fn build_projection(instance: &Instance, i: usize, j: usize, tol: f64) -> Result<ProjectionDocument> {
    check_tol(tol)?;
    let data = instance.data()?;
    data.validate()?;
    let d = data.dim();
    if d < 2 {
        return Err(Error::InvalidConfig(
            "projection needs at least two stations".into(),
        ));
    }
    if i >= j || j >= d {
        return Err(Error::IndexOutOfRange {
            index: if i >= d { i } else { j },
            dim: d,
        });
    }
    let bundle = compute_rays(&data)?;
    let c_ij = bundle.c[(i, j)];
    if bundle.is_degenerate(i, j) {
        return Ok(ProjectionDocument {
            tolerance: tol,
            i: i + 1,
            j: j + 1,
            c_ij,
            degenerate: true,
            pair: None,
            geometry_2d: None,
            product_form_2d: None,
            skew_ok_2d: None,
        });
    }
    let pair = pair_srbm(&data, &bundle, i, j)?;
    let verdict = pair_verdict(pair, tol)?;
    Ok(ProjectionDocument {
        tolerance: tol,
        i: i + 1,
        j: j + 1,
        c_ij,
        degenerate: false,
        pair: Some(one_based_pair(verdict.pair)),
        geometry_2d: verdict.geometry.map(one_based_geometry),
        product_form_2d: Some(verdict.product_form),
        skew_ok_2d: Some(verdict.skew_ok),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub config: SimConfig,
    pub estimate: SimEstimate,
    /// Rates from the closed-form α, reported with `--check-alpha`.
    pub alpha: Option<Vec<f64>>,
    pub empirical: Option<EmpiricalVerdict>,
    pub warnings: Vec<String>,
}

/// Renumbers an empirical verdict one-based.
pub fn one_based_empirical(mut v: EmpiricalVerdict) -> EmpiricalVerdict {
    for c in &mut v.coordinates {
        c.i += 1;
    }
    for p in &mut v.pairs {
        p.i += 1;
        p.j += 1;
    }
    v
}

/// Renumbers a VP report one-based.
pub fn one_based_vp(mut vp: VpReport) -> VpReport {
    vp.velocities = vp.velocities.into_iter().map(one_based_velocity).collect();
    vp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::to_json;
    use crate::instance::parse_instance;

    const ZERO_SCV_TANDEM: &str = r#"{"sigma": [[1, -1, 0], [-1, 3, -2], [0, -2, 3]],
        "mu": [-0.5, -1.5, 1.5], "r": [[1, 0, 0], [-1, 1, 0], [0, -1, 1]]}"#;

    #[test]
    fn zero_scv_tandem_document() {
        let doc = build_diagnosis(&parse_instance(ZERO_SCV_TANDEM).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(doc.verdict, Verdict::NotProductForm);
        assert!(doc.product_form.alpha.is_none());
        let p12 = &doc.pairs[0];
        assert_eq!((p12.i, p12.j, p12.status), (1, 2, PairStatus::SymmetryMismatch));
        assert!((p12.gamma_at_tau.unwrap() + 1.0).abs() < 1e-12);
        assert!(doc
            .product_form
            .failing_pairs
            .iter()
            .any(|f| (f.i, f.j) == (1, 2)));
        assert!(doc.inconsistencies().is_empty());
    }

    #[test]
    fn round_trip_and_revalidate() {
        for text in [
            ZERO_SCV_TANDEM,
            r#"{"tandem": {"beta": [1, 2, 3, 4], "c": [1, 1, 1, 1]}}"#,
        ] {
            let doc = build_diagnosis(&parse_instance(text).unwrap(), DEFAULT_TOL).unwrap();
            let back = DiagnosisDocument::from_json(&to_json(&doc)).unwrap();
            assert_eq!(back, doc);
            assert!(back.revalidate().unwrap().is_empty());
        }
    }

    #[test]
    fn tampered_document_is_flagged() {
        let inst = parse_instance(r#"{"tandem": {"beta": [1, 2, 3, 4], "c": [1, 1, 1, 1]}}"#).unwrap();
        let mut doc = build_diagnosis(&inst, DEFAULT_TOL).unwrap();
        assert_eq!(doc.verdict, Verdict::ProductForm);
        doc.product_form.alpha = None;
        assert!(!doc.revalidate().unwrap().is_empty());
    }

    #[test]
    fn invalid_instances() {
        let unstable = parse_instance(r#"{"sigma": [[1]], "mu": [1], "r": [[1]]}"#).unwrap();
        assert!(matches!(
            build_diagnosis(&unstable, DEFAULT_TOL),
            Err(Error::InvalidInstance(_))
        ));
        let not_s = parse_instance(r#"{"sigma": [[1]], "mu": [-1], "r": [[-1]]}"#).unwrap();
        assert!(build_diagnosis(&not_s, DEFAULT_TOL).is_err());
    }
}
