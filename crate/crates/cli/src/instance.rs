//! Instance files: either raw `{"sigma", "mu", "r"}` data or a tandem spec
//! `{"tandem": {"beta", "c"}}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use srbm_core::classify::MAX_ENUM_DIM;
use srbm_core::{Error, Matrix, Result, SrbmData, TandemSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    sigma: Option<Vec<Vec<f64>>>,
    mu: Option<Vec<f64>>,
    r: Option<Vec<Vec<f64>>>,
    tandem: Option<TandemSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Raw(SrbmData),
    Tandem(TandemSpec),
}

/// Serialized form of the raw variant, also emitted by `srbm tandem`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawData {
    pub sigma: Matrix,
    pub mu: Vec<f64>,
    pub r: Matrix,
}

impl From<&SrbmData> for RawData {
    fn from(d: &SrbmData) -> Self {
        Self {
            sigma: d.sigma().clone(),
            mu: d.mu().to_vec(),
            r: d.r().clone(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

fn check_dim(d: usize) -> Result<()> {
    if d > MAX_ENUM_DIM {
        return Err(Error::DimensionTooLarge {
            dim: d,
            max: MAX_ENUM_DIM,
        });
    }
    Ok(())
}

fn matrix(name: &str, rows: Vec<Vec<f64>>, d: usize) -> Result<Matrix> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(invalid(format!("{name} must be {d}x{d} to match mu")));
    }
    Matrix::from_rows(&rows)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    match raw {
        RawInstance {
            sigma: Some(sigma),
            mu: Some(mu),
            r: Some(r),
            tandem: None,
        } => {
            let d = mu.len();
            if d == 0 {
                return Err(invalid("mu must be nonempty"));
            }
            check_dim(d)?;
            let sigma = matrix("sigma", sigma, d)?;
            let r = matrix("r", r, d)?;
            Ok(Instance::Raw(SrbmData::new(sigma, mu, r)?))
        }
        RawInstance {
            sigma: None,
            mu: None,
            r: None,
            tandem: Some(spec),
        } => {
            check_dim(spec.dim())?;
            spec.check()?;
            Ok(Instance::Tandem(spec))
        }
        RawInstance { tandem: Some(_), .. } => Err(invalid("give either sigma/mu/r or tandem, not both")),
        _ => Err(invalid("sigma, mu and r are all required")),
    }
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text)
}

impl Instance {
    pub fn data(&self) -> Result<SrbmData> {
        match self {
            Instance::Raw(d) => Ok(d.clone()),
            Instance::Tandem(spec) => spec.build_srbm(),
        }
    }

    pub fn tandem(&self) -> Option<&TandemSpec> {
        match self {
            Instance::Tandem(spec) => Some(spec),
            Instance::Raw(_) => None,
        }
    }
}
