//! Product-form diagnostics for semimartingale reflecting Brownian motions
//! (SRBMs) on the nonnegative orthant.
//!
//! Given data `(Σ, μ, R)` the crate decides whether the stationary
//! distribution factorizes into exponential marginals, by two independent
//! routes: the algebraic skew-symmetry condition and the geometric
//! symmetry-point test built from ray points on the ellipse `γ(θ) = 0`.
//! Supporting pieces cover matrix classes, projected two-dimensional SRBMs,
//! tandem-queue instances and a Monte Carlo oracle.

// `!(x > tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod error;
pub mod geometry;
pub mod lcp;
pub mod matrix;
pub mod model;
pub mod product_form;
pub mod projection;
pub mod simplex;
pub mod simulate;
pub mod tandem;

pub use error::{Error, Result};
pub use geometry::{compute_rays, GeometryBundle, PairGeometry};
pub use matrix::Matrix;
pub use model::{SrbmData, ValidationReport};
pub use product_form::{ExpProductLaw, ProductFormReport};
pub use projection::PairSrbm;
pub use simulate::{simulate, SimConfig, SimEstimate};
pub use tandem::TandemSpec;
