//! Numerical toolkit for bounded-interaction generating functionals of a
//! UV-regularized Gaussian field on a box, and their limits as the cutoff
//! is removed.
//!
//! Layers, bottom up: [`propagator`] (cutoff covariance), [`interactions`]
//! (bounded `V` with declared limits), [`lattice`] (torus discretization and
//! exact field sampling), [`gaussian`] (product quadrature of Gaussian
//! expectations), [`limits`] (closed-form cutoff-removed functionals) and
//! [`experiments`] (Monte Carlo and sweeps tying them together).

pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod interactions;
pub mod lattice;
pub mod limits;
pub mod params;
pub mod propagator;
pub mod quad;
pub mod special;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use experiments::MCConfig;
pub use gaussian::{OverlapMatrix, ScaleParams, SourceVector};
pub use interactions::{BoundedInteraction, ScaledInteraction};
pub use lattice::{FieldSample, SourceField, SourceSpec, SpectralDensity, TorusLattice};
pub use limits::{EtaRegime, KappaRegime, LimitResult};
pub use params::{ModelParams, QuadratureSpec};
pub use propagator::{covariance_at, covariance_uv_limit, covariance_zero, renorm_factor, Renormalization};
