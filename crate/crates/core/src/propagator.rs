//! Cutoff covariance `C_Λ(x)` through its proper-time representation
//!
//! ```text
//! C_Λ(x) = (2^d π^{d/2})^{-1} ∫_{1/Λ²}^∞ dα α^{-d/2} e^{-α m²} e^{-|x|²/(4α)}
//! ```
//!
//! evaluated in the variable `ln α`, where the integrand is smooth and decays
//! double-exponentially at both ends.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{ModelParams, QuadratureSpec};
use crate::quad;
use crate::special::upper_gamma_half_integer;

/// Decay budget: contributions below `e^{-TAIL}` of the peak are dropped.
const TAIL: f64 = 70.0;

fn prefactor(d: usize) -> f64 {
    1.0 / (2f64.powi(d as i32) * PI.powf(d as f64 / 2.0))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn proper_time_integral(
    dim: usize,
    mass: f64,
    r: f64,
    alpha_min: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m2 = mass * mass;
    let r2 = r * r;
    let exponent = 1.0 - dim as f64 / 2.0;
    let lower = match alpha_min {
        Some(a0) => a0,
        None => {
            if r == 0.0 {
                return Err(Error::DivergentCovariance);
            }
            // e^{-r²/(4α)} is negligible below this point.
            r2 / (4.0 * (TAIL + r * mass + 10.0))
        }
    };
    let saddle = r / (2.0 * mass);
    let upper = ((TAIL + r * mass + 10.0) / m2 + 2.0 * saddle).max(4.0 * lower);

    let mut cuts = vec![1.0 / m2, saddle, r2 / 4.0, r2 / (2.0 * dim as f64)];
    cuts.retain(|c| *c > 0.0);
    let log_cuts: Vec<f64> = cuts.iter().map(|c| c.ln()).collect();

    let integrand = |s: f64| {
        let alpha = s.exp();
        let arg = -alpha * m2 - r2 / (4.0 * alpha);
        alpha.powf(exponent) * arg.exp()
    };
    let res = quad::integrate(integrand, lower.ln(), upper.ln(), &log_cuts, spec)?;
    Ok(prefactor(dim) * res.value)
}

/// `C_Λ(x)` at a point `x ∈ R^d`.
pub fn covariance_at(x: &[f64], params: &ModelParams, spec: &QuadratureSpec) -> Result<f64> {
    params.validate()?;
    spec.validate()?;
    if x.len() != params.dim {
        return Err(invalid(
            "x",
            format!("point has {} components, expected {}", x.len(), params.dim),
        ));
    }
    let alpha0 = 1.0 / (params.cutoff * params.cutoff);
    proper_time_integral(params.dim, params.mass, norm(x), Some(alpha0), spec)
}

/// The UV-limit covariance `C(x)`, defined for `x ≠ 0`.
pub fn covariance_uv_limit(x: &[f64], params: &ModelParams, spec: &QuadratureSpec) -> Result<f64> {
    params.validate()?;
    spec.validate()?;
    if x.len() != params.dim {
        return Err(invalid("x", "dimension mismatch"));
    }
    proper_time_integral(params.dim, params.mass, norm(x), None, spec)
}

/// `C_Λ(0) = (2^d π^{d/2})^{-1} m^{d-2} Γ(1 - d/2, m²/Λ²)`.
pub fn covariance_zero(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let d = params.dim;
    let m2 = params.mass * params.mass;
    let x = m2 / (params.cutoff * params.cutoff);
    let gamma = upper_gamma_half_integer(1.0 - d as f64 / 2.0, x);
    Ok(prefactor(d) * params.mass.powi(d as i32 - 2) * gamma)
}

/// Field renormalization `Z_Λ = C_Λ(0)^η` and the scales derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Renormalization {
    /// `C_Λ(0)`.
    pub c0: f64,
    /// `Z_Λ`.
    pub z: f64,
    /// `t_Λ = C_Λ(0)^{1/2}`.
    pub t: f64,
    /// `(Z_Λ C_Λ(0))^{1/2} = t^{η+1}`.
    pub s_plus: f64,
    /// `(Z_Λ / C_Λ(0))^{1/2} = t^{η-1}`.
    pub s_minus: f64,
}

impl Renormalization {
    /// Scales for a given `C(0)` and exponent; `c0` may come from the lattice.
    pub fn from_c0(c0: f64, eta: f64) -> Self {
        let t = c0.sqrt();
        Renormalization {
            c0,
            z: c0.powf(eta),
            t,
            s_plus: t.powf(eta + 1.0),
            s_minus: t.powf(eta - 1.0),
        }
    }
}

pub fn renorm_factor(params: &ModelParams) -> Result<Renormalization> {
    Ok(Renormalization::from_c0(covariance_zero(params)?, params.eta))
}
