//! Model and numerical parameters shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical parameters of the regularized model.
///
/// `cutoff` is the UV cutoff of the Gaussian regulator `exp(-(p^2+m^2)/cutoff^2)`;
/// `eta` fixes the field renormalization `Z = C(0)^eta` and `kappa` the optional
/// argument scaling `z = C(0)^kappa` of the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub dim: usize,
    pub mass: f64,
    pub box_side: f64,
    pub coupling: f64,
    pub cutoff: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            dim: 2,
            mass: 1.0,
            box_side: 8.0,
            coupling: 1.0,
            cutoff: 8.0,
            eta: 1.0,
            kappa: None,
        }
    }
}

impl ModelParams {
    pub fn new(dim: usize, mass: f64, box_side: f64, cutoff: f64) -> Result<Self> {
        let p = ModelParams {
            dim,
            mass,
            box_side,
            cutoff,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(invalid("dim", format!("need d >= 2, got {}", self.dim)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass", format!("need m > 0, got {}", self.mass)));
        }
        if !(self.box_side > 0.0 && self.box_side.is_finite()) {
            return Err(invalid("box_side", format!("need L > 0, got {}", self.box_side)));
        }
        // log(cutoff) >= 1, with one ulp of slack so that cutoff = e is admissible.
        if !(self.cutoff.is_finite() && self.cutoff.ln() >= 1.0 - 4.0 * f64::EPSILON) {
            return Err(invalid(
                "cutoff",
                format!("need log(cutoff) >= 1, got cutoff = {}", self.cutoff),
            ));
        }
        if !self.coupling.is_finite() || !self.eta.is_finite() {
            return Err(invalid("coupling/eta", "must be finite"));
        }
        if let Some(k) = self.kappa {
            if !k.is_finite() {
                return Err(invalid("kappa", "must be finite"));
            }
        }
        Ok(())
    }

    /// `|B| = L^d`.
    pub fn volume(&self) -> f64 {
        self.box_side.powi(self.dim as i32)
    }
}

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            max_refinements: 400,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_refinements: usize) -> Result<Self> {
        let s = QuadratureSpec {
            rel_tol,
            abs_tol,
            max_refinements,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(invalid("quadrature", "tolerances must be positive"));
        }
        if self.max_refinements < 1 {
            return Err(invalid("quadrature", "max_refinements must be >= 1"));
        }
        Ok(())
    }

    /// Tighter spec for integrals nested inside an outer integrand.
    pub(crate) fn nested(&self) -> Self {
        QuadratureSpec {
            rel_tol: (self.rel_tol * 0.1).max(1e-14),
            abs_tol: (self.abs_tol * 0.1).max(1e-300),
            max_refinements: self.max_refinements,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(1, 1.0, 4.0, 10.0).is_err());
        assert!(ModelParams::new(2, 0.0, 4.0, 10.0).is_err());
        assert!(ModelParams::new(2, 1.0, -4.0, 10.0).is_err());
        assert!(ModelParams::new(2, 1.0, 4.0, 2.0).is_err());
        assert!(ModelParams::new(2, 1.0, 4.0, std::f64::consts::E).is_ok());
    }

    #[test]
    fn volume_is_power_of_side() {
        let p = ModelParams::new(3, 1.0, 2.0, 10.0).unwrap();
        assert_eq!(p.volume(), 8.0);
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(0.0, 1e-12, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-12, 0).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-12, 1).is_ok());
    }
}
