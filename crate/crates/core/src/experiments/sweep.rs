//! Convergence of the finite-cutoff one-point functional toward its limit.

use serde::{Deserialize, Serialize};

use super::mc::MCConfig;
use super::{mc_sigma_with, LatticeSetup};
use crate::error::{invalid, Result};
use crate::gaussian::{one_point_ratio, ScaleParams};
use crate::interactions::BoundedInteraction;
use crate::lattice::{covariance_convolve, SourceSpec, SpectralDensity, TorusLattice};
use crate::limits::{
    limit_functional, limit_functional_scaled, uv_limit_source_field, EtaRegime, KappaRegime, LimitResult,
};
use crate::params::{ModelParams, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "exponent", rename_all = "snake_case")]
pub enum SweepRegime {
    /// `Z = C(0)^η`.
    Eta(f64),
    /// `Z = C(0)` and `V(C(0)^κ w)`.
    Kappa(f64),
}

impl SweepRegime {
    /// `(s_plus, s_minus)` in terms of `t = C(0)^{1/2}`.
    pub fn scales(&self, t: f64) -> Result<ScaleParams> {
        match *self {
            SweepRegime::Eta(eta) => ScaleParams::from_t(t, eta),
            SweepRegime::Kappa(kappa) => ScaleParams::new(t.powf(2.0 * kappa + 2.0), 1.0),
        }
    }

    pub fn label(&self) -> Result<&'static str> {
        Ok(match *self {
            SweepRegime::Eta(eta) => EtaRegime::classify(eta)?.label(),
            SweepRegime::Kappa(kappa) => KappaRegime::classify(kappa)?.label(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SweepGrid {
    /// Cutoffs `Λ`, all evaluated on one lattice that resolves the largest.
    Cutoff(Vec<f64>),
    /// Values of `t = C(0)^{1/2}` used directly, without a lattice cutoff.
    Scale(Vec<f64>),
}

impl SweepGrid {
    pub fn values(&self) -> &[f64] {
        match self {
            SweepGrid::Cutoff(v) | SweepGrid::Scale(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub regime: SweepRegime,
    pub v: BoundedInteraction,
    pub j: SourceSpec,
    pub params: ModelParams,
    pub grid: SweepGrid,
    /// Lattice sites per side; `None` picks the smallest resolving lattice.
    pub sites_per_side: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_value: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    /// `-λ ·` one-point ratio at finite cutoff.
    pub finite: f64,
    pub target: f64,
    pub gap: f64,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub regime: String,
    pub target: LimitResult,
    pub sites_per_side: usize,
    pub rows: Vec<SweepRow>,
}

fn target_for(spec: &SweepSpec, a_uv: &crate::lattice::SourceField) -> Result<LimitResult> {
    match spec.regime {
        SweepRegime::Eta(eta) => limit_functional(EtaRegime::classify(eta)?, &spec.v, a_uv, &spec.params),
        SweepRegime::Kappa(kappa) => {
            limit_functional_scaled(KappaRegime::classify(kappa)?, &spec.v, a_uv, &spec.params)
        }
    }
}

/// Finite-cutoff values against the closed-form limit along the grid. With
/// `cfg` set and an `η` regime in cutoff mode, each row also carries a Monte
/// Carlo estimate of the full `Σ^c_Λ(J)`.
pub fn convergence_sweep(spec: &SweepSpec, cfg: Option<&MCConfig>) -> Result<SweepReport> {
    let grid = spec.grid.values();
    if grid.is_empty() {
        return Err(invalid("grid", "sweep grid is empty"));
    }
    if grid.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(invalid("grid", "grid values must be positive and finite"));
    }
    let params = &spec.params;
    params.validate()?;
    let resolve_at = match &spec.grid {
        SweepGrid::Cutoff(v) => v.iter().copied().fold(params.cutoff, f64::max),
        SweepGrid::Scale(_) => params.cutoff,
    };
    let lat = match spec.sites_per_side {
        Some(n) => TorusLattice::new(params.dim, n, params.box_side)?,
        None => TorusLattice::resolving(params.dim, params.box_side, resolve_at)?,
    };
    let source = spec.j.build(&lat)?;
    let a_uv = uv_limit_source_field(&source, params)?;
    let target = target_for(spec, &a_uv)?;
    let qspec = QuadratureSpec::default();
    let lambda = params.coupling;

    let mut rows = Vec::with_capacity(grid.len());
    for &g in grid {
        let row = match &spec.grid {
            SweepGrid::Scale(_) => {
                let scales = spec.regime.scales(g)?;
                let finite = -lambda * one_point_ratio(&spec.v, &a_uv, scales, &lat, &qspec)?;
                SweepRow {
                    grid_value: g,
                    s_plus: scales.s_plus,
                    s_minus: scales.s_minus,
                    finite,
                    target: target.value,
                    gap: (finite - target.value).abs(),
                    mc_estimate: None,
                    mc_stderr: None,
                }
            }
            SweepGrid::Cutoff(_) => {
                let p = params.with_cutoff(g);
                let bare = SpectralDensity::bare(lat, &p)?;
                let a = covariance_convolve(&source, &bare)?;
                let scales = spec.regime.scales(bare.c0().sqrt())?;
                let finite = -lambda * one_point_ratio(&spec.v, &a, scales, &lat, &qspec)?;
                let (mc_estimate, mc_stderr) = match (cfg, spec.regime) {
                    (Some(cfg), SweepRegime::Eta(eta)) => {
                        let setup = LatticeSetup::new(&p.with_eta(eta), &source)?;
                        let est = mc_sigma_with(&setup, &spec.v, cfg)?;
                        (Some(est.sigma_c), Some(est.stderr))
                    }
                    _ => (None, None),
                };
                SweepRow {
                    grid_value: g,
                    s_plus: scales.s_plus,
                    s_minus: scales.s_minus,
                    finite,
                    target: target.value,
                    gap: (finite - target.value).abs(),
                    mc_estimate,
                    mc_stderr,
                }
            }
        };
        rows.push(row);
    }
    Ok(SweepReport {
        regime: spec.regime.label()?.to_string(),
        target,
        sites_per_side: lat.sites_per_side(),
        rows,
    })
}
