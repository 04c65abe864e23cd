//! The J-dependence envelope for `η < 1` and the classical-limit probe.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mc::{collect_observables, log_mean_exp, MCConfig};
use super::check_lattice;
use crate::error::{invalid, Result};
use crate::gaussian::{one_point_ratio, ScaleParams};
use crate::interactions::BoundedInteraction;
use crate::lattice::{
    covariance_convolve, interaction_integral, source_inner, FieldSample, FieldSampler, SourceField, SourceSpec,
    SpectralDensity, TorusLattice,
};
use crate::limits::{limit_functional, uv_limit_density, EtaRegime};
use crate::params::{ModelParams, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub s_minus: f64,
    pub s_plus: f64,
    /// `|ratio(J) - ratio(0)|`.
    pub difference: f64,
    /// `a_priori_constant · s_minus`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub eta: f64,
    pub rows: Vec<ProbeRow>,
    /// `‖V‖_∞ √(2/π) ∫_B |a(x)| dx`.
    pub a_priori_constant: f64,
    /// `max difference / s_minus` over the grid.
    pub fitted_constant: f64,
    /// Every difference lies under the envelope.
    pub bounded: bool,
}

/// `|ratio(a) - ratio(0)|` along a grid of `s_minus`, where `s_plus` follows
/// from `t = s_minus^{1/(η-1)}`.
pub fn j_dependence_probe(
    v: &BoundedInteraction,
    a_field: &SourceField,
    eta: f64,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<ProbeReport> {
    if !(eta < 1.0) {
        return Err(invalid("eta", format!("the probe needs eta < 1, got {eta}")));
    }
    let lat = *a_field.lattice();
    let zero = SourceField::zero(lat);
    let abs_a: f64 = a_field.values().iter().map(|a| a.abs()).sum::<f64>() * lat.cell_volume();
    let a_priori = v.sup_norm() * (2.0 / PI).sqrt() * abs_a;
    let mut rows = Vec::with_capacity(grid.len());
    for &s_minus in grid {
        if !(s_minus >= 0.0 && s_minus.is_finite()) {
            return Err(invalid("grid", "s_minus values must be finite and >= 0"));
        }
        let (scales, s_plus) = if s_minus == 0.0 {
            (None, f64::INFINITY)
        } else {
            let t = s_minus.powf(1.0 / (eta - 1.0));
            let s_plus = t.powf(eta + 1.0);
            (Some(ScaleParams::new(s_plus, s_minus)?), s_plus)
        };
        let difference = match scales {
            None => 0.0,
            Some(sc) => (one_point_ratio(v, a_field, sc, &lat, spec)? - one_point_ratio(v, &zero, sc, &lat, spec)?).abs(),
        };
        rows.push(ProbeRow {
            s_minus,
            s_plus,
            difference,
            envelope: a_priori * s_minus,
        });
    }
    let fitted = rows
        .iter()
        .filter(|r| r.s_minus > 0.0)
        .map(|r| r.difference / r.s_minus)
        .fold(0.0, f64::max);
    let bounded = rows
        .iter()
        .all(|r| r.difference <= r.envelope * (1.0 + 1e-9) + 1e-12);
    Ok(ProbeReport {
        eta,
        rows,
        a_priori_constant: a_priori,
        fitted_constant: fitted,
        bounded,
    })
}

/// Joint UV and classical scaling `ħ_Λ = C_Λ(0)^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalProbeSpec {
    pub j: SourceSpec,
    pub grid: Vec<f64>,
}

impl ClassicalProbeSpec {
    pub fn hbar(c0: f64) -> f64 {
        1.0 / c0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRow {
    pub cutoff: f64,
    pub sites_per_side: usize,
    pub hbar: f64,
    /// `½⟨J, C_Λ J⟩`.
    pub free_part: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Limit functional at `η = 1` plus `½⟨J, C J⟩`.
    pub target: f64,
    pub gap: f64,
}

/// `ħ log ⟨e^{φ(J)/ħ} e^{-λ𝒱(φ)/ħ}⟩` under covariance `ħ C_Λ`, estimated as
/// `½⟨J, C_Λ J⟩ + ħ log ⟨e^{-λ𝒱(φ + C_Λ J)/ħ}⟩`. Reports the gap to the
/// conjectured limit without judging it.
pub fn classical_limit_probe(
    spec: &ClassicalProbeSpec,
    v: &BoundedInteraction,
    params: &ModelParams,
    cfg: &MCConfig,
) -> Result<Vec<ClassicalRow>> {
    if spec.grid.is_empty() {
        return Err(invalid("grid", "cutoff grid is empty"));
    }
    let mut rows = Vec::with_capacity(spec.grid.len());
    for &cutoff in &spec.grid {
        let p = params.with_cutoff(cutoff);
        p.validate()?;
        let lat = TorusLattice::resolving(p.dim, p.box_side, cutoff)?;
        check_lattice(&lat, &p)?;
        let source = spec.j.build(&lat)?;
        let bare = SpectralDensity::bare(lat, &p)?;
        let c0 = bare.c0();
        let hbar = ClassicalProbeSpec::hbar(c0);
        let scaled = SpectralDensity::new(lat, &p, hbar)?;
        let c_j = covariance_convolve(&source, &bare)?;
        let free_part = 0.5 * source_inner(&source, &c_j)?;
        let lambda = p.coupling;
        let sampler = FieldSampler::new(&scaled);
        let n = lat.num_sites();
        let table = collect_observables(&sampler, cfg, 1, |phi, out| {
            let psi: Vec<f64> = phi.iter().zip(c_j.values()).map(|(a, b)| a + b).collect();
            out[0] = -lambda / hbar * interaction_integral(&FieldSample::new(lat, psi, None), v);
            debug_assert_eq!(phi.len(), n);
        })?;
        let lme = log_mean_exp(&table, 0);
        let estimate = free_part + hbar * lme.value;
        let stderr = hbar * lme.stderr;

        let uv = uv_limit_density(&lat, &p)?;
        let a_uv = covariance_convolve(&source, &uv)?;
        let limit = limit_functional(EtaRegime::D, v, &a_uv, &p)?;
        let target = limit.value + 0.5 * source_inner(&source, &a_uv)?;
        rows.push(ClassicalRow {
            cutoff,
            sites_per_side: lat.sites_per_side(),
            hbar,
            free_part,
            estimate,
            stderr,
            target,
            gap: (estimate - target).abs(),
        });
    }
    Ok(rows)
}
