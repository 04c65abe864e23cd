//! Monte Carlo estimators and deterministic sweeps at finite cutoff.

mod gap;
pub mod mc;
mod probes;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{lattice_point_expectation, one_point_ratio, ScaleParams};
use crate::interactions::BoundedInteraction;
use crate::lattice::{covariance_convolve, interaction_integral, FieldSample, FieldSampler, SourceField, SpectralDensity, TorusLattice};
use crate::params::{ModelParams, QuadratureSpec};

pub use gap::{factorization_gap, region_delta, GapMode, GapReport, GapRow};
pub use mc::{collect_observables, for_each_sample, jackknife, log_mean_exp, mean_estimate, Estimate, MCConfig, SampleTable};
pub use probes::{
    classical_limit_probe, j_dependence_probe, ClassicalProbeSpec, ClassicalRow, ProbeReport, ProbeRow,
};
pub use sweep::{convergence_sweep, SweepGrid, SweepRegime, SweepReport, SweepRow, SweepSpec};

fn check_lattice(lat: &TorusLattice, params: &ModelParams) -> Result<()> {
    params.validate()?;
    if lat.dim() != params.dim || (lat.side() - params.box_side).abs() > 1e-12 * params.box_side {
        return Err(Error::LatticeMismatch(format!(
            "lattice (d={}, L={}) does not match model (d={}, L={})",
            lat.dim(),
            lat.side(),
            params.dim,
            params.box_side
        )));
    }
    Ok(())
}

/// Everything needed to sample `ψ = φ + C̃J` on one lattice and to evaluate the
/// matching Gaussian quadratures.
#[derive(Clone)]
pub struct LatticeSetup {
    pub params: ModelParams,
    /// Renormalized density, `Z = C_lat(0)^η`.
    pub density: SpectralDensity,
    pub bare: SpectralDensity,
    /// Renormalized kernel indexed by lag.
    pub kernel: Vec<f64>,
    pub source: SourceField,
    /// `C̃ J`.
    pub ctilde_j: SourceField,
    /// `C J` (no field renormalization).
    pub c_j: SourceField,
    pub sampler: FieldSampler,
}

impl LatticeSetup {
    pub fn new(params: &ModelParams, source: &SourceField) -> Result<Self> {
        let lat = *source.lattice();
        check_lattice(&lat, params)?;
        let bare = SpectralDensity::bare(lat, params)?;
        let density = SpectralDensity::new(lat, params, bare.c0().powf(params.eta))?;
        Ok(LatticeSetup {
            params: params.clone(),
            kernel: density.kernel(),
            ctilde_j: covariance_convolve(source, &density)?,
            c_j: covariance_convolve(source, &bare)?,
            sampler: FieldSampler::new(&density),
            source: source.clone(),
            density,
            bare,
        })
    }

    pub fn lattice(&self) -> &TorusLattice {
        self.density.lattice()
    }

    /// `(s_plus, s_minus)` from the lattice `C(0)` and `Z`.
    pub fn scales(&self) -> Result<ScaleParams> {
        let c0 = self.bare.c0();
        let z = self.density.z();
        ScaleParams::new((z * c0).sqrt(), (z / c0).sqrt())
    }

    /// `E[Π V(ψ(x_i))]` by product quadrature.
    pub fn quadrature_expectation(&self, v: &BoundedInteraction, sites: &[usize], spec: &QuadratureSpec) -> Result<f64> {
        let cj = if self.source.is_declared_zero() {
            None
        } else {
            Some(&self.ctilde_j)
        };
        lattice_point_expectation(v, sites, cj, &self.density, &self.kernel, spec)
    }

    fn shifted(&self, phi: &[f64], out: &mut [f64]) {
        for ((o, p), s) in out.iter_mut().zip(phi).zip(self.ctilde_j.values()) {
            *o = p + s;
        }
    }
}

/// Monte Carlo of `Σ^c_Λ(J)` with its one-point leading term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma_c: f64,
    pub stderr: f64,
    /// `-λ ·` one-point ratio.
    pub leading_term: f64,
    /// `sigma_c - leading_term`.
    pub rest_term: f64,
    pub n_samples: usize,
}

/// `Σ^c_Λ(J) = log ⟨e^{-λ𝒱(φ + C̃J)}⟩` on the lattice carrying `j`.
pub fn mc_sigma_connected(
    v: &BoundedInteraction,
    j: &SourceField,
    params: &ModelParams,
    cfg: &MCConfig,
) -> Result<SigmaEstimate> {
    let setup = LatticeSetup::new(params, j)?;
    mc_sigma_with(&setup, v, cfg)
}

pub fn mc_sigma_with(setup: &LatticeSetup, v: &BoundedInteraction, cfg: &MCConfig) -> Result<SigmaEstimate> {
    let lambda = setup.params.coupling;
    let lat = *setup.lattice();
    let bound = v.sup_norm() * lat.volume() * (1.0 + 1e-12);
    let n = lat.num_sites();
    let table = collect_observables(&setup.sampler, cfg, 1, |phi, out| {
        let mut psi = vec![0.0; n];
        setup.shifted(phi, &mut psi);
        let integral = interaction_integral(&FieldSample::new(lat, psi, None), v);
        assert!(integral.abs() <= bound, "interaction integral exceeds its a priori bound");
        out[0] = -lambda * integral;
    })?;
    let est = log_mean_exp(&table, 0);
    if est.value.abs() > lambda.abs() * bound + 1e-9 {
        return Err(Error::Internal(format!("sigma estimate {} violates the a priori bound", est.value)));
    }
    let ratio = one_point_ratio(v, &setup.c_j, setup.scales()?, &lat, &QuadratureSpec::default())?;
    let leading = -lambda * ratio;
    Ok(SigmaEstimate {
        sigma_c: est.value,
        stderr: est.stderr,
        leading_term: leading,
        rest_term: est.value - leading,
        n_samples: cfg.n_samples,
    })
}

/// Monte Carlo of `E[Π_i V(ψ(x_i))]` for several site configurations from
/// one common set of samples.
pub fn mc_point_expectations(
    setup: &LatticeSetup,
    v: &BoundedInteraction,
    configs: &[Vec<usize>],
    cfg: &MCConfig,
) -> Result<Vec<Estimate>> {
    let k = configs.len();
    let table = collect_observables(&setup.sampler, cfg, k, |phi, out| {
        for (o, sites) in out.iter_mut().zip(configs) {
            *o = sites
                .iter()
                .map(|&s| v.eval(phi[s] + setup.ctilde_j.values()[s]))
                .product();
        }
    })?;
    Ok((0..k).map(|i| mean_estimate(&table, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_gives_zero() {
        let params = ModelParams::new(2, 1.0, 4.0, 3.0).unwrap().with_coupling(0.0);
        let lat = TorusLattice::new(2, 8, 4.0).unwrap();
        let v = BoundedInteraction::catalog("sgn", None).unwrap();
        let cfg = MCConfig::new(3, 200, 20).unwrap();
        let est = mc_sigma_connected(&v, &SourceField::zero(lat), &params, &cfg).unwrap();
        assert_eq!(est.sigma_c, 0.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.leading_term, 0.0);
    }

    #[test]
    fn sampling_is_independent_of_worker_count() {
        let params = ModelParams::new(2, 1.0, 4.0, 3.0).unwrap();
        let lat = TorusLattice::new(2, 8, 4.0).unwrap();
        let v = BoundedInteraction::catalog("arctan", None).unwrap();
        let cfg = MCConfig::new(11, 400, 40).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| mc_sigma_connected(&v, &SourceField::zero(lat), &params, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
