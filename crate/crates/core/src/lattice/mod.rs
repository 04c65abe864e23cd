//! Periodic lattice discretization of the box `[-L/2, L/2]^d` and exact
//! spectral sampling of the regularized Gaussian field on it.
//!
//! Measure convention: sums over sites carry the cell volume `a^d`, and the
//! lattice delta function carries `1/a^d`, so every lattice formula is a
//! Riemann sum of its continuum counterpart.

mod fft;
mod field;
mod io;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::ModelParams;

pub(crate) use fft::CubeFft;
pub use field::{
    covariance_convolve, interaction_integral, pairing, source_inner, FieldSample, Mode,
    SourceField, SourceSpec,
};
pub use io::{read_lattice_values, write_lattice_values};

/// `d`-dimensional periodic lattice with `n` sites per side and side length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusLattice {
    dim: usize,
    n: usize,
    side: f64,
}

impl TorusLattice {
    pub fn new(dim: usize, n: usize, side: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "lattice dimension must be >= 1"));
        }
        if n < 4 || n % 2 != 0 {
            return Err(invalid("n", format!("sites per side must be even and >= 4, got {n}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("side", "box side must be positive"));
        }
        Ok(TorusLattice { dim, n, side })
    }

    /// Smallest even `n >= 4` whose spacing resolves `cutoff` (`cutoff <= π/(2a)`).
    pub fn resolving(dim: usize, side: f64, cutoff: f64) -> Result<Self> {
        let raw = (2.0 * cutoff * side / PI).ceil().max(4.0) as usize;
        let mut n = raw + raw % 2;
        loop {
            let lat = Self::new(dim, n, side)?;
            if lat.check_cutoff(cutoff).is_ok() {
                return Ok(lat);
            }
            n += 2;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites_per_side(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn num_sites(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Largest cutoff this lattice resolves, `π/(2a)`.
    pub fn max_cutoff(&self) -> f64 {
        PI / (2.0 * self.spacing())
    }

    pub fn check_cutoff(&self, cutoff: f64) -> Result<()> {
        let max = self.max_cutoff();
        if cutoff <= max * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::UnresolvedCutoff {
                cutoff,
                spacing: self.spacing(),
                max_cutoff: max,
            })
        }
    }

    /// Row-major multi-index of a site.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn site_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.n + (i % self.n))
    }

    /// Position `-L/2 + i a` of a site.
    pub fn site_position(&self, idx: usize) -> Vec<f64> {
        let a = self.spacing();
        self.multi_index(idx)
            .into_iter()
            .map(|i| -0.5 * self.side + i as f64 * a)
            .collect()
    }

    /// Nearest site to a point of the box (periodically wrapped).
    pub fn nearest_site(&self, x: &[f64]) -> usize {
        let a = self.spacing();
        let multi: Vec<usize> = x
            .iter()
            .map(|&c| {
                let i = ((c + 0.5 * self.side) / a).round() as i64;
                i.rem_euclid(self.n as i64) as usize
            })
            .collect();
        self.site_index(&multi)
    }

    /// Centered integer wave number of FFT index `i`, in `(-n/2, n/2]`.
    pub fn wave_number(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Integer wave vector of FFT-ordered momentum index `idx`.
    pub fn wave_vector(&self, idx: usize) -> Vec<i64> {
        self.multi_index(idx)
            .into_iter()
            .map(|i| self.wave_number(i))
            .collect()
    }

    /// `|p|²` with `p = 2πk/L`.
    pub fn momentum_sq(&self, idx: usize) -> f64 {
        let unit = 2.0 * PI / self.side;
        self.wave_vector(idx)
            .into_iter()
            .map(|k| (unit * k as f64).powi(2))
            .sum()
    }

    /// Site reached from `idx` by an integer lattice shift (periodic).
    pub fn translate(&self, idx: usize, shift: &[i64]) -> usize {
        let multi: Vec<usize> = self
            .multi_index(idx)
            .into_iter()
            .zip(shift)
            .map(|(i, s)| (i as i64 + s).rem_euclid(self.n as i64) as usize)
            .collect();
        self.site_index(&multi)
    }

    /// Index of the lag `x_j - x_i` (periodic), i.e. the site `j - i`.
    pub fn lag_index(&self, i: usize, j: usize) -> usize {
        let a = self.multi_index(i);
        let b = self.multi_index(j);
        let multi: Vec<usize> = a
            .iter()
            .zip(&b)
            .map(|(&ai, &bi)| (bi + self.n - ai) % self.n)
            .collect();
        self.site_index(&multi)
    }

    /// Minimal-image displacement vector of a lag index.
    pub fn lag_vector(&self, lag: usize) -> Vec<f64> {
        let a = self.spacing();
        self.multi_index(lag)
            .into_iter()
            .map(|i| self.wave_number(i) as f64 * a)
            .collect()
    }

    /// Minimal-image distance of a lag index from the origin.
    pub fn lag_norm(&self, lag: usize) -> f64 {
        self.lag_vector(lag).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Minimal-image distance between two sites.
    pub fn torus_distance(&self, i: usize, j: usize) -> f64 {
        self.lag_norm(self.lag_index(i, j))
    }
}

/// Momentum-space weights `Z e^{-(p²+m²)/Λ²}/(p²+m²)` on the lattice grid,
/// stored in FFT order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    lattice: TorusLattice,
    z: f64,
    weights: Vec<f64>,
}

impl SpectralDensity {
    /// Weights with an explicit field renormalization factor `z`.
    pub fn new(lattice: TorusLattice, params: &ModelParams, z: f64) -> Result<Self> {
        params.validate()?;
        if lattice.dim() != params.dim {
            return Err(Error::LatticeMismatch(format!(
                "lattice dimension {} vs model dimension {}",
                lattice.dim(),
                params.dim
            )));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(invalid("z", format!("renormalization must be positive, got {z}")));
        }
        lattice.check_cutoff(params.cutoff)?;
        let m2 = params.mass * params.mass;
        let inv_cut2 = 1.0 / (params.cutoff * params.cutoff);
        let weights = (0..lattice.num_sites())
            .map(|idx| {
                let e = lattice.momentum_sq(idx) + m2;
                z * (-e * inv_cut2).exp() / e
            })
            .collect();
        Ok(SpectralDensity {
            lattice,
            z,
            weights,
        })
    }

    /// Unrenormalized density (`Z = 1`).
    pub fn bare(lattice: TorusLattice, params: &ModelParams) -> Result<Self> {
        Self::new(lattice, params, 1.0)
    }

    /// Density renormalized by `Z = C_lat(0)^η`, with the lattice `C(0)`.
    pub fn renormalized(lattice: TorusLattice, params: &ModelParams) -> Result<Self> {
        let bare = Self::bare(lattice, params)?;
        let z = bare.c0().powf(params.eta);
        Self::new(lattice, params, z)
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Covariance at zero lag, `(1/L^d) Σ_k w_k`.
    pub fn c0(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.lattice.volume()
    }

    /// Position-space covariance kernel indexed by lag.
    pub fn kernel(&self) -> Vec<f64> {
        let fft = CubeFft::new(self.lattice.dim(), self.lattice.sites_per_side());
        let mut data: Vec<Complex64> = self.weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        fft.inverse(&mut data);
        // inverse includes 1/N^d; kernel is (1/L^d) Σ w e^{ipx} = (N^d/L^d) * inverse.
        let scale = 1.0 / self.lattice.cell_volume();
        data.into_iter().map(|c| c.re * scale).collect()
    }
}

/// Splittable seed derivation: the seed of stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circulant-embedding sampler: `φ = F^{-1}(√λ · F ξ)` with white noise `ξ`
/// and circulant eigenvalues `λ_k = w_k / a^d`. A complex noise vector yields
/// two independent real fields per transform pair.
#[derive(Clone)]
pub struct FieldSampler {
    spec: SpectralDensity,
    root_eigen: Vec<f64>,
    fft: CubeFft,
}

impl FieldSampler {
    pub fn new(spec: &SpectralDensity) -> Self {
        let lat = spec.lattice;
        let inv_cell = 1.0 / lat.cell_volume();
        FieldSampler {
            root_eigen: spec.weights.iter().map(|w| (w * inv_cell).sqrt()).collect(),
            fft: CubeFft::new(lat.dim(), lat.sites_per_side()),
            spec: spec.clone(),
        }
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.spec.lattice
    }

    pub fn spectral_density(&self) -> &SpectralDensity {
        &self.spec
    }

    /// Two independent samples from one seed, written into the buffers.
    pub fn sample_pair_into(&self, seed: u64, first: &mut [f64], second: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data: Vec<Complex64> = (0..self.root_eigen.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        self.fft.forward(&mut data);
        for (c, r) in data.iter_mut().zip(&self.root_eigen) {
            *c *= *r;
        }
        self.fft.inverse(&mut data);
        for ((c, a), b) in data.iter().zip(first.iter_mut()).zip(second.iter_mut()) {
            *a = c.re;
            *b = c.im;
        }
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let n = self.root_eigen.len();
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n];
        self.sample_pair_into(seed, &mut first, &mut second);
        FieldSample::new(self.spec.lattice, first, Some(seed))
    }
}

/// One field configuration distributed according to `spec`.
pub fn sample_field(lat: &TorusLattice, spec: &SpectralDensity, seed: u64) -> Result<FieldSample> {
    if lat != spec.lattice() {
        return Err(Error::LatticeMismatch(
            "spectral density was built on a different lattice".into(),
        ));
    }
    Ok(FieldSampler::new(spec).sample(seed))
}
