use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CubeFft, SpectralDensity, TorusLattice};
use crate::error::{invalid, Error, Result};
use crate::interactions::BoundedInteraction;

/// A real field configuration on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    lattice: TorusLattice,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl FieldSample {
    pub fn new(lattice: TorusLattice, values: Vec<f64>, seed: Option<u64>) -> Self {
        assert_eq!(values.len(), lattice.num_sites(), "field size does not match lattice");
        FieldSample {
            lattice,
            values,
            seed,
        }
    }

    pub fn constant(lattice: TorusLattice, value: f64) -> Self {
        Self::new(lattice, vec![value; lattice.num_sites()], None)
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `φ + shift`, the Gaussian translate used for the `e^{φ(J)}` tilt.
    pub fn shifted(&self, shift: &SourceField) -> Result<FieldSample> {
        same_lattice(&self.lattice, &shift.lattice)?;
        let values = self
            .values
            .iter()
            .zip(&shift.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(FieldSample::new(self.lattice, values, self.seed))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        super::write_lattice_values(&mut f, &self.lattice, &self.values)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let (lattice, values) = super::read_lattice_values(&mut f)?;
        Ok(FieldSample::new(lattice, values, None))
    }
}

/// A real source function `J` on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    lattice: TorusLattice,
    values: Vec<f64>,
    band_limited: bool,
    declared_zero: bool,
}

impl SourceField {
    /// Arbitrary site values; treated as not band-limited.
    pub fn from_values(lattice: TorusLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.num_sites() {
            return Err(invalid("values", "source size does not match lattice"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "source values must be finite"));
        }
        Ok(SourceField {
            lattice,
            values,
            band_limited: false,
            declared_zero: false,
        })
    }

    pub fn zero(lattice: TorusLattice) -> Self {
        SourceField {
            lattice,
            values: vec![0.0; lattice.num_sites()],
            band_limited: true,
            declared_zero: true,
        }
    }

    pub fn constant(lattice: TorusLattice, value: f64) -> Self {
        SourceField {
            lattice,
            values: vec![value; lattice.num_sites()],
            band_limited: true,
            declared_zero: value == 0.0,
        }
    }

    /// Lattice delta function at `site`, carrying the weight `1/a^d`.
    pub fn delta(lattice: TorusLattice, site: usize) -> Self {
        let mut values = vec![0.0; lattice.num_sites()];
        values[site] = 1.0 / lattice.cell_volume();
        SourceField {
            lattice,
            values,
            band_limited: false,
            declared_zero: false,
        }
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether the momentum support is a declared proper subset of the grid.
    pub fn is_band_limited(&self) -> bool {
        self.band_limited
    }

    /// Whether the source was declared to be `J = 0`.
    pub fn is_declared_zero(&self) -> bool {
        self.declared_zero
    }

    pub fn scaled(&self, factor: f64) -> SourceField {
        SourceField {
            lattice: self.lattice,
            values: self.values.iter().map(|v| v * factor).collect(),
            band_limited: self.band_limited,
            declared_zero: self.declared_zero || factor == 0.0,
        }
    }

    pub fn add(&self, other: &SourceField) -> Result<SourceField> {
        same_lattice(&self.lattice, &other.lattice)?;
        Ok(SourceField {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            band_limited: self.band_limited && other.band_limited,
            declared_zero: self.declared_zero && other.declared_zero,
        })
    }

    /// Periodic translation by an integer site shift.
    pub fn translated(&self, shift: &[i64]) -> SourceField {
        let mut values = vec![0.0; self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            values[self.lattice.translate(idx, shift)] = *v;
        }
        SourceField {
            values,
            ..self.clone()
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        super::write_lattice_values(&mut f, &self.lattice, &self.values)
    }

    /// Loaded sources carry no support declaration and count as not band-limited.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let (lattice, values) = super::read_lattice_values(&mut f)?;
        Self::from_values(lattice, values)
    }
}

/// One real Fourier mode `A cos(p_k · x + phase)` with `p_k = 2πk/L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Declarative source: `J = 0` or a finite sum of real Fourier modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    #[default]
    Zero,
    Modes { modes: Vec<Mode> },
}

impl SourceSpec {
    pub fn single_mode(k: Vec<i64>, amplitude: f64) -> Self {
        SourceSpec::Modes {
            modes: vec![Mode {
                k,
                amplitude,
                phase: 0.0,
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SourceSpec::Zero => true,
            SourceSpec::Modes { modes } => modes.iter().all(|m| m.amplitude == 0.0),
        }
    }

    pub fn build(&self, lattice: &TorusLattice) -> Result<SourceField> {
        let modes = match self {
            SourceSpec::Zero => return Ok(SourceField::zero(*lattice)),
            SourceSpec::Modes { modes } => modes,
        };
        let half = (lattice.sites_per_side() / 2) as i64;
        for m in modes {
            if m.k.len() != lattice.dim() {
                return Err(invalid("mode", format!("wave vector {:?} has wrong dimension", m.k)));
            }
            if m.k.iter().any(|&k| k.abs() >= half) {
                return Err(invalid(
                    "mode",
                    format!("wave vector {:?} outside the band |k| < {half}", m.k),
                ));
            }
            if !(m.amplitude.is_finite() && m.phase.is_finite()) {
                return Err(invalid("mode", "amplitude and phase must be finite"));
            }
        }
        let unit = 2.0 * PI / lattice.side();
        let values = (0..lattice.num_sites())
            .map(|idx| {
                let x = lattice.site_position(idx);
                modes
                    .iter()
                    .map(|m| {
                        let arg: f64 = m.k.iter().zip(&x).map(|(&k, &xi)| unit * k as f64 * xi).sum();
                        m.amplitude * (arg + m.phase).cos()
                    })
                    .sum()
            })
            .collect();
        Ok(SourceField {
            lattice: *lattice,
            values,
            band_limited: true,
            declared_zero: self.is_zero(),
        })
    }
}

fn same_lattice(a: &TorusLattice, b: &TorusLattice) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LatticeMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// `φ(J) = a^d Σ_x φ(x) J(x)`.
pub fn pairing(phi: &FieldSample, j: &SourceField) -> Result<f64> {
    same_lattice(&phi.lattice, &j.lattice)?;
    let dot: f64 = phi.values.iter().zip(&j.values).map(|(a, b)| a * b).sum();
    Ok(phi.lattice.cell_volume() * dot)
}

/// `⟨f, g⟩ = a^d Σ_x f(x) g(x)` for two sources.
pub fn source_inner(f: &SourceField, g: &SourceField) -> Result<f64> {
    same_lattice(&f.lattice, &g.lattice)?;
    let dot: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(f.lattice.cell_volume() * dot)
}

/// `𝒱(φ) = a^d Σ_x V(φ(x))`.
pub fn interaction_integral(phi: &FieldSample, v: &BoundedInteraction) -> f64 {
    phi.lattice.cell_volume() * phi.values.iter().map(|&x| v.eval(x)).sum::<f64>()
}

/// `x ↦ (C J)(x) = a^d Σ_y C(x - y) J(y)`, computed as multiplication by the
/// spectral weights. Support flags of `j` carry over.
pub fn covariance_convolve(j: &SourceField, spec: &SpectralDensity) -> Result<SourceField> {
    same_lattice(&j.lattice, spec.lattice())?;
    let lat = j.lattice;
    let fft = CubeFft::new(lat.dim(), lat.sites_per_side());
    let mut data: Vec<Complex64> = j.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut data);
    for (c, w) in data.iter_mut().zip(spec.weights()) {
        *c *= *w;
    }
    fft.inverse(&mut data);
    Ok(SourceField {
        lattice: lat,
        values: data.into_iter().map(|c| c.re).collect(),
        band_limited: j.band_limited,
        declared_zero: j.declared_zero,
    })
}
