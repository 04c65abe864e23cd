//! Closed forms of the cutoff-removed generating functional, its scaled-interaction
//! variant, the connected Schwinger functions and the two-point verdict.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{convolution_coefficient, erf_derivative_coefficient, one_point_ratio, ScaleParams};
use crate::interactions::BoundedInteraction;
use crate::lattice::{covariance_convolve, SourceField, SpectralDensity, TorusLattice};
use crate::params::{ModelParams, QuadratureSpec};
use crate::propagator::{covariance_uv_limit, covariance_zero};

/// Regimes of the field-renormalization exponent `η` (`Z = C(0)^η`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EtaRegime {
    /// `η < -1`
    A,
    /// `η = -1`
    B,
    /// `-1 < η < 1`
    C,
    /// `η = 1`
    D,
    /// `η > 1`
    E,
}

impl EtaRegime {
    /// Exact classification; the boundaries `±1` are not widened.
    pub fn classify(eta: f64) -> Result<Self> {
        if eta.is_nan() {
            return Err(invalid("eta", "must not be NaN"));
        }
        Ok(if eta < -1.0 {
            EtaRegime::A
        } else if eta == -1.0 {
            EtaRegime::B
        } else if eta < 1.0 {
            EtaRegime::C
        } else if eta == 1.0 {
            EtaRegime::D
        } else {
            EtaRegime::E
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            EtaRegime::A => "A",
            EtaRegime::B => "B",
            EtaRegime::C => "C",
            EtaRegime::D => "D",
            EtaRegime::E => "E",
        }
    }
}

/// Regimes of the interaction-scaling exponent `κ` (`V(C(0)^κ w)` with `Z = C(0)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KappaRegime {
    /// `κ < -1`
    D1,
    /// `κ = -1`
    D2,
    /// `κ > -1`
    D3,
}

impl KappaRegime {
    pub fn classify(kappa: f64) -> Result<Self> {
        if kappa.is_nan() {
            return Err(invalid("kappa", "must not be NaN"));
        }
        Ok(if kappa < -1.0 {
            KappaRegime::D1
        } else if kappa == -1.0 {
            KappaRegime::D2
        } else {
            KappaRegime::D3
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            KappaRegime::D1 => "D1",
            KappaRegime::D2 => "D2",
            KappaRegime::D3 => "D3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Regime {
    Eta(EtaRegime),
    Kappa(KappaRegime),
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Eta(r) => r.label(),
            Regime::Kappa(r) => r.label(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitResult {
    pub value: f64,
    /// J-independent part.
    pub constant_part: f64,
    /// J-dependent part; zero where the limit does not depend on `J`.
    pub j_part: f64,
    pub regime: Regime,
}

impl LimitResult {
    fn new(constant_part: f64, j_part: f64, regime: Regime) -> Self {
        LimitResult {
            value: constant_part + j_part,
            constant_part,
            j_part,
            regime,
        }
    }
}

fn box_volume(field: &SourceField, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let lat = field.lattice();
    if lat.dim() != params.dim || (lat.side() - params.box_side).abs() > 1e-12 * params.box_side {
        return Err(Error::LatticeMismatch(format!(
            "source lattice (d={}, L={}) does not match model (d={}, L={})",
            lat.dim(),
            lat.side(),
            params.dim,
            params.box_side
        )));
    }
    Ok(lat.volume())
}

/// `∫_B dx (2π)^{-1/2} ∫ dw sgn(w) e^{-½(w - a(x))²} = ∫_B erf(a(x)/√2) dx`,
/// evaluated by quadrature.
fn sgn_smeared_integral(a_field: &SourceField) -> Result<f64> {
    let sgn = BoundedInteraction::catalog("sgn", None)?;
    one_point_ratio(
        &sgn,
        a_field,
        ScaleParams::new(1.0, 1.0)?,
        a_field.lattice(),
        &QuadratureSpec::default(),
    )
}

/// Cutoff-removed `Σ^c(J)` for field renormalization `Z = C(0)^η`.
/// `cj_field` holds `a(x) = ⟨δ_x, C J⟩`.
pub fn limit_functional(
    regime: EtaRegime,
    v: &BoundedInteraction,
    cj_field: &SourceField,
    params: &ModelParams,
) -> Result<LimitResult> {
    let volume = box_volume(cj_field, params)?;
    let lambda = params.coupling;
    let tag = Regime::Eta(regime);
    match regime {
        EtaRegime::A => {
            let mean0 = v.require_zero_limits()?.mean();
            Ok(LimitResult::new(-lambda * volume * mean0, 0.0, tag))
        }
        EtaRegime::B => {
            let gauss = crate::gaussian::gaussian_expectation_1d(v, 1.0, 0.0, &QuadratureSpec::default())?;
            Ok(LimitResult::new(-lambda * volume * gauss, 0.0, tag))
        }
        EtaRegime::C => {
            let meaninf = v.require_infinity_limits()?.mean();
            Ok(LimitResult::new(-lambda * volume * meaninf, 0.0, tag))
        }
        EtaRegime::D => {
            let inf = v.require_infinity_limits()?;
            let j_part = if cj_field.is_declared_zero() {
                0.0
            } else {
                -lambda * inf.jump() * sgn_smeared_integral(cj_field)?
            };
            Ok(LimitResult::new(-lambda * volume * inf.mean(), j_part, tag))
        }
        EtaRegime::E => {
            let inf = v.require_infinity_limits()?;
            if !cj_field.is_band_limited() {
                return Err(Error::SourceNotBandLimited);
            }
            let j_part = if cj_field.is_declared_zero() {
                0.0
            } else {
                let lat = cj_field.lattice();
                let signs: f64 = cj_field.values().iter().map(|&a| sign_or_zero(a)).sum();
                -lambda * inf.jump() * lat.cell_volume() * signs
            };
            Ok(LimitResult::new(-lambda * volume * inf.mean(), j_part, tag))
        }
    }
}

fn sign_or_zero(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Cutoff-removed `Σ^c(J)` for the scaled interaction `V(C(0)^κ w)` with `Z = C(0)`.
pub fn limit_functional_scaled(
    regime: KappaRegime,
    v: &BoundedInteraction,
    cj_field: &SourceField,
    params: &ModelParams,
) -> Result<LimitResult> {
    let volume = box_volume(cj_field, params)?;
    let lambda = params.coupling;
    let tag = Regime::Kappa(regime);
    match regime {
        KappaRegime::D1 => {
            let zero = v.require_zero_limits()?;
            let j_part = if cj_field.is_declared_zero() || zero.jump() == 0.0 {
                0.0
            } else {
                -lambda * zero.jump() * sgn_smeared_integral(cj_field)?
            };
            Ok(LimitResult::new(-lambda * volume * zero.mean(), j_part, tag))
        }
        KappaRegime::D2 => {
            let spec = QuadratureSpec::default();
            let unit = ScaleParams::new(1.0, 1.0)?;
            let lat = cj_field.lattice();
            let zero = SourceField::zero(*lat);
            let constant = -lambda * one_point_ratio(v, &zero, unit, lat, &spec)?;
            let j_part = if cj_field.is_declared_zero() {
                0.0
            } else {
                -lambda * one_point_ratio(v, cj_field, unit, lat, &spec)? - constant
            };
            Ok(LimitResult::new(constant, j_part, tag))
        }
        KappaRegime::D3 => {
            let mut r = limit_functional(EtaRegime::D, v, cj_field, params)?;
            r.regime = tag;
            Ok(r)
        }
    }
}

/// Lattice version of the cutoff-removed covariance: the spectral density at the
/// largest cutoff the lattice resolves, with `Z = 1`.
pub fn uv_limit_density(lattice: &TorusLattice, params: &ModelParams) -> Result<SpectralDensity> {
    let p = params.with_cutoff(lattice.max_cutoff());
    SpectralDensity::bare(*lattice, &p)
}

/// `a(x) = ⟨δ_x, C J⟩` with the cutoff-removed covariance on the lattice of `j`.
pub fn uv_limit_source_field(j: &SourceField, params: &ModelParams) -> Result<SourceField> {
    let density = uv_limit_density(j.lattice(), params)?;
    covariance_convolve(j, &density)
}

/// Which closed form supplies the vertex coefficient of the Schwinger functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `jumpinf · a_n` from the erf limit.
    ErfLimit,
    /// Gaussian average of `∂^n V` (scaled interaction at `κ = -1`).
    Convolution,
}

/// Vertex coefficient multiplying `-λ ∫_B Π (C f_i)`.
pub fn schwinger_coefficient(n: usize, v: &BoundedInteraction, family: Family) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "order must be >= 1"));
    }
    if n == 2 {
        return Err(Error::TwoPointUndefined);
    }
    match family {
        Family::ErfLimit => {
            if n % 2 == 0 {
                return Ok(0.0);
            }
            Ok(v.require_infinity_limits()?.jump() * erf_derivative_coefficient(n))
        }
        Family::Convolution => convolution_coefficient(v, n, &QuadratureSpec::default()),
    }
}

/// Smeared connected `n`-point function `S^c_n(f_1, ..., f_n)`, `n ≠ 2`.
pub fn schwinger_connected(
    n: usize,
    test_functions: &[SourceField],
    v: &BoundedInteraction,
    params: &ModelParams,
    family: Family,
) -> Result<f64> {
    let coef = schwinger_coefficient(n, v, family)?;
    if test_functions.len() != n {
        return Err(invalid(
            "test_functions",
            format!("expected {n} test functions, got {}", test_functions.len()),
        ));
    }
    let lat = *test_functions[0].lattice();
    box_volume(&test_functions[0], params)?;
    if test_functions.iter().any(|f| *f.lattice() != lat) {
        return Err(Error::LatticeMismatch("test functions must share one lattice".into()));
    }
    if coef == 0.0 {
        return Ok(0.0);
    }
    let density = uv_limit_density(&lat, params)?;
    let convolved: Vec<SourceField> = test_functions
        .iter()
        .map(|f| covariance_convolve(f, &density))
        .collect::<Result<_>>()?;
    let integral: f64 = (0..lat.num_sites())
        .map(|x| convolved.iter().map(|c| c.values()[x]).product::<f64>())
        .sum::<f64>()
        * lat.cell_volume();
    Ok(-params.coupling * coef * integral)
}

/// The cutoff-removed connected two-point function at `η = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeTwoPoint {
    pub params: ModelParams,
}

impl FreeTwoPoint {
    /// `S_2(x1, x2) = C(x1 - x2)`.
    pub fn at(&self, x1: &[f64], x2: &[f64], spec: &QuadratureSpec) -> Result<f64> {
        let diff: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
        covariance_uv_limit(&diff, &self.params, spec)
    }
}

/// One diagnostic row: `Z_Λ C_Λ(0)` at a cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub cutoff: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TwoPointVerdict {
    AllZero,
    FreeField(FreeTwoPoint),
    Divergent { diagnostic: Vec<DivergenceRow> },
}

/// Cutoffs used for the divergence diagnostic.
pub const DIVERGENCE_GRID: [f64; 3] = [E, E * E, E * E * E * E];

/// Fate of the connected two-point function as the cutoff is removed.
pub fn two_point_classify(eta: f64, params: &ModelParams) -> Result<TwoPointVerdict> {
    params.validate()?;
    if eta.is_nan() {
        return Err(invalid("eta", "must not be NaN"));
    }
    if eta < 0.0 {
        return Ok(TwoPointVerdict::AllZero);
    }
    if eta == 0.0 {
        return Ok(TwoPointVerdict::FreeField(FreeTwoPoint { params: params.clone() }));
    }
    let diagnostic = DIVERGENCE_GRID
        .iter()
        .map(|&cutoff| {
            let c0 = covariance_zero(&params.with_cutoff(cutoff))?;
            Ok(DivergenceRow {
                cutoff,
                value: c0.powf(eta) * c0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TwoPointVerdict::Divergent { diagnostic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SourceSpec;

    fn setup() -> (ModelParams, TorusLattice) {
        let params = ModelParams::new(2, 1.0, 4.0, 6.0).unwrap();
        (params, TorusLattice::new(2, 16, 4.0).unwrap())
    }

    #[test]
    fn exact_boundaries() {
        assert_eq!(EtaRegime::classify(-1.0).unwrap(), EtaRegime::B);
        assert_eq!(EtaRegime::classify(-1.0 - 1e-15).unwrap(), EtaRegime::A);
        assert_eq!(EtaRegime::classify(1.0).unwrap(), EtaRegime::D);
        assert_eq!(EtaRegime::classify(1.0 + 1e-15).unwrap(), EtaRegime::E);
        assert_eq!(EtaRegime::classify(0.999_999_999).unwrap(), EtaRegime::C);
        assert_eq!(KappaRegime::classify(-1.0).unwrap(), KappaRegime::D2);
        assert_eq!(KappaRegime::classify(-1.0 + 1e-15).unwrap(), KappaRegime::D3);
        assert!(EtaRegime::classify(f64::NAN).is_err());
    }

    #[test]
    fn regime_c_heaviside() {
        let (params, lat) = setup();
        let v = BoundedInteraction::catalog("heaviside", None).unwrap();
        let r = limit_functional(EtaRegime::C, &v, &SourceField::zero(lat), &params).unwrap();
        assert!((r.value + 8.0).abs() < 1e-12);
        assert_eq!(r.j_part, 0.0);
    }

    #[test]
    fn regime_e_requires_band_limited_source() {
        let (params, lat) = setup();
        let v = BoundedInteraction::catalog("sgn", None).unwrap();
        let delta = SourceField::delta(lat, 3);
        assert_eq!(
            limit_functional(EtaRegime::E, &v, &delta, &params),
            Err(Error::SourceNotBandLimited)
        );
        let j = SourceSpec::single_mode(vec![1, 0], 1.0).build(&lat).unwrap();
        let a = uv_limit_source_field(&j, &params).unwrap();
        assert!(limit_functional(EtaRegime::E, &v, &a, &params).is_ok());
    }

    #[test]
    fn missing_assumption_is_named() {
        let (params, lat) = setup();
        let v = BoundedInteraction::custom("wiggle", |w: f64| w.sin(), 1.0, None, None, vec![]).unwrap();
        match limit_functional(EtaRegime::C, &v, &SourceField::zero(lat), &params) {
            Err(Error::MissingAssumption { assumption, .. }) => assert_eq!(assumption, "(A2)"),
            other => panic!("unexpected {other:?}"),
        }
        match limit_functional(EtaRegime::A, &v, &SourceField::zero(lat), &params) {
            Err(Error::MissingAssumption { assumption, .. }) => assert_eq!(assumption, "(A1)"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(limit_functional(EtaRegime::B, &v, &SourceField::zero(lat), &params).is_ok());
    }

    #[test]
    fn two_point_verdicts() {
        let (params, _) = setup();
        assert_eq!(two_point_classify(-0.5, &params).unwrap(), TwoPointVerdict::AllZero);
        assert!(matches!(two_point_classify(0.0, &params).unwrap(), TwoPointVerdict::FreeField(_)));
        match two_point_classify(1.0, &params).unwrap() {
            TwoPointVerdict::Divergent { diagnostic } => {
                assert!(diagnostic.windows(2).all(|w| w[1].value > w[0].value));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_point_schwinger_is_rejected() {
        let (params, lat) = setup();
        let v = BoundedInteraction::catalog("sgn", None).unwrap();
        let f = SourceField::zero(lat);
        assert_eq!(
            schwinger_connected(2, &[f.clone(), f], &v, &params, Family::ErfLimit),
            Err(Error::TwoPointUndefined)
        );
    }
}
