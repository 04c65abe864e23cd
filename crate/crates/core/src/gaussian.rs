//! Deterministic Gaussian quadrature for products of bounded interactions.
//!
//! The ℓ-point expectation `E[Π V(s w_i)]` with `w ~ N(q, M)` is computed by
//! writing `w = q + L z` with `L` the Cholesky factor of `M` and integrating
//! over `z_1, ..., z_ℓ` one at a time. Each 1-D integral is split at the mean
//! and at every point where an argument `s w_i` crosses a jump or feature of
//! `V`, and truncated at 12 standard deviations.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interactions::BoundedInteraction;
use crate::lattice::{SourceField, SpectralDensity, TorusLattice};
use crate::params::{ModelParams, QuadratureSpec};
use crate::propagator::{covariance_at, covariance_zero, Renormalization};
use crate::quad;
use crate::special::hermite_he;

/// Half-width of the integration window in standard deviations.
pub const TRUNCATION: f64 = 12.0;

/// Largest ℓ handled by product quadrature.
pub const MAX_ELL: usize = 3;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Where the normalized correlations `C(x_i - x_j)/C(0)` come from.
#[derive(Debug, Clone, Copy)]
pub enum CovarianceSource<'a> {
    /// Proper-time integral of the continuum covariance at the model cutoff.
    Continuum,
    /// Spectral lattice kernel; points are snapped to their nearest sites.
    Lattice(&'a SpectralDensity),
}

/// `M_α = I + α m`, where `m` holds the normalized off-diagonal covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    alpha: f64,
    offdiag: DMatrix<f64>,
    matrix: DMatrix<f64>,
    schur_bound: f64,
    cholesky: Option<DMatrix<f64>>,
}

impl OverlapMatrix {
    /// Assemble from a symmetric matrix `m` with zero diagonal.
    pub fn from_offdiagonal(m: DMatrix<f64>, alpha: f64) -> Result<Self> {
        let ell = m.nrows();
        if ell == 0 || m.ncols() != ell {
            return Err(invalid("m", "overlap matrix must be square and nonempty"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        for i in 0..ell {
            if m[(i, i)] != 0.0 {
                return Err(invalid("m", "diagonal of m must vanish"));
            }
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] || !m[(i, j)].is_finite() {
                    return Err(invalid("m", "m must be finite and symmetric"));
                }
            }
        }
        let schur_bound = (0..ell)
            .map(|i| (0..ell).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let matrix = DMatrix::identity(ell, ell) + &m * alpha;
        let cholesky = nalgebra::Cholesky::new(matrix.clone()).map(|c| c.l());
        Ok(OverlapMatrix {
            alpha,
            offdiag: m,
            matrix,
            schur_bound,
            cholesky,
        })
    }

    /// Two points with normalized correlation `rho`.
    pub fn pair(rho: f64, alpha: f64) -> Result<Self> {
        Self::from_offdiagonal(DMatrix::from_row_slice(2, 2, &[0.0, rho, rho, 0.0]), alpha)
    }

    /// The ℓ = 1 case, `M = [1]`.
    pub fn single() -> Self {
        Self::from_offdiagonal(DMatrix::zeros(1, 1), 1.0).expect("1x1 zero matrix is valid")
    }

    pub fn ell(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn offdiagonal(&self) -> &DMatrix<f64> {
        &self.offdiag
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `max_i Σ_j |m_ij|`.
    pub fn schur_bound(&self) -> f64 {
        self.schur_bound
    }

    /// Verdict of the attempted Cholesky factorization.
    pub fn is_positive_definite(&self) -> bool {
        self.cholesky.is_some()
    }

    pub fn cholesky_factor(&self) -> Option<&DMatrix<f64>> {
        self.cholesky.as_ref()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Spectral norm of `m`.
    pub fn operator_norm(&self) -> f64 {
        SymmetricEigen::new(self.offdiag.clone())
            .eigenvalues
            .iter()
            .fold(0.0, |acc: f64, e| acc.max(e.abs()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Build `M_α` for a list of points in the box.
pub fn overlap_matrix(
    points: &[Vec<f64>],
    params: &ModelParams,
    alpha: f64,
    source: CovarianceSource<'_>,
) -> Result<OverlapMatrix> {
    params.validate()?;
    let ell = points.len();
    if ell == 0 {
        return Err(invalid("points", "need at least one point"));
    }
    let half = 0.5 * params.box_side;
    for p in points {
        if p.len() != params.dim {
            return Err(invalid("points", "point dimension does not match the model"));
        }
        if p.iter().any(|c| !(c.abs() <= half)) {
            return Err(invalid("points", "points must lie inside the box"));
        }
    }
    let mut m = DMatrix::zeros(ell, ell);
    match source {
        CovarianceSource::Continuum => {
            let spec = QuadratureSpec::default();
            let c0 = covariance_zero(params)?;
            for i in 0..ell {
                for j in 0..i {
                    let diff: Vec<f64> = points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect();
                    let rho = if diff.iter().all(|&d| d == 0.0) {
                        1.0
                    } else {
                        covariance_at(&diff, params, &spec)? / c0
                    };
                    m[(i, j)] = rho;
                    m[(j, i)] = rho;
                }
            }
        }
        CovarianceSource::Lattice(density) => {
            let lat = density.lattice();
            if lat.dim() != params.dim {
                return Err(Error::LatticeMismatch("lattice and model dimensions differ".into()));
            }
            let kernel = density.kernel();
            let sites: Vec<usize> = points.iter().map(|p| lat.nearest_site(p)).collect();
            for i in 0..ell {
                for j in 0..i {
                    let rho = kernel[lat.lag_index(sites[i], sites[j])] / kernel[0];
                    m[(i, j)] = rho;
                    m[(j, i)] = rho;
                }
            }
        }
    }
    OverlapMatrix::from_offdiagonal(m, alpha)
}

/// `q_i = ⟨δ_{x_i}, C̃ J⟩ / C̃(0)^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceVector {
    pub q: Vec<f64>,
}

impl SourceVector {
    pub fn new(q: Vec<f64>) -> Self {
        SourceVector { q }
    }

    pub fn zero(ell: usize) -> Self {
        SourceVector { q: vec![0.0; ell] }
    }

    /// Read `q` off a convolved source `C̃ J` at the given sites.
    pub fn from_lattice(sites: &[usize], ctilde_j: &SourceField, ctilde0: f64) -> Self {
        let norm = ctilde0.sqrt();
        SourceVector {
            q: sites.iter().map(|&s| ctilde_j.values()[s] / norm).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// `s_plus = (Z C(0))^{1/2}` and `s_minus = (Z / C(0))^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub s_plus: f64,
    pub s_minus: f64,
}

impl ScaleParams {
    pub fn new(s_plus: f64, s_minus: f64) -> Result<Self> {
        if !(s_plus > 0.0 && s_plus.is_finite() && s_minus > 0.0 && s_minus.is_finite()) {
            return Err(invalid(
                "scales",
                format!("s_plus and s_minus must be positive and finite, got {s_plus}, {s_minus}"),
            ));
        }
        Ok(ScaleParams { s_plus, s_minus })
    }

    pub fn from_renormalization(r: &Renormalization) -> Result<Self> {
        Self::new(r.s_plus, r.s_minus)
    }

    /// Scales generated by `t = C(0)^{1/2}` and exponent `eta`.
    pub fn from_t(t: f64, eta: f64) -> Result<Self> {
        Self::new(t.powf(eta + 1.0), t.powf(eta - 1.0))
    }
}

struct Nested<'a> {
    v: &'a BoundedInteraction,
    chol: &'a DMatrix<f64>,
    q: &'a [f64],
    scale: f64,
    powers: &'a [u32],
    specs: Vec<QuadratureSpec>,
    cuts: Vec<f64>,
    failure: RefCell<Option<Error>>,
}

impl Nested<'_> {
    fn vpow(&self, k: usize, w: f64) -> f64 {
        let val = self.v.eval(self.scale * w);
        match self.powers[k] {
            1 => val,
            p => val.powi(p as i32),
        }
    }

    fn level(&self, k: usize, prefix: &[f64; MAX_ELL]) -> f64 {
        let ell = self.q.len();
        let mut mean = self.q[k];
        for j in 0..k {
            mean += self.chol[(k, j)] * prefix[j];
        }
        let sd = self.chol[(k, k)];
        let mut breaks = vec![0.0];
        breaks.extend(self.cuts.iter().map(|b| (b / self.scale - mean) / sd));
        let integrand = |z: f64| {
            let density = std_normal_pdf(z);
            if density == 0.0 {
                return 0.0;
            }
            let here = self.vpow(k, mean + sd * z);
            if here == 0.0 {
                return 0.0;
            }
            if k + 1 == ell {
                return density * here;
            }
            let mut next = *prefix;
            next[k] = z;
            density * here * self.level(k + 1, &next)
        };
        match quad::integrate(integrand, -TRUNCATION, TRUNCATION, &breaks, &self.specs[k]) {
            Ok(r) => r.value,
            Err(e) => {
                let mut slot = self.failure.borrow_mut();
                let value = match &e {
                    Error::QuadratureNonConvergence { estimate, .. } => *estimate,
                    _ => f64::NAN,
                };
                slot.get_or_insert(e);
                value
            }
        }
    }
}

/// `E[Π_i V(scale w_i)^{p_i}]` for `w = q + L z`, `z` standard normal.
fn nested_expectation(
    v: &BoundedInteraction,
    chol: &DMatrix<f64>,
    q: &[f64],
    scale: f64,
    powers: &[u32],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let ell = q.len();
    debug_assert!(ell >= 1 && ell <= MAX_ELL && powers.len() == ell);
    let mut specs = vec![*spec];
    for k in 1..ell {
        specs.push(specs[k - 1].nested());
    }
    let ctx = Nested {
        v,
        chol,
        q,
        scale,
        powers,
        specs,
        cuts: v.breakpoints().collect(),
        failure: RefCell::new(None),
    };
    let value = ctx.level(0, &[0.0; MAX_ELL]);
    match ctx.failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `E[V(scale · w)]` for `w ~ N(mean, 1)`.
pub fn gaussian_expectation_1d(
    v: &BoundedInteraction,
    scale: f64,
    mean: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite() && mean.is_finite()) {
        return Err(invalid("scale", "scale must be positive and mean finite"));
    }
    if v.is_odd() {
        if mean == 0.0 {
            return Ok(0.0);
        }
        if mean < 0.0 {
            return gaussian_expectation_1d(v, scale, -mean, spec).map(|x| -x);
        }
    }
    let one = DMatrix::from_element(1, 1, 1.0);
    nested_expectation(v, &one, &[mean], scale, &[1], spec)
}

/// ℓ-point expectation in whitened coordinates,
/// `(2π)^{-ℓ/2} det(M)^{-1/2} ∫ dw Π V(C̃(0)^{1/2} w_i) exp(-½ (w-q)ᵀ M^{-1} (w-q))`.
pub fn ell_point_expectation(
    v: &BoundedInteraction,
    m: &OverlapMatrix,
    q: &SourceVector,
    ctilde0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let ell = m.ell();
    if ell > MAX_ELL {
        return Err(invalid("ell", format!("product quadrature supports ell <= {MAX_ELL}; use Monte Carlo")));
    }
    if q.len() != ell {
        return Err(invalid("q", "source vector length does not match the overlap matrix"));
    }
    if !(ctilde0 > 0.0 && ctilde0.is_finite()) {
        return Err(invalid("ctilde0", "must be positive"));
    }
    let chol = m.cholesky_factor().ok_or(Error::NotPositiveDefinite)?;
    nested_expectation(v, chol, &q.q, ctilde0.sqrt(), &vec![1; ell], spec)
}

/// `E[Π_i V(ψ(x_i))]` for the lattice field `ψ ~ N(C̃J, C̃)` at the given sites.
///
/// Repeated sites are merged into powers of `V`, so coincident points are
/// handled exactly rather than through a singular overlap matrix.
pub fn lattice_point_expectation(
    v: &BoundedInteraction,
    sites: &[usize],
    ctilde_j: Option<&SourceField>,
    density: &SpectralDensity,
    kernel: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let lat = density.lattice();
    let mut distinct: Vec<usize> = Vec::new();
    let mut powers: Vec<u32> = Vec::new();
    for &s in sites {
        match distinct.iter().position(|&d| d == s) {
            Some(i) => powers[i] += 1,
            None => {
                distinct.push(s);
                powers.push(1);
            }
        }
    }
    let ell = distinct.len();
    if ell == 0 || ell > MAX_ELL {
        return Err(invalid("sites", format!("need between 1 and {MAX_ELL} distinct sites")));
    }
    let c0 = kernel[0];
    let mut m = DMatrix::zeros(ell, ell);
    for i in 0..ell {
        for j in 0..i {
            let rho = kernel[lat.lag_index(distinct[i], distinct[j])] / c0;
            m[(i, j)] = rho;
            m[(j, i)] = rho;
        }
    }
    let overlap = OverlapMatrix::from_offdiagonal(m, 1.0)?;
    let chol = overlap.cholesky_factor().ok_or(Error::NotPositiveDefinite)?;
    let q = match ctilde_j {
        Some(cj) => SourceVector::from_lattice(&distinct, cj, c0).q,
        None => vec![0.0; ell],
    };
    nested_expectation(v, chol, &q, c0.sqrt(), &powers, spec)
}

fn value_key(x: f64) -> u64 {
    (x + 0.0).to_bits()
}

/// `(2π)^{-1/2} ∫_B dx ∫ dw V(s_plus w) e^{-½(w - s_minus a(x))²}` as a
/// lattice sum over `x` of 1-D quadratures; equal values of `a` share one
/// quadrature.
pub fn one_point_ratio(
    v: &BoundedInteraction,
    a_field: &SourceField,
    scales: ScaleParams,
    lat: &TorusLattice,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if a_field.lattice() != lat {
        return Err(Error::LatticeMismatch("a(x) lives on a different lattice".into()));
    }
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut total = 0.0;
    for &a in a_field.values() {
        let mean = scales.s_minus * a;
        let key = value_key(mean);
        let val = match cache.get(&key) {
            Some(&x) => x,
            None => {
                let x = gaussian_expectation_1d(v, scales.s_plus, mean, spec)?;
                cache.insert(key, x);
                x
            }
        };
        total += val;
    }
    Ok(lat.cell_volume() * total)
}

/// `a_n = ∂^n_w erf(w/√2) |_{w=0} = √(2/π) He_{n-1}(0)`.
pub fn erf_derivative_coefficient(n: usize) -> f64 {
    assert!(n >= 1, "derivative order must be >= 1");
    if n % 2 == 0 {
        return 0.0;
    }
    (2.0 / PI).sqrt() * hermite_he(n - 1, 0.0)
}

/// `(2π)^{-1/2} ∫ V(w) He_n(w) e^{-w²/2} dw`, the Gaussian average of `∂^n V`
/// after integrating by parts.
pub fn convolution_coefficient(v: &BoundedInteraction, n: usize, spec: &QuadratureSpec) -> Result<f64> {
    let mut breaks = vec![0.0];
    breaks.extend(v.breakpoints());
    let res = quad::integrate(
        |w| v.eval(w) * hermite_he(n, w) * std_normal_pdf(w),
        -TRUNCATION - (n as f64).sqrt() * 2.0,
        TRUNCATION + (n as f64).sqrt() * 2.0,
        &breaks,
        spec,
    )?;
    Ok(res.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erf;

    fn sgn() -> BoundedInteraction {
        BoundedInteraction::catalog("sgn", None).unwrap()
    }

    #[test]
    fn single_point_matrix() {
        let m = OverlapMatrix::single();
        assert!(m.is_positive_definite());
        assert_eq!(m.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn coincident_pair_is_singular() {
        let m = OverlapMatrix::pair(1.0, 1.0).unwrap();
        assert!(!m.is_positive_definite());
        let ev = m.eigenvalues();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
        let q = SourceVector::zero(2);
        assert_eq!(
            ell_point_expectation(&sgn(), &m, &q, 1.0, &QuadratureSpec::default()),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn one_d_sgn_is_erf() {
        let spec = QuadratureSpec::default();
        for mean in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            for scale in [1e-3, 1.0, 1e6] {
                let e = gaussian_expectation_1d(&sgn(), scale, mean, &spec).unwrap();
                assert!((e - erf(mean / 2f64.sqrt())).abs() < 1e-10, "{mean} {scale}");
            }
        }
    }

    #[test]
    fn constant_interaction_normalizes() {
        let c = BoundedInteraction::constant(1.0);
        let m = OverlapMatrix::pair(0.4, 1.0).unwrap();
        let q = SourceVector::new(vec![0.3, -1.0]);
        let e = ell_point_expectation(&c, &m, &q, 0.7, &QuadratureSpec::default()).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arcsine_law_for_pair() {
        let spec = QuadratureSpec::default();
        for rho in [-0.8, -0.2, 0.0, 0.35, 0.9] {
            let m = OverlapMatrix::pair(rho, 1.0).unwrap();
            let e = ell_point_expectation(&sgn(), &m, &SourceVector::zero(2), 2.0, &spec).unwrap();
            let exact = 2.0 / PI * f64::asin(rho);
            assert!((e - exact).abs() < 1e-10, "rho={rho}: {e} vs {exact}");
        }
    }

    #[test]
    fn erf_coefficients() {
        assert_eq!(erf_derivative_coefficient(2), 0.0);
        assert!((erf_derivative_coefficient(1) - 0.797_884_560_802_865_4).abs() < 1e-15);
        assert!((erf_derivative_coefficient(3) + 0.797_884_560_802_865_4).abs() < 1e-15);
    }

    #[test]
    fn coincident_sites_merge_into_powers() {
        let lat = TorusLattice::new(2, 8, 4.0).unwrap();
        let params = ModelParams::new(2, 1.0, 4.0, 3.0).unwrap();
        let density = SpectralDensity::bare(lat, &params).unwrap();
        let kernel = density.kernel();
        let spec = QuadratureSpec::default();
        let heav = BoundedInteraction::catalog("heaviside", None).unwrap();
        // θ² = θ away from the jump, so E[θ(ψ)²] = E[θ(ψ)] = 1/2.
        let e = lattice_point_expectation(&heav, &[5, 5], None, &density, &kernel, &spec).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
    }
}
