//! Factorization gap `E[𝒱^ℓ] - E[𝒱]^ℓ` of the tilted interacting expectation.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mc::{collect_observables, jackknife, MCConfig};
use super::LatticeSetup;
use crate::error::{invalid, Error, Result};
use crate::gaussian::MAX_ELL;
use crate::interactions::BoundedInteraction;
use crate::lattice::{interaction_integral, FieldSample, SourceSpec, TorusLattice};
use crate::params::{ModelParams, QuadratureSpec};

/// Largest number of ℓ-tuples of lattice sites (after using translation
/// invariance where available) evaluated by product quadrature.
pub const TUPLE_BUDGET: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub cutoff: f64,
    pub sites_per_side: usize,
    pub delta: f64,
    pub gap: f64,
    pub stderr: f64,
    /// `1/√(log Λ)`.
    pub reference: f64,
    /// `gap / (‖V‖_∞ |B|)^ℓ`.
    pub normalized_gap: f64,
    /// Contribution of configurations with every pair at distance `>= δ`.
    pub offdiag_gap: Option<f64>,
    /// Contribution of the near-diagonal region.
    pub diag_gap: Option<f64>,
    /// Lattice fraction of ℓ-tuples in the near-diagonal region.
    pub diag_fraction: Option<f64>,
    /// Largest Schur row sum over the off-diagonal region.
    pub schur_max: Option<f64>,
    /// Tuples in the off-diagonal region whose overlap matrix failed to factor.
    pub non_pd: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub ell: usize,
    pub mode: GapMode,
    pub rows: Vec<GapRow>,
    /// `p` in a least-squares fit `gap ∝ (log Λ)^{-p}`.
    pub fitted_exponent: Option<f64>,
    /// Smallest grid cutoff with a factorizable overlap matrix everywhere off the diagonal region.
    pub empirical_lambda0: Option<f64>,
    pub rest_term: Option<f64>,
}

/// `δ = (ℓ / √(log Λ))^{1/(d - 3/2)}`.
pub fn region_delta(ell: usize, dim: usize, cutoff: f64) -> f64 {
    (ell as f64 / cutoff.ln().sqrt()).powf(1.0 / (dim as f64 - 1.5))
}

fn fit_exponent(rows: &[GapRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.gap > 0.0 && r.cutoff.ln() > 0.0)
        .map(|r| (r.cutoff.ln().ln(), r.gap.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

fn key(x: f64) -> u64 {
    (x + 0.0).to_bits()
}

/// Gap on the grid of cutoffs, with one lattice per cutoff (the smallest
/// resolving one).
pub fn factorization_gap(
    ell: usize,
    v: &BoundedInteraction,
    j: &SourceSpec,
    params: &ModelParams,
    grid: &[f64],
    mode: GapMode,
    cfg: &MCConfig,
) -> Result<GapReport> {
    if ell == 0 {
        return Err(invalid("ell", "must be >= 1"));
    }
    if grid.is_empty() {
        return Err(invalid("grid", "cutoff grid is empty"));
    }
    if mode == GapMode::Quadrature && ell > MAX_ELL {
        return Err(invalid("ell", format!("quadrature mode supports ell <= {MAX_ELL}; use mc mode")));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &cutoff in grid {
        let p = params.with_cutoff(cutoff);
        p.validate()?;
        let lat = TorusLattice::resolving(p.dim, p.box_side, cutoff)?;
        let source = j.build(&lat)?;
        let setup = LatticeSetup::new(&p, &source)?;
        let row = match mode {
            GapMode::Mc => mc_row(ell, v, &setup, cfg)?,
            GapMode::Quadrature => quadrature_row(ell, v, &setup)?,
        };
        rows.push(row);
    }
    let empirical_lambda0 = rows
        .iter()
        .find(|r| r.non_pd == Some(0))
        .map(|r| r.cutoff);
    Ok(GapReport {
        ell,
        mode,
        fitted_exponent: fit_exponent(&rows),
        empirical_lambda0,
        rows,
        rest_term: None,
    })
}

fn base_row(ell: usize, v: &BoundedInteraction, setup: &LatticeSetup, gap: f64, stderr: f64) -> GapRow {
    let lat = setup.lattice();
    let cutoff = setup.params.cutoff;
    GapRow {
        cutoff,
        sites_per_side: lat.sites_per_side(),
        delta: region_delta(ell, lat.dim(), cutoff),
        gap,
        stderr,
        reference: 1.0 / cutoff.ln().sqrt(),
        normalized_gap: gap / (v.sup_norm() * lat.volume()).powi(ell as i32),
        offdiag_gap: None,
        diag_gap: None,
        diag_fraction: None,
        schur_max: None,
        non_pd: None,
    }
}

fn mc_row(ell: usize, v: &BoundedInteraction, setup: &LatticeSetup, cfg: &MCConfig) -> Result<GapRow> {
    let lat = *setup.lattice();
    let n = lat.num_sites();
    let table = collect_observables(&setup.sampler, cfg, 2, |phi, out| {
        let mut psi = vec![0.0; n];
        setup.shifted(phi, &mut psi);
        let vv = interaction_integral(&FieldSample::new(lat, psi, None), v);
        out[0] = vv;
        out[1] = vv.powi(ell as i32);
    })?;
    let means = table.batch_means(2, |row, out| out.copy_from_slice(row));
    let est = jackknife(&means, |m| m[1] - m[0].powi(ell as i32));
    // Same samples for both terms: at ℓ = 1 the difference is exactly zero.
    let (gap, stderr) = if ell == 1 { (0.0, 0.0) } else { (est.value, est.stderr) };
    Ok(base_row(ell, v, setup, gap, stderr))
}

struct Accumulator {
    offdiag: f64,
    diag: f64,
    diag_count: usize,
    total_count: usize,
    schur_max: f64,
    non_pd: usize,
}

fn quadrature_row(ell: usize, v: &BoundedInteraction, setup: &LatticeSetup) -> Result<GapRow> {
    let lat = *setup.lattice();
    if ell == 1 {
        let mut row = base_row(1, v, setup, 0.0, 0.0);
        row.offdiag_gap = Some(0.0);
        row.diag_gap = Some(0.0);
        row.diag_fraction = Some(0.0);
        row.schur_max = Some(0.0);
        row.non_pd = Some(0);
        return Ok(row);
    }
    let delta = region_delta(ell, lat.dim(), setup.params.cutoff);
    let spec = QuadratureSpec::default();
    let n = lat.num_sites();
    let translation_invariant = setup.source.is_declared_zero();

    // Enumerate tuples with the first site pinned at 0 when J = 0.
    let first_sites: Vec<usize> = if translation_invariant { vec![0] } else { (0..n).collect() };
    let tuples_per_first = n.pow((ell - 1) as u32);
    let count = first_sites.len().saturating_mul(tuples_per_first);
    if count > TUPLE_BUDGET {
        return Err(invalid(
            "lattice",
            format!("{count} site tuples exceed the quadrature budget of {TUPLE_BUDGET}; use mc mode or a coarser grid"),
        ));
    }
    let one_point: Vec<f64> = {
        let mut cache: HashMap<u64, f64> = HashMap::new();
        let mut out = Vec::with_capacity(n);
        for s in 0..n {
            let k = if translation_invariant { 0 } else { key(setup.ctilde_j.values()[s]) };
            let val = match cache.get(&k) {
                Some(&x) => x,
                None => {
                    let x = setup.quadrature_expectation(v, &[s], &spec)?;
                    cache.insert(k, x);
                    x
                }
            };
            out.push(val);
        }
        out
    };

    let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(count);
    for &f in &first_sites {
        for rest in 0..tuples_per_first {
            let mut t = vec![f];
            let mut r = rest;
            for _ in 1..ell {
                t.push(r % n);
                r /= n;
            }
            tuples.push(t);
        }
    }

    // Group tuples by everything the expectation depends on.
    let c0 = setup.kernel[0];
    let tuple_key = |t: &[usize]| -> Vec<u64> {
        let mut rhos = Vec::new();
        for a in 0..t.len() {
            for b in 0..a {
                rhos.push(key(setup.kernel[lat.lag_index(t[a], t[b])] / c0));
            }
        }
        if translation_invariant {
            rhos.sort_unstable();
            rhos
        } else {
            let mut k: Vec<u64> = t.iter().map(|&s| key(setup.ctilde_j.values()[s])).collect();
            k.extend(rhos);
            k
        }
    };
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut representatives: Vec<usize> = Vec::new();
    let mut slot_of: Vec<usize> = Vec::with_capacity(tuples.len());
    for (i, t) in tuples.iter().enumerate() {
        let k = tuple_key(t);
        let next = representatives.len();
        let slot = *index.entry(k).or_insert_with(|| {
            representatives.push(i);
            next
        });
        slot_of.push(slot);
    }
    let values: Vec<Result<f64>> = representatives
        .par_iter()
        .map(|&i| {
            let t = &tuples[i];
            match setup.quadrature_expectation(v, t, &spec) {
                Ok(x) => Ok(x),
                Err(Error::NotPositiveDefinite) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;

    let mut acc = Accumulator {
        offdiag: 0.0,
        diag: 0.0,
        diag_count: 0,
        total_count: 0,
        schur_max: 0.0,
        non_pd: 0,
    };
    let mut offdiag_product_term = 0.0;
    let mut diag_product_term = 0.0;
    for (t, &slot) in tuples.iter().zip(&slot_of) {
        let mut near = false;
        let mut row_sums = vec![0.0; ell];
        for a in 0..ell {
            for b in 0..a {
                if lat.torus_distance(t[a], t[b]) < delta {
                    near = true;
                }
                let rho = (setup.kernel[lat.lag_index(t[a], t[b])] / c0).abs();
                row_sums[a] += rho;
                row_sums[b] += rho;
            }
        }
        let product: f64 = t.iter().map(|&s| one_point[s]).product();
        let value = values[slot];
        acc.total_count += 1;
        if near {
            acc.diag_count += 1;
            acc.diag += value;
            diag_product_term += product;
        } else {
            acc.schur_max = row_sums.iter().copied().fold(acc.schur_max, f64::max);
            if value.is_nan() {
                acc.non_pd += 1;
                continue;
            }
            acc.offdiag += value;
            offdiag_product_term += product;
        }
    }
    if acc.diag.is_nan() {
        return Err(Error::Internal("coincident-site expectation failed to factor".into()));
    }
    // Each tuple carries a^{ℓd}; pinning the first site multiplies by N^d.
    let multiplicity = if translation_invariant { n as f64 } else { 1.0 };
    let weight = lat.cell_volume().powi(ell as i32) * multiplicity;
    let offdiag_gap = weight * (acc.offdiag - offdiag_product_term);
    let diag_gap = weight * (acc.diag - diag_product_term);
    let mut row = base_row(ell, v, setup, offdiag_gap + diag_gap, 0.0);
    row.offdiag_gap = Some(offdiag_gap);
    row.diag_gap = Some(diag_gap);
    row.diag_fraction = Some(acc.diag_count as f64 / acc.total_count as f64);
    row.schur_max = Some(acc.schur_max);
    row.non_pd = Some(acc.non_pd);
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_formula() {
        let d = region_delta(2, 2, 8.0);
        assert!((d - (2.0 / 8f64.ln().sqrt()).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn ell_one_is_zero_in_both_modes() {
        let params = ModelParams::new(2, 1.0, 4.0, 3.0).unwrap();
        let v = BoundedInteraction::catalog("arctan", None).unwrap();
        let cfg = MCConfig::new(5, 200, 20).unwrap();
        for mode in [GapMode::Quadrature, GapMode::Mc] {
            let r = factorization_gap(1, &v, &SourceSpec::Zero, &params, &[3.0], mode, &cfg).unwrap();
            assert_eq!(r.rows[0].gap, 0.0);
        }
    }
}
