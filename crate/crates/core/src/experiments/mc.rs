//! Batched Monte Carlo over exact lattice field samples with jackknife errors.
//!
//! Batch `b` draws its samples from seeds derived from `derive_seed(master, b)`,
//! so the set of samples depends only on the configuration. Batches run in
//! parallel and are reduced in batch order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{derive_seed, FieldSampler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MCConfig {
    pub master_seed: u64,
    pub n_samples: usize,
    pub batch_size: usize,
    /// Error-bar multiplier used by pass/fail comparisons.
    pub confidence: f64,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            master_seed: 1,
            n_samples: 10_000,
            batch_size: 200,
            confidence: 3.0,
        }
    }
}

impl MCConfig {
    pub fn new(master_seed: u64, n_samples: usize, batch_size: usize) -> Result<Self> {
        let cfg = MCConfig {
            master_seed,
            n_samples,
            batch_size,
            confidence: 3.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `n_samples` split into `n_batches` equal batches.
    pub fn with_batches(master_seed: u64, n_samples: usize, n_batches: usize) -> Result<Self> {
        if n_batches == 0 {
            return Err(invalid("n_batches", "must be positive"));
        }
        Self::new(master_seed, n_samples, n_samples / n_batches)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be positive"));
        }
        if self.n_samples < 2 * self.batch_size {
            return Err(invalid("n_samples", "need at least two batches (n_samples >= 2 * batch_size)"));
        }
        if self.n_samples % self.batch_size != 0 {
            return Err(invalid("n_samples", "must be a multiple of batch_size"));
        }
        if !(self.confidence > 0.0) {
            return Err(invalid("confidence", "must be positive"));
        }
        Ok(())
    }

    pub fn n_batches(&self) -> usize {
        self.n_samples / self.batch_size
    }
}

/// Jackknife estimate of a smooth function of means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Bias-corrected estimate.
    pub value: f64,
    pub stderr: f64,
    /// The function evaluated at the full-sample means.
    pub plain: f64,
}

/// Per-sample observables, grouped by batch in batch order.
#[derive(Debug, Clone)]
pub struct SampleTable {
    n_obs: usize,
    batch_size: usize,
    batches: Vec<Vec<f64>>,
}

impl SampleTable {
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    /// Row `i` of batch `b`.
    pub fn row(&self, b: usize, i: usize) -> &[f64] {
        &self.batches[b][i * self.n_obs..(i + 1) * self.n_obs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.batches.iter().flat_map(move |b| b.chunks_exact(self.n_obs))
    }

    /// Per-batch means of derived per-sample quantities.
    pub fn batch_means<F>(&self, k: usize, f: F) -> Vec<Vec<f64>>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let mut derived = vec![0.0; k];
        self.batches
            .iter()
            .map(|batch| {
                let mut acc = vec![0.0; k];
                for row in batch.chunks_exact(self.n_obs) {
                    f(row, &mut derived);
                    for (a, d) in acc.iter_mut().zip(&derived) {
                        *a += d;
                    }
                }
                let inv = 1.0 / self.batch_size as f64;
                acc.iter_mut().for_each(|a| *a *= inv);
                acc
            })
            .collect()
    }

    pub fn max_of(&self, obs: usize) -> f64 {
        self.rows().map(|r| r[obs]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Delete-one-batch jackknife of `f(means)` from equal-size batch means.
pub fn jackknife<F>(batch_means: &[Vec<f64>], f: F) -> Estimate
where
    F: Fn(&[f64]) -> f64,
{
    let nb = batch_means.len();
    assert!(nb >= 2, "jackknife needs at least two batches");
    let k = batch_means[0].len();
    let mut total = vec![0.0; k];
    for b in batch_means {
        for (t, x) in total.iter_mut().zip(b) {
            *t += x;
        }
    }
    let full: Vec<f64> = total.iter().map(|t| t / nb as f64).collect();
    let plain = f(&full);
    let mut leave = vec![0.0; k];
    let thetas: Vec<f64> = batch_means
        .iter()
        .map(|b| {
            for ((l, t), x) in leave.iter_mut().zip(&total).zip(b) {
                *l = (t - x) / (nb - 1) as f64;
            }
            f(&leave)
        })
        .collect();
    let mean_theta = thetas.iter().sum::<f64>() / nb as f64;
    let var = thetas.iter().map(|t| (t - mean_theta).powi(2)).sum::<f64>() * (nb - 1) as f64 / nb as f64;
    Estimate {
        value: nb as f64 * plain - (nb - 1) as f64 * mean_theta,
        stderr: var.sqrt(),
        plain,
    }
}

/// Jackknife of a plain mean of observable `obs`.
pub fn mean_estimate(table: &SampleTable, obs: usize) -> Estimate {
    let means = table.batch_means(1, |row, out| out[0] = row[obs]);
    jackknife(&means, |m| m[0])
}

/// `log E[e^{x}]` for observable `obs`, shifted by the sample maximum.
pub fn log_mean_exp(table: &SampleTable, obs: usize) -> Estimate {
    let shift = table.max_of(obs);
    if !shift.is_finite() {
        return Estimate {
            value: f64::NAN,
            stderr: f64::NAN,
            plain: f64::NAN,
        };
    }
    let means = table.batch_means(1, |row, out| out[0] = (row[obs] - shift).exp());
    let est = jackknife(&means, |m| m[0].ln());
    Estimate {
        value: est.value + shift,
        stderr: est.stderr,
        plain: est.plain + shift,
    }
}

fn batch_seed(cfg: &MCConfig, b: usize) -> u64 {
    derive_seed(cfg.master_seed, b as u64)
}

/// Visit every sample in the canonical order: batch by batch, pairs of
/// samples per derived seed.
pub fn for_each_sample<F>(sampler: &FieldSampler, cfg: &MCConfig, mut f: F) -> Result<()>
where
    F: FnMut(usize, &[f64]),
{
    cfg.validate()?;
    let n = sampler.lattice().num_sites();
    let (mut first, mut second) = (vec![0.0; n], vec![0.0; n]);
    for b in 0..cfg.n_batches() {
        let seed = batch_seed(cfg, b);
        let mut produced = 0;
        let mut pair = 0u64;
        while produced < cfg.batch_size {
            sampler.sample_pair_into(derive_seed(seed, pair), &mut first, &mut second);
            f(b, &first);
            produced += 1;
            if produced < cfg.batch_size {
                f(b, &second);
                produced += 1;
            }
            pair += 1;
        }
    }
    Ok(())
}

/// Evaluate `n_obs` observables on every sample, batches in parallel.
pub fn collect_observables<F>(sampler: &FieldSampler, cfg: &MCConfig, n_obs: usize, f: F) -> Result<SampleTable>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    cfg.validate()?;
    let n = sampler.lattice().num_sites();
    let batches: Vec<Vec<f64>> = (0..cfg.n_batches())
        .into_par_iter()
        .map(|b| {
            let seed = batch_seed(cfg, b);
            let (mut first, mut second) = (vec![0.0; n], vec![0.0; n]);
            let mut out = vec![0.0; cfg.batch_size * n_obs];
            let mut produced = 0;
            let mut pair = 0u64;
            while produced < cfg.batch_size {
                sampler.sample_pair_into(derive_seed(seed, pair), &mut first, &mut second);
                f(&first, &mut out[produced * n_obs..(produced + 1) * n_obs]);
                produced += 1;
                if produced < cfg.batch_size {
                    f(&second, &mut out[produced * n_obs..(produced + 1) * n_obs]);
                    produced += 1;
                }
                pair += 1;
            }
            out
        })
        .collect();
    if batches.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Internal("non-finite observable in Monte Carlo sample".into()));
    }
    Ok(SampleTable {
        n_obs,
        batch_size: cfg.batch_size,
        batches,
    })
}
