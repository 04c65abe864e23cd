//! One function per subcommand. Each returns its rows and a JSON summary.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use uvlab_core::experiments::{
    classical_limit_probe, convergence_sweep, factorization_gap, mc_sigma_connected, ClassicalProbeSpec, SweepGrid,
    SweepSpec,
};
use uvlab_core::lattice::SourceField;
use uvlab_core::limits::{
    limit_functional, limit_functional_scaled, schwinger_coefficient, schwinger_connected, two_point_classify,
    uv_limit_source_field, TwoPointVerdict,
};
use uvlab_core::{
    covariance_zero, renorm_factor, BoundedInteraction, EtaRegime, KappaRegime, TorusLattice,
};

use crate::config::{GridKind, RunConfig};

/// Rows serialized into the output table, plus run-level results for the manifest.
pub struct Outcome {
    pub rows: Vec<Value>,
    pub header: &'static [&'static str],
    pub summary: Value,
    /// Whether the run drew Monte Carlo samples.
    pub sampled: bool,
}

fn to_rows<T: Serialize>(rows: &[T]) -> Result<Vec<Value>> {
    rows.iter().map(|r| Ok(serde_json::to_value(r)?)).collect()
}

fn interaction(cfg: &RunConfig) -> Result<BoundedInteraction> {
    Ok(BoundedInteraction::catalog(&cfg.interaction.name, cfg.interaction.shape)?)
}

fn lattice(cfg: &RunConfig) -> Result<TorusLattice> {
    let p = &cfg.model;
    Ok(match cfg.lattice.sites_per_side {
        Some(n) => TorusLattice::new(p.dim, n, p.box_side)?,
        None => TorusLattice::resolving(p.dim, p.box_side, p.cutoff)?,
    })
}

/// `J` on the run lattice, read from `source_file` when given.
fn source_field(cfg: &RunConfig) -> Result<SourceField> {
    match &cfg.source_file {
        Some(path) => {
            let j = SourceField::load(path).with_context(|| format!("loading source {}", path.display()))?;
            if let Some(n) = cfg.lattice.sites_per_side {
                if j.lattice().sites_per_side() != n {
                    bail!("source file has {} sites per side, config asks for {n}", j.lattice().sites_per_side());
                }
            }
            Ok(j)
        }
        None => Ok(cfg.source.build(&lattice(cfg)?)?),
    }
}

fn spec_only(cfg: &RunConfig) -> Result<()> {
    if cfg.source_file.is_some() {
        bail!(
            "`{}` rebuilds J on several lattices and needs a mode-based `source`, not `source_file`",
            cfg.subcommand.name()
        );
    }
    Ok(())
}

pub const PROPAGATOR_HEADER: &[&str] = &["cutoff", "c0", "log_cutoff", "c0_over_log_cutoff", "z", "s_plus", "s_minus"];

#[derive(Serialize)]
struct PropagatorRow {
    cutoff: f64,
    c0: f64,
    log_cutoff: f64,
    c0_over_log_cutoff: f64,
    z: f64,
    s_plus: f64,
    s_minus: f64,
}

pub fn propagator(cfg: &RunConfig) -> Result<Outcome> {
    let mut rows = Vec::with_capacity(cfg.grid.len());
    for &cutoff in &cfg.grid {
        let p = cfg.model.with_cutoff(cutoff);
        let r = renorm_factor(&p)?;
        let c0 = covariance_zero(&p)?;
        rows.push(PropagatorRow {
            cutoff,
            c0,
            log_cutoff: cutoff.ln(),
            c0_over_log_cutoff: c0 / cutoff.ln(),
            z: r.z,
            s_plus: r.s_plus,
            s_minus: r.s_minus,
        });
    }
    Ok(Outcome {
        rows: to_rows(&rows)?,
        header: PROPAGATOR_HEADER,
        summary: json!({ "eta": cfg.model.eta }),
        sampled: false,
    })
}

pub const LIMITS_HEADER: &[&str] = &["regime", "value", "constant_part", "j_part"];

pub fn limits(cfg: &RunConfig) -> Result<Outcome> {
    let v = interaction(cfg)?;
    let j = source_field(cfg)?;
    let a = uv_limit_source_field(&j, &cfg.model)?;
    let result = match cfg.model.kappa {
        Some(kappa) => limit_functional_scaled(KappaRegime::classify(kappa)?, &v, &a, &cfg.model)?,
        None => limit_functional(EtaRegime::classify(cfg.model.eta)?, &v, &a, &cfg.model)?,
    };
    let row = json!({
        "regime": result.regime.label(),
        "value": result.value,
        "constant_part": result.constant_part,
        "j_part": result.j_part,
    });
    let two_point = match two_point_classify(cfg.model.eta, &cfg.model)? {
        TwoPointVerdict::AllZero => json!({ "verdict": "all_zero" }),
        TwoPointVerdict::FreeField(_) => json!({ "verdict": "free_field" }),
        TwoPointVerdict::Divergent { diagnostic } => json!({ "verdict": "divergent", "diagnostic": diagnostic }),
    };
    Ok(Outcome {
        rows: vec![row],
        header: LIMITS_HEADER,
        summary: json!({
            "sites_per_side": j.lattice().sites_per_side(),
            "two_point": two_point,
        }),
        sampled: false,
    })
}

pub const SWEEP_HEADER: &[&str] =
    &["grid_value", "s_plus", "s_minus", "finite", "target", "gap", "mc_estimate", "mc_stderr"];

pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    spec_only(cfg)?;
    let grid = match cfg.sweep.grid_kind {
        GridKind::Cutoff => SweepGrid::Cutoff(cfg.grid.clone()),
        GridKind::Scale => SweepGrid::Scale(cfg.grid.clone()),
    };
    let spec = SweepSpec {
        regime: cfg.sweep.regime,
        v: interaction(cfg)?,
        j: cfg.source.clone(),
        params: cfg.model,
        grid,
        sites_per_side: cfg.lattice.sites_per_side,
    };
    let mc = cfg.sweep.monte_carlo.then_some(&cfg.mc);
    let report = convergence_sweep(&spec, mc)?;
    Ok(Outcome {
        rows: to_rows(&report.rows)?,
        header: SWEEP_HEADER,
        summary: json!({
            "regime": report.regime,
            "target": report.target,
            "sites_per_side": report.sites_per_side,
        }),
        sampled: mc.is_some(),
    })
}

pub const FACTORIZATION_HEADER: &[&str] = &[
    "cutoff",
    "sites_per_side",
    "delta",
    "gap",
    "stderr",
    "reference",
    "normalized_gap",
    "offdiag_gap",
    "diag_gap",
    "diag_fraction",
    "schur_max",
    "non_pd",
];

pub fn factorization(cfg: &RunConfig) -> Result<Outcome> {
    spec_only(cfg)?;
    let f = &cfg.factorization;
    let report = factorization_gap(f.ell, &interaction(cfg)?, &cfg.source, &cfg.model, &cfg.grid, f.mode, &cfg.mc)?;
    Ok(Outcome {
        rows: to_rows(&report.rows)?,
        header: FACTORIZATION_HEADER,
        summary: json!({
            "ell": report.ell,
            "mode": report.mode,
            "fitted_exponent": report.fitted_exponent,
            "empirical_lambda0": report.empirical_lambda0,
        }),
        sampled: f.mode == uvlab_core::experiments::GapMode::Mc,
    })
}

pub const SCHWINGER_HEADER: &[&str] = &["n", "family", "coefficient", "value"];

pub fn schwinger(cfg: &RunConfig) -> Result<Outcome> {
    let v = interaction(cfg)?;
    let s = &cfg.schwinger;
    let f = source_field(cfg)?;
    let coefficient = schwinger_coefficient(s.n, &v, s.family)?;
    let value = schwinger_connected(s.n, &vec![f; s.n], &v, &cfg.model, s.family)?;
    Ok(Outcome {
        rows: vec![json!({ "n": s.n, "family": s.family, "coefficient": coefficient, "value": value })],
        header: SCHWINGER_HEADER,
        summary: json!({}),
        sampled: false,
    })
}

pub const MC_HEADER: &[&str] =
    &["cutoff", "sites_per_side", "sigma_c", "stderr", "leading_term", "rest_term", "n_samples"];

pub fn mc(cfg: &RunConfig) -> Result<Outcome> {
    let v = interaction(cfg)?;
    let j = source_field(cfg)?;
    let est = mc_sigma_connected(&v, &j, &cfg.model, &cfg.mc)?;
    let row = json!({
        "cutoff": cfg.model.cutoff,
        "sites_per_side": j.lattice().sites_per_side(),
        "sigma_c": est.sigma_c,
        "stderr": est.stderr,
        "leading_term": est.leading_term,
        "rest_term": est.rest_term,
        "n_samples": est.n_samples,
    });
    Ok(Outcome {
        rows: vec![row],
        header: MC_HEADER,
        summary: json!({}),
        sampled: true,
    })
}

pub const CLASSICAL_HEADER: &[&str] =
    &["cutoff", "sites_per_side", "hbar", "free_part", "estimate", "stderr", "target", "gap"];

pub fn classical(cfg: &RunConfig) -> Result<Outcome> {
    spec_only(cfg)?;
    let spec = ClassicalProbeSpec {
        j: cfg.source.clone(),
        grid: cfg.grid.clone(),
    };
    let rows = classical_limit_probe(&spec, &interaction(cfg)?, &cfg.model, &cfg.mc)?;
    Ok(Outcome {
        rows: to_rows(&rows)?,
        header: CLASSICAL_HEADER,
        summary: json!({}),
        sampled: true,
    })
}
