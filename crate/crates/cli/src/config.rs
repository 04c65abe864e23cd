//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use uvlab_core::experiments::{GapMode, SweepRegime};
use uvlab_core::lattice::{Mode, SourceSpec};
use uvlab_core::limits::Family;
use uvlab_core::{MCConfig, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Propagator,
    Limits,
    Sweep,
    Factorization,
    Schwinger,
    Mc,
    Classical,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Propagator => "propagator",
            Subcommand::Limits => "limits",
            Subcommand::Sweep => "sweep",
            Subcommand::Factorization => "factorization",
            Subcommand::Schwinger => "schwinger",
            Subcommand::Mc => "mc",
            Subcommand::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionSpec {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec {
            name: "sgn".into(),
            shape: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSpec {
    /// `None` picks the smallest lattice resolving the cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites_per_side: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    #[default]
    Cutoff,
    Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub regime: SweepRegime,
    pub grid_kind: GridKind,
    /// Attach a Monte Carlo estimate per row (cutoff grids, `η` regimes only).
    pub monte_carlo: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            regime: SweepRegime::Eta(1.0),
            grid_kind: GridKind::Cutoff,
            monte_carlo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorizationOptions {
    pub ell: usize,
    pub mode: GapMode,
}

impl Default for FactorizationOptions {
    fn default() -> Self {
        FactorizationOptions {
            ell: 2,
            mode: GapMode::Quadrature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchwingerOptions {
    pub n: usize,
    pub family: Family,
}

impl Default for SchwingerOptions {
    fn default() -> Self {
        SchwingerOptions {
            n: 1,
            family: Family::ErfLimit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: Format,
    /// File stem; defaults to the subcommand name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            format: Format::Csv,
            stem: None,
        }
    }
}

fn default_grid() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub source: SourceSpec,
    /// Binary lattice field used as `J` instead of `source`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<PathBuf>,
    #[serde(default)]
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub mc: MCConfig,
    /// Cutoff grid, or `t` grid for scale sweeps.
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub sweep: SweepOptions,
    #[serde(default)]
    pub factorization: FactorizationOptions,
    #[serde(default)]
    pub schwinger: SchwingerOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        RunConfig {
            subcommand,
            model: ModelParams::default(),
            interaction: InteractionSpec::default(),
            source: SourceSpec::Zero,
            source_file: None,
            lattice: LatticeSpec::default(),
            mc: MCConfig::default(),
            grid: default_grid(),
            sweep: SweepOptions::default(),
            factorization: FactorizationOptions::default(),
            schwinger: SchwingerOptions::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing run configuration")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing run configuration")
    }

    /// Reads a TOML config, or the `config` entry of a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)?;
            let config = manifest.get("config").context("manifest has no `config` entry")?;
            return Ok(serde_json::from_value(config.clone())?);
        }
        Self::from_toml(&text)
    }

    pub fn stem(&self) -> String {
        self.output
            .stem
            .clone()
            .unwrap_or_else(|| self.subcommand.name().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.mc.validate()?;
        if self.grid.is_empty() {
            bail!("grid must not be empty");
        }
        Ok(())
    }
}

/// Command-line overrides; every set flag replaces the file value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub box_side: Option<f64>,
    #[arg(long)]
    pub coupling: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Interaction name from the catalog.
    #[arg(long)]
    pub interaction: Option<String>,
    #[arg(long)]
    pub shape: Option<f64>,
    /// `zero`, or modes `k1,k2:amplitude[:phase]` separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    pub source: Option<String>,
    #[arg(long)]
    pub source_file: Option<PathBuf>,
    #[arg(long)]
    pub sites_per_side: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Sweep regime as `eta:<value>` or `kappa:<value>`.
    #[arg(long, allow_hyphen_values = true)]
    pub regime: Option<String>,
    #[arg(long, value_enum)]
    pub grid_kind: Option<GridKind>,
    #[arg(long)]
    pub monte_carlo: Option<bool>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long, value_enum)]
    pub gap_mode: Option<GapModeArg>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GapModeArg {
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    ErfLimit,
    Convolution,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let m = &mut cfg.model;
        set(&mut m.dim, self.dim);
        set(&mut m.mass, self.mass);
        set(&mut m.box_side, self.box_side);
        set(&mut m.coupling, self.coupling);
        set(&mut m.cutoff, self.cutoff);
        set(&mut m.eta, self.eta);
        if self.kappa.is_some() {
            m.kappa = self.kappa;
        }
        if let Some(name) = &self.interaction {
            cfg.interaction.name = name.clone();
        }
        if self.shape.is_some() {
            cfg.interaction.shape = self.shape;
        }
        if let Some(s) = &self.source {
            cfg.source = parse_source(s)?;
        }
        if self.source_file.is_some() {
            cfg.source_file = self.source_file.clone();
        }
        if self.sites_per_side.is_some() {
            cfg.lattice.sites_per_side = self.sites_per_side;
        }
        set(&mut cfg.mc.master_seed, self.seed);
        set(&mut cfg.mc.n_samples, self.samples);
        set(&mut cfg.mc.batch_size, self.batch_size);
        if let Some(g) = &self.grid {
            cfg.grid = g.clone();
        }
        if let Some(r) = &self.regime {
            cfg.sweep.regime = parse_regime(r)?;
        }
        set(&mut cfg.sweep.grid_kind, self.grid_kind);
        set(&mut cfg.sweep.monte_carlo, self.monte_carlo);
        set(&mut cfg.factorization.ell, self.ell);
        if let Some(mode) = self.gap_mode {
            cfg.factorization.mode = match mode {
                GapModeArg::Quadrature => GapMode::Quadrature,
                GapModeArg::Mc => GapMode::Mc,
            };
        }
        set(&mut cfg.schwinger.n, self.order);
        if let Some(f) = self.family {
            cfg.schwinger.family = match f {
                FamilyArg::ErfLimit => Family::ErfLimit,
                FamilyArg::Convolution => Family::Convolution,
            };
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        set(&mut cfg.output.format, self.format);
        if self.stem.is_some() {
            cfg.output.stem = self.stem.clone();
        }
        Ok(())
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// `zero` or `k1,k2:amp[:phase];...`.
pub fn parse_source(text: &str) -> Result<SourceSpec> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("zero") {
        return Ok(SourceSpec::Zero);
    }
    let mut modes = Vec::new();
    for part in text.split(';').filter(|p| !p.trim().is_empty()) {
        let fields: Vec<&str> = part.split(':').map(str::trim).collect();
        if !(2..=3).contains(&fields.len()) {
            bail!("source mode `{part}` must look like k1,k2:amplitude[:phase]");
        }
        let k = fields[0]
            .split(',')
            .map(|x| x.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("wave vector in `{part}`"))?;
        let amplitude = fields[1].parse().with_context(|| format!("amplitude in `{part}`"))?;
        let phase = match fields.get(2) {
            Some(p) => p.parse().with_context(|| format!("phase in `{part}`"))?,
            None => 0.0,
        };
        modes.push(Mode { k, amplitude, phase });
    }
    if modes.is_empty() {
        bail!("empty source specification");
    }
    Ok(SourceSpec::Modes { modes })
}

/// `eta:<value>` or `kappa:<value>`.
pub fn parse_regime(text: &str) -> Result<SweepRegime> {
    let (kind, value) = text
        .split_once(':')
        .with_context(|| format!("regime `{text}` must look like eta:<value> or kappa:<value>"))?;
    let value: f64 = value.trim().parse().with_context(|| format!("exponent in `{text}`"))?;
    match kind.trim() {
        "eta" => Ok(SweepRegime::Eta(value)),
        "kappa" => Ok(SweepRegime::Kappa(value)),
        other => bail!("unknown regime kind `{other}`; expected eta or kappa"),
    }
}
