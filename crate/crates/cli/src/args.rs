//! Command-line flags. Each command turns its flags into a [`RunConfig`]
//! overlay on top of the optional `--config` file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use blockjacobi::transfer::Direction;
use blockjacobi::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Bound, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "bjac",
    version,
    about = "Spectral diagnostics for unbounded block Jacobi matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the spectrum on an interval across a truncation schedule.
    Spectrum(SpectrumArgs),
    /// Count truncation eigenvalues in an interval.
    Count(CountArgs),
    /// Tail witnesses and counting bound for discreteness above c.
    CheckA(CheckAArgs),
    /// Coupling margins and divergence conditions for discreteness on (0, inf).
    CheckB(CheckBArgs),
    /// Two-sided growth of odd and even diagonal blocks.
    Prop1(Prop1Args),
    /// k-step transfer products and splitting hypotheses (scalar families).
    Transfer(TransferArgs),
    /// Subordinacy ratio of two generalized eigenvectors (scalar families).
    Subordinacy(SubordinacyArgs),
    /// Random probe of the tail quadratic form.
    Probe(ProbeArgs),
    /// Run named gallery experiments and print a summary table.
    Reproduce(ReproduceArgs),
    /// List the built-in families and their parameters.
    Families,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $BJAC_OUT_DIR, else ./bjac-out).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
}

impl CommonArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.out_dir = self.out_dir.clone();
        cfg.seed = self.seed;
        cfg.workers = self.workers;
    }
}

/// Family selection. Named parameter flags are shorthands for `--param name=value`.
#[derive(Debug, Args, Default)]
pub struct FamilyArgs {
    /// Built-in family name (see `bjac families`).
    #[arg(long)]
    pub family: Option<String>,
    /// Custom family table file.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Family parameter, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub d1: Option<f64>,
    #[arg(long)]
    pub d2: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub b_scale: Option<f64>,
    #[arg(long)]
    pub b_exp: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub a_scale: Option<f64>,
    #[arg(long)]
    pub a_exp: Option<f64>,
}

impl FamilyArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        cfg.family = self.family.clone();
        cfg.table = self.table.clone();
        let mut params = BTreeMap::new();
        for p in &self.params {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("--param expects NAME=VALUE, got `{p}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("bad value in --param `{p}`")))?;
            params.insert(k.trim().to_string(), v);
        }
        let named = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("b", self.b),
            ("delta", self.delta),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("c1", self.c1),
            ("c2", self.c2),
            ("d1", self.d1),
            ("d2", self.d2),
            ("gamma", self.gamma),
            ("tau", self.tau),
            ("b_scale", self.b_scale),
            ("b_exp", self.b_exp),
            ("eps", self.eps),
            ("eta", self.eta),
            ("a_scale", self.a_scale),
            ("a_exp", self.a_exp),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        }
        if !params.is_empty() {
            cfg.params = Some(params);
        }
        Ok(())
    }
}

fn bounds(v: &Option<Vec<String>>) -> Option<[Bound; 2]> {
    v.as_ref()
        .map(|v| [Bound::Text(v[0].clone()), Bound::Text(v[1].clone())])
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Interval endpoints; `inf` and `-inf` are accepted.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub interval: Option<Vec<String>>,
    /// Include finite endpoints.
    #[arg(long)]
    pub closed: bool,
    /// Strictly increasing truncation sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
    /// Number of equal subintervals.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub interval: Option<Vec<String>>,
    #[arg(long)]
    pub closed: bool,
    /// Number of diagonal blocks in the section.
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckAArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    /// Number of (odd, even) block pairs scanned.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckBArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Trailing pair indices used for the suprema (default: horizon / 10).
    #[arg(long)]
    pub tail_window: Option<usize>,
    /// Margin sums within this distance of 1 are flagged critical.
    #[arg(long)]
    pub crit_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Prop1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Ascending positive thresholds, comma separated.
    #[arg(long = "m", alias = "M", value_delimiter = ',')]
    pub m_list: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Steps per product (2 or 3); defaults to the splitting's step count.
    #[arg(long)]
    pub k: Option<usize>,
    /// First and last group index.
    #[arg(long, num_args = 2, value_names = ["FIRST", "LAST"])]
    pub window: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Args)]
pub struct SubordinacyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Path length N.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum)]
    pub u_direction: Option<DirectionArg>,
    #[arg(long, value_enum)]
    pub v_direction: Option<DirectionArg>,
    /// Two starting values: (u_1, u_2) forward, (u_N, u_{N-1}) backward.
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub u_init: Option<Vec<f64>>,
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub v_init: Option<Vec<f64>>,
    /// Expected trend; a mismatch is a verdict failure.
    #[arg(long)]
    pub expect: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// First block of the support (default: just past the tail cutoff).
    #[arg(long)]
    pub first: Option<usize>,
    /// Last block of the support (default: first + 199).
    #[arg(long)]
    pub last: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Experiment name, repeatable (default: the eight standard experiments).
    #[arg(long = "experiment")]
    pub experiments: Vec<String>,
    /// JSON manifest `{"experiments": [{"name": ..., "tolerance": ...}]}`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl Command {
    /// Config file path, if given.
    pub fn config_path(&self) -> Option<&PathBuf> {
        let common = match self {
            Command::Spectrum(a) => &a.common,
            Command::Count(a) => &a.common,
            Command::CheckA(a) => &a.common,
            Command::CheckB(a) => &a.common,
            Command::Prop1(a) => &a.common,
            Command::Transfer(a) => &a.common,
            Command::Subordinacy(a) => &a.common,
            Command::Probe(a) => &a.common,
            Command::Reproduce(a) => &a.common,
            Command::Families => return None,
        };
        common.config.as_ref()
    }

    /// Flags as a config overlay.
    pub fn overlay(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        match self {
            Command::Spectrum(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                cfg.interval = bounds(&a.interval);
                cfg.closed = a.closed.then_some(true);
                cfg.schedule = a.schedule.clone();
                cfg.grid = a.grid;
            }
            Command::Count(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                cfg.interval = bounds(&a.interval);
                cfg.closed = a.closed.then_some(true);
                cfg.n = a.n;
            }
            Command::CheckA(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                (cfg.c, cfg.a, cfg.horizon) = (a.c, a.a, a.horizon);
            }
            Command::CheckB(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                (cfg.horizon, cfg.tail_window, cfg.crit_tol) =
                    (a.horizon, a.tail_window, a.crit_tol);
            }
            Command::Prop1(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                (cfg.m_list, cfg.horizon) = (a.m_list.clone(), a.horizon);
            }
            Command::Transfer(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                (cfg.lambda, cfg.k) = (a.lambda, a.k);
                cfg.window = a.window.as_ref().map(|w| [w[0], w[1]]);
            }
            Command::Subordinacy(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                (cfg.lambda, cfg.horizon) = (a.lambda, a.horizon);
                cfg.u_direction = a.u_direction.map(Into::into);
                cfg.v_direction = a.v_direction.map(Into::into);
                cfg.u_init = a.u_init.as_ref().map(|v| [v[0], v[1]]);
                cfg.v_init = a.v_init.as_ref().map(|v| [v[0], v[1]]);
                cfg.expect = a.expect.clone();
            }
            Command::Probe(a) => {
                a.common.apply(&mut cfg);
                a.family.apply(&mut cfg)?;
                (cfg.c, cfg.a, cfg.trials, cfg.first, cfg.last) =
                    (a.c, a.a, a.trials, a.first, a.last);
            }
            Command::Reproduce(a) => {
                a.common.apply(&mut cfg);
                if !a.experiments.is_empty() {
                    cfg.experiments = Some(a.experiments.clone());
                }
                cfg.manifest = a.manifest.clone();
            }
            Command::Families => {}
        }
        Ok(cfg)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Count(_) => "count",
            Command::CheckA(_) => "check-a",
            Command::CheckB(_) => "check-b",
            Command::Prop1(_) => "prop1",
            Command::Transfer(_) => "transfer",
            Command::Subordinacy(_) => "subordinacy",
            Command::Probe(_) => "probe",
            Command::Reproduce(_) => "reproduce",
            Command::Families => "families",
        }
    }
}
