use std::path::{Path, PathBuf};

use anneal_cert::DeltaMode;
use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Settings shared by all subcommands. Every field may come from the JSON
/// config file; a flag given on the command line wins over the file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct Settings {
    /// Value imprecision epsilon in [0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Residual-domain fraction alpha in (0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Target confidence sigma in (0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Total-variation target for the chain state.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv: Option<f64>,
    /// Fixed density offset delta > 0.
    #[arg(long, conflicts_with_all = ["optimize_delta", "min_steps_delta"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Choose delta to minimize J.
    #[arg(long, conflicts_with = "min_steps_delta")]
    #[serde(default, skip_serializing_if = "is_false")]
    pub optimize_delta: bool,
    /// Choose delta to minimize the certified number of steps.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub min_steps_delta: bool,
    /// Inverse temperature of the final stage (run without a certificate).
    #[arg(long = "J")]
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    /// Final-stage steps (run without a certificate).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Registry function, e.g. bumps1d or rastrigin-scaled-2d. A `noisy-`
    /// prefix selects the expected-value kernel.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// uniform | walk:SCALE | mix:WEIGHT,SCALE
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal: Option<String>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Cap on certified final-stage steps.
    #[arg(long, env = "ANNEAL_CERT_BUDGET")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// Record every N-th step in trace.csv (0 disables the trace).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<u64>,
    /// Run only the final stage instead of the warm-up ladder.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub no_ladder: bool,
    /// Verification suite: sigma-bound, stationarity, tv-domination, bijection, all.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `self` (the flags) override those in `file`.
    pub fn over(self, file: Settings) -> Settings {
        // a delta-mode flag replaces whatever mode the file chose
        let flag_mode = self.delta.is_some() || self.optimize_delta || self.min_steps_delta;
        let (delta, optimize_delta, min_steps_delta) = if flag_mode {
            (self.delta, self.optimize_delta, self.min_steps_delta)
        } else {
            (file.delta, file.optimize_delta, file.min_steps_delta)
        };
        Settings {
            epsilon: self.epsilon.or(file.epsilon),
            alpha: self.alpha.or(file.alpha),
            sigma: self.sigma.or(file.sigma),
            tv: self.tv.or(file.tv),
            delta,
            optimize_delta,
            min_steps_delta,
            j: self.j.or(file.j),
            steps: self.steps.or(file.steps),
            seed: self.seed.or(file.seed),
            function: self.function.or(file.function),
            dim: self.dim.or(file.dim),
            proposal: self.proposal.or(file.proposal),
            out: self.out.or(file.out),
            budget: self.budget.or(file.budget),
            trace_every: self.trace_every.or(file.trace_every),
            no_ladder: self.no_ladder || file.no_ladder,
            suite: self.suite.or(file.suite),
        }
    }

    pub fn delta_mode(&self) -> Result<DeltaMode> {
        match (self.delta, self.optimize_delta, self.min_steps_delta) {
            (Some(d), false, false) => Ok(DeltaMode::Fixed(d)),
            (None, true, false) => Ok(DeltaMode::Optimize),
            (None, false, true) => Ok(DeltaMode::MinSteps),
            (None, false, false) => bail!("give --delta, --optimize-delta or --min-steps-delta"),
            _ => bail!("--delta, --optimize-delta and --min-steps-delta are mutually exclusive"),
        }
    }

    pub fn wants_certificate(&self) -> bool {
        self.epsilon.is_some() || self.alpha.is_some() || self.sigma.is_some() || self.tv.is_some()
    }

    pub fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T> {
        value.with_context(|| format!("missing --{flag}"))
    }
}
