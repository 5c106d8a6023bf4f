use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use recon::config::NODE_CAP_ENV;
use recon::{run, Experiment, ExperimentConfig, RawConfig, RunError};

#[derive(Parser)]
#[command(name = "recon", version, about = "Reconstruction experiments for random colourings of Galton-Watson trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Δ₊ and Δ₋ with their witnesses and the k thresholds.
    Thresholds(Flags),
    /// Frozen-root rate over a grid of colour counts and heights.
    FrozenSweep(Flags),
    /// Magnetization moments and the non-reconstruction statistic.
    MagnetizationSweep(Flags),
    /// Rates of trees in 𝒜_{h,ζ}, freezable roots and leaf counts.
    AMembership(Flags),
    /// Disagreement along a root-leaf path after changing one leaf.
    CouplingDecay(Flags),
    /// Cross-check exact recursions against brute-force enumeration.
    OracleCheck(Flags),
}

/// Every flag mirrors a config-file key of the same name in snake case.
#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Offspring distribution, e.g. `deterministic:d=30` or `binomial:n=10000,p=0.003`.
    #[arg(long)]
    dist: Option<String>,
    /// A single colour count.
    #[arg(long)]
    k: Option<String>,
    /// Colour counts, e.g. `5,6,8` or `5..12`.
    #[arg(long)]
    k_list: Option<String>,
    /// A single height.
    #[arg(long)]
    h: Option<String>,
    /// Heights, e.g. `1..8`.
    #[arg(long)]
    h_list: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Defaults to min(alpha/2, 1/10).
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    zeta: Option<String>,
    /// Defaults to delta.
    #[arg(long)]
    gamma: Option<String>,
    /// Root colour for the conditional magnetization.
    #[arg(long)]
    colour: Option<String>,
    #[arg(long)]
    n_samples: Option<String>,
    #[arg(long)]
    n_trees: Option<String>,
    #[arg(long)]
    n_boundaries: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads, or `auto`.
    #[arg(long)]
    workers: Option<String>,
    /// Cap on nodes in any explicitly built tree (also settable via RECON_NODE_CAP).
    #[arg(long)]
    node_cap: Option<String>,
    /// Expected node budget for the explicit top of large trees.
    #[arg(long)]
    node_budget: Option<String>,
    /// Grid size for the witness q.
    #[arg(long)]
    q_grid: Option<String>,
    /// Logarithm base in 1 - 1/log k style expressions: `2` or `e`.
    #[arg(long)]
    log_base: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// oracle-check: largest tree size.
    #[arg(long)]
    max_nodes: Option<String>,
    /// oracle-check: every shape up to this size is checked.
    #[arg(long)]
    exhaustive_nodes: Option<String>,
    /// oracle-check: number of random larger shapes.
    #[arg(long)]
    n_random: Option<String>,
    /// coupling-decay: read the tree from a dump instead of sampling it.
    #[arg(long)]
    tree_file: Option<String>,
    /// coupling-decay: keep only boundary pairs that are both non-biasing.
    #[arg(long)]
    nonbias: Option<String>,
    /// coupling-decay: fraction of the height covered by the non-biasing condition.
    #[arg(long)]
    fraction: Option<String>,
}

impl Flags {
    fn raw(&self) -> Result<RawConfig, RunError> {
        let mut raw = RawConfig::new();
        let pairs = [
            ("dist", &self.dist),
            ("k", &self.k),
            ("k_list", &self.k_list),
            ("h", &self.h),
            ("h_list", &self.h_list),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("beta", &self.beta),
            ("zeta", &self.zeta),
            ("gamma", &self.gamma),
            ("colour", &self.colour),
            ("n_samples", &self.n_samples),
            ("n_trees", &self.n_trees),
            ("n_boundaries", &self.n_boundaries),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("node_cap", &self.node_cap),
            ("node_budget", &self.node_budget),
            ("q_grid", &self.q_grid),
            ("log_base", &self.log_base),
            ("out", &self.out),
            ("max_nodes", &self.max_nodes),
            ("exhaustive_nodes", &self.exhaustive_nodes),
            ("n_random", &self.n_random),
            ("tree_file", &self.tree_file),
            ("nonbias", &self.nonbias),
            ("fraction", &self.fraction),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v.as_str())?;
            }
        }
        Ok(raw)
    }
}

fn execute(experiment: Experiment, flags: &Flags) -> Result<(), RunError> {
    let mut file = match &flags.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::new(),
    };
    if let Some(named) = file.get("experiment") {
        if named != experiment.name() {
            return Err(RunError::validation(
                "experiment",
                format!("config file is for `{named}`, command is `{experiment}`"),
            ));
        }
    }
    file.set("experiment", experiment.name())?;
    let env_cap = std::env::var(NODE_CAP_ENV).ok();
    let cfg = ExperimentConfig::resolve(&file, &flags.raw()?, env_cap.as_deref())?;
    let report = run(&cfg)?;
    print!("{}", report.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::Thresholds(f) => (Experiment::Thresholds, f),
        Command::FrozenSweep(f) => (Experiment::FrozenSweep, f),
        Command::MagnetizationSweep(f) => (Experiment::MagnetizationSweep, f),
        Command::AMembership(f) => (Experiment::AMembership, f),
        Command::CouplingDecay(f) => (Experiment::CouplingDecay, f),
        Command::OracleCheck(f) => (Experiment::OracleCheck, f),
    };
    match execute(experiment, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
