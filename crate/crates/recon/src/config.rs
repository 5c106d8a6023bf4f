//! Experiment configuration.
//!
//! Settings come from three layers, later ones winning: an optional flat
//! `key = value` file, the `RECON_NODE_CAP` environment variable (for
//! `node_cap` only), and command-line flags. Keys use snake case; flags use
//! the same names in kebab case.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use recon_core::thresholds::{DeltaRule, LogBase};
use recon_core::trees::hybrid::DEFAULT_NODE_BUDGET;
use recon_core::trees::DEFAULT_NODE_CAP;

use crate::error::RunError;

/// Environment variable overriding `node_cap`.
pub const NODE_CAP_ENV: &str = "RECON_NODE_CAP";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Thresholds,
    FrozenSweep,
    MagnetizationSweep,
    AMembership,
    CouplingDecay,
    OracleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Thresholds,
        Self::FrozenSweep,
        Self::MagnetizationSweep,
        Self::AMembership,
        Self::CouplingDecay,
        Self::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Thresholds => "thresholds",
            Self::FrozenSweep => "frozen-sweep",
            Self::MagnetizationSweep => "magnetization-sweep",
            Self::AMembership => "a-membership",
            Self::CouplingDecay => "coupling-decay",
            Self::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| RunError::validation("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Workers {
    Auto,
    Fixed(usize),
}

/// Every key accepted in a config file or as a flag.
pub const KEYS: &[&str] = &[
    "experiment",
    "dist",
    "k",
    "k_list",
    "h",
    "h_list",
    "alpha",
    "delta",
    "beta",
    "zeta",
    "gamma",
    "colour",
    "n_samples",
    "n_trees",
    "n_boundaries",
    "seed",
    "workers",
    "node_cap",
    "node_budget",
    "q_grid",
    "log_base",
    "out",
    "max_nodes",
    "exhaustive_nodes",
    "n_random",
    "tree_file",
    "nonbias",
    "fraction",
];

/// Unparsed settings, keyed by snake-case name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn normalise_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), RunError> {
        let key = normalise_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(RunError::validation(key, "unknown setting"));
        }
        self.values.insert(key, value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut raw = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| RunError::validation("config", format!("line {}: expected key = value", i + 1)))?;
            raw.set(key, value)?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::parse(&text)
    }

    /// Overlays `other` on `self`.
    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, RunError> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| RunError::validation(key, format!("cannot parse `{v}`")))
            })
            .transpose()
    }
}

/// Parses `3,5,8`, `1..8` (inclusive) or a mix such as `1..3,6`.
pub fn parse_list(field: &str, text: &str) -> Result<Vec<u32>, RunError> {
    let bad = || RunError::validation(field, format!("cannot parse list `{text}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(RunError::validation(field, "list is empty"));
    }
    Ok(out)
}

/// A validated experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dist: Option<String>,
    pub k_list: Option<Vec<u32>>,
    pub h_list: Option<Vec<u32>>,
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub colour: u32,
    pub n_samples: u64,
    pub n_trees: u64,
    pub n_boundaries: Option<u64>,
    pub seed: u64,
    pub workers: Workers,
    pub node_cap: usize,
    pub node_budget: f64,
    pub q_grid: usize,
    pub log_base: LogBase,
    pub out: PathBuf,
    pub max_nodes: usize,
    pub exhaustive_nodes: usize,
    pub n_random: u64,
    pub tree_file: Option<PathBuf>,
    pub nonbias: bool,
    pub fraction: f64,
}

fn parse_bool(field: &str, v: &str) -> Result<bool, RunError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(RunError::validation(field, format!("expected true or false, got `{v}`"))),
    }
}

impl ExperimentConfig {
    /// Resolves defaults and checks every invariant. `env_node_cap` is the
    /// value of [`NODE_CAP_ENV`], consulted only when `node_cap` is absent
    /// from `cli`.
    pub fn resolve(file: &RawConfig, cli: &RawConfig, env_node_cap: Option<&str>) -> Result<Self, RunError> {
        let mut raw = file.clone();
        if let Some(cap) = env_node_cap {
            raw.set("node_cap", cap)?;
        }
        raw.merge(cli);
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, RunError> {
        let experiment: Experiment = raw
            .get("experiment")
            .ok_or_else(|| RunError::validation("experiment", "missing"))?
            .parse()?;
        let list = |single: &str, many: &str| -> Result<Option<Vec<u32>>, RunError> {
            match (raw.get(single), raw.get(many)) {
                (Some(_), Some(_)) => Err(RunError::validation(single, format!("give either `{single}` or `{many}`"))),
                (Some(v), None) => parse_list(single, v).map(Some),
                (None, Some(v)) => parse_list(many, v).map(Some),
                (None, None) => Ok(None),
            }
        };
        let alpha = raw.parsed("alpha")?.unwrap_or(0.2);
        let delta = match raw.parsed("delta")? {
            Some(d) => d,
            None => DeltaRule::default().delta(alpha),
        };
        let workers = match raw.get("workers") {
            None => Workers::Auto,
            Some(v) if v.eq_ignore_ascii_case("auto") => Workers::Auto,
            Some(v) => Workers::Fixed(
                v.parse()
                    .map_err(|_| RunError::validation("workers", format!("expected a count or `auto`, got `{v}`")))?,
            ),
        };
        let log_base = match raw.get("log_base") {
            None => LogBase::default(),
            Some("2") | Some("two") => LogBase::Two,
            Some("e") | Some("natural") => LogBase::Natural,
            Some(v) => return Err(RunError::validation("log_base", format!("expected 2 or e, got `{v}`"))),
        };
        let cfg = Self {
            experiment,
            dist: raw.get("dist").map(str::to_string),
            k_list: list("k", "k_list")?,
            h_list: list("h", "h_list")?,
            alpha,
            delta,
            beta: raw.parsed("beta")?.unwrap_or(4.0),
            zeta: raw.parsed("zeta")?.unwrap_or(0.25),
            gamma: raw.parsed("gamma")?.unwrap_or(delta),
            colour: raw.parsed("colour")?.unwrap_or(0),
            n_samples: raw.parsed("n_samples")?.unwrap_or(1000),
            n_trees: raw.parsed("n_trees")?.unwrap_or(1000),
            n_boundaries: raw.parsed("n_boundaries")?,
            seed: raw.parsed("seed")?.unwrap_or(0),
            workers,
            node_cap: raw.parsed("node_cap")?.unwrap_or(DEFAULT_NODE_CAP),
            node_budget: raw.parsed("node_budget")?.unwrap_or(DEFAULT_NODE_BUDGET),
            q_grid: raw.parsed("q_grid")?.unwrap_or(200),
            log_base,
            out: raw.get("out").map_or_else(|| PathBuf::from("results"), PathBuf::from),
            max_nodes: raw.parsed("max_nodes")?.unwrap_or(9),
            exhaustive_nodes: raw.parsed("exhaustive_nodes")?.unwrap_or(6),
            n_random: raw.parsed("n_random")?.unwrap_or(500),
            tree_file: raw.get("tree_file").map(PathBuf::from),
            nonbias: raw.get("nonbias").map(|v| parse_bool("nonbias", v)).transpose()?.unwrap_or(false),
            fraction: raw.parsed("fraction")?.unwrap_or(0.75),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), RunError> {
        let fail = |field: &str, reason: &str| Err(RunError::validation(field, reason));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha", "must be positive");
        }
        if !(self.delta > 0.0 && self.delta <= 0.1) {
            return fail("delta", "must lie in (0, 1/10]");
        }
        if !(self.beta >= 4.0) {
            return fail("beta", "must be at least 4");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return fail("zeta", "must lie in (0, 1)");
        }
        if !(self.gamma >= 0.0 && self.gamma <= self.delta) {
            return fail("gamma", "must lie in [0, delta]");
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return fail("fraction", "must lie in (0, 1]");
        }
        if let Some(ks) = &self.k_list {
            if ks.iter().any(|&k| !(2..=64).contains(&k)) {
                return fail("k", "every k must lie in 2..=64");
            }
            if ks.iter().any(|&k| self.colour >= k) {
                return fail("colour", "must be below every k");
            }
        }
        for (field, v) in [("n_samples", self.n_samples), ("n_trees", self.n_trees), ("n_boundaries", self.n_boundaries.unwrap_or(1))] {
            if v == 0 {
                return fail(field, "must be at least 1");
            }
        }
        if self.workers == Workers::Fixed(0) {
            return fail("workers", "must be at least 1");
        }
        if self.node_cap == 0 {
            return fail("node_cap", "must be at least 1");
        }
        if !(self.node_budget >= 1.0) {
            return fail("node_budget", "must be at least 1");
        }
        if self.q_grid == 0 {
            return fail("q_grid", "must be at least 1");
        }
        if self.max_nodes == 0 {
            return fail("max_nodes", "must be at least 1");
        }
        let needs_dist = !matches!(self.experiment, Experiment::OracleCheck)
            && !(self.experiment == Experiment::CouplingDecay && self.tree_file.is_some());
        if needs_dist && self.dist.is_none() {
            return fail("dist", "required for this experiment");
        }
        if matches!(self.experiment, Experiment::FrozenSweep | Experiment::MagnetizationSweep | Experiment::CouplingDecay)
            && self.k_list.is_none()
        {
            return fail("k", "required for this experiment");
        }
        if self.experiment == Experiment::CouplingDecay {
            if self.tree_file.is_none() && self.h_list.as_ref().is_none_or(|h| h.len() != 1) {
                return fail("h", "coupling-decay needs exactly one height");
            }
            if self.k_list.iter().flatten().any(|&k| k < 3) {
                return fail("k", "coupling-decay needs k >= 3");
            }
        }
        if self.experiment == Experiment::FrozenSweep && self.h_list.iter().flatten().any(|&h| h == 0) {
            return fail("h", "frozen-sweep needs h >= 1");
        }
        Ok(())
    }

    /// `key = value` lines describing the resolved configuration.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let list = |l: &Option<Vec<u32>>| {
            l.as_ref()
                .map_or_else(|| "-".to_string(), |v| v.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
        };
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map_or_else(|| "-".to_string(), |p| p.display().to_string());
        vec![
            ("experiment", self.experiment.to_string()),
            ("dist", self.dist.clone().unwrap_or_else(|| "-".into())),
            ("k_list", list(&self.k_list)),
            ("h_list", list(&self.h_list)),
            ("alpha", self.alpha.to_string()),
            ("delta", self.delta.to_string()),
            ("beta", self.beta.to_string()),
            ("zeta", self.zeta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("colour", self.colour.to_string()),
            ("n_samples", self.n_samples.to_string()),
            ("n_trees", self.n_trees.to_string()),
            ("n_boundaries", self.n_boundaries.map_or_else(|| "-".into(), |n| n.to_string())),
            ("seed", self.seed.to_string()),
            (
                "workers",
                match self.workers {
                    Workers::Auto => "auto".into(),
                    Workers::Fixed(n) => n.to_string(),
                },
            ),
            ("node_cap", self.node_cap.to_string()),
            ("node_budget", self.node_budget.to_string()),
            ("q_grid", self.q_grid.to_string()),
            (
                "log_base",
                match self.log_base {
                    LogBase::Two => "2".into(),
                    LogBase::Natural => "e".into(),
                },
            ),
            ("out", self.out.display().to_string()),
            ("max_nodes", self.max_nodes.to_string()),
            ("exhaustive_nodes", self.exhaustive_nodes.to_string()),
            ("n_random", self.n_random.to_string()),
            ("tree_file", opt_path(&self.tree_file)),
            ("nonbias", self.nonbias.to_string()),
            ("fraction", self.fraction.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, &str)]) -> RawConfig {
        let mut r = RawConfig::new();
        for (k, v) in pairs {
            r.set(k, *v).unwrap();
        }
        r
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("h", "1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_list("k", "5,6, 8").unwrap(), vec![5, 6, 8]);
        assert_eq!(parse_list("h", "1..2,7").unwrap(), vec![1, 2, 7]);
        assert!(parse_list("h", "4..1").is_err());
        assert!(parse_list("h", "").is_err());
    }

    #[test]
    fn file_then_env_then_flags() {
        let file = RawConfig::parse("experiment = thresholds\ndist = deterministic:d=30 # comment\nnode_cap = 10\nseed = 1\n").unwrap();
        let cli = raw(&[("seed", "9")]);
        let cfg = ExperimentConfig::resolve(&file, &cli, Some("20")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.node_cap, 20);
        let cli = raw(&[("node-cap", "30")]);
        assert_eq!(ExperimentConfig::resolve(&file, &cli, Some("20")).unwrap().node_cap, 30);
    }

    #[test]
    fn defaults_follow_alpha() {
        let cfg = ExperimentConfig::from_raw(&raw(&[("experiment", "thresholds"), ("dist", "deterministic:d=5"), ("alpha", "0.1")])).unwrap();
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.gamma, 0.05);
        assert_eq!(cfg.beta, 4.0);
    }

    #[test]
    fn validation_names_the_field() {
        let base = [("experiment", "frozen-sweep"), ("dist", "deterministic:d=5"), ("k", "3")];
        let cases: &[(&str, &str, &str)] = &[
            ("alpha", "-1", "alpha"),
            ("delta", "0.2", "delta"),
            ("beta", "3", "beta"),
            ("zeta", "1", "zeta"),
            ("gamma", "0.5", "gamma"),
            ("n_trees", "0", "n_trees"),
            ("seed", "x", "seed"),
            ("h_list", "0..2", "h"),
            ("workers", "many", "workers"),
        ];
        for &(key, value, field) in cases {
            let mut r = raw(&base);
            r.set(key, value).unwrap();
            match ExperimentConfig::from_raw(&r) {
                Err(RunError::Validation { field: f, .. }) => assert_eq!(f, field, "{key}={value}"),
                other => panic!("{key}={value}: {other:?}"),
            }
        }
        assert!(matches!(
            RawConfig::parse("bogus = 1"),
            Err(RunError::Validation { field, .. }) if field == "bogus"
        ));
        assert!(matches!(
            ExperimentConfig::from_raw(&raw(&[("experiment", "frozen-sweep"), ("k", "3")])),
            Err(RunError::Validation { field, .. }) if field == "dist"
        ));
    }
}
