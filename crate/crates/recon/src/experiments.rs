//! Experiment runners. Each writes its CSV files into the output directory;
//! [`run`] adds `summary.txt` with the parameter echo, derived thresholds and
//! wall-clock time.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use recon_core::colouring::{allowed_sets, broadcast, root_marginal};
use recon_core::estimators::{
    a_membership_rate, disagreement_decay, freezable_rate, frozen_probability, leaf_count_stats,
    magnetization_stats, nonrecon_estimate, NonbiasFilter, SamplingConfig,
};
use recon_core::oracle::{
    all_shapes, magnetization_moments_from_table, random_shape, EnumerationLimit, LeafPatternTable,
};
use recon_core::rng::{derive_seed, stream_index};
use recon_core::thresholds::{
    compute_delta_minus, compute_delta_plus, disagreement_bound, k_lower, k_upper, recon_bound,
    ThresholdError, ThresholdMinusReport, ThresholdPlusReport,
};
use recon_core::trees::sample_tree;
use recon_core::{Executor, OffspringDistribution, Tree};

use num_traits::{ToPrimitive, Zero};
use num_rational::BigRational;
use num_bigint::BigInt;
use rand::Rng;

use crate::config::{Experiment, ExperimentConfig, Workers};
use crate::dist_spec::parse_dist;
use crate::error::RunError;
use crate::exec::Threaded;
use crate::formats::{read_tree, write_boundary, write_tree};

/// Column order of `frozen_sweep.csv`.
pub const FROZEN_SWEEP_COLUMNS: [&str; 10] = [
    "dist",
    "k",
    "h",
    "n_trees",
    "n_boundaries",
    "frozen_rate",
    "frozen_rate_uncond",
    "extinct_rate",
    "std_err",
    "seed",
];

const TAG_SHAPES: u64 = 1;
const TAG_ORACLE_BOUNDARIES: u64 = 2;
const TAG_TREE: u64 = 3;
const TAG_TREE_BOUNDARY: u64 = 4;

/// Version string recorded in every summary.
pub fn version() -> String {
    match option_env!("RECON_GIT_DESCRIBE") {
        Some(describe) => format!("{} ({describe})", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// `Δ₊` and `Δ₋` of the configured distribution.
#[derive(Clone, Debug)]
pub struct Derived {
    pub plus: Result<ThresholdPlusReport, ThresholdError>,
    pub minus: Result<ThresholdMinusReport, ThresholdError>,
}

impl Derived {
    pub fn compute(dist: &OffspringDistribution, cfg: &ExperimentConfig) -> Self {
        Self {
            plus: compute_delta_plus(dist, cfg.delta, cfg.beta, cfg.q_grid),
            minus: compute_delta_minus(dist, cfg.delta),
        }
    }

    fn delta_plus(&self, field: &str) -> Result<usize, RunError> {
        self.plus
            .as_ref()
            .map(|r| r.delta_plus)
            .map_err(|e| RunError::Failed(format!("{field} needs delta_plus: {e}")))
    }

    fn delta_minus(&self, field: &str) -> Result<&ThresholdMinusReport, RunError> {
        self.minus
            .as_ref()
            .map_err(|e| RunError::Failed(format!("{field} needs delta_minus: {e}")))
    }

    fn describe(&self, alpha: f64) -> String {
        let mut s = String::new();
        match &self.plus {
            Ok(r) => {
                writeln!(s, "delta_plus = {}", r.delta_plus).unwrap();
                writeln!(s, "delta_plus_q = {}", r.q).unwrap();
                writeln!(s, "delta_plus_slack_eq2 = {}", r.slack_eq2).unwrap();
                writeln!(s, "delta_plus_slack_eq3_left = {}", r.slack_eq3_left).unwrap();
                writeln!(s, "delta_plus_slack_eq3_right = {}", r.slack_eq3_right).unwrap();
                writeln!(s, "k_upper = {}", k_upper(alpha, r.delta_plus)).unwrap();
            }
            Err(e) => writeln!(s, "delta_plus = not found ({e})").unwrap(),
        }
        match &self.minus {
            Ok(r) => {
                writeln!(s, "delta_minus = {}", r.delta_minus).unwrap();
                writeln!(s, "delta_minus_g = {}", r.g).unwrap();
                writeln!(s, "delta_minus_slack_eq4 = {}", r.slack_eq4).unwrap();
                writeln!(s, "k_lower = {}", k_lower(alpha, r.delta_minus)).unwrap();
            }
            Err(e) => writeln!(s, "delta_minus = not found ({e})").unwrap(),
        }
        s
    }
}

fn executor(cfg: &ExperimentConfig) -> Threaded {
    match cfg.workers {
        Workers::Auto => Threaded::auto(),
        Workers::Fixed(n) => Threaded::new(n),
    }
}

fn sampling(cfg: &ExperimentConfig) -> SamplingConfig {
    SamplingConfig {
        node_cap: cfg.node_cap,
        node_budget: cfg.node_budget,
        max_individuals: cfg.node_cap as u64,
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, RunError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| RunError::io(&path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<(), RunError> {
        self.writer.write_record(fields.into_iter().collect::<Vec<_>>())?;
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf, RunError> {
        self.writer.flush().map_err(|e| RunError::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Output of one experiment body.
struct Outcome {
    files: Vec<PathBuf>,
    notes: String,
    failure: Option<String>,
}

impl Outcome {
    fn files(files: Vec<PathBuf>) -> Self {
        Self {
            files,
            notes: String::new(),
            failure: None,
        }
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let start = Instant::now();
    fs::create_dir_all(&cfg.out).map_err(|e| RunError::io(&cfg.out, e))?;
    let exec = executor(cfg);
    let dist = cfg.dist.as_deref().map(parse_dist).transpose()?;
    let derived = dist.as_ref().map(|d| Derived::compute(d, cfg));

    let outcome = match cfg.experiment {
        Experiment::Thresholds => thresholds(cfg, dist.as_ref().unwrap(), derived.as_ref().unwrap())?,
        Experiment::FrozenSweep => frozen_sweep(&exec, cfg, dist.as_ref().unwrap())?,
        Experiment::MagnetizationSweep => magnetization_sweep(&exec, cfg, dist.as_ref().unwrap())?,
        Experiment::AMembership => a_membership(&exec, cfg, dist.as_ref().unwrap(), derived.as_ref().unwrap())?,
        Experiment::CouplingDecay => coupling_decay(&exec, cfg, dist.as_ref(), derived.as_ref())?,
        Experiment::OracleCheck => oracle_check_experiment(&exec, cfg)?,
    };

    let mut summary = String::new();
    writeln!(summary, "recon {}", version()).unwrap();
    writeln!(summary, "\n[parameters]").unwrap();
    for (key, value) in cfg.echo() {
        writeln!(summary, "{key} = {value}").unwrap();
    }
    if let Some(d) = &derived {
        writeln!(summary, "\n[derived]").unwrap();
        summary.push_str(&d.describe(cfg.alpha));
    }
    if !outcome.notes.is_empty() {
        writeln!(summary, "\n[results]").unwrap();
        summary.push_str(&outcome.notes);
    }
    writeln!(summary, "\n[outputs]").unwrap();
    for f in &outcome.files {
        writeln!(summary, "{}", f.file_name().unwrap_or_default().to_string_lossy()).unwrap();
    }
    writeln!(summary, "\nwall_clock_seconds = {:.3}", start.elapsed().as_secs_f64()).unwrap();
    let summary_path = cfg.out.join("summary.txt");
    fs::write(&summary_path, &summary).map_err(|e| RunError::io(&summary_path, e))?;

    if let Some(failure) = outcome.failure {
        return Err(RunError::Failed(failure));
    }
    let mut files = outcome.files;
    files.push(summary_path);
    Ok(RunReport { files, summary })
}

fn thresholds(cfg: &ExperimentConfig, dist: &OffspringDistribution, derived: &Derived) -> Result<Outcome, RunError> {
    let mut out = CsvOut::create(
        &cfg.out,
        "thresholds.csv",
        &[
            "dist",
            "mean",
            "delta",
            "beta",
            "alpha",
            "delta_plus",
            "q",
            "slack_eq2",
            "slack_eq3_left",
            "slack_eq3_right",
            "k_upper",
            "delta_minus",
            "g",
            "slack_eq4",
            "k_lower",
        ],
    )?;
    let plus = derived.plus.as_ref().ok();
    let minus = derived.minus.as_ref().ok();
    out.row([
        cfg.dist.clone().unwrap_or_default(),
        num(dist.mean()),
        num(cfg.delta),
        num(cfg.beta),
        num(cfg.alpha),
        plus.map_or_else(String::new, |p| p.delta_plus.to_string()),
        opt_num(plus.map(|p| p.q)),
        opt_num(plus.map(|p| p.slack_eq2)),
        opt_num(plus.map(|p| p.slack_eq3_left)),
        opt_num(plus.map(|p| p.slack_eq3_right)),
        opt_num(plus.map(|p| k_upper(cfg.alpha, p.delta_plus))),
        minus.map_or_else(String::new, |m| m.delta_minus.to_string()),
        opt_num(minus.map(|m| m.g)),
        opt_num(minus.map(|m| m.slack_eq4)),
        opt_num(minus.map(|m| k_lower(cfg.alpha, m.delta_minus))),
    ])?;
    Ok(Outcome::files(vec![out.finish()?]))
}

fn frozen_sweep<E: Executor>(exec: &E, cfg: &ExperimentConfig, dist: &OffspringDistribution) -> Result<Outcome, RunError> {
    let ks = cfg.k_list.clone().unwrap_or_default();
    let hs = cfg.h_list.clone().unwrap_or_else(|| (1..=8).collect());
    let n_boundaries = cfg.n_boundaries.unwrap_or(5);
    let sampling = sampling(cfg);
    let mut out = CsvOut::create(&cfg.out, "frozen_sweep.csv", &FROZEN_SWEEP_COLUMNS)?;
    for &k in &ks {
        for &h in &hs {
            let est = frozen_probability(exec, dist, k, h, cfg.n_trees, n_boundaries, cfg.seed, &sampling)?;
            out.row([
                cfg.dist.clone().unwrap_or_default(),
                k.to_string(),
                h.to_string(),
                cfg.n_trees.to_string(),
                n_boundaries.to_string(),
                num(est.frozen_rate),
                num(est.frozen_rate_uncond),
                num(est.extinct_rate),
                num(est.std_error),
                cfg.seed.to_string(),
            ])?;
        }
    }
    Ok(Outcome::files(vec![out.finish()?]))
}

fn magnetization_sweep<E: Executor>(
    exec: &E,
    cfg: &ExperimentConfig,
    dist: &OffspringDistribution,
) -> Result<Outcome, RunError> {
    let ks = cfg.k_list.clone().unwrap_or_default();
    let hs = cfg.h_list.clone().unwrap_or_else(|| (1..=3).collect());
    let sampling = sampling(cfg);
    let mut out = CsvOut::create(
        &cfg.out,
        "magnetization_sweep.csv",
        &[
            "dist",
            "k",
            "h",
            "c",
            "n_samples",
            "mean_abs_y",
            "mean_abs_y_se",
            "mean_y_sq",
            "mean_y_sq_se",
            "cond_mean_y",
            "cond_mean_y_se",
            "identity_gap",
            "identity_gap_se",
            "nonrecon",
            "nonrecon_se",
            "nonrecon_cs_bound",
            "recon_bound",
            "seed",
        ],
    )?;
    for &k in &ks {
        for &h in &hs {
            let m = magnetization_stats(exec, dist, k, h, cfg.colour, cfg.n_samples, cfg.seed, &sampling)?;
            let nr = nonrecon_estimate(exec, dist, k, h, cfg.n_samples, cfg.seed, &sampling)?;
            out.row([
                cfg.dist.clone().unwrap_or_default(),
                k.to_string(),
                h.to_string(),
                cfg.colour.to_string(),
                cfg.n_samples.to_string(),
                num(m.mean_abs_y.mean),
                num(m.mean_abs_y.std_error),
                num(m.mean_y_sq.mean),
                num(m.mean_y_sq.std_error),
                num(m.cond_mean_y.mean),
                num(m.cond_mean_y.std_error),
                num(m.identity_gap.mean),
                num(m.identity_gap.std_error),
                num(nr.direct.mean),
                num(nr.direct.std_error),
                num(nr.second_moment_bound),
                num(recon_bound(k, cfg.log_base)),
                cfg.seed.to_string(),
            ])?;
        }
    }
    Ok(Outcome::files(vec![out.finish()?]))
}

fn a_membership<E: Executor>(
    exec: &E,
    cfg: &ExperimentConfig,
    dist: &OffspringDistribution,
    derived: &Derived,
) -> Result<Outcome, RunError> {
    let hs = cfg.h_list.clone().unwrap_or_else(|| (1..=8).collect());
    let dp = derived.delta_plus("a-membership")?;
    let minus = derived.delta_minus("a-membership")?.clone();
    let sampling = sampling(cfg);
    let d = dist.mean();
    let mut out = CsvOut::create(
        &cfg.out,
        "a_membership.csv",
        &[
            "dist",
            "h",
            "zeta",
            "delta",
            "delta_plus",
            "delta_minus",
            "n_samples",
            "a_rate",
            "a_std_err",
            "a_failure_reference",
            "freezable_rate",
            "freezable_std_err",
            "freezable_floor",
            "leaf_mean",
            "leaf_std_err",
            "leaf_expected",
            "seed",
        ],
    )?;
    for &h in &hs {
        let a = a_membership_rate(exec, dist, h, cfg.zeta, dp, cfg.delta, cfg.n_samples, cfg.seed, &sampling)?;
        let f = if h >= 1 {
            Some(freezable_rate(exec, dist, h, minus.delta_minus, cfg.delta, cfg.n_samples, cfg.seed, &sampling)?)
        } else {
            None
        };
        let leaves = match leaf_count_stats(exec, dist, h, cfg.n_samples, cfg.seed, &sampling) {
            Ok(e) => Some(e),
            Err(recon_core::estimators::EstimatorError::Tree(recon_core::TreeError::ResourceLimit { .. })) => None,
            Err(e) => return Err(e.into()),
        };
        out.row([
            cfg.dist.clone().unwrap_or_default(),
            h.to_string(),
            num(cfg.zeta),
            num(cfg.delta),
            dp.to_string(),
            minus.delta_minus.to_string(),
            cfg.n_samples.to_string(),
            num(a.mean),
            num(a.std_error),
            num(d.powf(-0.1 * h as f64)),
            opt_num(f.map(|e| e.mean)),
            opt_num(f.map(|e| e.std_error)),
            num(1.0 - minus.g),
            opt_num(leaves.map(|e| e.mean)),
            opt_num(leaves.map(|e| e.std_error)),
            num(d.powi(h as i32)),
            cfg.seed.to_string(),
        ])?;
    }
    Ok(Outcome::files(vec![out.finish()?]))
}

/// Draws trees of height `h` until one reaches depth `h`.
pub fn sample_surviving_tree(
    dist: &OffspringDistribution,
    h: u32,
    seed: u64,
    node_cap: usize,
) -> Result<Tree, RunError> {
    const ATTEMPTS: u64 = 1000;
    for attempt in 0..ATTEMPTS {
        let mut rng = derive_seed(seed, stream_index(TAG_TREE, attempt));
        let tree = sample_tree(dist, h, &mut rng, node_cap)?;
        if !tree.is_extinct() {
            return Ok(tree);
        }
    }
    Err(RunError::Failed(format!("no surviving tree of height {h} in {ATTEMPTS} draws")))
}

fn coupling_decay<E: Executor>(
    exec: &E,
    cfg: &ExperimentConfig,
    dist: Option<&OffspringDistribution>,
    derived: Option<&Derived>,
) -> Result<Outcome, RunError> {
    let tree = match &cfg.tree_file {
        Some(path) => read_tree(File::open(path).map_err(|e| RunError::io(path, e))?)?,
        None => sample_surviving_tree(dist.unwrap(), cfg.h_list.as_ref().unwrap()[0], cfg.seed, cfg.node_cap)?,
    };
    if tree.is_extinct() {
        return Err(RunError::validation("tree_file", "tree has no node at its truncation depth"));
    }
    let h = tree.height();
    let ks = cfg.k_list.clone().unwrap_or_default();
    let delta_plus = derived.and_then(|d| d.plus.as_ref().ok()).map(|r| r.delta_plus);
    let filter = if cfg.nonbias {
        let dp = delta_plus.ok_or_else(|| RunError::validation("nonbias", "needs a distribution with a delta_plus"))?;
        Some(NonbiasFilter {
            delta_plus: dp,
            delta: cfg.delta,
            gamma: cfg.gamma,
            fraction: cfg.fraction,
        })
    } else {
        None
    };

    let tree_path = cfg.out.join("tree.txt");
    let file = File::create(&tree_path).map_err(|e| RunError::io(&tree_path, e))?;
    write_tree(&tree, std::io::BufWriter::new(file)).map_err(|e| RunError::io(&tree_path, e))?;
    let boundary_path = cfg.out.join("boundary.csv");
    let mut rng = derive_seed(cfg.seed, stream_index(TAG_TREE_BOUNDARY, 0));
    let sample = broadcast(&tree, ks[0], 0, &mut rng)?.boundary(&tree);
    let file = File::create(&boundary_path).map_err(|e| RunError::io(&boundary_path, e))?;
    write_boundary(&tree, &sample, file)?;

    let mut out = CsvOut::create(
        &cfg.out,
        "coupling_decay.csv",
        &[
            "dist",
            "k",
            "h",
            "level",
            "vertex",
            "disagreement",
            "std_err",
            "accepted",
            "total",
            "bound",
            "seed",
        ],
    )?;
    let mut notes = String::new();
    writeln!(notes, "tree_nodes = {}", tree.len()).unwrap();
    writeln!(notes, "tree_leaves = {}", tree.leaf_count()).unwrap();
    for &k in &ks {
        let decay = disagreement_decay(exec, &tree, k, cfg.n_samples, cfg.seed, filter)?;
        writeln!(notes, "k = {k}: accepted {} of {}", decay.accepted, decay.total).unwrap();
        for (level, (&v, est)) in decay.path.iter().zip(&decay.per_vertex).enumerate() {
            let bound = delta_plus.map(|dp| disagreement_bound(dp, cfg.gamma, cfg.zeta, h - level as u32));
            out.row([
                cfg.dist.clone().unwrap_or_default(),
                k.to_string(),
                h.to_string(),
                level.to_string(),
                v.to_string(),
                num(est.mean),
                num(est.std_error),
                decay.accepted.to_string(),
                decay.total.to_string(),
                opt_num(bound),
                cfg.seed.to_string(),
            ])?;
        }
    }
    Ok(Outcome {
        files: vec![out.finish()?, tree_path, boundary_path],
        notes,
        failure: None,
    })
}

/// Settings of the oracle cross-check.
#[derive(Clone, Debug)]
pub struct OracleCheckParams {
    pub k_list: Vec<u32>,
    /// Every shape with up to this many nodes is checked.
    pub exhaustive_nodes: usize,
    /// Random shapes have between `exhaustive_nodes + 1` and `max_nodes` nodes.
    pub max_nodes: usize,
    pub n_random: u64,
    pub n_boundaries: u64,
    pub seed: u64,
    pub tolerance: f64,
}

/// Agreement counts for one `(k, node count)` cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleCheckRow {
    pub k: u32,
    pub nodes: usize,
    pub instances: u64,
    pub boundaries: u64,
    /// Boundaries where the recursion and the enumeration differ by more
    /// than the tolerance at some root colour.
    pub marginal_mismatches: u64,
    /// Boundaries where the allowed root colours differ from the support of
    /// the exact marginal.
    pub support_mismatches: u64,
    /// Root colours `c` where `E_c[Y] ≠ k·E[Y²]` in exact arithmetic.
    pub identity_failures: u64,
    /// Root colours `c` where `(E|Y|)² > E[Y²]` in exact arithmetic.
    pub cauchy_schwarz_failures: u64,
    pub max_abs_error: f64,
}

impl OracleCheckRow {
    pub fn mismatches(&self) -> u64 {
        self.marginal_mismatches + self.support_mismatches + self.identity_failures + self.cauchy_schwarz_failures
    }
}

/// The instance set: every shape up to `exhaustive_nodes` nodes, then
/// `n_random` random shapes.
pub fn oracle_instances(params: &OracleCheckParams) -> Vec<Tree> {
    let mut trees: Vec<Tree> = (1..=params.exhaustive_nodes.min(params.max_nodes))
        .flat_map(all_shapes)
        .collect();
    let lo = params.exhaustive_nodes + 1;
    if lo <= params.max_nodes {
        for i in 0..params.n_random {
            let mut rng = derive_seed(params.seed, stream_index(TAG_SHAPES, i));
            let n = rng.random_range(lo..=params.max_nodes);
            trees.push(random_shape(n, &mut rng));
        }
    }
    trees
}

fn check_instance(tree: &Tree, index: u64, params: &OracleCheckParams) -> Result<Vec<OracleCheckRow>, RunError> {
    let mut rng = derive_seed(params.seed, stream_index(TAG_ORACLE_BOUNDARIES, index));
    let mut rows = Vec::new();
    for &k in &params.k_list {
        let table = LeafPatternTable::build(tree, k, EnumerationLimit::default())?;
        let mut row = OracleCheckRow {
            k,
            nodes: tree.len(),
            instances: 1,
            ..Default::default()
        };
        let kq = BigRational::from_integer(BigInt::from(k));
        for c in 0..k {
            let m = magnetization_moments_from_table(&table, c)?;
            if m.cond_mean_y != &kq * &m.mean_y_sq {
                row.identity_failures += 1;
            }
            if &m.mean_abs_y * &m.mean_abs_y > m.mean_y_sq || m.mean_y_sq < BigRational::zero() {
                row.cauchy_schwarz_failures += 1;
            }
        }
        for _ in 0..params.n_boundaries {
            let root = rng.random_range(0..k);
            let boundary = broadcast(tree, k, root, &mut rng)?.boundary(tree);
            let fast = root_marginal(tree, k, &boundary)?;
            let exact = table.root_marginal_rational(boundary.as_slice())?;
            let mut err: f64 = 0.0;
            let mut support = 0u64;
            for (c, p) in exact.iter().enumerate() {
                err = err.max((fast.get(c as u32) - p.to_f64().unwrap_or(f64::NAN)).abs());
                if !p.is_zero() {
                    support |= 1 << c;
                }
            }
            row.boundaries += 1;
            row.max_abs_error = row.max_abs_error.max(err);
            if !(err <= params.tolerance) {
                row.marginal_mismatches += 1;
            }
            if allowed_sets(tree, k, &boundary)?.set(0) != support {
                row.support_mismatches += 1;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Compares the fast recursions against brute-force enumeration on every
/// instance. Rows are sorted by `(k, nodes)`.
pub fn oracle_check<E: Executor>(exec: &E, params: &OracleCheckParams) -> Result<Vec<OracleCheckRow>, RunError> {
    let trees = oracle_instances(params);
    let per_instance = exec.map_indexed(trees.len() as u64, |i| check_instance(&trees[i as usize], i, params));
    let mut cells: std::collections::BTreeMap<(u32, usize), OracleCheckRow> = Default::default();
    for rows in per_instance {
        for r in rows? {
            let cell = cells.entry((r.k, r.nodes)).or_insert_with(|| OracleCheckRow {
                k: r.k,
                nodes: r.nodes,
                ..Default::default()
            });
            cell.instances += r.instances;
            cell.boundaries += r.boundaries;
            cell.marginal_mismatches += r.marginal_mismatches;
            cell.support_mismatches += r.support_mismatches;
            cell.identity_failures += r.identity_failures;
            cell.cauchy_schwarz_failures += r.cauchy_schwarz_failures;
            cell.max_abs_error = cell.max_abs_error.max(r.max_abs_error);
        }
    }
    Ok(cells.into_values().collect())
}

fn oracle_check_experiment<E: Executor>(exec: &E, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let params = OracleCheckParams {
        k_list: cfg.k_list.clone().unwrap_or_else(|| vec![3, 4]),
        exhaustive_nodes: cfg.exhaustive_nodes,
        max_nodes: cfg.max_nodes,
        n_random: cfg.n_random,
        n_boundaries: cfg.n_boundaries.unwrap_or(20),
        seed: cfg.seed,
        tolerance: 1e-10,
    };
    let rows = oracle_check(exec, &params)?;
    let mut out = CsvOut::create(
        &cfg.out,
        "oracle_check.csv",
        &[
            "k",
            "nodes",
            "instances",
            "boundaries",
            "marginal_mismatches",
            "support_mismatches",
            "identity_failures",
            "cauchy_schwarz_failures",
            "max_abs_error",
            "seed",
        ],
    )?;
    for r in &rows {
        out.row([
            r.k.to_string(),
            r.nodes.to_string(),
            r.instances.to_string(),
            r.boundaries.to_string(),
            r.marginal_mismatches.to_string(),
            r.support_mismatches.to_string(),
            r.identity_failures.to_string(),
            r.cauchy_schwarz_failures.to_string(),
            num(r.max_abs_error),
            cfg.seed.to_string(),
        ])?;
    }
    let total: u64 = rows.iter().map(OracleCheckRow::mismatches).sum();
    let instances: u64 = rows.iter().map(|r| r.instances).sum();
    let mut notes = String::new();
    writeln!(notes, "instances = {instances}").unwrap();
    writeln!(notes, "mismatches = {total}").unwrap();
    Ok(Outcome {
        files: vec![out.finish()?],
        notes,
        failure: (total > 0).then(|| format!("oracle check found {total} mismatches")),
    })
}
