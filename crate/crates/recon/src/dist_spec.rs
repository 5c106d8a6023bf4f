//! Text form of offspring distributions.
//!
//! ```text
//! deterministic:d=30
//! binomial:n=10000,p=0.003
//! poisson:lambda=30            (optional cutoff=N)
//! power-law:min=5,exponent=2.5,cutoff=200
//! explicit:@weights.csv        (one probability per line, row i is P[i])
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use recon_core::OffspringDistribution;

use crate::error::RunError;

fn invalid(reason: impl Into<String>) -> RunError {
    RunError::validation("dist", reason)
}

fn parse_params(body: &str) -> Result<BTreeMap<&str, &str>, RunError> {
    let mut params = BTreeMap::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| invalid(format!("expected key=value, got `{part}`")))?;
        if params.insert(key.trim(), value.trim()).is_some() {
            return Err(invalid(format!("parameter `{}` given twice", key.trim())));
        }
    }
    Ok(params)
}

fn take<T: FromStr>(params: &mut BTreeMap<&str, &str>, key: &str) -> Result<T, RunError> {
    let raw = params
        .remove(key)
        .ok_or_else(|| invalid(format!("missing parameter `{key}`")))?;
    raw.parse()
        .map_err(|_| invalid(format!("parameter `{key}` has invalid value `{raw}`")))
}

fn take_opt<T: FromStr>(params: &mut BTreeMap<&str, &str>, key: &str) -> Result<Option<T>, RunError> {
    if params.contains_key(key) {
        take(params, key).map(Some)
    } else {
        Ok(None)
    }
}

fn finish(params: BTreeMap<&str, &str>) -> Result<(), RunError> {
    match params.keys().next() {
        Some(key) => Err(invalid(format!("unknown parameter `{key}`"))),
        None => Ok(()),
    }
}

/// Reads one probability per line; line `i` (0-based, blank lines and `#`
/// comments skipped) is the probability of `i` children.
pub fn read_explicit(path: &Path) -> Result<Vec<f64>, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut probs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(invalid(format!("{} row {row}: expected one value", path.display())));
        }
        let p: f64 = record[0]
            .parse()
            .map_err(|_| invalid(format!("{} row {row}: `{}` is not a number", path.display(), &record[0])))?;
        probs.push(p);
    }
    Ok(probs)
}

/// Parses a distribution spec. Relative `explicit:@file` paths are resolved
/// against `base_dir`.
pub fn parse_dist_in(spec: &str, base_dir: &Path) -> Result<OffspringDistribution, RunError> {
    let (family, body) = spec
        .trim()
        .split_once(':')
        .ok_or_else(|| invalid(format!("`{spec}` lacks a `family:` prefix")))?;
    let family = family.trim().to_ascii_lowercase();
    if family == "explicit" {
        let path = body
            .trim()
            .strip_prefix('@')
            .ok_or_else(|| invalid("explicit distributions are given as explicit:@file.csv"))?;
        let probs = read_explicit(&base_dir.join(path))?;
        return Ok(OffspringDistribution::explicit(&probs)?);
    }
    let mut params = parse_params(body)?;
    let dist = match family.as_str() {
        "deterministic" => OffspringDistribution::deterministic(take(&mut params, "d")?),
        "binomial" => OffspringDistribution::binomial(take(&mut params, "n")?, take(&mut params, "p")?)?,
        "poisson" => {
            let lambda = take(&mut params, "lambda")?;
            match take_opt(&mut params, "cutoff")? {
                Some(cutoff) => OffspringDistribution::poisson_truncated(lambda, cutoff)?,
                None => OffspringDistribution::poisson(lambda)?,
            }
        }
        "power-law" | "powerlaw" => OffspringDistribution::power_law_tail(
            take(&mut params, "min")?,
            take(&mut params, "exponent")?,
            take(&mut params, "cutoff")?,
        )?,
        other => return Err(invalid(format!("unknown family `{other}`"))),
    };
    finish(params)?;
    Ok(dist)
}

pub fn parse_dist(spec: &str) -> Result<OffspringDistribution, RunError> {
    parse_dist_in(spec, Path::new("."))
}
