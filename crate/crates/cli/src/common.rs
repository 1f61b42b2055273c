use std::fs;
use std::path::{Path, PathBuf};

use agri_offload::agents::{load_tables_for, AgentError, OffloadLearner};
use agri_offload::baselines::by_name;
use agri_offload::scenario::{EpisodeTrace, Scenario, ScenarioConfig};
use agri_offload::simenv::{run_policy, KpiReport};

use crate::error::CliError;
use crate::CommonArgs;

pub fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    match &common.config {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(CliError::io(p))?;
            Ok(ScenarioConfig::from_toml_str(&text)?)
        }
    }
}

pub fn out_dir(common: &CommonArgs) -> Result<&Path, CliError> {
    fs::create_dir_all(&common.out).map_err(CliError::io(&common.out))?;
    Ok(&common.out)
}

/// A policy under evaluation: a baseline by name or a set of trained tables.
pub enum PolicySpec {
    Baseline(String),
    Tables { name: String, learner: Box<OffloadLearner<f64>> },
}

impl PolicySpec {
    pub fn name(&self) -> &str {
        match self {
            PolicySpec::Baseline(n) => n,
            PolicySpec::Tables { name, .. } => name,
        }
    }

    /// Runs one episode; `seed` feeds randomized baselines.
    pub fn run(&self, scenario: &Scenario<f64>, trace: &EpisodeTrace<f64>, seed: u64) -> Result<KpiReport<f64>, CliError> {
        Ok(match self {
            PolicySpec::Baseline(n) => run_policy(scenario, trace, &mut by_name::<f64>(n, seed)?)?.report,
            PolicySpec::Tables { learner, .. } => learner.evaluate(scenario, trace)?,
        })
    }
}

pub fn load_policies(
    names: &[String],
    tables: &[PathBuf],
    scenario: &Scenario<f64>,
) -> Result<Vec<PolicySpec>, CliError> {
    let mut out = Vec::new();
    for n in names {
        by_name::<f64>(n, 0)?;
        out.push(PolicySpec::Baseline(n.clone()));
    }
    for p in tables {
        let learner = load_tables_for(p, scenario).map_err(|e| match e {
            AgentError::Io(source) => CliError::Io { path: p.display().to_string(), source },
            e => e.into(),
        })?;
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        out.push(PolicySpec::Tables { name, learner: Box::new(learner) });
    }
    if out.is_empty() {
        return Err(CliError::Config("no policy given; use --policy and/or --tables".into()));
    }
    Ok(out)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Parses `a:b:step` into the inclusive list of points.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::InvalidRange(format!("`{text}`: {m}"));
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = match parts.as_slice() {
        [a] => vec![a.parse().map_err(|_| bad("not a number"))?],
        [a, b, s] => {
            let p = |x: &str| x.trim().parse::<f64>().map_err(|_| bad("not a number"));
            vec![p(a)?, p(b)?, p(s)?]
        }
        _ => return Err(bad("expected a:b:step")),
    };
    if nums.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if nums.len() == 1 {
        return Ok(nums);
    }
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if b < a {
        return Err(bad("end lies before start"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    // snap to 12 decimals so 0.1 + 0.2 style drift does not leak into configs
    Ok((0..n).map(|i| ((a + step * i as f64) * 1e12).round() / 1e12).collect())
}
