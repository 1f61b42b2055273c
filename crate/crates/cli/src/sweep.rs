use std::path::PathBuf;

use clap::{Args, ValueEnum};

use agri_offload::scenario::{Scenario, ScenarioConfig};

use crate::common::{load_config, load_policies, mean, out_dir, parse_range, stddev};
use crate::error::CliError;
use crate::eval::{evaluate_all, fmt6};
use crate::manifest::RunManifest;
use crate::CommonArgs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Pesticide-detection processing time at an ABS, seconds.
    #[value(name = "pd_proc_time")]
    PdProcTime,
    /// Pesticide-detection deadline, seconds.
    #[value(name = "pd_deadline")]
    PdDeadline,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::PdProcTime => "pd_proc_time",
            Axis::PdDeadline => "pd_deadline",
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Sweep points as `a:b:step` (inclusive) or a single value.
    #[arg(long)]
    pub range: String,
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<String>,
    /// Frozen tables trained on the base scenario; never retrained.
    #[arg(long, value_delimiter = ',')]
    pub tables: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
}

fn pesticide_index(cfg: &ScenarioConfig) -> usize {
    cfg.task_types.iter().position(|t| t.name.contains("pesticide")).unwrap_or(1.min(cfg.task_types.len() - 1))
}

/// The base world with the pesticide task moved to `value` on `axis`. A
/// processing-time point keeps the MEC to ABS speed ratio, rounded up to whole
/// intervals.
pub fn world_at(base: &ScenarioConfig, axis: Axis, value: f64) -> Result<Scenario<f64>, CliError> {
    let mut cfg = base.clone();
    let k = pesticide_index(&cfg);
    let t = &mut cfg.task_types[k];
    match axis {
        Axis::PdProcTime => {
            let ratio = t.proc_time_mec / t.proc_time_abs;
            let len = cfg.interval_len;
            t.proc_time_abs = value;
            t.proc_time_mec = ((value * ratio / len - 1e-9).ceil() * len * 1e9).round() / 1e9;
        }
        Axis::PdDeadline => t.deadline = value,
    }
    cfg.build().map_err(|e| CliError::InvalidRange(format!("{} = {value}: {e}", axis.name())))
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let base = load_config(&args.common)?;
    let points = parse_range(&args.range)?;
    let base_world: Scenario<f64> = base.build()?;
    let policies = load_policies(&args.policy, &args.tables, &base_world)?;
    let worlds: Vec<Scenario<f64>> = points.iter().map(|&v| world_at(&base, args.axis, v)).collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = (args.common.seed..args.common.seed + args.seeds).collect();
    if seeds.is_empty() {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let dir = out_dir(&args.common)?;
    let mut manifest = RunManifest::new("sweep", base_world.fingerprint());
    manifest.seeds = seeds.clone();
    manifest.policies = policies.iter().map(|p| p.name().to_string()).collect();
    manifest.set("axis", args.axis.name());
    manifest.set("range", &args.range);

    let mut w = manifest.csv(dir, "sweep.csv")?;
    w.write_record([
        "axis",
        "value",
        "policy",
        "seeds",
        "min_remaining_fraction",
        "mean_delay_s",
        "violations",
        "min_remaining_fraction_sd",
        "mean_delay_s_sd",
        "violations_sd",
    ])?;
    for (value, world) in points.iter().zip(&worlds) {
        let results = evaluate_all(world, &policies, &seeds)?;
        for (p, reports) in policies.iter().zip(&results) {
            let frac: Vec<f64> = reports.iter().map(|r| r.min_remaining_fraction).collect();
            let delay: Vec<f64> = reports.iter().map(|r| r.mean_delay).collect();
            let viol: Vec<f64> = reports.iter().map(|r| r.violation_count as f64).collect();
            w.write_record([
                args.axis.name().to_string(),
                format!("{value}"),
                p.name().to_string(),
                seeds.len().to_string(),
                fmt6(mean(&frac)),
                fmt6(mean(&delay)),
                fmt6(mean(&viol)),
                fmt6(stddev(&frac)),
                fmt6(stddev(&delay)),
                fmt6(stddev(&viol)),
            ])?;
        }
    }
    w.flush().map_err(CliError::io(dir.join("sweep.csv")))?;
    manifest.write(dir)?;
    println!("swept {} over {} point(s) for {} policies", args.axis.name(), points.len(), policies.len());
    Ok(())
}
