use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::{json, Value};

use agri_offload::scenario::{generate_trace, Scenario};
use agri_offload::simenv::KpiReport;

use crate::common::{load_config, load_policies, mean, out_dir, stddev, PolicySpec};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::CommonArgs;

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Baseline policies, comma separated: rr, lqhe, local, mec, random.
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<String>,
    /// Trained table files; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    pub tables: Vec<PathBuf>,
    /// Number of evaluation seeds, starting at `--seed`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
}

/// Numeric KPI columns in the order of `KpiReport::csv_row` after policy and seed.
pub fn kpi_values(r: &KpiReport<f64>) -> Vec<f64> {
    let mut v = vec![r.min_remaining_fraction, r.mean_delay, r.violation_count as f64];
    for res in &r.per_resource {
        v.extend([res.tasks as f64, res.violations as f64, res.mean_delay]);
    }
    v.extend(r.remaining_fraction.iter().copied());
    v
}

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Runs every policy on every seed's fresh trace; rows come back in
/// (policy, seed) order whatever the worker count.
pub fn evaluate_all(
    scenario: &Scenario<f64>,
    policies: &[PolicySpec],
    seeds: &[u64],
) -> Result<Vec<Vec<KpiReport<f64>>>, CliError> {
    let traces: Vec<_> = seeds.par_iter().map(|&s| generate_trace(scenario, s)).collect();
    policies
        .iter()
        .map(|p| {
            seeds
                .par_iter()
                .zip(traces.par_iter())
                .map(|(&seed, trace)| p.run(scenario, trace, seed))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

fn stat(xs: &[f64]) -> Value {
    json!({ "mean": mean(xs), "stddev": stddev(xs) })
}

fn aggregate_json(reports: &[KpiReport<f64>]) -> Value {
    let col = |f: &dyn Fn(&KpiReport<f64>) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let first = &reports[0];
    let per_resource: Vec<Value> = (0..first.per_resource.len())
        .map(|r| {
            json!({
                "resource": r,
                "kind": first.per_resource[r].kind,
                "tasks": stat(&col(&|x| x.per_resource[r].tasks as f64)),
                "violations": stat(&col(&|x| x.per_resource[r].violations as f64)),
                "mean_delay_s": stat(&col(&|x| x.per_resource[r].mean_delay)),
            })
        })
        .collect();
    let fractions: Vec<Value> =
        (0..first.remaining_fraction.len()).map(|j| stat(&col(&|x| x.remaining_fraction[j]))).collect();
    json!({
        "min_remaining_fraction": stat(&col(&|x| x.min_remaining_fraction)),
        "mean_delay_s": stat(&col(&|x| x.mean_delay)),
        "violations": stat(&col(&|x| x.violation_count as f64)),
        "per_resource": per_resource,
        "remaining_fraction": fractions,
    })
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let scenario: Scenario<f64> = load_config(&args.common)?.build()?;
    let policies = load_policies(&args.policy, &args.tables, &scenario)?;
    let seeds: Vec<u64> = (args.common.seed..args.common.seed + args.seeds).collect();
    if seeds.is_empty() {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let dir = out_dir(&args.common)?;
    let mut manifest = RunManifest::new("eval", scenario.fingerprint());
    manifest.seeds = seeds.clone();
    manifest.policies = policies.iter().map(|p| p.name().to_string()).collect();
    for t in &args.tables {
        manifest.set(&format!("tables:{}", t.display()), "read");
    }

    let results = evaluate_all(&scenario, &policies, &seeds)?;

    let mut w = manifest.csv(dir, "kpi.csv")?;
    w.write_record(KpiReport::<f64>::csv_header(scenario.resource_count(), scenario.abs_count()))?;
    for (p, reports) in policies.iter().zip(&results) {
        for (seed, r) in seeds.iter().zip(reports) {
            w.write_record(r.csv_row(p.name(), &seed.to_string()))?;
        }
        let cols: Vec<Vec<f64>> = reports.iter().map(kpi_values).collect();
        for (label, f) in [("mean", mean as fn(&[f64]) -> f64), ("stddev", stddev)] {
            let mut row = vec![p.name().to_string(), label.to_string()];
            for c in 0..cols[0].len() {
                let xs: Vec<f64> = cols.iter().map(|v| v[c]).collect();
                row.push(fmt6(f(&xs)));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(CliError::io(dir.join("kpi.csv")))?;

    let report = json!({
        "manifest": manifest.file_name(),
        "fingerprint": scenario.fingerprint(),
        "seeds": seeds,
        "policies": policies.iter().zip(&results).map(|(p, reports)| json!({
            "policy": p.name(),
            "runs": reports,
            "aggregate": aggregate_json(reports),
        })).collect::<Vec<_>>(),
    });
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
        .map_err(CliError::io(&path))?;
    manifest.output(dir, &path);
    manifest.write(dir)?;

    println!("{:<12} {:>10} {:>10} {:>10}", "policy", "min_frac", "delay_s", "violations");
    for (p, reports) in policies.iter().zip(&results) {
        let v: Vec<Vec<f64>> = reports.iter().map(kpi_values).collect();
        let m = |c: usize| mean(&v.iter().map(|x| x[c]).collect::<Vec<_>>());
        println!("{:<12} {:>10.4} {:>10.4} {:>10.2}", p.name(), m(0), m(1), m(2));
    }
    Ok(())
}
