use std::fs;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use agri_offload::oracle::{
    brute_force, evaluate, export_lp, BruteForceLimits, ObjectiveBreakdown, OracleError, Problem, Schedule, Weights,
};
use agri_offload::scenario::{generate_trace, EpisodeTrace, Scenario, ScenarioConfig};
use agri_offload::simenv::run_policy;

use crate::common::{load_config, load_policies, mean, out_dir, PolicySpec};
use crate::error::CliError;
use crate::eval::fmt6;
use crate::manifest::RunManifest;
use crate::CommonArgs;

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// p1 (weighted objective) or p2 (violation-bounded).
    #[arg(long, default_value = "p1")]
    pub problem: String,
    /// Energy weights W, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    pub w: Vec<f64>,
    /// Violation bound of P2.
    #[arg(long, default_value_t = 15.0)]
    pub vmax: f64,
    #[arg(long, default_value_t = 10)]
    pub instances: u64,
    /// Tasks kept from the start of each instance's trace.
    #[arg(long, default_value_t = 6)]
    pub tasks: usize,
    #[arg(long, value_delimiter = ',', default_value = "rr,lqhe,local,mec")]
    pub policy: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub tables: Vec<PathBuf>,
    /// Enumeration budget in complete schedules.
    #[arg(long, default_value_t = 20_160)]
    pub budget: u128,
    /// Also write each instance's mixed-integer model as CPLEX LP text.
    #[arg(long)]
    pub export_lp: bool,
}

struct Row {
    w: f64,
    instance: u64,
    method: String,
    outcome: Option<ObjectiveBreakdown<f64>>,
    dominated: Option<bool>,
}

fn instance_rows(
    scenario: &Scenario<f64>,
    trace: &EpisodeTrace<f64>,
    policies: &[PolicySpec],
    problem: Problem,
    weights: &Weights,
    limits: BruteForceLimits,
    seed: u64,
) -> Result<Vec<Row>, CliError> {
    let best = match brute_force(scenario, trace, problem, weights, limits) {
        Ok(b) => Some(b.breakdown),
        Err(OracleError::NoFeasibleSchedule) => None,
        Err(e) => return Err(e.into()),
    };
    let mut rows = vec![Row { w: weights.w, instance: seed, method: "oracle".into(), outcome: best.clone(), dominated: None }];
    for p in policies {
        let records = match p {
            PolicySpec::Baseline(n) => {
                run_policy(scenario, trace, &mut agri_offload::baselines::by_name::<f64>(n, seed)?)?.records
            }
            PolicySpec::Tables { learner, .. } => run_policy(scenario, trace, &mut learner.policy())?.records,
        };
        let b = evaluate(scenario, trace, &Schedule::from_records(&records), problem, weights)?;
        let dominated = !b.feasible || best.as_ref().is_some_and(|o| b.value <= o.value);
        rows.push(Row { w: weights.w, instance: seed, method: p.name().to_string(), outcome: Some(b), dominated: Some(dominated) });
    }
    Ok(rows)
}

pub fn run(args: OracleArgs) -> Result<(), CliError> {
    let problem = Problem::from_name(&args.problem)
        .ok_or_else(|| CliError::Config(format!("unknown problem `{}` (p1, p2)", args.problem)))?;
    let cfg = match &args.common.config {
        Some(_) => load_config(&args.common)?,
        None => ScenarioConfig::oracle_stress(),
    };
    let scenario: Scenario<f64> = cfg.build()?;
    let policies = load_policies(&args.policy, &args.tables, &scenario)?;
    let limits = BruteForceLimits { budget: args.budget, ..BruteForceLimits::default() };
    if let Some(w) = args.w.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(CliError::Config(format!("W must lie in [0, 1], got {w}")));
    }
    let seeds: Vec<u64> = (args.common.seed..args.common.seed + args.instances).collect();
    let traces: Vec<_> = seeds.iter().map(|&s| generate_trace(&scenario, s).truncated(args.tasks)).collect();
    let dir = out_dir(&args.common)?;
    let mut manifest = RunManifest::new("oracle", scenario.fingerprint());
    manifest.seeds = seeds.clone();
    manifest.policies = policies.iter().map(|p| p.name().to_string()).collect();
    manifest.set("problem", format!("{problem:?}"));
    manifest.set("w", format!("{:?}", args.w));
    manifest.set("vmax", args.vmax);
    manifest.set("tasks", args.tasks);

    let mut rows = Vec::new();
    for &w in &args.w {
        let weights = Weights { w, vmax: args.vmax, ..Weights::default() };
        let per: Vec<Vec<Row>> = seeds
            .par_iter()
            .zip(traces.par_iter())
            .map(|(&seed, trace)| instance_rows(&scenario, trace, &policies, problem, &weights, limits, seed))
            .collect::<Result<_, _>>()?;
        rows.extend(per.into_iter().flatten());
        if args.export_lp {
            let lp_dir = dir.join("lp");
            fs::create_dir_all(&lp_dir).map_err(CliError::io(&lp_dir))?;
            for (seed, trace) in seeds.iter().zip(&traces) {
                if trace.is_empty() {
                    continue;
                }
                let path = lp_dir.join(format!("{}_w{w}_i{seed}.lp", args.problem.to_lowercase()));
                fs::write(&path, export_lp(&scenario, trace, problem, &weights)?.text).map_err(CliError::io(&path))?;
                manifest.output(dir, &path);
            }
        }
    }

    let header = [
        "problem",
        "w",
        "instance",
        "method",
        "min_remaining_fraction",
        "min_remaining",
        "mean_delay_s",
        "violations",
        "objective",
        "feasible",
        "dominated",
    ];
    let pname = format!("{problem:?}").to_lowercase();
    let mut out = manifest.csv(dir, "oracle.csv")?;
    out.write_record(header)?;
    for r in &rows {
        let mut rec = vec![pname.clone(), format!("{}", r.w), r.instance.to_string(), r.method.clone()];
        match &r.outcome {
            Some(b) => rec.extend([
                fmt6(b.min_remaining_fraction),
                fmt6(b.min_remaining),
                fmt6(b.mean_delay),
                b.violations.to_string(),
                format!("{:.9}", b.value),
                b.feasible.to_string(),
            ]),
            None => rec.extend(["", "", "", "", "", "infeasible"].map(String::from)),
        }
        rec.push(r.dominated.map_or(String::new(), |d| d.to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(CliError::io(dir.join("oracle.csv")))?;

    // method x W grid over instances where the method produced a schedule
    let mut grid = manifest.csv(dir, "oracle_grid.csv")?;
    grid.write_record([
        "problem",
        "w",
        "method",
        "instances",
        "min_remaining_fraction",
        "mean_delay_s",
        "violations",
        "objective",
        "all_dominated",
    ])?;
    let mut all_dominated = true;
    let methods: Vec<String> = std::iter::once("oracle".to_string()).chain(policies.iter().map(|p| p.name().to_string())).collect();
    for &w in &args.w {
        for m in &methods {
            let sel: Vec<&Row> = rows.iter().filter(|r| r.w == w && &r.method == m).collect();
            let got: Vec<&ObjectiveBreakdown<f64>> = sel.iter().filter_map(|r| r.outcome.as_ref()).collect();
            let col = |f: &dyn Fn(&ObjectiveBreakdown<f64>) -> f64| mean(&got.iter().map(|b| f(b)).collect::<Vec<_>>());
            let dom = sel.iter().all(|r| r.dominated != Some(false));
            all_dominated &= dom;
            grid.write_record([
                pname.clone(),
                format!("{w}"),
                m.clone(),
                got.len().to_string(),
                fmt6(col(&|b| b.min_remaining_fraction)),
                fmt6(col(&|b| b.mean_delay)),
                fmt6(col(&|b| b.violations as f64)),
                format!("{:.9}", col(&|b| b.value)),
                if m == "oracle" { String::new() } else { dom.to_string() },
            ])?;
        }
    }
    grid.flush().map_err(CliError::io(dir.join("oracle_grid.csv")))?;
    manifest.write(dir)?;
    let infeasible = rows.iter().filter(|r| r.method == "oracle" && r.outcome.is_none()).count();
    println!(
        "{} instance(s) x {} weight(s): dominance {}{}",
        seeds.len(),
        args.w.len(),
        if all_dominated { "holds" } else { "VIOLATED" },
        if infeasible > 0 { format!("; {infeasible} infeasible oracle row(s)") } else { String::new() }
    );
    Ok(())
}
