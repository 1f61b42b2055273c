use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use agri_offload::agents::{save_tables, AgentKind, AgentParams, OffloadLearner, TrainingLog};
use agri_offload::scenario::{load_trace_for, EpisodeTrace, Scenario};

use crate::common::{load_config, out_dir};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::svg::{line_chart, Series};
use crate::CommonArgs;

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Learner: qlearning, risk or energy.
    #[arg(long)]
    pub agent: String,
    /// Directory of trace files from `gen`.
    #[arg(long)]
    pub traces: PathBuf,
    /// Hyperparameter TOML; missing keys take their defaults.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Training episodes. Without a parameter file the risk-weight period is
    /// scaled to one hundredth of the run.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Energy weight W.
    #[arg(long)]
    pub w: Option<f64>,
    /// Also write an SVG of the learning curves.
    #[arg(long)]
    pub svg: bool,
}

pub fn load_trace_dir(dir: &Path, scenario: &Scenario<f64>) -> Result<Vec<EpisodeTrace<f64>>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files.iter().map(|p| Ok(load_trace_for(p, scenario)?)).collect()
}

fn params(args: &TrainArgs, kind: AgentKind) -> Result<AgentParams, CliError> {
    let mut p = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            let mut p: AgentParams =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            p.kind = kind;
            if let Some(n) = args.episodes {
                p.episodes = n;
            }
            p
        }
        None => match args.episodes {
            Some(n) => AgentParams::desk(kind, n),
            None => AgentParams::new(kind),
        },
    };
    if let Some(w) = args.w {
        p.w = w;
    }
    p.seed = args.common.seed;
    Ok(p)
}

fn write_curves(log: &TrainingLog, manifest: &mut RunManifest, dir: &Path) -> Result<(), CliError> {
    let mut w = manifest.csv(dir, "curves.csv")?;
    w.write_record(["episode", "agent", "cum_reward", "cum_risk", "zeta"])?;
    for p in &log.curves {
        w.write_record([
            p.episode.to_string(),
            p.agent.to_string(),
            format!("{:.9}", p.cum_reward),
            format!("{:.9}", p.cum_risk),
            format!("{:.6}", p.zeta),
        ])?;
    }
    w.flush().map_err(CliError::io(dir.join("curves.csv")))?;
    let mut w = manifest.csv(dir, "zeta.csv")?;
    w.write_record(["episode", "observed", "zeta"])?;
    for p in &log.zeta_trace {
        w.write_record([p.episode.to_string(), format!("{:.6}", p.observed), format!("{:.6}", p.zeta)])?;
    }
    w.flush().map_err(CliError::io(dir.join("zeta.csv")))?;
    Ok(())
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let kind = AgentKind::from_name(&args.agent)
        .ok_or_else(|| CliError::Config(format!("unknown agent `{}` (qlearning, risk, energy)", args.agent)))?;
    let scenario: Scenario<f64> = load_config(&args.common)?.build()?;
    let traces = load_trace_dir(&args.traces, &scenario)?;
    let params = params(&args, kind)?;
    let dir = out_dir(&args.common)?;
    let mut manifest = RunManifest::new("train", scenario.fingerprint());
    manifest.seeds = vec![params.seed];
    manifest.policies = vec![kind.name().to_string()];
    manifest.set("traces", args.traces.display());
    manifest.set("trace_count", traces.len());
    manifest.set("params", serde_json::to_string(&params).expect("params serialize"));

    let mut learner = OffloadLearner::new(&scenario, params)?;
    let log = learner.train(&scenario, &traces)?;

    let tables = dir.join(format!("{}.agqt", kind.name()));
    save_tables(&learner, &tables)?;
    manifest.output(dir, &tables);
    write_curves(&log, &mut manifest, dir)?;
    if args.svg {
        let mut series = vec![Series { label: "reward".into(), values: log.episode_rewards() }];
        if kind.is_dual() {
            series.push(Series { label: "risk".into(), values: log.episode_risks() });
        }
        let path = dir.join("curves.svg");
        fs::write(&path, line_chart(&format!("{} learning curves", kind.name()), "episode", &series))
            .map_err(CliError::io(&path))?;
        manifest.output(dir, &path);
    }
    manifest.write(dir)?;
    println!(
        "trained {} for {} episodes on {} trace(s); final zeta {:.3}; tables in {}",
        kind.name(),
        learner.params().episodes,
        traces.len(),
        learner.zeta(),
        tables.display()
    );
    Ok(())
}
