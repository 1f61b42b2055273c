use std::fs;

use clap::Args;
use rayon::prelude::*;

use agri_offload::scenario::{generate_trace, save_trace, Scenario};

use crate::common::{load_config, out_dir};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::CommonArgs;

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of traces; trace i uses seed `seed + i`.
    #[arg(long, default_value_t = 100)]
    pub count: u64,
}

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_{seed:06}.csv")
}

pub fn run(args: GenArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common)?;
    let scenario: Scenario<f64> = cfg.build()?;
    let dir = out_dir(&args.common)?;
    let mut manifest = RunManifest::new("gen", scenario.fingerprint());
    manifest.set("count", args.count);
    manifest.seeds = (args.common.seed..args.common.seed + args.count).collect();
    if args.count > 0 {
        let cfg_path = dir.join("scenario.toml");
        fs::write(&cfg_path, cfg.to_toml_string()).map_err(CliError::io(&cfg_path))?;
        manifest.output(dir, &cfg_path);
        let traces = dir.join("traces");
        fs::create_dir_all(&traces).map_err(CliError::io(&traces))?;
        let paths: Vec<_> = manifest
            .seeds
            .par_iter()
            .map(|&seed| {
                let path = traces.join(trace_file_name(seed));
                save_trace(&generate_trace(&scenario, seed), &path)?;
                Ok(path)
            })
            .collect::<Result<_, CliError>>()?;
        for p in &paths {
            manifest.output(dir, p);
        }
    }
    let m = manifest.write(dir)?;
    println!("wrote {} trace(s) and {}", args.count, m.display());
    Ok(())
}
