use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_agri-offload"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).arg("--out").arg(dir).output().unwrap();
    out
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// CSV body without the manifest line.
fn csv_lines(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("#manifest="), "{} lacks a manifest line", path.display());
    lines.map(String::from).collect()
}

fn tiny_config(dir: &Path, violating: bool) -> String {
    let path = dir.join("tiny.toml");
    let mut text = String::from(
        "interval_len = 0.05\nhorizon_s = 1.6\nabs_count = 2\nmec_count = 1\nenergy_time_scale = 8.37e-6\nseed = 1\n\n\
         [delay]\niot_base = 0.01\niot_jitter_mean = 0.01\nabs_to_abs_hop = 0.02\nabs_to_mec_hop = 0.01\n",
    );
    for (name, mean, deadline, abs, mec) in [
        ("fire_detection", 0.125, 0.2, 0.1, 0.05),
        ("pesticide_detection", 0.125, 0.6, 0.2, 0.1),
        ("growth_monitoring", 0.125, 15.0, 1.5, 0.75),
    ] {
        let (deadline, mec) = if violating { (abs + 1e-6, abs) } else { (deadline, mec) };
        text.push_str(&format!(
            "\n[[task_types]]\nname = \"{name}\"\nmean_interarrival = {mean}\ndeadline = {deadline}\nproc_time_abs = {abs}\nproc_time_mec = {mec}\n"
        ));
    }
    for _ in 0..2 {
        text.push_str("\n[[abs_energy]]\ncapacity = 570.0\nhover = 211.0\ntransmit = 17.0\nidle = 4320.0\ncompute = 12960.0\n");
    }
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn gen_is_deterministic_and_zero_writes_only_the_manifest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["gen", "--count", "3", "--seed", "7"], a.path());
    ok(&["gen", "--count", "3", "--seed", "7"], b.path());
    let names: Vec<_> = fs::read_dir(a.path().join("traces")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3);
    for n in names {
        assert_eq!(fs::read(a.path().join("traces").join(&n)).unwrap(), fs::read(b.path().join("traces").join(&n)).unwrap());
    }
    let z = tempfile::tempdir().unwrap();
    ok(&["gen", "--count", "0"], z.path());
    let entries: Vec<_> = fs::read_dir(z.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(entries, vec!["gen.manifest.json".to_string()]);
}

#[test]
fn train_smoke_runs_write_tables_curves_and_weights() {
    let d = tempfile::tempdir().unwrap();
    ok(&["gen", "--count", "2"], d.path());
    let traces = d.path().join("traces").display().to_string();
    let t = Instant::now();
    ok(&["train", "--agent", "risk", "--traces", &traces, "--episodes", "1"], d.path());
    assert!(t.elapsed().as_secs_f64() < 5.0);
    ok(&["train", "--agent", "risk", "--traces", &traces, "--episodes", "20", "--svg"], d.path());
    for f in ["risk.agqt", "curves.csv", "zeta.csv", "curves.svg", "train.manifest.json"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let zeta = csv_lines(&d.path().join("zeta.csv"));
    assert_eq!(zeta.len(), 1 + 20);
    for line in &zeta[1..] {
        let z: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&z));
    }
    ok(&["train", "--agent", "qlearning", "--w", "0.5", "--traces", &traces, "--episodes", "3"], d.path());
    assert!(d.path().join("qlearning.agqt").exists());
    let curves = csv_lines(&d.path().join("curves.csv"));
    assert_eq!(curves.len(), 1 + 3 * 4);
}

#[test]
fn eval_rows_aggregates_and_reproducibility() {
    let d = tempfile::tempdir().unwrap();
    ok(&["eval", "--policy", "local", "--seeds", "10", "--seed", "5"], d.path());
    let rows = csv_lines(&d.path().join("kpi.csv"));
    assert_eq!(rows.len(), 1 + 10 + 2);
    let header: Vec<&str> = rows[0].split(',').collect();
    let mec_tasks = header.iter().position(|c| *c == "tasks_r4").unwrap();
    for r in &rows[1..11] {
        assert_eq!(r.split(',').nth(mec_tasks).unwrap(), "0");
    }
    assert!(rows[11].starts_with("local,mean,") && rows[12].starts_with("local,stddev,"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["policies"][0]["runs"].as_array().unwrap().len(), 10);
    assert!(report["policies"][0]["aggregate"]["mean_delay_s"]["stddev"].is_number());

    let e = tempfile::tempdir().unwrap();
    ok(&["eval", "--policy", "local", "--seeds", "1", "--seed", "9"], e.path());
    let once = csv_lines(&e.path().join("kpi.csv"));
    assert_eq!(once[1], rows[5]);
}

#[test]
fn worker_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["eval", "--policy", "rr,random", "--seeds", "6"];
    let one = bin().args(args).arg("--out").arg(a.path()).env("AGRI_OFFLOAD_THREADS", "1").output().unwrap();
    assert!(one.status.success());
    ok(&args, b.path());
    assert_eq!(fs::read(a.path().join("kpi.csv")).unwrap(), fs::read(b.path().join("kpi.csv")).unwrap());
    let bad = bin().args(args).arg("--out").arg(a.path()).env("AGRI_OFFLOAD_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn csv_schemas_are_pinned() {
    let d = tempfile::tempdir().unwrap();
    ok(&["gen", "--count", "1"], d.path());
    let traces = d.path().join("traces").display().to_string();
    ok(&["train", "--agent", "energy", "--traces", &traces, "--episodes", "2"], d.path());
    ok(&["eval", "--policy", "rr", "--seeds", "1"], d.path());
    ok(&["sweep", "--axis", "pd_deadline", "--range", "2", "--policy", "rr", "--seeds", "1"], d.path());
    ok(&["oracle", "--instances", "1", "--w", "0.5"], d.path());
    let first = |f: &str| csv_lines(&d.path().join(f))[0].clone();
    assert_eq!(first("curves.csv"), "episode,agent,cum_reward,cum_risk,zeta");
    assert_eq!(first("zeta.csv"), "episode,observed,zeta");
    let mut kpi = String::from("policy,seed,min_remaining_fraction,mean_delay_s,violations");
    for r in 0..5 {
        kpi.push_str(&format!(",tasks_r{r},violations_r{r},mean_delay_r{r}"));
    }
    for j in 0..4 {
        kpi.push_str(&format!(",remaining_fraction_r{j}"));
    }
    assert_eq!(first("kpi.csv"), kpi);
    assert_eq!(
        first("sweep.csv"),
        "axis,value,policy,seeds,min_remaining_fraction,mean_delay_s,violations,min_remaining_fraction_sd,mean_delay_s_sd,violations_sd"
    );
    assert_eq!(
        first("oracle.csv"),
        "problem,w,instance,method,min_remaining_fraction,min_remaining,mean_delay_s,violations,objective,feasible,dominated"
    );
    assert_eq!(
        first("oracle_grid.csv"),
        "problem,w,method,instances,min_remaining_fraction,mean_delay_s,violations,objective,all_dominated"
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("eval.manifest.json")).unwrap()).unwrap();
    for key in ["command", "fingerprint", "seeds", "policies", "overrides", "outputs", "version"] {
        assert!(manifest.get(key).is_some(), "{key}");
    }
}

#[test]
fn sweep_points_match_eval_and_leave_tables_untouched() {
    let d = tempfile::tempdir().unwrap();
    ok(&["gen", "--count", "1"], d.path());
    let traces = d.path().join("traces").display().to_string();
    ok(&["train", "--agent", "qlearning", "--traces", &traces, "--episodes", "3"], d.path());
    let tables = d.path().join("qlearning.agqt");
    let before = fs::read(&tables).unwrap();
    let tables_arg = tables.display().to_string();
    ok(
        &["sweep", "--axis", "pd_proc_time", "--range", "0.2:0.4:0.1", "--policy", "rr", "--tables", &tables_arg, "--seeds", "2"],
        d.path(),
    );
    assert_eq!(fs::read(&tables).unwrap(), before);
    let rows = csv_lines(&d.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1 + 3 * 2);

    // a single point at the default processing time reproduces eval's mean row
    ok(&["sweep", "--axis", "pd_proc_time", "--range", "0.2", "--policy", "lqhe", "--seeds", "3"], d.path());
    ok(&["eval", "--policy", "lqhe", "--seeds", "3"], d.path());
    let sweep = csv_lines(&d.path().join("sweep.csv"));
    let point: Vec<&str> = sweep[1].split(',').collect();
    let eval = csv_lines(&d.path().join("kpi.csv"));
    let mean: Vec<&str> = eval.iter().find(|l| l.starts_with("lqhe,mean,")).unwrap().split(',').collect();
    assert_eq!(&point[4..7], &mean[2..5]);
}

#[test]
fn oracle_grid_dominance_and_infeasibility() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(&["oracle", "--instances", "3"], d.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("dominance holds"));
    let rows = csv_lines(&d.path().join("oracle.csv"));
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(3) == Some("oracle")).count(), 3 * 3);
    assert!(rows[1..].iter().filter(|r| !r.contains(",oracle,")).all(|r| r.ends_with(",true")));
    let grid = csv_lines(&d.path().join("oracle_grid.csv"));
    assert_eq!(grid.iter().filter(|r| r.contains(",oracle,")).count(), 3);

    let v = tempfile::tempdir().unwrap();
    let cfg = tiny_config(v.path(), true);
    ok(&["oracle", "--config", &cfg, "--problem", "p2", "--vmax", "0", "--w", "0.5", "--instances", "1"], v.path());
    let rows = csv_lines(&v.path().join("oracle.csv"));
    let oracle_row = rows.iter().find(|r| r.contains(",oracle,")).unwrap();
    assert!(oracle_row.contains("infeasible"), "{oracle_row}");

    let cfg = tiny_config(v.path(), false);
    ok(&["oracle", "--config", &cfg, "--instances", "1", "--w", "0.5", "--export-lp"], v.path());
    let lp = fs::read_dir(v.path().join("lp")).unwrap().next().unwrap().unwrap().path();
    assert!(fs::read_to_string(lp).unwrap().contains("Maximize"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args, d.path()).status.code();
    assert_eq!(code(&["oracle", "--tasks", "8", "--instances", "1"]), Some(3));
    assert_eq!(code(&["eval", "--tables", "/nonexistent/t.agqt"]), Some(4));
    assert_eq!(code(&["eval", "--config", "/nonexistent/c.toml", "--policy", "rr"]), Some(4));
    assert_eq!(code(&["eval", "--policy", "nosuch"]), Some(2));
    assert_eq!(code(&["sweep", "--axis", "pd_deadline", "--range", "1:0:1", "--policy", "rr"]), Some(2));
    assert_eq!(code(&["train", "--agent", "sarsa", "--traces", "."]), Some(2));
    assert_eq!(code(&["oracle", "--problem", "p3"]), Some(2));
    let bad = d.path().join("bad.toml");
    fs::write(&bad, "interval_len = 0.03\n").unwrap();
    assert_eq!(code(&["eval", "--config", bad.to_str().unwrap(), "--policy", "rr"]), Some(2));
}
