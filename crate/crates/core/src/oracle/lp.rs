//! CPLEX LP text export of the full scheduling model and import of a solver's
//! `name value` solution listing.
//!
//! Variables, for task `k` named `j{origin}_a{arrival}`, resource `r` and
//! interval `t` of the model timeline:
//!
//! ```text
//! x_k_r{r}        task k runs on r
//! a_k_r{r}_t{t}   task k is active on r during t
//! s_k_r{r}_t{t}   task k starts on r at t
//! e_k_r{r}_t{t}   task k ends on r at t
//! d_k             end-to-end delay of task k, seconds
//! v_k             task k misses its deadline
//! emin            lowest remaining ABS energy at the horizon
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::num::Real;
use crate::scenario::{EpisodeTrace, Scenario, TaskRecord};

use super::{Assignment, OracleError, Problem, Schedule, Weights};

#[derive(Clone, Debug, PartialEq)]
pub struct LpModel {
    pub text: String,
    /// Length of the model timeline in intervals.
    pub timeline: usize,
    /// Big-M constant of the violation rows.
    pub big_m: f64,
    pub variables: usize,
    pub rows: usize,
}

fn task_name<T: Real>(t: &TaskRecord<T>) -> String {
    format!("j{}_a{}", t.origin, t.arrival)
}

fn x(k: &str, r: usize) -> String {
    format!("x_{k}_r{r}")
}

fn act(k: &str, r: usize, t: usize) -> String {
    format!("a_{k}_r{r}_t{t}")
}

fn st(k: &str, r: usize, t: usize) -> String {
    format!("s_{k}_r{r}_t{t}")
}

fn en(k: &str, r: usize, t: usize) -> String {
    format!("e_{k}_r{r}_t{t}")
}

#[derive(Default)]
struct Expr(Vec<(f64, String)>);

impl Expr {
    fn add(&mut self, c: f64, v: impl Into<String>) -> &mut Self {
        if c != 0.0 {
            self.0.push((c, v.into()));
        }
        self
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (i, (c, v)) in self.0.iter().enumerate() {
            if i > 0 && i % 4 == 0 {
                out.push_str("\n   ");
            }
            let sign = if *c < 0.0 { '-' } else { '+' };
            let mag = c.abs();
            if mag == 1.0 {
                let _ = write!(out, " {sign} {v}");
            } else {
                let _ = write!(out, " {sign} {mag} {v}");
            }
        }
        if out.is_empty() {
            out.push_str(" 0 emin");
        }
        out
    }
}

struct Rows {
    text: String,
    count: usize,
}

impl Rows {
    fn push(&mut self, name: String, e: &Expr, sense: &str, rhs: f64) {
        let _ = writeln!(self.text, " {name}:{} {sense} {rhs}", e.render());
        self.count += 1;
    }
}

/// Timeline long enough to hold an earliest-packed schedule of every task.
fn model_timeline<T: Real>(scenario: &Scenario<T>, trace: &EpisodeTrace<T>) -> usize {
    let last_arrival = trace.tasks.iter().map(|t| t.arrival).max().unwrap_or(0);
    let work: usize = trace
        .tasks
        .iter()
        .map(|t| (0..scenario.resource_count()).map(|r| scenario.duration(t.type_id, r)).max().unwrap_or(0))
        .sum();
    scenario.horizon().max(last_arrival + 1 + work)
}

/// Builds the mixed-integer model of `problem` for `trace`.
pub fn export_lp<T: Real>(
    scenario: &Scenario<T>,
    trace: &EpisodeTrace<T>,
    problem: Problem,
    weights: &Weights,
) -> Result<LpModel, OracleError> {
    if trace.is_empty() {
        return Err(OracleError::EmptyTrace);
    }
    let n_res = scenario.resource_count();
    let h = model_timeline(scenario, trace);
    let len = scenario.interval_len().as_f64();
    let names: Vec<String> = trace.tasks.iter().map(task_name).collect();
    let max_of = |f: &dyn Fn(&TaskRecord<T>) -> f64| trace.tasks.iter().map(f).fold(0.0, f64::max);
    let big_m = h as f64 * len
        + max_of(&|t| t.iot_delay.as_f64())
        + max_of(&|t| scenario.task_type(t.type_id).proc_time_abs.max(scenario.task_type(t.type_id).proc_time_mec).as_f64())
        + max_of(&|t| scenario.task_type(t.type_id).deadline.as_f64())
        + 1.0;

    let mut rows = Rows { text: String::new(), count: 0 };

    // one resource per task, one task per resource and interval
    for k in &names {
        let mut e = Expr::default();
        for r in 0..n_res {
            e.add(1.0, x(k, r));
        }
        rows.push(format!("assign_{k}"), &e, "=", 1.0);
    }
    for r in 0..n_res {
        for t in 0..h {
            let mut e = Expr::default();
            for k in &names {
                e.add(1.0, act(k, r, t));
            }
            rows.push(format!("cap_r{r}_t{t}"), &e, "<=", 1.0);
        }
    }
    for k in &names {
        for t in 0..h {
            let mut e = Expr::default();
            for r in 0..n_res {
                e.add(1.0, act(k, r, t));
            }
            rows.push(format!("onres_{k}_t{t}"), &e, "<=", 1.0);
        }
    }

    // one contiguous block of the right length, starting after arrival
    for (task, k) in trace.tasks.iter().zip(&names) {
        for r in 0..n_res {
            let dur = scenario.duration(task.type_id, r) as f64;
            let mut starts = Expr::default();
            let mut ends = Expr::default();
            let mut active = Expr::default();
            for t in 0..h {
                starts.add(1.0, st(k, r, t));
                ends.add(1.0, en(k, r, t));
                active.add(1.0, act(k, r, t));
            }
            starts.add(-1.0, x(k, r));
            ends.add(-1.0, x(k, r));
            active.add(-dur, x(k, r));
            rows.push(format!("start_{k}_r{r}"), &starts, "=", 0.0);
            rows.push(format!("end_{k}_r{r}"), &ends, "=", 0.0);
            rows.push(format!("dur_{k}_r{r}"), &active, "=", 0.0);
            let dur = dur as usize;
            for t in 0..h {
                let mut link = Expr::default();
                link.add(1.0, act(k, r, t));
                for t0 in t.saturating_sub(dur - 1)..=t {
                    link.add(-1.0, st(k, r, t0));
                }
                rows.push(format!("active_{k}_r{r}_t{t}"), &link, "=", 0.0);
                let mut end = Expr::default();
                end.add(1.0, en(k, r, t));
                if t + 1 >= dur {
                    end.add(-1.0, st(k, r, t + 1 - dur));
                }
                rows.push(format!("last_{k}_r{r}_t{t}"), &end, "=", 0.0);
            }
            if task.arrival > 0 {
                let mut early = Expr::default();
                for t in 0..task.arrival.min(h) {
                    early.add(1.0, act(k, r, t));
                }
                rows.push(format!("causal_{k}_r{r}"), &early, "=", 0.0);
            }
        }
    }

    // delay, violation indicator, energy floor
    for (task, k) in trace.tasks.iter().zip(&names) {
        let mut d = Expr::default();
        d.add(1.0, format!("d_{k}"));
        for r in 0..n_res {
            for t in 1..h {
                d.add(-len * t as f64, st(k, r, t));
            }
            d.add(-scenario.proc_time(task.type_id, r).as_f64(), x(k, r));
        }
        rows.push(format!("delay_{k}"), &d, "=", task.iot_delay.as_f64() - len * task.arrival as f64);
        let mut v = Expr::default();
        v.add(1.0, format!("d_{k}")).add(-big_m, format!("v_{k}"));
        rows.push(format!("viol_{k}"), &v, "<=", scenario.task_type(task.type_id).deadline.as_f64());
    }
    for j in 0..scenario.abs_count() {
        let p = scenario.energy(j).expect("ABS has energy parameters");
        let busy = p.busy_drain().as_f64();
        let mut e = Expr::default();
        e.add(1.0, "emin");
        for k in &names {
            for t in 0..h {
                e.add(busy, act(k, j, t));
            }
        }
        let rhs = p.capacity.as_f64() - p.base_drain().as_f64() * scenario.horizon() as f64;
        rows.push(format!("emin_r{j}"), &e, "<=", rhs);
    }
    if problem == Problem::P2 {
        let mut e = Expr::default();
        for k in &names {
            e.add(1.0, format!("v_{k}"));
        }
        rows.push("vmax".into(), &e, "<=", weights.vmax.floor());
    }

    let n = names.len() as f64;
    let w = weights.w;
    let (delay_w, viol_w) = match problem {
        Problem::P1 => ((1.0 - w) / (2.0 * weights.theta_m) / n, (1.0 - w) / (2.0 * weights.theta_d)),
        Problem::P2 => ((1.0 - w) / weights.theta_m / n, 0.0),
    };
    let mut obj = Expr::default();
    obj.add(w, "emin");
    for k in &names {
        obj.add(-delay_w, format!("d_{k}"));
        obj.add(-viol_w, format!("v_{k}"));
    }

    let mut text = String::new();
    let _ = writeln!(text, "\\ {problem:?}: {} tasks, {} resources, timeline {h}", names.len(), n_res);
    let _ = writeln!(text, "Maximize\n obj:{}", obj.render());
    let _ = writeln!(text, "Subject To");
    text.push_str(&rows.text);
    let _ = writeln!(text, "Bounds\n emin free");
    for k in &names {
        let _ = writeln!(text, " d_{k} free");
    }
    let _ = writeln!(text, "Binaries");
    let mut binaries = 0;
    for k in &names {
        for r in 0..n_res {
            let _ = writeln!(text, " {}", x(k, r));
            for t in 0..h {
                let _ = writeln!(text, " {}\n {}\n {}", act(k, r, t), st(k, r, t), en(k, r, t));
            }
            binaries += 1 + 3 * h;
        }
        let _ = writeln!(text, " v_{k}");
        binaries += 1;
    }
    let _ = writeln!(text, "End");
    Ok(LpModel { text, timeline: h, big_m, variables: binaries + names.len() + 1, rows: rows.count })
}

pub fn write_lp(model: &LpModel, path: impl AsRef<Path>) -> Result<(), OracleError> {
    fs::write(path, &model.text)?;
    Ok(())
}

/// Rebuilds a schedule from `name value` lines; other lines are ignored.
pub fn import_solution<T: Real>(
    scenario: &Scenario<T>,
    trace: &EpisodeTrace<T>,
    solution: &str,
) -> Result<Schedule, OracleError> {
    let values: HashMap<&str, f64> = solution
        .lines()
        .filter_map(|line| {
            let mut it = line.split_whitespace();
            let (name, value) = (it.next()?, it.next()?);
            Some((name, value.parse().ok()?))
        })
        .collect();
    let on = |name: &str| values.get(name).is_some_and(|&v| v > 0.5);
    let h = model_timeline(scenario, trace);
    let mut assignments = Vec::with_capacity(trace.len());
    for task in &trace.tasks {
        let k = task_name(task);
        let r = (0..scenario.resource_count())
            .find(|&r| on(&x(&k, r)))
            .ok_or_else(|| OracleError::MalformedSolution(format!("task {k} has no resource")))?;
        let start = (0..h)
            .find(|&t| on(&st(&k, r, t)))
            .ok_or_else(|| OracleError::MalformedSolution(format!("task {k} has no start")))?;
        let end = start + scenario.duration(task.type_id, r) - 1;
        assignments.push(Assignment { key: task.key(), resource: r, start, end });
    }
    Ok(Schedule { assignments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force, evaluate, validate, BruteForceLimits};
    use crate::scenario::{generate_trace, ScenarioConfig};

    fn tiny() -> Scenario<f64> {
        ScenarioConfig::oracle_stress().build().unwrap()
    }

    /// Writes the solver listing a schedule corresponds to.
    fn listing(s: &Scenario<f64>, trace: &EpisodeTrace<f64>, sched: &Schedule) -> String {
        let mut out = String::new();
        for a in &sched.assignments {
            let task = trace.tasks.iter().find(|t| t.key() == a.key).unwrap();
            let k = task_name(task);
            let _ = writeln!(out, "{} 1", x(&k, a.resource));
            let _ = writeln!(out, "{} 0.9999999", st(&k, a.resource, a.start));
            let other = (a.resource + 1) % s.resource_count();
            let _ = writeln!(out, "{} 0", x(&k, other));
        }
        out
    }

    #[test]
    fn every_constraint_family_is_present() {
        let s = tiny();
        let trace = generate_trace(&s, 4).truncated(4);
        let m = export_lp(&s, &trace, Problem::P2, &Weights::default()).unwrap();
        for family in ["assign_", "cap_r", "onres_", "start_", "end_", "dur_", "active_", "last_", "delay_", "viol_", "emin_r0", "vmax:"] {
            assert!(m.text.contains(&format!(" {family}")), "{family}");
        }
        assert!(m.text.starts_with("\\ P2"));
        assert!(m.text.trim_end().ends_with("End"));
        assert!(m.timeline >= s.horizon());
        let p1 = export_lp(&s, &trace, Problem::P1, &Weights::default()).unwrap();
        assert!(!p1.text.contains(" vmax:"));
    }

    #[test]
    fn no_line_is_overlong() {
        let s = tiny();
        let trace = generate_trace(&s, 2).truncated(6);
        let m = export_lp(&s, &trace, Problem::P1, &Weights::default()).unwrap();
        assert!(m.text.lines().all(|l| l.len() < 255));
    }

    #[test]
    fn solution_listing_round_trips_the_optimum() {
        let s = tiny();
        let w = Weights::default();
        for seed in 0..5 {
            let trace = generate_trace(&s, seed).truncated(5);
            let best = brute_force(&s, &trace, Problem::P1, &w, BruteForceLimits::default()).unwrap();
            let back = import_solution(&s, &trace, &listing(&s, &trace, &best.schedule)).unwrap();
            assert!(validate(&s, &trace, &back).is_empty());
            assert_eq!(evaluate(&s, &trace, &back, Problem::P1, &w).unwrap().value, best.breakdown.value);
        }
    }

    #[test]
    fn incomplete_listing_is_malformed() {
        let s = tiny();
        let trace = generate_trace(&s, 1).truncated(2);
        let r = import_solution(&s, &trace, "Primal solution values\nemin 3.2\n");
        assert!(matches!(r, Err(OracleError::MalformedSolution(_))));
    }

    #[test]
    fn empty_trace_is_rejected() {
        let s = tiny();
        let trace = EpisodeTrace::new(s.fingerprint(), vec![]);
        assert!(matches!(export_lp(&s, &trace, Problem::P1, &Weights::default()), Err(OracleError::EmptyTrace)));
    }
}
