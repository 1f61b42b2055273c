//! Ground truth for tiny instances: schedule feasibility against the
//! scheduling model, objective evaluation, exhaustive optimization, and export
//! of the full mixed-integer model for external solvers.
//!
//! The oracle's timeline is not capped at the horizon: a task may run past
//! `T`, exactly as in the simulator. A task is available to any resource from
//! its arrival interval on (no hop delay), which makes the oracle's feasible
//! set a superset of what the simulator can produce.

mod brute;
mod lp;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::scenario::{EpisodeTrace, ResourceId, Scenario, TaskKey};
use crate::simenv::{end_to_end_delay, remaining_energy, CompletionRecord};

pub use brute::{brute_force, BruteForceLimits, BruteForceResult};
pub use lp::{export_lp, import_solution, write_lp, LpModel};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("schedule is infeasible: {} finding(s), first: {}", .0.len(), .0[0])]
    InfeasibleSchedule(Vec<Finding>),
    #[error("search needs {leaves} leaves, budget is {budget}")]
    BudgetExceeded { leaves: u128, budget: u128 },
    #[error("horizon of {horizon} intervals exceeds the limit of {limit}")]
    HorizonTooLong { horizon: usize, limit: usize },
    #[error("no schedule satisfies the violation bound")]
    NoFeasibleSchedule,
    #[error("cannot export an empty trace")]
    EmptyTrace,
    #[error("malformed solution: {0}")]
    MalformedSolution(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// One placed task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub key: TaskKey,
    pub resource: ResourceId,
    pub start: usize,
    /// Last active interval, inclusive.
    pub end: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignments: Vec<Assignment>,
}

impl Schedule {
    pub fn from_records<T: Real>(records: &[CompletionRecord<T>]) -> Self {
        Self {
            assignments: records
                .iter()
                .map(|r| Assignment { key: r.key, resource: r.resource, start: r.start, end: r.end })
                .collect(),
        }
    }
}

/// The scheduling rule a finding breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// A resource processes at most one task per interval.
    Capacity,
    /// A task is processed by at most one resource.
    SingleResource,
    /// Active intervals form one block with a single start and end.
    Contiguity,
    /// The block is exactly the processing time at that resource kind.
    Duration,
    /// Processing starts no earlier than the arrival.
    Causality,
    /// Every task gets exactly one decision.
    SingleAssignment,
    /// The schedule names a resource or task outside the instance.
    UnknownReference,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub constraint: Constraint,
    pub task: Option<TaskKey>,
    pub resource: Option<ResourceId>,
    pub interval: Option<usize>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.constraint)?;
        if let Some(k) = self.task {
            write!(f, " task <{},{}>", k.origin, k.arrival)?;
        }
        if let Some(r) = self.resource {
            write!(f, " resource {r}")?;
        }
        if let Some(t) = self.interval {
            write!(f, " interval {t}")?;
        }
        Ok(())
    }
}

/// Checks `schedule` against every scheduling constraint; empty means feasible.
pub fn validate<T: Real>(scenario: &Scenario<T>, trace: &EpisodeTrace<T>, schedule: &Schedule) -> Vec<Finding> {
    let mut out = Vec::new();
    let find = |c, task, resource, interval| Finding { constraint: c, task, resource, interval };
    let tasks: HashMap<TaskKey, usize> = trace.tasks.iter().enumerate().map(|(i, t)| (t.key(), i)).collect();
    let mut seen: Vec<Vec<ResourceId>> = vec![Vec::new(); trace.len()];
    let mut busy: HashMap<(ResourceId, usize), TaskKey> = HashMap::new();

    for a in &schedule.assignments {
        let Some(&i) = tasks.get(&a.key) else {
            out.push(find(Constraint::UnknownReference, Some(a.key), None, None));
            continue;
        };
        if a.resource >= scenario.resource_count() {
            out.push(find(Constraint::UnknownReference, Some(a.key), Some(a.resource), None));
            continue;
        }
        seen[i].push(a.resource);
        let task = &trace.tasks[i];
        if a.end < a.start {
            out.push(find(Constraint::Contiguity, Some(a.key), Some(a.resource), Some(a.start)));
            continue;
        }
        if a.end - a.start + 1 != scenario.duration(task.type_id, a.resource) {
            out.push(find(Constraint::Duration, Some(a.key), Some(a.resource), Some(a.start)));
        }
        if a.start < task.arrival {
            out.push(find(Constraint::Causality, Some(a.key), Some(a.resource), Some(a.start)));
        }
        for t in a.start..=a.end {
            if let Some(other) = busy.insert((a.resource, t), a.key) {
                if other != a.key {
                    out.push(find(Constraint::Capacity, Some(a.key), Some(a.resource), Some(t)));
                }
            }
        }
    }
    for (i, rs) in seen.iter().enumerate() {
        let key = trace.tasks[i].key();
        match rs.as_slice() {
            [_] => {}
            [] => out.push(find(Constraint::SingleAssignment, Some(key), None, None)),
            [first, rest @ ..] => {
                if rest.iter().any(|r| r != first) {
                    out.push(find(Constraint::SingleResource, Some(key), None, None));
                }
                out.push(find(Constraint::SingleAssignment, Some(key), Some(*first), None));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// Weighted energy, delay and violation objective.
    P1,
    /// Weighted energy and delay under a violation bound.
    P2,
}

impl Problem {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Some(Problem::P1),
            "p2" => Some(Problem::P2),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w: f64,
    pub theta_m: f64,
    pub theta_d: f64,
    /// Violation bound of P2.
    pub vmax: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { w: 0.5, theta_m: 1.0, theta_d: 1.0, vmax: 15.0 }
    }
}

impl Weights {
    pub fn with_w(w: f64) -> Self {
        Self { w, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ObjectiveBreakdown<T: Real> {
    pub problem: Problem,
    pub weights: Weights,
    /// Lowest remaining ABS energy at the horizon, in energy units.
    pub min_remaining: T,
    pub min_remaining_fraction: T,
    pub mean_delay: T,
    pub violations: usize,
    pub value: T,
    /// Always true for P1; the violation bound for P2.
    pub feasible: bool,
}

impl<T: Real> ObjectiveBreakdown<T> {
    /// Scalar objective recomputed from the three terms.
    pub fn recompute(problem: Problem, weights: &Weights, min_remaining: T, mean_delay: T, violations: usize) -> T {
        let lit = T::lit;
        let (w, tm, td) = (lit(weights.w), lit(weights.theta_m), lit(weights.theta_d));
        let one = T::one();
        let two = lit(2.0);
        match problem {
            Problem::P1 => {
                w * min_remaining - (one - w) / (two * tm) * mean_delay - (one - w) / (two * td) * T::from_count(violations)
            }
            Problem::P2 => w * min_remaining - (one - w) / tm * mean_delay,
        }
    }
}

/// Per-task delay and violation of a feasible schedule, in trace order.
fn task_outcomes<T: Real>(scenario: &Scenario<T>, trace: &EpisodeTrace<T>, by_key: &HashMap<TaskKey, Assignment>) -> (T, usize) {
    let mut total = T::zero();
    let mut violations = 0;
    for task in &trace.tasks {
        let a = by_key[&task.key()];
        let d = end_to_end_delay(
            a.start,
            task.arrival,
            scenario.interval_len(),
            task.iot_delay,
            scenario.proc_time(task.type_id, a.resource),
        );
        total = total + d;
        if d > scenario.task_type(task.type_id).deadline {
            violations += 1;
        }
    }
    (total, violations)
}

/// Objective terms of a feasible schedule.
pub fn evaluate<T: Real>(
    scenario: &Scenario<T>,
    trace: &EpisodeTrace<T>,
    schedule: &Schedule,
    problem: Problem,
    weights: &Weights,
) -> Result<ObjectiveBreakdown<T>, OracleError> {
    let findings = validate(scenario, trace, schedule);
    if !findings.is_empty() {
        return Err(OracleError::InfeasibleSchedule(findings));
    }
    Ok(evaluate_unchecked(scenario, trace, schedule, problem, weights))
}

pub(crate) fn evaluate_unchecked<T: Real>(
    scenario: &Scenario<T>,
    trace: &EpisodeTrace<T>,
    schedule: &Schedule,
    problem: Problem,
    weights: &Weights,
) -> ObjectiveBreakdown<T> {
    let by_key: HashMap<TaskKey, Assignment> = schedule.assignments.iter().map(|a| (a.key, *a)).collect();
    let (total, violations) = task_outcomes(scenario, trace, &by_key);
    let n = trace.len();
    let mean_delay = if n == 0 { T::zero() } else { total / T::from_count(n) };

    let mut busy = vec![0usize; scenario.abs_count()];
    for a in &schedule.assignments {
        if scenario.is_abs(a.resource) {
            busy[a.resource] += a.end - a.start + 1;
        }
    }
    let mut min_remaining = T::infinity();
    let mut min_fraction = T::infinity();
    for (j, &b) in busy.iter().enumerate() {
        let p = scenario.energy(j).expect("ABS has energy parameters");
        let r = remaining_energy(p, scenario.horizon(), b);
        min_remaining = min_remaining.min(r);
        min_fraction = min_fraction.min(r / p.capacity);
    }
    let value = ObjectiveBreakdown::recompute(problem, weights, min_remaining, mean_delay, violations);
    ObjectiveBreakdown {
        problem,
        weights: *weights,
        min_remaining,
        min_remaining_fraction: min_fraction,
        mean_delay,
        violations,
        value,
        feasible: problem == Problem::P1 || (violations as f64) <= weights.vmax,
    }
}
