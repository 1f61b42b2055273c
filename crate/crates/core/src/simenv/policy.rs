use serde::{Deserialize, Serialize};

use super::{CompletionRecord, KpiReport, SimEnv, SimError};
use crate::num::Real;
use crate::scenario::{EpisodeTrace, ResourceId, Scenario, TaskKey, TaskRecord};

/// The single resource chosen for one task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub task: TaskKey,
    pub resource: ResourceId,
}

/// An offloading rule consulted once per task, in trace order.
pub trait Policy<T: Real> {
    fn name(&self) -> &str;

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision;

    /// Called before the first task of every run.
    fn reset(&mut self) {}
}

impl<T: Real, P: Policy<T> + ?Sized> Policy<T> for &mut P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        (**self).decide(env, task)
    }

    fn reset(&mut self) {
        (**self).reset()
    }
}

impl<T: Real, P: Policy<T> + ?Sized> Policy<T> for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        (**self).decide(env, task)
    }

    fn reset(&mut self) {
        (**self).reset()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EpisodeOutcome<T: Real> {
    pub report: KpiReport<T>,
    /// One record per trace task, in trace order.
    pub records: Vec<CompletionRecord<T>>,
}

/// Plays `trace` through a fresh environment under `policy`.
pub fn run_policy<T: Real, P: Policy<T> + ?Sized>(
    scenario: &Scenario<T>,
    trace: &EpisodeTrace<T>,
    policy: &mut P,
) -> Result<EpisodeOutcome<T>, SimError> {
    policy.reset();
    let mut env = SimEnv::new(scenario, trace);
    for task in &trace.tasks {
        let d = policy.decide(&env, task);
        if d.task != task.key() {
            return Err(SimError::UnknownTask(d.task));
        }
        env.commit_decision(task, d.resource)?;
    }
    let report = env.finalize()?;
    let records = env.records().iter().map(|r| r.clone().expect("all tasks committed")).collect();
    Ok(EpisodeOutcome { report, records })
}
