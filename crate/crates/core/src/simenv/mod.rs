//! Discrete-time world state: per-resource serial timelines, ABS batteries,
//! per-task completion records and the run KPIs.
//!
//! Every resource serves its tasks first-in first-out in commit order. A task
//! offloaded away from its receiving ABS becomes ready `ceil(hop / interval)`
//! intervals after arrival; a local task is ready on arrival.

mod energy;
mod kpi;
mod policy;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::scenario::{EpisodeTrace, ResourceId, Scenario, TaskKey, TaskRecord};

pub use energy::{remaining_energy, EnergyLedger};
pub use kpi::{KpiReport, ResourceKpi};
pub use policy::{run_policy, EpisodeOutcome, Policy, PolicyDecision};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("resource {0} does not exist")]
    UnknownResource(ResourceId),
    #[error("resource {0} is not an ABS")]
    NotAnAbs(ResourceId),
    #[error("task {0:?} was already assigned")]
    DoubleCommit(TaskKey),
    #[error("task {0:?} is not part of the trace")]
    UnknownTask(TaskKey),
    #[error("{pending} task(s) still unassigned")]
    IncompleteRun { pending: usize },
}

/// End-to-end delay of a task that starts at interval `start`: waiting and
/// link time plus processing, in seconds.
pub fn end_to_end_delay<T: Real>(start: usize, arrival: usize, interval_len: T, iot_delay: T, proc_time: T) -> T {
    T::from_count(start - arrival) * interval_len + iot_delay + proc_time
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedTask {
    pub key: TaskKey,
    pub ready: usize,
    pub start: usize,
    /// Last busy interval, inclusive.
    pub end: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ResourceState {
    /// First interval at which the resource is free.
    pub busy_until: usize,
    queue: VecDeque<QueuedTask>,
}

impl ResourceState {
    /// Tasks assigned here that have not finished before the current interval.
    pub fn queue(&self) -> impl Iterator<Item = &QueuedTask> {
        self.queue.iter()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    fn prune(&mut self, now: usize) {
        while self.queue.front().is_some_and(|q| q.end < now) {
            self.queue.pop_front();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CompletionRecord<T: Real> {
    pub key: TaskKey,
    pub type_id: usize,
    pub resource: ResourceId,
    pub start: usize,
    /// Last busy interval, inclusive.
    pub end: usize,
    pub delay: T,
    pub violated: bool,
}

pub struct SimEnv<'a, T: Real> {
    scenario: &'a Scenario<T>,
    trace: &'a EpisodeTrace<T>,
    index: HashMap<TaskKey, usize>,
    records: Vec<Option<CompletionRecord<T>>>,
    committed: usize,
    resources: Vec<ResourceState>,
    ledger: EnergyLedger<T>,
    now: usize,
}

impl<'a, T: Real> SimEnv<'a, T> {
    pub fn new(scenario: &'a Scenario<T>, trace: &'a EpisodeTrace<T>) -> Self {
        let index = trace.tasks.iter().enumerate().map(|(i, t)| (t.key(), i)).collect();
        Self {
            scenario,
            trace,
            index,
            records: vec![None; trace.len()],
            committed: 0,
            resources: vec![ResourceState::default(); scenario.resource_count()],
            ledger: EnergyLedger::new(scenario),
            now: 0,
        }
    }

    pub fn scenario(&self) -> &'a Scenario<T> {
        self.scenario
    }

    pub fn trace(&self) -> &'a EpisodeTrace<T> {
        self.trace
    }

    /// Latest interval the run has reached.
    pub fn now(&self) -> usize {
        self.now
    }

    pub fn ledger(&self) -> &EnergyLedger<T> {
        &self.ledger
    }

    pub fn resource(&self, r: ResourceId) -> Result<&ResourceState, SimError> {
        self.resources.get(r).ok_or(SimError::UnknownResource(r))
    }

    pub fn pending(&self) -> usize {
        self.trace.len() - self.committed
    }

    pub fn advance_to(&mut self, t: usize) {
        if t > self.now {
            self.now = t;
            self.ledger.advance_to(t);
            for r in &mut self.resources {
                r.prune(t);
            }
        }
    }

    /// Earliest interval at which `target` may start `task`.
    pub fn ready_interval(&self, task: &TaskRecord<T>, target: ResourceId) -> usize {
        task.arrival + self.scenario.hop_intervals(task.origin, target)
    }

    /// Seconds of queued work at `r` still outstanding at interval `at`,
    /// excluding any task not yet committed.
    pub fn backlog_seconds(&self, r: ResourceId, at: usize) -> Result<T, SimError> {
        let busy_until = self.resource(r)?.busy_until;
        Ok(T::from_count(busy_until.saturating_sub(at)) * self.scenario.interval_len())
    }

    /// Predicted end-to-end delay if `task` went to `target` now.
    pub fn expected_delay(&self, task: &TaskRecord<T>, target: ResourceId) -> Result<T, SimError> {
        let busy_until = self.resource(target)?.busy_until;
        let s = self.scenario;
        let ready = self.ready_interval(task, target);
        let wait = T::from_count(busy_until.saturating_sub(ready)) * s.interval_len();
        Ok(task.iot_delay + s.hop_delay(task.origin, target) + wait + s.proc_time(task.type_id, target))
    }

    pub fn remaining_energy(&self, abs: ResourceId) -> Result<T, SimError> {
        self.check_abs(abs)?;
        Ok(self.ledger.remaining(abs))
    }

    pub fn remaining_fraction(&self, abs: ResourceId) -> Result<T, SimError> {
        self.check_abs(abs)?;
        Ok(self.ledger.fraction(abs))
    }

    fn check_abs(&self, r: ResourceId) -> Result<(), SimError> {
        if r >= self.scenario.resource_count() {
            Err(SimError::UnknownResource(r))
        } else if !self.scenario.is_abs(r) {
            Err(SimError::NotAnAbs(r))
        } else {
            Ok(())
        }
    }

    /// Assigns `task` to `target`, appending it to that resource's timeline.
    pub fn commit_decision(&mut self, task: &TaskRecord<T>, target: ResourceId) -> Result<CompletionRecord<T>, SimError> {
        if target >= self.resources.len() {
            return Err(SimError::UnknownResource(target));
        }
        let key = task.key();
        let idx = *self.index.get(&key).ok_or(SimError::UnknownTask(key))?;
        if self.records[idx].is_some() {
            return Err(SimError::DoubleCommit(key));
        }
        // the trace copy is authoritative for type and link delay
        let task = self.trace.tasks[idx];
        self.advance_to(task.arrival);

        let s = self.scenario;
        let duration = s.duration(task.type_id, target);
        let ready = self.ready_interval(&task, target);
        let res = &mut self.resources[target];
        let start = res.busy_until.max(ready);
        let end = start + duration - 1;
        res.busy_until = end + 1;
        res.queue.push_back(QueuedTask { key, ready, start, end });
        if s.is_abs(target) {
            self.ledger.charge_busy(target, duration);
        }

        let delay = end_to_end_delay(start, task.arrival, s.interval_len(), task.iot_delay, s.proc_time(task.type_id, target));
        let record = CompletionRecord {
            key,
            type_id: task.type_id,
            resource: target,
            start,
            end,
            delay,
            violated: delay > s.task_type(task.type_id).deadline,
        };
        self.records[idx] = Some(record.clone());
        self.committed += 1;
        Ok(record)
    }

    /// Completion records in trace order; `None` for unassigned tasks.
    pub fn records(&self) -> &[Option<CompletionRecord<T>>] {
        &self.records
    }

    /// Closes the run at the horizon and computes its KPIs.
    pub fn finalize(&mut self) -> Result<KpiReport<T>, SimError> {
        if self.committed < self.trace.len() {
            return Err(SimError::IncompleteRun { pending: self.pending() });
        }
        self.advance_to(self.scenario.horizon());
        let s = self.scenario;
        let r_count = s.resource_count();
        let mut tasks = vec![0usize; r_count];
        let mut violations = vec![0usize; r_count];
        let mut delay_sum = vec![T::zero(); r_count];
        let mut total = T::zero();
        let mut violation_count = 0;
        for rec in self.records.iter().flatten() {
            total = total + rec.delay;
            tasks[rec.resource] += 1;
            delay_sum[rec.resource] = delay_sum[rec.resource] + rec.delay;
            if rec.violated {
                violations[rec.resource] += 1;
                violation_count += 1;
            }
        }
        let n = self.records.len();
        let mean_delay = if n == 0 { T::zero() } else { total / T::from_count(n) };
        let per_resource = (0..r_count)
            .map(|r| ResourceKpi {
                resource: r,
                kind: s.kind(r),
                tasks: tasks[r],
                violations: violations[r],
                mean_delay: if tasks[r] == 0 { T::zero() } else { delay_sum[r] / T::from_count(tasks[r]) },
            })
            .collect();
        let remaining_energy: Vec<T> = self.ledger.remaining_all().to_vec();
        let remaining_fraction: Vec<T> = (0..s.abs_count()).map(|j| self.ledger.fraction(j)).collect();
        let min_remaining_fraction = remaining_fraction.iter().copied().fold(T::infinity(), T::min);
        Ok(KpiReport {
            task_count: n,
            min_remaining_fraction,
            mean_delay,
            violation_count,
            empty: n == 0,
            per_resource,
            remaining_fraction,
            remaining_energy,
        })
    }
}
