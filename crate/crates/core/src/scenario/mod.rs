//! Static world model: resources, task types, energy table, delay model and
//! the time grid, plus the arrival traces generated from it.

mod config;
mod trace;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::num::{ceil_intervals, exact_intervals, Real};

pub use config::{DelayConfig, EnergyRow, ScenarioConfig, TaskTypeConfig};
pub use trace::{generate_trace, load_trace, load_trace_for, save_trace, EpisodeTrace, TaskKey, TaskRecord};

/// Index into the resource set: ABSs first (`0..J`), then MECs (`J..J+L`).
pub type ResourceId = usize;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed config: {0}")]
    MalformedConfig(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace fingerprint {found} does not match scenario fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("malformed trace at line {line}: {reason}")]
    MalformedTrace { line: usize, reason: String },
}

/// What a task type's mean interarrival time refers to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalScope {
    /// One arrival stream per type for the whole farm; each arrival lands on
    /// an ABS chosen uniformly at random.
    #[default]
    Farm,
    /// One arrival stream per (ABS, type) pair.
    PerAbs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Abs,
    Mec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TaskType<T: Real> {
    pub id: usize,
    pub name: String,
    /// Mean gap between arrivals at one ABS, in seconds (`1/λ`).
    pub mean_interarrival: T,
    pub deadline: T,
    pub proc_time_abs: T,
    pub proc_time_mec: T,
}

impl<T: Real> TaskType<T> {
    pub fn proc_time(&self, kind: ResourceKind) -> T {
        match kind {
            ResourceKind::Abs => self.proc_time_abs,
            ResourceKind::Mec => self.proc_time_mec,
        }
    }
}

/// Per-ABS energy figures. Consumption terms are per interval, already scaled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EnergyParams<T: Real> {
    pub capacity: T,
    pub hover: T,
    pub transmit: T,
    pub idle: T,
    pub compute: T,
}

impl<T: Real> EnergyParams<T> {
    /// Drain per elapsed interval regardless of decisions.
    pub fn base_drain(&self) -> T {
        self.hover + self.transmit + self.idle
    }

    /// Extra drain of one busy interval over an idle one.
    pub fn busy_drain(&self) -> T {
        self.compute - self.idle
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResourceSpec<T: Real> {
    pub id: ResourceId,
    pub kind: ResourceKind,
    pub energy: Option<EnergyParams<T>>,
}

/// Transmission delays. The IoT link is `iot_base + Exp(iot_jitter_mean)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DelayModel<T: Real> {
    pub iot_base: T,
    pub iot_jitter_mean: T,
    pub abs_to_abs_hop: T,
    pub abs_to_mec_hop: T,
}

/// A validated world description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scenario<T: Real> {
    interval_len: T,
    horizon: usize,
    abs_count: usize,
    mec_count: usize,
    task_types: Vec<TaskType<T>>,
    resources: Vec<ResourceSpec<T>>,
    delay_model: DelayModel<T>,
    energy_time_scale: T,
    arrival_scope: ArrivalScope,
    seed: u64,
    /// Processing durations in intervals, indexed `[type][kind]`.
    #[serde(skip)]
    durations: Vec<[usize; 2]>,
}

impl<T: Real> Scenario<T> {
    /// Builds a scenario from a config document (TOML text).
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        ScenarioConfig::from_toml_str(text)?.build()
    }

    pub fn interval_len(&self) -> T {
        self.interval_len
    }

    /// Number of intervals `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn abs_count(&self) -> usize {
        self.abs_count
    }

    pub fn mec_count(&self) -> usize {
        self.mec_count
    }

    pub fn resource_count(&self) -> usize {
        self.abs_count + self.mec_count
    }

    pub fn task_types(&self) -> &[TaskType<T>] {
        &self.task_types
    }

    pub fn task_type(&self, id: usize) -> &TaskType<T> {
        &self.task_types[id]
    }

    pub fn resources(&self) -> &[ResourceSpec<T>] {
        &self.resources
    }

    pub fn delay_model(&self) -> &DelayModel<T> {
        &self.delay_model
    }

    pub fn energy_time_scale(&self) -> T {
        self.energy_time_scale
    }

    pub fn arrival_scope(&self) -> ArrivalScope {
        self.arrival_scope
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self, r: ResourceId) -> ResourceKind {
        if r < self.abs_count {
            ResourceKind::Abs
        } else {
            ResourceKind::Mec
        }
    }

    pub fn is_abs(&self, r: ResourceId) -> bool {
        r < self.abs_count
    }

    pub fn energy(&self, abs: ResourceId) -> Option<&EnergyParams<T>> {
        self.resources.get(abs).and_then(|r| r.energy.as_ref())
    }

    /// Processing duration of a task type at a resource, in intervals.
    pub fn duration(&self, type_id: usize, r: ResourceId) -> usize {
        let kind = self.kind(r);
        self.durations[type_id][kind as usize]
    }

    /// Processing time of a task type at a resource, in seconds.
    pub fn proc_time(&self, type_id: usize, r: ResourceId) -> T {
        self.task_types[type_id].proc_time(self.kind(r))
    }

    /// Network delay from the receiving ABS to `target`; zero for itself.
    pub fn hop_delay(&self, origin: ResourceId, target: ResourceId) -> T {
        if origin == target {
            T::zero()
        } else if self.is_abs(target) {
            self.delay_model.abs_to_abs_hop
        } else {
            self.delay_model.abs_to_mec_hop
        }
    }

    /// Intervals the hop postpones the earliest start of an offloaded task.
    pub fn hop_intervals(&self, origin: ResourceId, target: ResourceId) -> usize {
        ceil_intervals(self.hop_delay(origin, target), self.interval_len)
    }

    /// Hex digest identifying the world (everything except the RNG seed).
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct World<'a, T: Real> {
            interval_len: f64,
            horizon: usize,
            abs_count: usize,
            mec_count: usize,
            task_types: &'a [TaskType<T>],
            resources: &'a [ResourceSpec<T>],
            delay_model: &'a DelayModel<T>,
            energy_time_scale: f64,
            arrival_scope: ArrivalScope,
        }
        let world = World {
            interval_len: self.interval_len.as_f64(),
            horizon: self.horizon,
            abs_count: self.abs_count,
            mec_count: self.mec_count,
            task_types: &self.task_types,
            resources: &self.resources,
            delay_model: &self.delay_model,
            energy_time_scale: self.energy_time_scale.as_f64(),
            arrival_scope: self.arrival_scope,
        };
        let bytes = serde_json::to_vec(&world).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn validated(mut self) -> Result<Self, ScenarioError> {
        let inv = |msg: String| Err(ScenarioError::InvariantViolation(msg));
        if !(self.interval_len > T::zero()) {
            return inv("interval_len must be positive".into());
        }
        if self.horizon == 0 {
            return inv("horizon must contain at least one interval".into());
        }
        if self.abs_count == 0 {
            return inv("at least one ABS is required".into());
        }
        if self.mec_count == 0 {
            return inv("at least one MEC is required".into());
        }
        if self.task_types.is_empty() {
            return inv("at least one task type is required".into());
        }
        if !(self.energy_time_scale > T::zero()) {
            return inv("energy_time_scale must be positive".into());
        }
        let dm = &self.delay_model;
        for (name, v) in [
            ("iot_base", dm.iot_base),
            ("iot_jitter_mean", dm.iot_jitter_mean),
            ("abs_to_abs_hop", dm.abs_to_abs_hop),
            ("abs_to_mec_hop", dm.abs_to_mec_hop),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return inv(format!("delay {name} must be finite and non-negative"));
            }
        }
        let mut durations = Vec::with_capacity(self.task_types.len());
        for (i, tt) in self.task_types.iter().enumerate() {
            if tt.id != i {
                return inv(format!("task type ids must be 0..K in order, found {} at {i}", tt.id));
            }
            let positive = [tt.mean_interarrival, tt.deadline, tt.proc_time_abs, tt.proc_time_mec]
                .iter()
                .all(|&v| v > T::zero());
            if !positive {
                return inv(format!("task type {i}: all durations must be strictly positive"));
            }
            if tt.proc_time_mec > tt.proc_time_abs {
                return inv(format!("task type {i}: proc_time_mec must not exceed proc_time_abs"));
            }
            if !(tt.deadline > tt.proc_time_abs) {
                return inv(format!("task type {i}: deadline must exceed proc_time_abs"));
            }
            let abs = exact_intervals(tt.proc_time_abs, self.interval_len);
            let mec = exact_intervals(tt.proc_time_mec, self.interval_len);
            match (abs, mec) {
                (Some(a), Some(m)) if a > 0 && m > 0 => durations.push([a, m]),
                _ => {
                    return inv(format!(
                        "interval_len {} must divide every processing time (task type {i})",
                        self.interval_len
                    ))
                }
            }
        }
        for r in &self.resources {
            match (self.kind(r.id), &r.energy) {
                (ResourceKind::Abs, Some(e)) => {
                    let all = [e.capacity, e.hover, e.transmit, e.idle, e.compute];
                    if all.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
                        return inv(format!("ABS {}: energy values must be finite and non-negative", r.id));
                    }
                    if !(e.capacity > T::zero()) {
                        return inv(format!("ABS {}: capacity must be positive", r.id));
                    }
                    if !(e.compute > e.idle) {
                        return inv(format!("ABS {}: compute consumption must exceed idle", r.id));
                    }
                }
                (ResourceKind::Abs, None) => return inv(format!("ABS {} lacks energy parameters", r.id)),
                (ResourceKind::Mec, Some(_)) => return inv(format!("MEC {} must not carry energy parameters", r.id)),
                (ResourceKind::Mec, None) => {}
            }
        }
        self.durations = durations;
        Ok(self)
    }
}
