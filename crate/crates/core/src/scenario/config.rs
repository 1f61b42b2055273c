use serde::{Deserialize, Serialize};

use super::{ArrivalScope, DelayModel, EnergyParams, ResourceKind, ResourceSpec, Scenario, ScenarioError, TaskType};
use crate::num::{exact_intervals, Real};

/// Multiplier applied to the raw per-component energy table so that it reads
/// as energy units per interval.
///
/// Derivation: with the default farm-wide rates an ABS receives 1.05 s of
/// local work per second, so one that processes all of its own arrivals for
/// 50 s accumulates about 1050 busy intervals. Requiring that ABS (capacity
/// 570) to end at 80 % charge gives
/// `scale = 0.20 * 570 / (4548 * 1000 + 8640 * 1050) ≈ 8.37e-6`, where 4548 is
/// hover + transmit + idle and 8640 is compute − idle. An ABS that never
/// computes then ends at about 93.3 %.
pub const DEFAULT_ENERGY_TIME_SCALE: f64 = 8.37e-6;

/// Text-format world description. Units are seconds; energy rows carry the
/// raw table numbers and are multiplied by `energy_time_scale` on build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub interval_len: f64,
    pub horizon_s: f64,
    pub abs_count: usize,
    pub mec_count: usize,
    pub energy_time_scale: f64,
    #[serde(default)]
    pub arrival_scope: ArrivalScope,
    pub seed: u64,
    pub delay: DelayConfig,
    pub task_types: Vec<TaskTypeConfig>,
    /// One row per ABS, in id order; extra rows are ignored.
    pub abs_energy: Vec<EnergyRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub iot_base: f64,
    pub iot_jitter_mean: f64,
    pub abs_to_abs_hop: f64,
    pub abs_to_mec_hop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTypeConfig {
    pub name: String,
    pub mean_interarrival: f64,
    pub deadline: f64,
    pub proc_time_abs: f64,
    pub proc_time_mec: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyRow {
    pub capacity: f64,
    pub hover: f64,
    pub transmit: f64,
    pub idle: f64,
    pub compute: f64,
}

impl EnergyRow {
    pub const fn new(capacity: f64, hover: f64, transmit: f64, idle: f64, compute: f64) -> Self {
        Self { capacity, hover, transmit, idle, compute }
    }
}

impl TaskTypeConfig {
    fn new(name: &str, mean_interarrival: f64, deadline: f64, proc_time_abs: f64, proc_time_mec: f64) -> Self {
        Self {
            name: name.to_string(),
            mean_interarrival,
            deadline,
            proc_time_abs,
            proc_time_mec,
        }
    }
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            iot_base: 0.01,
            iot_jitter_mean: 0.01,
            abs_to_abs_hop: 0.02,
            abs_to_mec_hop: 0.01,
        }
    }
}

/// Four-ABS farm with fire detection, pesticide detection and growth
/// monitoring tasks over a 50 s window.
impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            interval_len: 0.05,
            horizon_s: 50.0,
            abs_count: 4,
            mec_count: 1,
            energy_time_scale: DEFAULT_ENERGY_TIME_SCALE,
            arrival_scope: ArrivalScope::Farm,
            seed: 1,
            delay: DelayConfig::default(),
            task_types: vec![
                TaskTypeConfig::new("fire_detection", 0.25, 1.0, 0.1, 0.05),
                TaskTypeConfig::new("pesticide_detection", 0.25, 2.0, 0.2, 0.1),
                TaskTypeConfig::new("growth_monitoring", 0.5, 15.0, 1.5, 0.75),
            ],
            abs_energy: vec![
                EnergyRow::new(570.0, 211.0, 17.0, 4320.0, 12960.0),
                EnergyRow::new(570.0, 211.0, 17.0, 4320.0, 12960.0),
                EnergyRow::new(627.0, 211.0, 17.0, 4320.0, 12960.0),
                EnergyRow::new(627.0, 211.0, 17.0, 4320.0, 12960.0),
            ],
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::MalformedConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Stressed small-instance world for exact optimization: every type
    /// arrives every 0.125 s on average, fire and pesticide deadlines are
    /// tightened to 0.2 s and 0.6 s, two ABSs and one MEC.
    pub fn oracle_stress() -> Self {
        let mut cfg = Self {
            horizon_s: 1.6,
            abs_count: 2,
            ..Self::default()
        };
        for t in &mut cfg.task_types {
            t.mean_interarrival = 0.125;
        }
        cfg.task_types[0].deadline = 0.2;
        cfg.task_types[1].deadline = 0.6;
        cfg
    }

    pub fn build<T: Real>(&self) -> Result<Scenario<T>, ScenarioError> {
        if self.abs_energy.len() < self.abs_count {
            return Err(ScenarioError::MalformedConfig(format!(
                "abs_energy lists {} rows but abs_count is {}",
                self.abs_energy.len(),
                self.abs_count
            )));
        }
        let horizon = exact_intervals(self.horizon_s, self.interval_len).ok_or_else(|| {
            ScenarioError::InvariantViolation(format!(
                "horizon_s {} must be a whole number of intervals of {}",
                self.horizon_s, self.interval_len
            ))
        })?;
        let scale = self.energy_time_scale;
        let lit = T::lit;
        let task_types = self
            .task_types
            .iter()
            .enumerate()
            .map(|(id, t)| TaskType {
                id,
                name: t.name.clone(),
                mean_interarrival: lit(t.mean_interarrival),
                deadline: lit(t.deadline),
                proc_time_abs: lit(t.proc_time_abs),
                proc_time_mec: lit(t.proc_time_mec),
            })
            .collect();
        let resources = (0..self.abs_count + self.mec_count)
            .map(|id| {
                if id < self.abs_count {
                    let e = &self.abs_energy[id];
                    ResourceSpec {
                        id,
                        kind: ResourceKind::Abs,
                        energy: Some(EnergyParams {
                            capacity: lit(e.capacity),
                            hover: lit(e.hover * scale),
                            transmit: lit(e.transmit * scale),
                            idle: lit(e.idle * scale),
                            compute: lit(e.compute * scale),
                        }),
                    }
                } else {
                    ResourceSpec { id, kind: ResourceKind::Mec, energy: None }
                }
            })
            .collect();
        Scenario {
            interval_len: lit(self.interval_len),
            horizon,
            abs_count: self.abs_count,
            mec_count: self.mec_count,
            task_types,
            resources,
            delay_model: DelayModel {
                iot_base: lit(self.delay.iot_base),
                iot_jitter_mean: lit(self.delay.iot_jitter_mean),
                abs_to_abs_hop: lit(self.delay.abs_to_abs_hop),
                abs_to_mec_hop: lit(self.delay.abs_to_mec_hop),
            },
            energy_time_scale: lit(scale),
            arrival_scope: self.arrival_scope,
            seed: self.seed,
            durations: Vec::new(),
        }
        .validated()
    }
}
