//! Independent tabular learners, one per ABS: plain Q-learning, the
//! risk-sensitive dual-table learner with a dynamic risk weight, and its
//! energy-centric variant whose risk is battery imbalance.

mod learner;
mod persist;
mod reward;
mod state;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use learner::{CurvePoint, FrozenPolicy, OffloadLearner, StepSignal, TrainingLog, ZetaPoint};
pub use persist::{load_tables, load_tables_for, save_tables, TABLE_FORMAT_VERSION};
pub use reward::{
    action_battery_level, battery_reward_level, energy_centric_risk, energy_gap, q_reward, rs_reward, rs_risk_cost,
    violation_severity, zeta_update,
};
pub use state::{delay_bucket, EncodedState, Observation, StateSpace};
pub use table::{greedy_index, QTable, Sense};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("severity requested for an action that is expected to meet its deadline")]
    CalledOnSafeAction,
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("table file version mismatch: {0}")]
    VersionMismatch(String),
    #[error("malformed table file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Sim(#[from] crate::simenv::SimError),
}

impl PartialEq for AgentError {
    fn eq(&self, other: &Self) -> bool {
        use AgentError::*;
        match (self, other) {
            (InvalidParams(a), InvalidParams(b)) => a == b,
            (CalledOnSafeAction, CalledOnSafeAction) => true,
            (Io(a), Io(b)) => a.kind() == b.kind(),
            (VersionMismatch(a), VersionMismatch(b)) => a == b,
            (Malformed(a), Malformed(b)) => a == b,
            (Sim(a), Sim(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    QLearning,
    RiskSensitive,
    EnergyCentric,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::QLearning => "qlearning",
            AgentKind::RiskSensitive => "risk",
            AgentKind::EnergyCentric => "energy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "qlearning" | "q" => Some(AgentKind::QLearning),
            "risk" | "risk_sensitive" => Some(AgentKind::RiskSensitive),
            "energy" | "energy_centric" => Some(AgentKind::EnergyCentric),
            _ => None,
        }
    }

    /// Whether the learner keeps a separate risk table and a dynamic weight.
    pub fn is_dual(self) -> bool {
        self != AgentKind::QLearning
    }
}

/// Learning hyperparameters. Defaults follow the published parameter table
/// except where noted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    pub kind: AgentKind,
    /// Learning rate.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Exploration rate at the first episode, decayed linearly to `epsilon_end`.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Training episodes.
    pub episodes: usize,
    /// Episodes between risk-weight updates.
    pub update_every: usize,
    pub zeta_init: f64,
    /// Risk-weight step.
    pub lambda: f64,
    /// Allowed deadline violations per evaluation episode.
    pub violation_bound: f64,
    /// Guard band added to the observed violations before comparing.
    pub violation_guard: f64,
    /// Weight of the energy objective against delay and deadlines.
    pub w: f64,
    pub theta_m: f64,
    pub theta_d: f64,
    /// Battery-level band as a fraction of the chosen ABS's capacity.
    pub hysteresis: f64,
    /// Energy-centric risk threshold on the spread of battery fractions.
    pub gap_threshold: f64,
    pub seed: u64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            kind: AgentKind::RiskSensitive,
            alpha: 0.05,
            gamma: 0.85,
            epsilon_start: 0.1,
            epsilon_end: 0.01,
            episodes: 100_000,
            update_every: 1_000,
            zeta_init: 0.0,
            lambda: 0.02,
            violation_bound: 3.0,
            violation_guard: 2.0,
            w: 0.5,
            theta_m: 1.0,
            theta_d: 1.0,
            hysteresis: 0.02,
            gap_threshold: 0.02,
            seed: 0,
        }
    }
}

impl AgentParams {
    pub fn new(kind: AgentKind) -> Self {
        Self { kind, ..Self::default() }
    }

    /// Shrinks a run to `episodes` while keeping the same number of
    /// risk-weight updates (one per hundredth of the run).
    pub fn desk(kind: AgentKind, episodes: usize) -> Self {
        Self {
            kind,
            episodes,
            update_every: (episodes / 100).max(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidParams(m.to_string()));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in [0, 1)");
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) {
            return bad("exploration rates must lie in [0, 1]");
        }
        if self.update_every == 0 {
            return bad("update_every must be at least 1");
        }
        if !unit(self.zeta_init) || !unit(self.lambda) {
            return bad("zeta_init and lambda must lie in [0, 1]");
        }
        if !unit(self.w) {
            return bad("w must lie in [0, 1]");
        }
        if !(self.theta_m > 0.0 && self.theta_d > 0.0) {
            return bad("theta_m and theta_d must be positive");
        }
        if !(self.hysteresis >= 0.0 && self.gap_threshold >= 0.0) {
            return bad("hysteresis and gap_threshold must be non-negative");
        }
        if !(self.violation_bound.is_finite() && self.violation_guard.is_finite()) {
            return bad("violation bound and guard must be finite");
        }
        Ok(())
    }

    /// Exploration rate used in `episode` of a run.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_start;
        }
        let f = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * f.min(1.0)
    }
}
