//! Discrete-time simulator of IoT task offloading across aerial base stations
//! (ABSs) and a mains-powered edge server (MEC) in a smart farm, with
//! heuristic baselines, tabular Q-learning and risk-sensitive learners, and an
//! exact optimizer for tiny instances.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod baselines;
pub mod num;
pub mod oracle;
pub mod scenario;
pub mod simenv;

pub use num::Real;

pub type Scenario64 = scenario::Scenario<f64>;
pub type Scenario32 = scenario::Scenario<f32>;
pub type Trace64 = scenario::EpisodeTrace<f64>;
pub type Trace32 = scenario::EpisodeTrace<f32>;
pub type SimEnv64<'a> = simenv::SimEnv<'a, f64>;
pub type SimEnv32<'a> = simenv::SimEnv<'a, f32>;
pub type KpiReport64 = simenv::KpiReport<f64>;
pub type KpiReport32 = simenv::KpiReport<f32>;
