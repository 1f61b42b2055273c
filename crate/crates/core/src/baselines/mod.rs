//! Non-learning comparison policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::num::Real;
use crate::scenario::{ResourceId, TaskRecord};
use crate::simenv::{Policy, PolicyDecision, SimEnv};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaselineError {
    #[error("unknown policy `{0}` (expected one of rr, lqhe, local, mec, random)")]
    UnknownPolicy(String),
}

pub const BASELINE_NAMES: [&str; 4] = ["rr", "lqhe", "local", "mec"];

/// Builds a baseline by its command-line name. `seed` only matters for `random`.
pub fn by_name<T: Real>(name: &str, seed: u64) -> Result<Box<dyn Policy<T> + Send>, BaselineError> {
    Ok(match name {
        "rr" => Box::new(RoundRobin::default()),
        "lqhe" => Box::new(Lqhe::default()),
        "local" => Box::new(AlwaysLocal),
        "mec" => Box::new(AlwaysMec),
        "random" => Box::new(UniformRandom::new(seed)),
        other => return Err(BaselineError::UnknownPolicy(other.to_string())),
    })
}

/// Cycles over all resources with one global cursor, ABSs first then MECs.
#[derive(Clone, Debug, Default)]
pub struct RoundRobin {
    last: Option<ResourceId>,
}

impl RoundRobin {
    /// Resource following `last` in a cycle of `n`; the first call yields 0.
    pub fn successor(last: Option<ResourceId>, n: usize) -> ResourceId {
        last.map_or(0, |l| (l + 1) % n)
    }

    pub fn last(&self) -> Option<ResourceId> {
        self.last
    }
}

impl<T: Real> Policy<T> for RoundRobin {
    fn name(&self) -> &str {
        "rr"
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        let r = Self::successor(self.last, env.scenario().resource_count());
        self.last = Some(r);
        PolicyDecision { task: task.key(), resource: r }
    }

    fn reset(&mut self) {
        self.last = None;
    }
}

/// Lowest queue time, highest energy.
///
/// Queue time is the backlog in seconds at the task's arrival. A neighbour's
/// queue counts as the lowest only if it undercuts the receiving ABS by
/// `queue_margin`; otherwise the receiving ABS's own queue time is the bar.
/// Among neighbours at or below the bar, the ABS with the highest energy
/// fraction wins if it beats the receiving ABS by `energy_margin`. Failing
/// that, a MEC holding the lowest queue after an undercut takes the task;
/// otherwise it stays local.
#[derive(Clone, Debug)]
pub struct Lqhe {
    pub queue_margin: f64,
    pub energy_margin: f64,
}

impl Default for Lqhe {
    fn default() -> Self {
        Self { queue_margin: 0.5, energy_margin: 0.01 }
    }
}

/// What LQHE sees of one resource.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LqheView {
    pub resource: ResourceId,
    pub queue_s: f64,
    /// `None` for a MEC.
    pub energy_fraction: Option<f64>,
}

impl Lqhe {
    /// The decision rule on plain numbers; `views` covers every resource.
    pub fn choose(&self, origin: ResourceId, views: &[LqheView]) -> ResourceId {
        let own = views.iter().find(|v| v.resource == origin).expect("origin is listed");
        let own_energy = own.energy_fraction.unwrap_or(f64::INFINITY);
        let neighbours = || views.iter().filter(|v| v.resource != origin);
        let Some(min_nb) = neighbours().map(|v| v.queue_s).min_by(f64::total_cmp) else {
            return origin;
        };
        let undercut = own.queue_s - min_nb >= self.queue_margin - 1e-12;
        let lowest = if undercut { min_nb } else { own.queue_s };

        let mut best: Option<&LqheView> = None;
        for v in neighbours().filter(|v| v.queue_s <= lowest) {
            if let Some(e) = v.energy_fraction {
                if best.is_none_or(|b| e > b.energy_fraction.unwrap()) {
                    best = Some(v);
                }
            }
        }
        if let Some(b) = best {
            if b.energy_fraction.unwrap() >= own_energy + self.energy_margin - 1e-12 {
                return b.resource;
            }
        }
        if undercut {
            if let Some(m) = neighbours().find(|v| v.energy_fraction.is_none() && v.queue_s <= min_nb) {
                return m.resource;
            }
        }
        origin
    }
}

impl<T: Real> Policy<T> for Lqhe {
    fn name(&self) -> &str {
        "lqhe"
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        let s = env.scenario();
        let views: Vec<LqheView> = (0..s.resource_count())
            .map(|r| LqheView {
                resource: r,
                queue_s: env.backlog_seconds(r, task.arrival).expect("known resource").as_f64(),
                energy_fraction: env.remaining_fraction(r).ok().map(|f| f.as_f64()),
            })
            .collect();
        PolicyDecision { task: task.key(), resource: self.choose(task.origin, &views) }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysLocal;

impl<T: Real> Policy<T> for AlwaysLocal {
    fn name(&self) -> &str {
        "local"
    }

    fn decide(&mut self, _env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        PolicyDecision { task: task.key(), resource: task.origin }
    }
}

/// Sends everything to the first MEC.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysMec;

impl<T: Real> Policy<T> for AlwaysMec {
    fn name(&self) -> &str {
        "mec"
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        PolicyDecision { task: task.key(), resource: env.scenario().abs_count() }
    }
}

/// Uniform choice over all resources; a diagnostic, not a baseline.
#[derive(Clone, Debug)]
pub struct UniformRandom {
    rng: ChaCha8Rng,
}

impl UniformRandom {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl<T: Real> Policy<T> for UniformRandom {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        let r = self.rng.random_range(0..env.scenario().resource_count());
        PolicyDecision { task: task.key(), resource: r }
    }
}
