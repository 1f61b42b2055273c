use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::scenario::{ResourceId, TaskRecord};
use crate::simenv::SimEnv;

use super::reward::battery_reward_level;

/// Dimensions of the discrete state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub task_types: usize,
    pub resources: usize,
    pub abs_count: usize,
    /// Whether the agent's previous action is part of the state.
    pub with_prev_action: bool,
}

/// Decoded form of a state index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedState {
    pub task_type: usize,
    /// One of 0, 1, 2 per resource.
    pub delay_buckets: Vec<u8>,
    /// One of 0, 1, 2 per ABS.
    pub battery_levels: Vec<u8>,
    pub prev_action: Option<ResourceId>,
}

impl StateSpace {
    pub fn new(task_types: usize, resources: usize, abs_count: usize, with_prev_action: bool) -> Self {
        Self { task_types, resources, abs_count, with_prev_action }
    }

    pub fn state_count(&self) -> usize {
        let base = self.task_types * 3usize.pow(self.resources as u32) * 3usize.pow(self.abs_count as u32);
        if self.with_prev_action {
            base * self.resources
        } else {
            base
        }
    }

    pub fn action_count(&self) -> usize {
        self.resources
    }

    /// Mixed-radix index, task type most significant.
    pub fn encode(&self, s: &EncodedState) -> usize {
        debug_assert_eq!(s.delay_buckets.len(), self.resources);
        debug_assert_eq!(s.battery_levels.len(), self.abs_count);
        let mut idx = s.task_type;
        for &b in s.delay_buckets.iter().chain(&s.battery_levels) {
            idx = idx * 3 + b as usize;
        }
        if self.with_prev_action {
            idx = idx * self.resources + s.prev_action.expect("state space tracks the previous action");
        }
        idx
    }

    pub fn decode(&self, mut idx: usize) -> EncodedState {
        let prev_action = if self.with_prev_action {
            let a = idx % self.resources;
            idx /= self.resources;
            Some(a)
        } else {
            None
        };
        let mut digits = vec![0u8; self.resources + self.abs_count];
        for d in digits.iter_mut().rev() {
            *d = (idx % 3) as u8;
            idx /= 3;
        }
        let battery_levels = digits.split_off(self.resources);
        EncodedState { task_type: idx, delay_buckets: digits, battery_levels, prev_action }
    }
}

/// 0 within half the deadline, 1 within the deadline, 2 beyond it.
pub fn delay_bucket<T: Real>(delay: T, deadline: T) -> u8 {
    if delay <= deadline * T::lit(0.5) {
        0
    } else if delay <= deadline {
        1
    } else {
        2
    }
}

/// Everything a learner reads from the world for one pending task.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation<T: Real> {
    pub task_type: usize,
    pub origin: ResourceId,
    pub deadline: T,
    /// Expected end-to-end delay per resource.
    pub expected_delay: Vec<T>,
    /// Current remaining energy per ABS.
    pub energy: Vec<T>,
    /// Extra drain per ABS if the task were processed there.
    pub compute_drain: Vec<T>,
    pub capacity: Vec<T>,
    pub abs_count: usize,
}

impl<T: Real> Observation<T> {
    pub fn new(env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> Self {
        let s = env.scenario();
        let expected_delay = (0..s.resource_count())
            .map(|r| env.expected_delay(task, r).expect("known resource"))
            .collect();
        let ledger = env.ledger();
        let abs = s.abs_count();
        Self {
            task_type: task.type_id,
            origin: task.origin,
            deadline: s.task_type(task.type_id).deadline,
            expected_delay,
            energy: ledger.remaining_all().to_vec(),
            compute_drain: (0..abs)
                .map(|j| ledger.params(j).busy_drain() * T::from_count(s.duration(task.type_id, j)))
                .collect(),
            capacity: (0..abs).map(|j| ledger.capacity(j)).collect(),
            abs_count: abs,
        }
    }

    pub fn resources(&self) -> usize {
        self.expected_delay.len()
    }

    /// Remaining energy per ABS after processing the task at `action`.
    pub fn expected_energy(&self, action: ResourceId) -> Vec<T> {
        let mut e = self.energy.clone();
        if action < self.abs_count {
            e[action] = e[action] - self.compute_drain[action];
        }
        e
    }

    /// Remaining battery fraction per ABS after processing the task at `action`.
    pub fn expected_fractions(&self, action: ResourceId) -> Vec<T> {
        self.expected_energy(action).iter().zip(&self.capacity).map(|(&e, &c)| e / c).collect()
    }

    /// Expected deadline miss, counting a delay equal to the deadline as a miss.
    pub fn expects_violation(&self, r: ResourceId) -> bool {
        self.deadline <= self.expected_delay[r]
    }

    pub fn encode(&self, hysteresis: T, prev_action: Option<ResourceId>) -> EncodedState {
        let delay_buckets = self.expected_delay.iter().map(|&d| delay_bucket(d, self.deadline)).collect();
        let battery_levels = (0..self.abs_count)
            .map(|j| battery_reward_level(&self.energy, j, hysteresis * self.capacity[j]))
            .collect();
        EncodedState { task_type: self.task_type, delay_buckets, battery_levels, prev_action }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{EpisodeTrace, Scenario, ScenarioConfig};

    #[test]
    fn sizes() {
        assert_eq!(StateSpace::new(3, 5, 4, false).state_count(), 3 * 243 * 81);
        assert_eq!(StateSpace::new(3, 5, 4, true).state_count(), 3 * 243 * 81 * 5);
    }

    #[test]
    fn encode_decode_is_a_bijection_on_a_small_space() {
        for prev in [false, true] {
            let sp = StateSpace::new(2, 3, 2, prev);
            for i in 0..sp.state_count() {
                let s = sp.decode(i);
                assert_eq!(sp.encode(&s), i);
            }
        }
    }

    #[test]
    fn buckets_are_deadline_relative() {
        assert_eq!(delay_bucket(0.5, 1.0), 0);
        assert_eq!(delay_bucket(0.51, 1.0), 1);
        assert_eq!(delay_bucket(1.0, 1.0), 1);
        assert_eq!(delay_bucket(1.01, 1.0), 2);
    }

    fn world() -> Scenario<f64> {
        ScenarioConfig::default().build().unwrap()
    }

    #[test]
    fn idle_world_fire_task_is_all_bucket_zero() {
        let s = world();
        let task = TaskRecord { origin: 0, arrival: 0, type_id: 0, iot_delay: 0.02 };
        let trace = EpisodeTrace::new(s.fingerprint(), vec![task]);
        let env = SimEnv::new(&s, &trace);
        let obs = Observation::new(&env, &task);
        let st = obs.encode(0.02, None);
        assert!(st.delay_buckets.iter().all(|&b| b == 0));
        assert!(!(0..5).any(|r| obs.expects_violation(r)));
    }

    #[test]
    fn congested_resource_lands_in_bucket_two() {
        let s = world();
        let first = TaskRecord { origin: 1, arrival: 0, type_id: 2, iot_delay: 0.0 };
        let task = TaskRecord { origin: 1, arrival: 1, type_id: 0, iot_delay: 0.02 };
        let trace = EpisodeTrace::new(s.fingerprint(), vec![first, task]);
        let mut env = SimEnv::new(&s, &trace);
        env.commit_decision(&first, 1).unwrap();
        let obs = Observation::new(&env, &task);
        let st = obs.encode(0.02, None);
        assert_eq!(st.delay_buckets[1], 2);
        assert!(obs.expects_violation(1));
        assert_eq!(st.delay_buckets[0], 0);
    }

    #[test]
    fn identical_observations_encode_identically() {
        let s = world();
        let task = TaskRecord { origin: 2, arrival: 4, type_id: 1, iot_delay: 0.015 };
        let trace = EpisodeTrace::new(s.fingerprint(), vec![task]);
        let a = Observation::new(&SimEnv::new(&s, &trace), &task);
        let b = Observation::new(&SimEnv::new(&s, &trace), &task);
        let sp = StateSpace::new(3, 5, 4, true);
        assert_eq!(sp.encode(&a.encode(0.02, Some(3))), sp.encode(&b.encode(0.02, Some(3))));
    }
}
