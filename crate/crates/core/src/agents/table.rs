use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Which way a table is optimized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

/// Dense state-action value table.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable<T: Real> {
    states: usize,
    actions: usize,
    values: Vec<T>,
    visits: Vec<u32>,
}

impl<T: Real> QTable<T> {
    pub fn new(states: usize, actions: usize) -> Self {
        Self {
            states,
            actions,
            values: vec![T::zero(); states * actions],
            visits: vec![0; states * actions],
        }
    }

    pub(crate) fn from_parts(states: usize, actions: usize, values: Vec<T>, visits: Vec<u32>) -> Self {
        assert_eq!(values.len(), states * actions);
        assert_eq!(visits.len(), states * actions);
        Self { states, actions, values, visits }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn visits(&self) -> &[u32] {
        &self.visits
    }

    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: T) {
        self.values[s * self.actions + a] = v;
    }

    pub fn visit_count(&self, s: usize, a: usize) -> u32 {
        self.visits[s * self.actions + a]
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    /// Best value in state `s` under `sense`.
    pub fn best_value(&self, s: usize, sense: Sense) -> T {
        let row = self.row(s);
        match sense {
            Sense::Max => row.iter().copied().fold(T::neg_infinity(), T::max),
            Sense::Min => row.iter().copied().fold(T::infinity(), T::min),
        }
    }

    /// Blends `target` into `Q[s, a]`: `(1 - alpha) Q + alpha (reward + gamma best(Q[next]))`;
    /// a terminal step (`next = None`) bootstraps nothing.
    #[allow(clippy::too_many_arguments)]
    pub fn update(&mut self, s: usize, a: usize, reward: T, next: Option<usize>, alpha: T, gamma: T, sense: Sense) {
        let future = next.map_or(T::zero(), |n| self.best_value(n, sense));
        let i = s * self.actions + a;
        self.values[i] = (T::one() - alpha) * self.values[i] + alpha * (reward + gamma * future);
        self.visits[i] = self.visits[i].saturating_add(1);
    }

    pub fn is_fresh(&self) -> bool {
        self.values.iter().all(|v| v.is_zero()) && self.visits.iter().all(|&n| n == 0)
    }
}

/// Index of the best entry; ties go to the lowest index.
pub fn greedy_index<T: Real>(values: impl IntoIterator<Item = T>, sense: Sense) -> usize {
    let mut best = 0;
    let mut best_v: Option<T> = None;
    for (i, v) in values.into_iter().enumerate() {
        let better = match best_v {
            None => true,
            Some(b) => match sense {
                Sense::Max => v > b,
                Sense::Min => v < b,
            },
        };
        if better {
            best = i;
            best_v = Some(v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_from_zero() {
        let mut q = QTable::<f64>::new(2, 3);
        q.update(0, 1, 1.0, Some(1), 0.05, 0.85, Sense::Max);
        assert!((q.get(0, 1) - 0.05).abs() < 1e-12);
        assert_eq!(q.visit_count(0, 1), 1);
    }

    #[test]
    fn zero_reward_is_a_fixed_point() {
        let mut q = QTable::<f64>::new(4, 2);
        for i in 0..200 {
            q.update(i % 4, i % 2, 0.0, Some((i + 1) % 4), 0.05, 0.85, Sense::Max);
        }
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn terminal_updates_contract_to_the_reward() {
        let alpha: f64 = 0.05;
        let reward = 0.7;
        let n = ((1e-6f64).ln() / (1.0 - alpha).ln()).ceil() as usize;
        let mut q = QTable::<f64>::new(1, 1);
        for k in 1..=n {
            q.update(0, 0, reward, None, alpha, 0.85, Sense::Max);
            // closed form: R (1 - (1 - alpha)^k)
            let expect = reward * (1.0 - (1.0 - alpha).powi(k as i32));
            assert!((q.get(0, 0) - expect).abs() < 1e-12);
        }
        assert!((q.get(0, 0) - reward).abs() < 1e-6);
    }

    #[test]
    fn bootstrap_follows_sense() {
        let mut q = QTable::<f64>::new(2, 2);
        q.set(1, 0, -2.0);
        q.set(1, 1, 3.0);
        let mut qmin = q.clone();
        q.update(0, 0, 0.0, Some(1), 0.5, 1.0, Sense::Max);
        qmin.update(0, 0, 0.0, Some(1), 0.5, 1.0, Sense::Min);
        assert_eq!(q.get(0, 0), 1.5);
        assert_eq!(qmin.get(0, 0), -1.0);
    }

    #[test]
    fn greedy_ties_go_low() {
        assert_eq!(greedy_index([1.0, 3.0, 3.0], Sense::Max), 1);
        assert_eq!(greedy_index([0.0, 0.0, 0.0], Sense::Max), 0);
        assert_eq!(greedy_index([0.0, 0.0, 0.0], Sense::Min), 0);
        assert_eq!(greedy_index([2.0, -1.0, -1.0], Sense::Min), 1);
    }
}
