use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::scenario::{EnergyParams, Scenario};

/// Battery left after `elapsed` intervals of which `busy` were spent computing.
pub fn remaining_energy<T: Real>(p: &EnergyParams<T>, elapsed: usize, busy: usize) -> T {
    p.capacity - p.base_drain() * T::from_count(elapsed) - p.busy_drain() * T::from_count(busy)
}

/// Per-ABS battery bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EnergyLedger<T: Real> {
    params: Vec<EnergyParams<T>>,
    busy: Vec<usize>,
    elapsed: usize,
    remaining: Vec<T>,
}

impl<T: Real> EnergyLedger<T> {
    pub fn new(scenario: &Scenario<T>) -> Self {
        let params: Vec<_> = (0..scenario.abs_count())
            .map(|j| *scenario.energy(j).expect("ABS has energy parameters"))
            .collect();
        let remaining = params.iter().map(|p| p.capacity).collect();
        Self {
            busy: vec![0; params.len()],
            params,
            elapsed: 0,
            remaining,
        }
    }

    pub fn capacity(&self, abs: usize) -> T {
        self.params[abs].capacity
    }

    pub fn params(&self, abs: usize) -> &EnergyParams<T> {
        &self.params[abs]
    }

    pub fn busy_intervals(&self, abs: usize) -> usize {
        self.busy[abs]
    }

    pub fn elapsed(&self) -> usize {
        self.elapsed
    }

    pub fn remaining(&self, abs: usize) -> T {
        self.remaining[abs]
    }

    pub fn remaining_all(&self) -> &[T] {
        &self.remaining
    }

    pub fn fraction(&self, abs: usize) -> T {
        self.remaining[abs] / self.params[abs].capacity
    }

    /// Moves the clock forward; never backwards.
    pub fn advance_to(&mut self, elapsed: usize) {
        if elapsed > self.elapsed {
            self.elapsed = elapsed;
            self.refresh_all();
        }
    }

    pub fn charge_busy(&mut self, abs: usize, intervals: usize) {
        self.busy[abs] += intervals;
        self.refresh(abs);
    }

    fn refresh(&mut self, abs: usize) {
        self.remaining[abs] = remaining_energy(&self.params[abs], self.elapsed, self.busy[abs]);
    }

    fn refresh_all(&mut self) {
        for j in 0..self.params.len() {
            self.refresh(j);
        }
    }
}
