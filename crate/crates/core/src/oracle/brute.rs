use crate::num::Real;
use crate::scenario::{EpisodeTrace, ResourceId, Scenario};

use super::{evaluate_unchecked, Assignment, ObjectiveBreakdown, OracleError, Problem, Schedule, Weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceLimits {
    /// Maximum number of complete schedules to enumerate.
    pub budget: u128,
    /// Maximum horizon in intervals.
    pub max_horizon: usize,
}

impl Default for BruteForceLimits {
    fn default() -> Self {
        Self { budget: 20_160, max_horizon: 64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult<T: Real> {
    pub schedule: Schedule,
    pub breakdown: ObjectiveBreakdown<T>,
    pub leaves: u128,
}

/// Number of (assignment, per-resource order) pairs for `tasks` tasks over
/// `resources` resources: `R (R + 1) ... (R + N - 1)`.
pub fn leaf_count(tasks: usize, resources: usize) -> u128 {
    (0..tasks).fold(1u128, |acc, i| acc.saturating_mul((resources + i) as u128))
}

/// Tie-break key, schedule and its breakdown.
type Best<T> = (Vec<(ResourceId, usize)>, Schedule, ObjectiveBreakdown<T>);

struct Search<'a, T: Real> {
    scenario: &'a Scenario<T>,
    trace: &'a EpisodeTrace<T>,
    problem: Problem,
    weights: &'a Weights,
    order: Vec<Vec<usize>>,
    best: Option<Best<T>>,
}

impl<T: Real> Search<'_, T> {
    fn recurse(&mut self, i: usize) {
        if i == self.trace.len() {
            self.leaf();
            return;
        }
        for r in 0..self.order.len() {
            for pos in 0..=self.order[r].len() {
                self.order[r].insert(pos, i);
                self.recurse(i + 1);
                self.order[r].remove(pos);
            }
        }
    }

    /// Packs each resource's sequence as early as arrivals allow.
    fn leaf(&mut self) {
        let mut slots = vec![(0, 0); self.trace.len()];
        let mut assignments = Vec::with_capacity(self.trace.len());
        for (r, seq) in self.order.iter().enumerate() {
            let mut free = 0;
            for &i in seq {
                let task = &self.trace.tasks[i];
                let start = free.max(task.arrival);
                let end = start + self.scenario.duration(task.type_id, r) - 1;
                free = end + 1;
                slots[i] = (r, start);
                assignments.push(Assignment { key: task.key(), resource: r, start, end });
            }
        }
        let schedule = Schedule { assignments };
        let b = evaluate_unchecked(self.scenario, self.trace, &schedule, self.problem, self.weights);
        if !b.feasible {
            return;
        }
        let better = match &self.best {
            None => true,
            Some((key, _, best)) => b.value > best.value || (b.value == best.value && slots < *key),
        };
        if better {
            self.best = Some((slots, schedule, b));
        }
    }
}

/// Exhaustive optimum of `problem` on a tiny instance. Among equal objective
/// values the schedule whose (resource, start) list in trace order is
/// lexicographically smallest wins.
pub fn brute_force<T: Real>(
    scenario: &Scenario<T>,
    trace: &EpisodeTrace<T>,
    problem: Problem,
    weights: &Weights,
    limits: BruteForceLimits,
) -> Result<BruteForceResult<T>, OracleError> {
    if scenario.horizon() > limits.max_horizon {
        return Err(OracleError::HorizonTooLong { horizon: scenario.horizon(), limit: limits.max_horizon });
    }
    let leaves = leaf_count(trace.len(), scenario.resource_count());
    if leaves > limits.budget {
        return Err(OracleError::BudgetExceeded { leaves, budget: limits.budget });
    }
    let mut search = Search {
        scenario,
        trace,
        problem,
        weights,
        order: vec![Vec::new(); scenario.resource_count()],
        best: None,
    };
    search.recurse(0);
    let (_, mut schedule, breakdown) = search.best.ok_or(OracleError::NoFeasibleSchedule)?;
    schedule.assignments.sort_by_key(|a| (a.key.arrival, a.key.origin));
    Ok(BruteForceResult { schedule, breakdown, leaves })
}
