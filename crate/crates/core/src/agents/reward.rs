use crate::num::Real;
use crate::scenario::ResourceId;

use super::state::Observation;
use super::AgentError;

/// Energy fairness level of choosing ABS `chosen`, given the (expected)
/// remaining energy of every ABS: 2 when within `eps` of the richest ABS,
/// 0 when `2 * eps` or more below it, 1 in between.
pub fn battery_reward_level<T: Real>(energies: &[T], chosen: usize, eps: T) -> u8 {
    let max = energies.iter().copied().fold(T::neg_infinity(), T::max);
    let diff = energies[chosen] - max;
    if diff >= -eps {
        2
    } else if diff <= -(eps + eps) {
        0
    } else {
        1
    }
}

/// Battery level of an action; MEC actions always get the top level.
pub fn action_battery_level<T: Real>(obs: &Observation<T>, action: ResourceId, hysteresis: T) -> u8 {
    if action >= obs.abs_count {
        return 2;
    }
    battery_reward_level(&obs.expected_energy(action), action, hysteresis * obs.capacity[action])
}

/// Severity of an expected deadline miss at `chosen`: -4 when a MEC would have
/// met the deadline, -3 when the receiving ABS would have, -2 when another ABS
/// would have, -1 when nothing could.
pub fn violation_severity<T: Real>(obs: &Observation<T>, chosen: ResourceId) -> Result<i32, AgentError> {
    if !obs.expects_violation(chosen) {
        return Err(AgentError::CalledOnSafeAction);
    }
    let safe = |r: ResourceId| !obs.expects_violation(r);
    let resources = obs.resources();
    if (obs.abs_count..resources).any(safe) {
        Ok(-4)
    } else if safe(obs.origin) {
        Ok(-3)
    } else if (0..obs.abs_count).any(|j| j != obs.origin && j != chosen && safe(j)) {
        Ok(-2)
    } else {
        Ok(-1)
    }
}

/// Immediate reward of the Q-learning agent (maximized).
pub fn q_reward<T: Real>(level: u8, delay: T, expected_violation: bool, severity: i32, w: T, theta_m: T, theta_d: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let violation_term = if expected_violation { T::lit(severity as f64) } else { one };
    w * (T::lit(level as f64) - one) - (one - w) / (two * theta_m) * delay + (one - w) / (two * theta_d) * violation_term
}

/// Immediate reward of the risk-sensitive agent (minimized).
pub fn rs_reward<T: Real>(level: u8, delay: T, w: T, theta_m: T) -> T {
    let one = T::one();
    -(w * (T::lit(level as f64) - one) - (one - w) / theta_m * delay)
}

/// Risk cost (minimized): `-severity` inside the risk set, `-1` outside.
pub fn rs_risk_cost<T: Real>(in_risk_state: bool, severity: i32) -> T {
    if in_risk_state {
        T::lit(-(severity as f64))
    } else {
        -T::one()
    }
}

/// One step of the dynamic weight: lower it when the observed risk plus the
/// guard band fits under the bound, raise it otherwise; kept within [0, 1].
pub fn zeta_update<T: Real>(zeta: T, observed: T, guard: T, bound: T, step: T) -> T {
    if observed + guard <= bound {
        (zeta - step).max(T::zero())
    } else {
        (zeta + step).min(T::one())
    }
}

/// Spread between the fullest and emptiest battery, as remaining fractions.
pub fn energy_gap<T: Real>(fractions: &[T]) -> T {
    let max = fractions.iter().copied().fold(T::neg_infinity(), T::max);
    let min = fractions.iter().copied().fold(T::infinity(), T::min);
    max - min
}

/// Energy-centric risk flag: the battery spread exceeds `threshold`.
pub fn energy_centric_risk<T: Real>(fractions: &[T], threshold: T) -> bool {
    energy_gap(fractions) > threshold
}
