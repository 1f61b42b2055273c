use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::scenario::{EpisodeTrace, ResourceId, Scenario, TaskRecord};
use crate::simenv::{run_policy, KpiReport, Policy, PolicyDecision, SimEnv};

use super::reward::{
    action_battery_level, energy_centric_risk, energy_gap, q_reward, rs_reward, rs_risk_cost, violation_severity,
    zeta_update,
};
use super::state::{Observation, StateSpace};
use super::table::{greedy_index, QTable, Sense};
use super::{AgentError, AgentKind, AgentParams};
/// Cumulative (reward, cost) of one agent over an episode.
pub type EpisodeSums = (f64, f64);


/// Per-episode learning-curve sample for one ABS agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub agent: usize,
    pub cum_reward: f64,
    pub cum_risk: f64,
    pub zeta: f64,
}

/// One risk-weight update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaPoint {
    pub episode: usize,
    /// Violations (or battery spread for the energy-centric learner) of the
    /// greedy policy on that episode's trace.
    pub observed: f64,
    pub zeta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub curves: Vec<CurvePoint>,
    pub zeta_trace: Vec<ZetaPoint>,
}

impl TrainingLog {
    /// Sum over agents of the cumulative reward, one value per episode.
    pub fn episode_rewards(&self) -> Vec<f64> {
        self.per_episode(|p| p.cum_reward)
    }

    pub fn episode_risks(&self) -> Vec<f64> {
        self.per_episode(|p| p.cum_risk)
    }

    fn per_episode(&self, f: impl Fn(&CurvePoint) -> f64) -> Vec<f64> {
        let n = self.curves.iter().map(|p| p.episode + 1).max().unwrap_or(0);
        let mut out = vec![0.0; n];
        for p in &self.curves {
            out[p.episode] += f(p);
        }
        out
    }
}

/// What one decision is worth to the learner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSignal<T: Real> {
    pub reward: T,
    pub cost: T,
    pub expected_violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct AbsAgent<T: Real> {
    /// Q-learning value table, or the reward table of a dual learner.
    pub(crate) reward: QTable<T>,
    /// Risk table of a dual learner.
    pub(crate) risk: Option<QTable<T>>,
}

#[derive(Clone, Copy)]
struct Pending<T: Real> {
    state: usize,
    action: ResourceId,
    signal: StepSignal<T>,
}

/// A team of independent per-ABS learners sharing hyperparameters and,
/// for the dual learners, one risk weight.
#[derive(Clone, Debug)]
pub struct OffloadLearner<T: Real> {
    pub(crate) params: AgentParams,
    pub(crate) space: StateSpace,
    pub(crate) agents: Vec<AbsAgent<T>>,
    pub(crate) zeta: T,
    rng: ChaCha8Rng,
}

impl<T: Real> PartialEq for OffloadLearner<T> {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.space == other.space && self.agents == other.agents && self.zeta == other.zeta
    }
}

impl<T: Real> OffloadLearner<T> {
    pub fn new(scenario: &Scenario<T>, params: AgentParams) -> Result<Self, AgentError> {
        params.validate()?;
        let space = StateSpace::new(
            scenario.task_types().len(),
            scenario.resource_count(),
            scenario.abs_count(),
            params.kind.is_dual(),
        );
        Ok(Self::with_space(space, params))
    }

    pub(crate) fn with_space(space: StateSpace, params: AgentParams) -> Self {
        let (n, a) = (space.state_count(), space.action_count());
        let agents = (0..space.abs_count)
            .map(|_| AbsAgent {
                reward: QTable::new(n, a),
                risk: params.kind.is_dual().then(|| QTable::new(n, a)),
            })
            .collect();
        Self {
            zeta: T::lit(params.zeta_init),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            space,
            agents,
        }
    }

    pub(crate) fn from_parts(space: StateSpace, params: AgentParams, agents: Vec<AbsAgent<T>>, zeta: T) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            space,
            agents,
            zeta,
        }
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn kind(&self) -> AgentKind {
        self.params.kind
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn zeta(&self) -> T {
        self.zeta
    }

    pub fn set_zeta(&mut self, zeta: T) {
        self.zeta = zeta.max(T::zero()).min(T::one());
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Value table of a Q-learner, or the reward table of a dual learner.
    pub fn reward_table(&self, agent: usize) -> &QTable<T> {
        &self.agents[agent].reward
    }

    pub fn risk_table(&self, agent: usize) -> Option<&QTable<T>> {
        self.agents[agent].risk.as_ref()
    }

    pub fn reward_table_mut(&mut self, agent: usize) -> &mut QTable<T> {
        &mut self.agents[agent].reward
    }

    pub fn risk_table_mut(&mut self, agent: usize) -> Option<&mut QTable<T>> {
        self.agents[agent].risk.as_mut()
    }

    /// Entry of the action-selection table: `Q` itself for Q-learning, the
    /// blend `zeta * risk + (1 - zeta) * reward` for dual learners.
    pub fn combined(&self, agent: usize, s: usize, a: usize) -> T {
        let ag = &self.agents[agent];
        match &ag.risk {
            None => ag.reward.get(s, a),
            Some(risk) => self.zeta * risk.get(s, a) + (T::one() - self.zeta) * ag.reward.get(s, a),
        }
    }

    fn sense(&self) -> Sense {
        if self.params.kind.is_dual() {
            Sense::Min
        } else {
            Sense::Max
        }
    }

    pub fn greedy_action(&self, agent: usize, s: usize) -> ResourceId {
        greedy_index((0..self.space.action_count()).map(|a| self.combined(agent, s, a)), self.sense())
    }

    /// Exploratory or greedy choice with probability `epsilon` of a uniform pick.
    pub fn select_action(&mut self, agent: usize, s: usize, epsilon: f64) -> ResourceId {
        if epsilon > 0.0 && self.rng.random::<f64>() < epsilon {
            self.rng.random_range(0..self.space.action_count())
        } else {
            self.greedy_action(agent, s)
        }
    }

    pub fn state_index(&self, obs: &Observation<T>, prev_action: ResourceId) -> usize {
        let prev = self.space.with_prev_action.then_some(prev_action);
        self.space.encode(&obs.encode(T::lit(self.params.hysteresis), prev))
    }

    /// Immediate reward and risk cost of taking `action` in `obs`.
    pub fn assess(&self, obs: &Observation<T>, action: ResourceId) -> StepSignal<T> {
        let p = &self.params;
        let lit = T::lit;
        let level = action_battery_level(obs, action, lit(p.hysteresis));
        let delay = obs.expected_delay[action];
        let expected_violation = obs.expects_violation(action);
        let severity = if expected_violation {
            violation_severity(obs, action).expect("action expected to violate")
        } else {
            -1
        };
        let violation_cost = rs_risk_cost(expected_violation, severity);
        match p.kind {
            AgentKind::QLearning => StepSignal {
                reward: q_reward(level, delay, expected_violation, severity, lit(p.w), lit(p.theta_m), lit(p.theta_d)),
                cost: violation_cost,
                expected_violation,
            },
            AgentKind::RiskSensitive => StepSignal {
                reward: rs_reward(level, delay, lit(p.w), lit(p.theta_m)),
                cost: violation_cost,
                expected_violation,
            },
            AgentKind::EnergyCentric => {
                let risky = energy_centric_risk(&obs.expected_fractions(action), lit(p.gap_threshold));
                StepSignal {
                    reward: rs_reward(level, delay, lit(p.w), lit(p.theta_m)),
                    cost: rs_risk_cost(risky, severity),
                    expected_violation,
                }
            }
        }
    }

    /// Applies one transition to `agent`'s tables; `next = None` ends the episode.
    pub fn learn(&mut self, agent: usize, s: usize, a: ResourceId, signal: StepSignal<T>, next: Option<usize>) {
        let alpha = T::lit(self.params.alpha);
        let gamma = T::lit(self.params.gamma);
        let sense = self.sense();
        let ag = &mut self.agents[agent];
        ag.reward.update(s, a, signal.reward, next, alpha, gamma, sense);
        if let Some(risk) = ag.risk.as_mut() {
            risk.update(s, a, signal.cost, next, alpha, gamma, sense);
        }
    }

    /// Plays one learning episode; returns per-agent (reward, cost) sums.
    pub fn learn_episode(
        &mut self,
        scenario: &Scenario<T>,
        trace: &EpisodeTrace<T>,
        epsilon: f64,
    ) -> Result<(Vec<EpisodeSums>, KpiReport<T>), AgentError> {
        let j_count = self.agents.len();
        let mut env = SimEnv::new(scenario, trace);
        let mut pending: Vec<Option<Pending<T>>> = vec![None; j_count];
        let mut prev: Vec<ResourceId> = (0..j_count).collect();
        let mut sums = vec![(0.0, 0.0); j_count];
        for task in &trace.tasks {
            let j = task.origin;
            let obs = Observation::new(&env, task);
            let s = self.state_index(&obs, prev[j]);
            if let Some(p) = pending[j].take() {
                self.learn(j, p.state, p.action, p.signal, Some(s));
            }
            let a = self.select_action(j, s, epsilon);
            let signal = self.assess(&obs, a);
            env.commit_decision(task, a)?;
            sums[j].0 += signal.reward.as_f64();
            sums[j].1 += signal.cost.as_f64();
            pending[j] = Some(Pending { state: s, action: a, signal });
            prev[j] = a;
        }
        for (j, p) in pending.into_iter().enumerate() {
            if let Some(p) = p {
                self.learn(j, p.state, p.action, p.signal, None);
            }
        }
        Ok((sums, env.finalize()?))
    }

    /// Runs the greedy policy on `trace` without learning.
    pub fn evaluate(&self, scenario: &Scenario<T>, trace: &EpisodeTrace<T>) -> Result<KpiReport<T>, AgentError> {
        Ok(run_policy(scenario, trace, &mut self.policy())?.report)
    }

    /// The risk measure that drives the weight update, taken from a greedy run.
    pub fn risk_measure(&self, report: &KpiReport<T>) -> f64 {
        match self.params.kind {
            AgentKind::EnergyCentric => energy_gap(&report.remaining_fraction).as_f64(),
            _ => report.violation_count as f64,
        }
    }

    /// Applies one weight update given the measured risk.
    pub fn update_zeta(&mut self, observed: f64) {
        let p = &self.params;
        let (guard, bound) = match p.kind {
            AgentKind::EnergyCentric => (0.0, p.gap_threshold),
            _ => (p.violation_guard, p.violation_bound),
        };
        self.zeta = zeta_update(self.zeta, T::lit(observed), T::lit(guard), T::lit(bound), T::lit(p.lambda));
    }

    /// Offline training over `traces`, cycled in order.
    pub fn train(&mut self, scenario: &Scenario<T>, traces: &[EpisodeTrace<T>]) -> Result<TrainingLog, AgentError> {
        self.params.validate()?;
        if traces.is_empty() {
            return Err(AgentError::InvalidParams("training needs at least one trace".into()));
        }
        let fp = scenario.fingerprint();
        if let Some(t) = traces.iter().find(|t| t.fingerprint != fp) {
            return Err(AgentError::InvalidParams(format!(
                "trace fingerprint {} does not match the scenario",
                t.fingerprint
            )));
        }
        let mut log = TrainingLog::default();
        for ep in 0..self.params.episodes {
            let trace = &traces[ep % traces.len()];
            let eps = self.params.epsilon_at(ep);
            let (sums, _) = self.learn_episode(scenario, trace, eps)?;
            if self.params.kind.is_dual() && (ep + 1) % self.params.update_every == 0 {
                let report = self.evaluate(scenario, trace)?;
                let observed = self.risk_measure(&report);
                self.update_zeta(observed);
                log.zeta_trace.push(ZetaPoint { episode: ep, observed, zeta: self.zeta.as_f64() });
            }
            let zeta = self.zeta.as_f64();
            for (agent, (r, c)) in sums.into_iter().enumerate() {
                log.curves.push(CurvePoint { episode: ep, agent, cum_reward: r, cum_risk: c, zeta });
            }
        }
        Ok(log)
    }

    /// Frozen greedy policy over the current tables.
    pub fn policy(&self) -> FrozenPolicy<'_, T> {
        FrozenPolicy { learner: self, prev: (0..self.agents.len()).collect() }
    }
}

/// Greedy, non-learning view of a trained learner.
pub struct FrozenPolicy<'a, T: Real> {
    learner: &'a OffloadLearner<T>,
    prev: Vec<ResourceId>,
}

impl<T: Real> Policy<T> for FrozenPolicy<'_, T> {
    fn name(&self) -> &str {
        self.learner.params.kind.name()
    }

    fn decide(&mut self, env: &SimEnv<'_, T>, task: &TaskRecord<T>) -> PolicyDecision {
        let j = task.origin;
        let obs = Observation::new(env, task);
        let s = self.learner.state_index(&obs, self.prev[j]);
        let a = self.learner.greedy_action(j, s);
        self.prev[j] = a;
        PolicyDecision { task: task.key(), resource: a }
    }

    fn reset(&mut self) {
        for (j, p) in self.prev.iter_mut().enumerate() {
            *p = j;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_trace, ScenarioConfig};

    fn world() -> Scenario<f64> {
        ScenarioConfig::default().build().unwrap()
    }

    fn small_world() -> Scenario<f64> {
        let cfg = ScenarioConfig { horizon_s: 2.0, ..ScenarioConfig::default() };
        cfg.build().unwrap()
    }

    #[test]
    fn zero_episodes_leave_tables_fresh() {
        let s = small_world();
        let trace = generate_trace(&s, 0);
        let mut l = OffloadLearner::new(&s, AgentParams { episodes: 0, ..AgentParams::new(AgentKind::RiskSensitive) }).unwrap();
        let log = l.train(&s, &[trace]).unwrap();
        assert!(log.curves.is_empty());
        assert!((0..l.agent_count()).all(|j| l.reward_table(j).is_fresh() && l.risk_table(j).unwrap().is_fresh()));
    }

    #[test]
    fn single_trace_replays_every_episode() {
        let s = small_world();
        let trace = generate_trace(&s, 5);
        let params = AgentParams { episodes: 100, update_every: 10, ..AgentParams::new(AgentKind::RiskSensitive) };
        let mut l = OffloadLearner::new(&s, params).unwrap();
        let log = l.train(&s, &[trace]).unwrap();
        assert_eq!(log.episode_rewards().len(), 100);
        assert_eq!(log.curves.len(), 100 * s.abs_count());
        assert_eq!(log.zeta_trace.len(), 10);
        assert!(log.zeta_trace.iter().all(|z| (0.0..=1.0).contains(&z.zeta)));
    }

    #[test]
    fn training_is_deterministic() {
        let s = small_world();
        let traces: Vec<_> = (0..3).map(|i| generate_trace(&s, i)).collect();
        let params = AgentParams { episodes: 30, update_every: 5, seed: 9, ..AgentParams::new(AgentKind::QLearning) };
        let mut a = OffloadLearner::new(&s, params.clone()).unwrap();
        let mut b = OffloadLearner::new(&s, params).unwrap();
        assert_eq!(a.train(&s, &traces).unwrap(), b.train(&s, &traces).unwrap());
        assert!(a == b);
    }

    #[test]
    fn empty_trace_list_is_invalid() {
        let s = small_world();
        let mut l = OffloadLearner::new(&s, AgentParams::new(AgentKind::QLearning)).unwrap();
        assert!(matches!(l.train(&s, &[]), Err(AgentError::InvalidParams(_))));
    }

    #[test]
    fn foreign_trace_is_invalid() {
        let s = small_world();
        let other = world();
        let mut l = OffloadLearner::new(&s, AgentParams { episodes: 1, ..AgentParams::new(AgentKind::QLearning) }).unwrap();
        assert!(matches!(l.train(&s, &[generate_trace(&other, 0)]), Err(AgentError::InvalidParams(_))));
    }

    #[test]
    fn risk_step_from_zero_tables() {
        let s = small_world();
        let mut l = OffloadLearner::new(&s, AgentParams::new(AgentKind::RiskSensitive)).unwrap();
        let sig = StepSignal { reward: -1.0, cost: -1.0, expected_violation: false };
        l.learn(0, 7, 2, sig, Some(8));
        assert!((l.reward_table(0).get(7, 2) + 0.05).abs() < 1e-12);
        assert!((l.risk_table(0).unwrap().get(7, 2) + 0.05).abs() < 1e-12);
        for z in [0.0, 0.3, 1.0] {
            l.set_zeta(z);
            assert!((l.combined(0, 7, 2) + 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_weights_rank_by_one_table() {
        let s = small_world();
        let mut l = OffloadLearner::new(&s, AgentParams::new(AgentKind::RiskSensitive)).unwrap();
        let st = 3;
        for (a, (r, d)) in [(0.0, 1.0), (-2.0, 0.5), (1.0, -3.0), (-1.0, 0.0), (0.5, 0.2)].into_iter().enumerate() {
            l.reward_table_mut(0).set(st, a, r);
            l.risk_table_mut(0).unwrap().set(st, a, d);
        }
        l.set_zeta(1.0);
        assert_eq!(l.greedy_action(0, st), 2);
        l.set_zeta(0.0);
        assert_eq!(l.greedy_action(0, st), 1);
    }

    #[test]
    fn qlearning_greedy_is_argmax() {
        let s = small_world();
        let mut l = OffloadLearner::new(&s, AgentParams::new(AgentKind::QLearning)).unwrap();
        l.reward_table_mut(1).set(4, 3, 0.7);
        for _ in 0..20 {
            assert_eq!(l.select_action(1, 4, 0.0), 3);
        }
        assert_eq!(l.greedy_action(1, 5), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let s = small_world();
        let mut l = OffloadLearner::new(&s, AgentParams::new(AgentKind::QLearning)).unwrap();
        let n = 10_000;
        let k = s.resource_count();
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            counts[l.select_action(0, 0, 1.0)] += 1;
        }
        let p = 1.0 / k as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn agents_learn_only_from_their_own_tasks() {
        let s = small_world();
        let trace = generate_trace(&s, 1);
        let only_zero = EpisodeTrace::new(trace.fingerprint.clone(), trace.tasks.iter().filter(|t| t.origin == 0).copied().collect());
        let mut l = OffloadLearner::new(&s, AgentParams { episodes: 3, ..AgentParams::new(AgentKind::QLearning) }).unwrap();
        l.train(&s, &[only_zero]).unwrap();
        assert!(!l.reward_table(0).is_fresh());
        assert!((1..s.abs_count()).all(|j| l.reward_table(j).is_fresh()));
    }

    #[test]
    fn frozen_policy_is_total_and_repeatable() {
        let s = small_world();
        let traces: Vec<_> = (0..2).map(|i| generate_trace(&s, i)).collect();
        let mut l = OffloadLearner::new(&s, AgentParams { episodes: 10, update_every: 2, ..AgentParams::new(AgentKind::EnergyCentric) }).unwrap();
        l.train(&s, &traces).unwrap();
        let a = l.evaluate(&s, &traces[0]).unwrap();
        let b = l.evaluate(&s, &traces[0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.task_count, traces[0].len());
    }
}
