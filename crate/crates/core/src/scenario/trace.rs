use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{ArrivalScope, ResourceId, Scenario, ScenarioError};
use crate::num::Real;

/// A task is identified by the ABS that received it and its arrival interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskKey {
    pub origin: ResourceId,
    pub arrival: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TaskRecord<T: Real> {
    pub origin: ResourceId,
    pub arrival: usize,
    pub type_id: usize,
    /// IoT to ABS transmission delay in seconds, quantized to microseconds.
    pub iot_delay: T,
}

impl<T: Real> TaskRecord<T> {
    pub fn key(&self) -> TaskKey {
        TaskKey { origin: self.origin, arrival: self.arrival }
    }
}

/// Arrival log for one episode, sorted by arrival interval then origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EpisodeTrace<T: Real> {
    pub fingerprint: String,
    pub tasks: Vec<TaskRecord<T>>,
}

impl<T: Real> EpisodeTrace<T> {
    pub fn new(fingerprint: String, mut tasks: Vec<TaskRecord<T>>) -> Self {
        tasks.sort_by_key(|t| (t.arrival, t.origin));
        Self { fingerprint, tasks }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Keeps the first `n` arrivals.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            fingerprint: self.fingerprint.clone(),
            tasks: self.tasks.iter().take(n).copied().collect(),
        }
    }
}

const DELAY_STREAM: u64 = 0;

fn quantize_us(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Draws one episode of arrivals.
///
/// Each (ABS, type) pair gets its own RNG stream and accumulates exponential
/// gaps until the horizon. With farm-wide rates the per-ABS mean gap is the
/// farm mean times the ABS count, which splits one Poisson stream per type
/// uniformly across ABSs. When several arrivals land on one interval of one
/// ABS, the larger type id (then the later draw) moves to the next interval
/// that ABS has free; arrivals pushed past the horizon are dropped.
pub fn generate_trace<T: Real>(scenario: &Scenario<T>, seed: u64) -> EpisodeTrace<T> {
    let len = scenario.interval_len().as_f64();
    let horizon = scenario.horizon();
    let k_count = scenario.task_types().len();
    let split = match scenario.arrival_scope() {
        ArrivalScope::Farm => scenario.abs_count() as f64,
        ArrivalScope::PerAbs => 1.0,
    };
    let mut tasks = Vec::new();

    for j in 0..scenario.abs_count() {
        // (interval, type, draw index)
        let mut drawn: Vec<(usize, usize, usize)> = Vec::new();
        for (k, tt) in scenario.task_types().iter().enumerate() {
            let mean = tt.mean_interarrival.as_f64() * split;
            if !mean.is_finite() {
                continue;
            }
            let exp = Exp::new(1.0 / mean).expect("positive rate");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + (j * k_count + k) as u64);
            let mut epoch = 0.0;
            for draw in 0.. {
                epoch += exp.sample(&mut rng);
                let t = (epoch / len).floor();
                if !(t < horizon as f64) {
                    break;
                }
                drawn.push((t as usize, k, draw));
            }
        }
        for (slot, k) in place_arrivals(drawn, horizon) {
            tasks.push(TaskRecord { origin: j, arrival: slot, type_id: k, iot_delay: T::zero() });
        }
    }

    let mut trace = EpisodeTrace::new(scenario.fingerprint(), tasks);
    let dm = scenario.delay_model();
    let base = dm.iot_base.as_f64();
    let jitter = dm.iot_jitter_mean.as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DELAY_STREAM);
    let exp = (jitter > 0.0).then(|| Exp::new(1.0 / jitter).expect("positive rate"));
    for task in &mut trace.tasks {
        let extra = exp.as_ref().map_or(0.0, |e| e.sample(&mut rng));
        task.iot_delay = T::lit(quantize_us(base + extra));
    }
    trace
}

/// Maps raw `(interval, type, draw)` arrivals of one ABS to distinct slots.
fn place_arrivals(mut drawn: Vec<(usize, usize, usize)>, horizon: usize) -> Vec<(usize, usize)> {
    drawn.sort_unstable();
    let mut placed = Vec::with_capacity(drawn.len());
    let mut next_free = 0;
    for (t, k, _) in drawn {
        let slot = t.max(next_free);
        if slot >= horizon {
            break;
        }
        next_free = slot + 1;
        placed.push((slot, k));
    }
    placed
}

pub fn save_trace<T: Real>(trace: &EpisodeTrace<T>, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let mut out = String::with_capacity(24 * trace.tasks.len() + 80);
    writeln!(out, "#fingerprint={}", trace.fingerprint).unwrap();
    for t in &trace.tasks {
        writeln!(out, "{},{},{},{:.6}", t.origin, t.arrival, t.type_id, t.iot_delay.as_f64()).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_trace<T: Real>(path: impl AsRef<Path>) -> Result<EpisodeTrace<T>, ScenarioError> {
    let text = fs::read_to_string(path)?;
    parse_trace(&text)
}

/// Loads a trace and checks it was generated for `scenario`.
pub fn load_trace_for<T: Real>(path: impl AsRef<Path>, scenario: &Scenario<T>) -> Result<EpisodeTrace<T>, ScenarioError> {
    let trace = load_trace(path)?;
    let expected = scenario.fingerprint();
    if trace.fingerprint != expected {
        return Err(ScenarioError::FingerprintMismatch { expected, found: trace.fingerprint });
    }
    Ok(trace)
}

fn parse_trace<T: Real>(text: &str) -> Result<EpisodeTrace<T>, ScenarioError> {
    let bad = |line: usize, reason: &str| ScenarioError::MalformedTrace { line, reason: reason.to_string() };
    let mut lines = text.lines().enumerate();
    let fingerprint = match lines.next() {
        Some((_, l)) => l
            .strip_prefix("#fingerprint=")
            .ok_or_else(|| bad(1, "missing #fingerprint header"))?
            .to_string(),
        None => return Err(bad(1, "empty file")),
    };
    let mut tasks: Vec<TaskRecord<T>> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(n, "expected 4 comma-separated fields"));
        }
        let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(n, "expected an integer"));
        let iot: f64 = fields[3].trim().parse().map_err(|_| bad(n, "expected a decimal delay"))?;
        if !(iot >= 0.0) {
            return Err(bad(n, "negative delay"));
        }
        let rec = TaskRecord {
            origin: int(fields[0])?,
            arrival: int(fields[1])?,
            type_id: int(fields[2])?,
            iot_delay: T::lit(iot),
        };
        if let Some(prev) = tasks.last() {
            if (prev.arrival, prev.origin) >= (rec.arrival, rec.origin) {
                return Err(bad(n, "records must be strictly ordered by (arrival, origin)"));
            }
        }
        tasks.push(rec);
    }
    Ok(EpisodeTrace { fingerprint, tasks })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::scenario::ScenarioConfig;

    fn desk() -> Scenario<f64> {
        ScenarioConfig::default().build().unwrap()
    }

    fn single_type(mean: f64, horizon_s: f64) -> Scenario<f64> {
        let mut cfg = ScenarioConfig { arrival_scope: ArrivalScope::PerAbs, ..ScenarioConfig::default() };
        cfg.task_types.truncate(1);
        cfg.task_types[0].mean_interarrival = mean;
        cfg.horizon_s = horizon_s;
        cfg.build().unwrap()
    }

    #[test]
    fn same_seed_same_bytes() {
        let s = desk();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        save_trace(&generate_trace(&s, 42), &a).unwrap();
        save_trace(&generate_trace(&s, 42), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_ne!(generate_trace(&s, 42), generate_trace(&s, 43));
    }

    #[test]
    fn poisson_counts_per_abs_within_three_sigma() {
        // count ~ Poisson(50 / 0.25 = 200), sigma = sqrt(200); the mean of 40
        // counts has sigma sqrt(200 / 40)
        let s = single_type(0.25, 50.0);
        let sigma = 200f64.sqrt();
        let mut counts = Vec::new();
        for seed in 0..10 {
            let trace = generate_trace(&s, seed);
            for j in 0..s.abs_count() {
                let n = trace.tasks.iter().filter(|t| t.origin == j).count() as f64;
                assert!((n - 200.0).abs() <= 4.5 * sigma, "seed {seed} abs {j}: {n}");
                counts.push(n);
            }
        }
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        assert!((mean - 200.0).abs() <= 3.0 * (200.0f64 / 40.0).sqrt(), "mean count {mean}");
    }

    #[test]
    fn farm_rate_is_split_across_abs() {
        // farm-wide count ~ Poisson(200), each ABS ~ Poisson(50)
        let mut cfg = ScenarioConfig::default();
        cfg.task_types.truncate(1);
        let s: Scenario<f64> = cfg.build().unwrap();
        let mut total = 0.0;
        for seed in 0..10 {
            let trace = generate_trace(&s, seed);
            let n = trace.len() as f64;
            assert!((n - 200.0).abs() <= 4.5 * 200f64.sqrt(), "seed {seed}: {n}");
            total += n;
            for j in 0..s.abs_count() {
                let nj = trace.tasks.iter().filter(|t| t.origin == j).count() as f64;
                assert!((nj - 50.0).abs() <= 4.5 * 50f64.sqrt(), "seed {seed} abs {j}: {nj}");
            }
        }
        let mean = total / 10.0;
        assert!((mean - 200.0).abs() <= 3.0 * (200.0f64 / 10.0).sqrt(), "{mean}");
    }

    #[test]
    fn vanishing_rate_gives_empty_trace() {
        let s = single_type(f64::INFINITY, 50.0);
        assert!(generate_trace(&s, 3).is_empty());
        let s = single_type(1e12, 50.0);
        assert!(generate_trace(&s, 3).is_empty());
    }

    #[test]
    fn keys_are_unique_and_in_horizon() {
        let s = desk();
        for seed in 0..5 {
            let trace = generate_trace(&s, seed);
            let keys: HashSet<_> = trace.tasks.iter().map(|t| t.key()).collect();
            assert_eq!(keys.len(), trace.len());
            assert!(trace.tasks.iter().all(|t| t.arrival < s.horizon()));
            assert!(trace.tasks.windows(2).all(|w| (w[0].arrival, w[0].origin) < (w[1].arrival, w[1].origin)));
            assert!(trace.tasks.iter().all(|t| t.iot_delay >= s.delay_model().iot_base));
        }
    }

    #[test]
    fn mean_interarrival_converges() {
        // >= 10^4 gaps per (ABS, type): 3000 s at rate 4/s
        let s = single_type(0.25, 3000.0);
        let trace = generate_trace(&s, 11);
        for j in 0..s.abs_count() {
            let ts: Vec<usize> = trace.tasks.iter().filter(|t| t.origin == j).map(|t| t.arrival).collect();
            assert!(ts.len() > 10_000);
            let span = (ts[ts.len() - 1] - ts[0]) as f64 * 0.05;
            let mean = span / (ts.len() - 1) as f64;
            assert!((mean - 0.25).abs() / 0.25 < 0.05, "abs {j}: {mean}");
        }
    }

    #[test]
    fn collisions_defer_the_larger_type() {
        // the deferred type 2 takes interval 4 first and pushes type 1 to 5
        let drawn = vec![(3, 2, 0), (3, 0, 4), (4, 1, 1), (9, 0, 5)];
        assert_eq!(place_arrivals(drawn, 100), vec![(3, 0), (4, 2), (5, 1), (9, 0)]);
        // same type twice in one interval: later draw moves
        assert_eq!(place_arrivals(vec![(2, 0, 1), (2, 0, 0)], 100), vec![(2, 0), (3, 0)]);
    }

    #[test]
    fn deferral_past_horizon_drops() {
        let drawn = vec![(8, 0, 0), (8, 1, 0), (9, 2, 0)];
        assert_eq!(place_arrivals(drawn, 10), vec![(8, 0), (9, 1)]);
    }

    #[test]
    fn round_trip_is_identity() {
        let s = desk();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let trace = generate_trace(&s, 8);
        save_trace(&trace, &p).unwrap();
        assert_eq!(load_trace_for(&p, &s).unwrap(), trace);

        let f32_scenario: Scenario<f32> = ScenarioConfig::default().build().unwrap();
        let t32 = generate_trace(&f32_scenario, 8);
        save_trace(&t32, &p).unwrap();
        assert_eq!(load_trace::<f32>(&p).unwrap(), t32);
    }

    #[test]
    fn empty_trace_round_trips() {
        let s = desk();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let empty = EpisodeTrace::<f64>::new(s.fingerprint(), vec![]);
        save_trace(&empty, &p).unwrap();
        assert_eq!(load_trace::<f64>(&p).unwrap(), empty);
    }

    #[test]
    fn wrong_scenario_is_rejected() {
        let s = desk();
        let cfg = ScenarioConfig { abs_count: 3, ..ScenarioConfig::default() };
        let other: Scenario<f64> = cfg.build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        save_trace(&generate_trace(&s, 1), &p).unwrap();
        assert!(matches!(load_trace_for(&p, &other), Err(ScenarioError::FingerprintMismatch { .. })));
    }

    #[test]
    fn file_format_is_header_then_rows() {
        let s = desk();
        let trace = EpisodeTrace::new(
            s.fingerprint(),
            vec![TaskRecord { origin: 2, arrival: 7, type_id: 1, iot_delay: 0.0234561 }],
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        save_trace(&trace, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, format!("#fingerprint={}\n2,7,1,0.023456\n", s.fingerprint()));
    }

    #[test]
    fn unordered_rows_are_rejected() {
        let text = "#fingerprint=ab\n0,5,0,0.010000\n0,4,0,0.010000\n";
        assert!(matches!(parse_trace::<f64>(text), Err(ScenarioError::MalformedTrace { line: 3, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_trace::<f64>("/nonexistent/trace.csv"), Err(ScenarioError::Io(_))));
    }
}
