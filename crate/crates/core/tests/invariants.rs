use proptest::prelude::*;

use agri_offload::baselines::{by_name, UniformRandom};
use agri_offload::oracle::{evaluate, validate, Problem, Schedule, Weights};
use agri_offload::scenario::{generate_trace, Scenario, ScenarioConfig};
use agri_offload::simenv::{run_policy, Policy, SimEnv};

fn world(abs: usize, mec: usize, intervals: usize, rate_scale: f64) -> Scenario<f64> {
    let base = ScenarioConfig::default();
    let mut cfg = ScenarioConfig {
        abs_count: abs,
        mec_count: mec,
        horizon_s: intervals as f64 * base.interval_len,
        ..base
    };
    for t in &mut cfg.task_types {
        t.mean_interarrival *= rate_scale;
    }
    cfg.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traces_are_sorted_unique_and_reproducible(
        abs in 1usize..=4, intervals in 10usize..400, scale in 0.2f64..5.0, seed in any::<u64>()
    ) {
        let s = world(abs, 1, intervals, scale);
        let a = generate_trace(&s, seed);
        prop_assert_eq!(&a, &generate_trace(&s, seed));
        for w in a.tasks.windows(2) {
            prop_assert!((w[0].arrival, w[0].origin) < (w[1].arrival, w[1].origin));
        }
        prop_assert!(a.tasks.iter().all(|t| t.arrival < s.horizon() && t.origin < abs && t.iot_delay >= 0.0));
    }

    #[test]
    fn simulated_schedules_pass_the_validator(
        abs in 1usize..=4, mec in 1usize..=2, intervals in 10usize..300, scale in 0.2f64..5.0,
        seed in any::<u64>(), policy in 0usize..5
    ) {
        let s = world(abs, mec, intervals, scale);
        let trace = generate_trace(&s, seed);
        let name = ["rr", "lqhe", "local", "mec", "random"][policy];
        let out = run_policy(&s, &trace, &mut by_name::<f64>(name, seed).unwrap()).unwrap();
        let sched = Schedule::from_records(&out.records);
        prop_assert!(validate(&s, &trace, &sched).is_empty());
        let b = evaluate(&s, &trace, &sched, Problem::P1, &Weights::default()).unwrap();
        prop_assert_eq!(b.violations, out.report.violation_count);
        prop_assert_eq!(b.mean_delay, out.report.mean_delay);
    }

    #[test]
    fn battery_never_recovers(
        abs in 1usize..=4, intervals in 10usize..300, scale in 0.2f64..5.0, seed in any::<u64>()
    ) {
        let s = world(abs, 1, intervals, scale);
        let trace = generate_trace(&s, seed);
        let mut env = SimEnv::new(&s, &trace);
        let mut policy = UniformRandom::new(seed);
        let mut last = env.ledger().remaining_all().to_vec();
        for task in &trace.tasks {
            env.advance_to(task.arrival);
            let d = policy.decide(&env, task);
            env.commit_decision(task, d.resource).unwrap();
            let now = env.ledger().remaining_all().to_vec();
            prop_assert!(now.iter().zip(&last).all(|(n, l)| n <= l));
            last = now;
        }
        let report = env.finalize().unwrap();
        prop_assert!(report.remaining_energy.iter().zip(&last).all(|(n, l)| n <= l));
        prop_assert!(report.remaining_fraction.iter().all(|&f| f <= 1.0));
    }
}
