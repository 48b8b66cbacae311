//! Randomized properties of the harness: seeded runs stay clean and replay
//! exactly, reports and traces survive serialization, and snapshot pruning
//! behaves like a true order-independent fixed point.

use drl::aggregator;
use drl::harness::sampler::sample_stores;
use drl::harness::{replay_trace, run_random, RunConfig, RunReport, Trace};
use proptest::prelude::*;

/// A short default run so each property case stays fast.
fn quick_config(seed: u64) -> RunConfig {
    let mut config = RunConfig {
        seed,
        ..RunConfig::default()
    };
    config.bounds.max_events_per_run = 120;
    config
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn default_runs_stay_clean(seed in 0u64..10_000) {
        let report = run_random(&quick_config(seed)).report;
        prop_assert!(report.is_clean(), "violations: {:?}", report.violations);
        prop_assert!(report.liveness_misses.is_empty());
    }

    #[test]
    fn reports_round_trip_through_json(seed in 0u64..10_000) {
        let report = run_random(&quick_config(seed)).report;
        let json = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn traces_round_trip_through_jsonl(seed in 0u64..10_000) {
        let trace = run_random(&quick_config(seed)).trace;
        let back = Trace::from_jsonl(&trace.to_jsonl()).unwrap();
        prop_assert_eq!(back.fingerprint(), trace.fingerprint());
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn replay_reproduces_the_recorded_run(seed in 0u64..10_000) {
        let outcome = run_random(&quick_config(seed));
        let replayed = replay_trace(&outcome.trace);
        prop_assert!(replayed.report.is_clean(), "violations: {:?}", replayed.report.violations);
        prop_assert_eq!(
            replayed.report.final_config_fingerprint,
            outcome.report.final_config_fingerprint
        );
        prop_assert_eq!(replayed.report.events_applied, outcome.report.events_applied);
    }

    #[test]
    fn pruning_is_idempotent_and_yields_a_finalized_set(
        seed in 0u64..10_000,
        corrupt in any::<bool>(),
    ) {
        for q in sample_stores(&quick_config(seed), [seed], 8, 4, corrupt) {
            let pruned = aggregator::maximum_finalized_subset(&q);
            prop_assert!(aggregator::is_finalized(&pruned));
            prop_assert_eq!(aggregator::maximum_finalized_subset(&pruned), pruned);
        }
    }

    #[test]
    fn pruning_ignores_removal_order(
        seed in 0u64..10_000,
        order in prop::collection::vec(any::<prop::sample::Index>(), 1..32),
    ) {
        for q in sample_stores(&quick_config(seed), [seed], 8, 4, true) {
            let fixed = aggregator::maximum_finalized_subset(&q);
            let mut picks = order.iter().cycle();
            let one_at_a_time =
                aggregator::pruned_in_order(&q, |len| picks.next().unwrap().index(len));
            prop_assert_eq!(one_at_a_time, fixed);
        }
    }
}
