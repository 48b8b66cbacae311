//! Depth-bounded exhaustive search over configurations, with the full check
//! suite evaluated at every distinct state.
//!
//! States are deduplicated by configuration fingerprint. Because every check
//! verdict is a function of the configuration (plus ledger facts that agree
//! for configuration-equal states reached by any path), checking each
//! distinct configuration once is sound. Snapshot events are self-loops in
//! configuration space, so they are tallied for coverage instead of
//! expanded.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::canon;
use crate::semantics::{ExplorationBounds, Machine};

use super::checks;
use super::fault::{self, Fault};
use super::report::ExploreReport;

/// Parameters of an exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub bounds: ExplorationBounds,
    /// Events per path from the initial configuration.
    pub max_depth: u64,
    /// Stops the search (marked incomplete) after this many distinct states.
    pub max_states: u64,
    /// Optional knowledge corruption, for negative controls.
    pub fault: Option<Fault>,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            bounds: ExplorationBounds {
                max_actors: 3,
                max_refobs_per_message: 2,
                max_external_injections: 2,
                ..ExplorationBounds::default()
            },
            max_depth: 8,
            max_states: 10_000_000,
            fault: None,
        }
    }
}

/// Explores every schedule up to the depth bound, checking each distinct
/// configuration on first visit.
pub fn explore(config: &ExploreConfig) -> ExploreReport {
    let mut report = ExploreReport {
        max_depth: config.max_depth,
        states_visited: 0,
        transitions_applied: 0,
        deepest_new_state: 0,
        rule_coverage: BTreeMap::new(),
        violations: Vec::new(),
        complete: true,
    };
    // Fingerprint -> shallowest depth seen; states reached again at a
    // shallower depth are re-expanded (deeper successors may exist) but not
    // re-checked or re-counted.
    let mut visited: HashMap<[u8; 16], u64> = HashMap::new();
    let root = Machine::new();
    let root_print = canon::short_fingerprint(&root.config);
    let mut stack: Vec<(Machine, [u8; 16], u64)> = vec![(root, root_print, 0)];
    while let Some((machine, fingerprint, depth)) = stack.pop() {
        match visited.get(&fingerprint) {
            Some(best) if *best <= depth => continue,
            Some(_) => {
                visited.insert(fingerprint, depth);
            }
            None => {
                visited.insert(fingerprint, depth);
                report.states_visited += 1;
                report.deepest_new_state = report.deepest_new_state.max(depth);
                report
                    .violations
                    .extend(checks::structural_checks(&machine, machine.clock));
                report
                    .violations
                    .extend(checks::instantaneous_subsets_safety(
                        &machine,
                        machine.clock,
                    ));
                if report.states_visited >= config.max_states {
                    report.complete = false;
                    break;
                }
            }
        }
        if depth == config.max_depth {
            continue;
        }
        let idle = machine
            .config
            .actors
            .values()
            .filter(|s| s.is_idle())
            .count() as u64;
        if idle > 0 {
            *report
                .rule_coverage
                .entry("Snapshot".to_string())
                .or_default() += idle;
        }
        for event in machine.enabled_events(&config.bounds, false) {
            let mut next = machine.clone();
            fault::apply_event(&mut next, &event, config.fault)
                .unwrap_or_else(|e| panic!("enumerated event must apply: {event}: {e}"));
            report.transitions_applied += 1;
            *report
                .rule_coverage
                .entry(event.label().to_string())
                .or_default() += 1;
            let child = canon::short_fingerprint(&next.config);
            if visited.get(&child).is_none_or(|best| depth + 1 < *best) {
                stack.push((next, child, depth + 1));
            }
        }
    }
    report
}
