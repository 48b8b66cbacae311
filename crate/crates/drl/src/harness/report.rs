//! Structured results produced by runs, exhaustive exploration, and
//! scripted scenarios.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{ActorAddress, Refob, Token};
use crate::oracle::ChainViolation;

use super::policy::{SchedulerDescriptor, SnapshotPolicy};

/// A single observed departure from the protocol's guarantees.
///
/// Every variant carries the logical time (clock value) at which the
/// problem was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// A structural well-formedness rule of the configuration failed.
    ConfigInvariant { step: u64, detail: String },
    /// An actor was missing a chain for an unreleased refob targeting it.
    ChainLemma {
        step: u64,
        violation: ChainViolation,
    },
    /// An actor holds an activated fact whose ledger record disagrees.
    StaleActivation {
        step: u64,
        actor: ActorAddress,
        refob: Refob,
        detail: String,
    },
    /// A message is in transit along a refob in an impossible lifecycle state.
    TransitAfterRelease {
        step: u64,
        token: Token,
        detail: String,
    },
    /// Undelivered mailbox contents and the ledger's open sends disagree.
    Conservation { step: u64, detail: String },
    /// Detection reported an actor the ground truth says is not terminated.
    DetectSafety {
        step: u64,
        store_delay: u64,
        actor: ActorAddress,
    },
    /// A locally quiescent-looking actor was not actually terminated.
    SimpleGarbageUnsound { step: u64, actor: ActorAddress },
    /// The send/receive count bookkeeping missed in-flight messages.
    MessageCountMismatch {
        step: u64,
        token: Token,
        t1: u64,
        t2: u64,
        expected: u64,
        actual: u64,
    },
    /// A previously terminated actor left the terminated set.
    TerminatedSetShrank {
        step: u64,
        lost: BTreeSet<ActorAddress>,
    },
    /// A terminated actor was never reported by detection.
    LivenessMiss { step: u64, actor: ActorAddress },
    /// An event referenced an actor that had already been collected.
    CollectedActorTouched { step: u64, actor: ActorAddress },
    /// A replayed event produced a configuration other than the recorded one.
    ReplayDivergence {
        step: u64,
        expected: String,
        actual: String,
    },
}

impl Violation {
    /// Logical time at which the violation was observed.
    pub fn step(&self) -> u64 {
        match self {
            Violation::ConfigInvariant { step, .. }
            | Violation::ChainLemma { step, .. }
            | Violation::StaleActivation { step, .. }
            | Violation::TransitAfterRelease { step, .. }
            | Violation::Conservation { step, .. }
            | Violation::DetectSafety { step, .. }
            | Violation::SimpleGarbageUnsound { step, .. }
            | Violation::MessageCountMismatch { step, .. }
            | Violation::TerminatedSetShrank { step, .. }
            | Violation::LivenessMiss { step, .. }
            | Violation::CollectedActorTouched { step, .. }
            | Violation::ReplayDivergence { step, .. } => *step,
        }
    }

    /// Stable name of the violation family, used for aggregation.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::ConfigInvariant { .. } => "config-invariant",
            Violation::ChainLemma { .. } => "chain-lemma",
            Violation::StaleActivation { .. } => "stale-activation",
            Violation::TransitAfterRelease { .. } => "transit-after-release",
            Violation::Conservation { .. } => "conservation",
            Violation::DetectSafety { .. } => "detect-safety",
            Violation::SimpleGarbageUnsound { .. } => "simple-garbage-unsound",
            Violation::MessageCountMismatch { .. } => "message-count-mismatch",
            Violation::TerminatedSetShrank { .. } => "terminated-set-shrank",
            Violation::LivenessMiss { .. } => "liveness-miss",
            Violation::CollectedActorTouched { .. } => "collected-actor-touched",
            Violation::ReplayDivergence { .. } => "replay-divergence",
        }
    }
}

/// Everything observed during one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub scheduler: SchedulerDescriptor,
    pub snapshot_policy: SnapshotPolicy,
    /// Non-snapshot events applied.
    pub events_applied: u64,
    pub snapshots_taken: u64,
    pub events_by_rule: BTreeMap<String, u64>,
    /// Actors the ground truth reports terminated at the end of the run.
    pub final_terminated: BTreeSet<ActorAddress>,
    /// Actors the final detection pass reported.
    pub final_detected: BTreeSet<ActorAddress>,
    /// Actors removed from the configuration by self-destruct detection.
    pub collected: BTreeSet<ActorAddress>,
    /// Terminated actors the final detection pass failed to report.
    pub liveness_misses: BTreeSet<ActorAddress>,
    /// Number of detection passes executed (per store).
    pub detections: u64,
    /// Mean non-snapshot events between an actor terminating and first being
    /// detected, over actors where both were observed.
    pub mean_detection_latency: Option<f64>,
    pub violations: Vec<Violation>,
    pub trace_fingerprint: String,
    pub final_config_fingerprint: String,
}

impl RunReport {
    /// True when the run observed no violations at all.
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Aggregate results over a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub runs: u64,
    pub clean_runs: u64,
    pub total_events: u64,
    pub total_snapshots: u64,
    pub total_violations: u64,
    pub violations_by_kind: BTreeMap<String, u64>,
    pub rule_coverage: BTreeMap<String, u64>,
    pub total_liveness_misses: u64,
    /// Mean of per-run mean detection latencies, over runs reporting one.
    pub mean_detection_latency: Option<f64>,
    pub reports: Vec<RunReport>,
}

impl CampaignSummary {
    /// Builds the aggregate view over per-run reports (sorted by seed).
    pub fn from_reports(mut reports: Vec<RunReport>) -> Self {
        reports.sort_by_key(|r| r.seed);
        let mut summary = CampaignSummary {
            runs: reports.len() as u64,
            clean_runs: 0,
            total_events: 0,
            total_snapshots: 0,
            total_violations: 0,
            violations_by_kind: BTreeMap::new(),
            rule_coverage: BTreeMap::new(),
            total_liveness_misses: 0,
            mean_detection_latency: None,
            reports: Vec::new(),
        };
        let mut latency_sum = 0.0;
        let mut latency_runs = 0u64;
        for report in &reports {
            if report.is_clean() {
                summary.clean_runs += 1;
            }
            summary.total_events += report.events_applied;
            summary.total_snapshots += report.snapshots_taken;
            summary.total_violations += report.violations.len() as u64;
            for violation in &report.violations {
                *summary
                    .violations_by_kind
                    .entry(violation.kind().to_string())
                    .or_default() += 1;
            }
            for (rule, count) in &report.events_by_rule {
                *summary.rule_coverage.entry(rule.clone()).or_default() += count;
            }
            summary.total_liveness_misses += report.liveness_misses.len() as u64;
            if let Some(latency) = report.mean_detection_latency {
                latency_sum += latency;
                latency_runs += 1;
            }
        }
        if latency_runs > 0 {
            summary.mean_detection_latency = Some(latency_sum / latency_runs as f64);
        }
        summary.reports = reports;
        summary
    }
}

/// Results of a depth-bounded exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreReport {
    pub max_depth: u64,
    /// Distinct configurations visited (the initial one included).
    pub states_visited: u64,
    /// Transitions applied, counting re-expansions at shallower depths.
    pub transitions_applied: u64,
    /// Deepest level at which a new configuration was found.
    pub deepest_new_state: u64,
    pub rule_coverage: BTreeMap<String, u64>,
    pub violations: Vec<Violation>,
    /// False when the state budget stopped the search early.
    pub complete: bool,
}

impl ExploreReport {
    /// True when the search observed no violations at all.
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One assertion evaluated inside a scripted scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl ScenarioCheck {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        ScenarioCheck {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Results of one scripted scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub events_applied: u64,
    pub checks: Vec<ScenarioCheck>,
}

impl ScenarioReport {
    /// True when every scripted assertion held.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(seed: u64, violations: Vec<Violation>) -> RunReport {
        RunReport {
            seed,
            scheduler: SchedulerDescriptor::UniformRandom { seed },
            snapshot_policy: SnapshotPolicy::AfterFinalAction,
            events_applied: 10,
            snapshots_taken: 2,
            events_by_rule: BTreeMap::from([("Idle".to_string(), 10)]),
            final_terminated: BTreeSet::new(),
            final_detected: BTreeSet::new(),
            collected: BTreeSet::new(),
            liveness_misses: BTreeSet::new(),
            detections: 1,
            mean_detection_latency: Some(4.0),
            violations,
            trace_fingerprint: "t".to_string(),
            final_config_fingerprint: "c".to_string(),
        }
    }

    #[test]
    fn campaign_summary_aggregates() {
        let dirty = vec![Violation::ConfigInvariant {
            step: 3,
            detail: "x".to_string(),
        }];
        let summary = CampaignSummary::from_reports(vec![report(1, dirty), report(0, vec![])]);
        assert_eq!(summary.runs, 2);
        assert_eq!(summary.clean_runs, 1);
        assert_eq!(summary.total_events, 20);
        assert_eq!(summary.violations_by_kind["config-invariant"], 1);
        assert_eq!(summary.rule_coverage["Idle"], 20);
        assert_eq!(summary.mean_detection_latency, Some(4.0));
        assert_eq!(summary.reports[0].seed, 0, "reports are seed-ordered");
    }

    #[test]
    fn violation_kind_and_step_are_exposed() {
        let v = Violation::DetectSafety {
            step: 7,
            store_delay: 25,
            actor: ActorAddress(2),
        };
        assert_eq!(v.kind(), "detect-safety");
        assert_eq!(v.step(), 7);
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("detect-safety"));
        assert_eq!(serde_json::from_str::<Violation>(&json).unwrap(), v);
    }
}
