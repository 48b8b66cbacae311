//! Policies controlling when the scheduler takes actor snapshots, plus a
//! descriptor recording which scheduler produced a report.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Event;

/// When the driver inserts snapshot events into a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[derive(Default)]
pub enum SnapshotPolicy {
    /// Snapshot an actor right after any event that leaves it idle.
    #[default]
    AfterFinalAction,
    /// Snapshot every idle internal actor each time this many non-snapshot
    /// events have been applied.
    Periodic { every: u64 },
    /// Take no snapshots at all; detection always sees an empty store.
    Never,
}

impl SnapshotPolicy {
    /// True when `event` should be followed by a snapshot of its subject.
    pub fn snapshot_after(&self, event: &Event) -> bool {
        matches!(self, SnapshotPolicy::AfterFinalAction)
            && matches!(
                event,
                Event::Idle { .. } | Event::Info { .. } | Event::Release { .. }
            )
    }

    /// True when a sweep over all idle actors is due after the given number
    /// of non-snapshot events.
    pub fn sweep_due(&self, non_snapshot_events: u64) -> bool {
        match self {
            SnapshotPolicy::Periodic { every } => {
                *every > 0 && non_snapshot_events > 0 && non_snapshot_events.is_multiple_of(*every)
            }
            _ => false,
        }
    }

    /// True when the policy never snapshots anything.
    pub fn is_never(&self) -> bool {
        matches!(self, SnapshotPolicy::Never)
    }
}

/// Failure to parse a snapshot policy from text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown snapshot policy `{0}`; expected final-action, periodic:<n>, or never")]
pub struct ParsePolicyError(pub String);

impl FromStr for SnapshotPolicy {
    type Err = ParsePolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "final-action" => Ok(SnapshotPolicy::AfterFinalAction),
            "never" => Ok(SnapshotPolicy::Never),
            other => match other.strip_prefix("periodic:") {
                Some(n) => n
                    .parse::<u64>()
                    .ok()
                    .filter(|n| *n > 0)
                    .map(|every| SnapshotPolicy::Periodic { every })
                    .ok_or_else(|| ParsePolicyError(s.to_string())),
                None => Err(ParsePolicyError(s.to_string())),
            },
        }
    }
}

impl fmt::Display for SnapshotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnapshotPolicy::AfterFinalAction => write!(f, "final-action"),
            SnapshotPolicy::Periodic { every } => write!(f, "periodic:{every}"),
            SnapshotPolicy::Never => write!(f, "never"),
        }
    }
}

/// Which driver produced a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheduler", rename_all = "kebab-case")]
pub enum SchedulerDescriptor {
    /// Seeded pseudo-random scheduling.
    UniformRandom { seed: u64 },
    /// Exhaustive depth-bounded search.
    ExhaustiveDfs { max_depth: u64 },
    /// A scripted scenario.
    Scripted { name: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActorAddress;

    #[test]
    fn parses_and_displays_round_trip() {
        for text in ["final-action", "periodic:25", "never"] {
            let policy: SnapshotPolicy = text.parse().unwrap();
            assert_eq!(policy.to_string(), text);
        }
        assert!("periodic:0".parse::<SnapshotPolicy>().is_err());
        assert!("sometimes".parse::<SnapshotPolicy>().is_err());
    }

    #[test]
    fn snapshot_after_triggers_on_idle_transitions_only() {
        let policy = SnapshotPolicy::AfterFinalAction;
        let a = ActorAddress(0);
        assert!(policy.snapshot_after(&Event::Idle { actor: a }));
        assert!(!policy.snapshot_after(&Event::Spawn {
            token: crate::model::Token::id(a, 0),
            parent: a,
            child: ActorAddress(9),
        }));
        assert!(!SnapshotPolicy::Never.snapshot_after(&Event::Idle { actor: a }));
    }

    #[test]
    fn periodic_sweeps_on_multiples() {
        let policy = SnapshotPolicy::Periodic { every: 10 };
        assert!(!policy.sweep_due(0));
        assert!(!policy.sweep_due(9));
        assert!(policy.sweep_due(10));
        assert!(policy.sweep_due(20));
        assert!(!SnapshotPolicy::AfterFinalAction.sweep_due(10));
    }
}
