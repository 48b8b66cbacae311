//! Deliberate knowledge corruptions used as negative controls.
//!
//! A fault models an implementation bug: after an event is applied
//! faithfully, the subject's knowledge set is quietly damaged. The ledger
//! keeps recording the truth, so the run-time checks are expected to notice
//! the damage; a fault-injected run that stays clean would mean the checks
//! are too weak.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Configuration, Event, Fact, Refob};
use crate::semantics::{Machine, RuleError};

/// A knowledge-set corruption applied after matching events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// After each send, roll the sender's send count back by one.
    SkipSentIncrement,
    /// After each spawn, delete the child's record of the parent's refob.
    DropSpawnCreated,
}

/// Failure to parse a fault name from text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown fault `{0}`; expected skip-sent-increment or drop-spawn-created")]
pub struct ParseFaultError(pub String);

impl FromStr for Fault {
    type Err = ParseFaultError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip-sent-increment" => Ok(Fault::SkipSentIncrement),
            "drop-spawn-created" => Ok(Fault::DropSpawnCreated),
            other => Err(ParseFaultError(other.to_string())),
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::SkipSentIncrement => write!(f, "skip-sent-increment"),
            Fault::DropSpawnCreated => write!(f, "drop-spawn-created"),
        }
    }
}

impl Fault {
    /// Damages the knowledge left behind by `event`, if it matches.
    pub fn corrupt_after(&self, k: &mut Configuration, event: &Event) {
        match (self, event) {
            (Fault::SkipSentIncrement, Event::Send { along, sender, .. }) => {
                if let Some(state) = k.state_mut(*sender) {
                    let n = state.knowledge.sent_count(along);
                    debug_assert!(n > 0, "send must have incremented the count");
                    state
                        .knowledge
                        .insert(Fact::SentCount(*along, n.saturating_sub(1)));
                }
            }
            (
                Fault::DropSpawnCreated,
                Event::Spawn {
                    token,
                    parent,
                    child,
                },
            ) => {
                if let Some(state) = k.state_mut(*child) {
                    let lost = Refob::new(*token, *parent, *child);
                    state.knowledge.remove(&Fact::Created(lost));
                }
            }
            _ => {}
        }
    }
}

/// Applies `event` to the machine and then lets `fault`, when present,
/// corrupt the resulting knowledge. The ledger is never touched.
pub fn apply_event(
    machine: &mut Machine,
    event: &Event,
    fault: Option<Fault>,
) -> Result<(), RuleError> {
    machine.apply(event)?;
    if let Some(fault) = fault {
        fault.corrupt_after(&mut machine.config, event);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips() {
        for fault in [Fault::SkipSentIncrement, Fault::DropSpawnCreated] {
            assert_eq!(fault.to_string().parse::<Fault>().unwrap(), fault);
        }
        assert!("meltdown".parse::<Fault>().is_err());
    }

    #[test]
    fn skip_sent_increment_understates_the_count() {
        let mut m = Machine::new();
        let root = m.config.root_actor();
        let spawn = Event::Spawn {
            token: m.config.names.peek_token(root),
            parent: root,
            child: m.config.names.peek_address(),
        };
        apply_event(&mut m, &spawn, Some(Fault::SkipSentIncrement)).unwrap();
        let (along, child) = match spawn {
            Event::Spawn { token, child, .. } => (token, child),
            _ => unreachable!(),
        };
        let send = Event::Send {
            along,
            using: Vec::new(),
            created: Vec::new(),
            sender: root,
            recipient: child,
            targets: Vec::new(),
        };
        apply_event(&mut m, &send, Some(Fault::SkipSentIncrement)).unwrap();
        let phi = m.config.knowledge(root).unwrap();
        assert_eq!(phi.sent_count(&along), 0, "fault must hide the send");
        let record = m.ledger.refob(&along).unwrap();
        assert_eq!(record.sent_count_at(m.clock), 1, "ledger keeps the truth");
    }

    #[test]
    fn drop_spawn_created_erases_the_childs_record() {
        let mut m = Machine::new();
        let root = m.config.root_actor();
        let token = m.config.names.peek_token(root);
        let child = m.config.names.peek_address();
        let spawn = Event::Spawn {
            token,
            parent: root,
            child,
        };
        apply_event(&mut m, &spawn, Some(Fault::DropSpawnCreated)).unwrap();
        let phi = m.config.knowledge(child).unwrap();
        let lost = Refob::new(token, root, child);
        assert!(!phi.created().any(|r| *r == lost));
        assert!(phi.facts().len() == 2, "only the created fact is dropped");
    }
}
