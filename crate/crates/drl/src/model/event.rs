//! Labeled transition events.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ids::{ActorAddress, Refob, Token};

/// One labeled transition of the operational semantics. Each variant carries
/// the full parameter list of its rule, so applying an event to the
/// configuration it was enumerated from is deterministic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum Event {
    /// `parent` creates the busy actor `child` and owns `token` pointing at it.
    Spawn {
        token: Token,
        parent: ActorAddress,
        child: ActorAddress,
    },
    /// `sender` sends an application message along its refob named `along` to
    /// `recipient`, creating one refob per entry of `created` for the
    /// recipient; `using[i]` names the sender's refob to `targets[i]`.
    Send {
        along: Token,
        using: Vec<Token>,
        created: Vec<Token>,
        sender: ActorAddress,
        recipient: ActorAddress,
        targets: Vec<ActorAddress>,
    },
    /// `recipient` delivers an application message, activating `refs`.
    Receive {
        along: Token,
        recipient: ActorAddress,
        refs: BTreeSet<Refob>,
    },
    /// The busy actor finishes its message and waits.
    Idle { actor: ActorAddress },
    /// `sender` tells the target of `created` that it exists; `using` names
    /// the sender's refob the creation was charged to.
    SendInfo {
        using: Token,
        created: Refob,
        sender: ActorAddress,
    },
    /// The target delivers an info message, learning `created` exists.
    Info {
        along: Token,
        created: Refob,
        recipient: ActorAddress,
    },
    /// The owner deactivates its refob `token` to `target`.
    SendRelease {
        token: Token,
        owner: ActorAddress,
        target: ActorAddress,
    },
    /// The target delivers a release message for `token`, enabled only when
    /// its receive count matches the count carried by the message.
    Release {
        token: Token,
        owner: ActorAddress,
        target: ActorAddress,
    },
    /// `actor` discards the created/released fact pair for a fully released
    /// refob it is the target of.
    Compaction {
        token: Token,
        owner: ActorAddress,
        actor: ActorAddress,
    },
    /// The idle actor records its current knowledge set.
    Snapshot { actor: ActorAddress },
    /// The environment sends the receptionist an application message whose
    /// refobs it will own.
    In {
        recipient: ActorAddress,
        refs: BTreeSet<Refob>,
    },
    /// An undelivered application message reaches the external actor; internal
    /// targets of `refs` become receptionists.
    Out {
        along: Token,
        external: ActorAddress,
        refs: BTreeSet<Refob>,
    },
    /// The external actor absorbs a release message.
    ReleaseOut {
        token: Token,
        external: ActorAddress,
    },
    /// The external actor absorbs an info message.
    InfoOut {
        along: Token,
        created: Refob,
        external: ActorAddress,
    },
}

impl Event {
    /// The rule label, used in traces and coverage reports.
    pub fn label(&self) -> &'static str {
        match self {
            Event::Spawn { .. } => "Spawn",
            Event::Send { .. } => "Send",
            Event::Receive { .. } => "Receive",
            Event::Idle { .. } => "Idle",
            Event::SendInfo { .. } => "SendInfo",
            Event::Info { .. } => "Info",
            Event::SendRelease { .. } => "SendRelease",
            Event::Release { .. } => "Release",
            Event::Compaction { .. } => "Compaction",
            Event::Snapshot { .. } => "Snapshot",
            Event::In { .. } => "In",
            Event::Out { .. } => "Out",
            Event::ReleaseOut { .. } => "ReleaseOut",
            Event::InfoOut { .. } => "InfoOut",
        }
    }

    /// All rule labels in presentation order.
    pub fn all_labels() -> [&'static str; 14] {
        [
            "Spawn",
            "Send",
            "Receive",
            "Idle",
            "SendInfo",
            "Info",
            "SendRelease",
            "Release",
            "Compaction",
            "Snapshot",
            "In",
            "Out",
            "ReleaseOut",
            "InfoOut",
        ]
    }

    /// The actor whose mode or knowledge the event touches first; used for
    /// deterministic ordering of enumerated events.
    pub fn subject(&self) -> ActorAddress {
        match self {
            Event::Spawn { parent, .. } => *parent,
            Event::Send { sender, .. } => *sender,
            Event::Receive { recipient, .. } => *recipient,
            Event::Idle { actor } => *actor,
            Event::SendInfo { sender, .. } => *sender,
            Event::Info { recipient, .. } => *recipient,
            Event::SendRelease { owner, .. } => *owner,
            Event::Release { target, .. } => *target,
            Event::Compaction { actor, .. } => *actor,
            Event::Snapshot { actor } => *actor,
            Event::In { recipient, .. } => *recipient,
            Event::Out { external, .. } => *external,
            Event::ReleaseOut { external, .. } => *external,
            Event::InfoOut { external, .. } => *external,
        }
    }

    /// Whether this is a snapshot pseudo-event rather than a protocol step.
    pub fn is_snapshot(&self) -> bool {
        matches!(self, Event::Snapshot { .. })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Spawn {
                token,
                parent,
                child,
            } => {
                write!(f, "Spawn({token}, {parent}, {child})")
            }
            Event::Send {
                along,
                sender,
                recipient,
                created,
                ..
            } => {
                write!(
                    f,
                    "Send({along}, {sender} -> {recipient}, {} refs)",
                    created.len()
                )
            }
            Event::Receive {
                along,
                recipient,
                refs,
            } => {
                write!(f, "Receive({along}, {recipient}, {} refs)", refs.len())
            }
            Event::Idle { actor } => write!(f, "Idle({actor})"),
            Event::SendInfo {
                using,
                created,
                sender,
            } => {
                write!(f, "SendInfo({using}, {created}, {sender})")
            }
            Event::Info {
                along,
                created,
                recipient,
            } => {
                write!(f, "Info({along}, {created}, {recipient})")
            }
            Event::SendRelease {
                token,
                owner,
                target,
            } => {
                write!(f, "SendRelease({token}, {owner}, {target})")
            }
            Event::Release {
                token,
                owner,
                target,
            } => {
                write!(f, "Release({token}, {owner}, {target})")
            }
            Event::Compaction {
                token,
                owner,
                actor,
            } => {
                write!(f, "Compaction({token}, {owner}, {actor})")
            }
            Event::Snapshot { actor } => write!(f, "Snapshot({actor})"),
            Event::In { recipient, refs } => {
                write!(f, "In({recipient}, {} refs)", refs.len())
            }
            Event::Out {
                along,
                external,
                refs,
            } => {
                write!(f, "Out({along}, {external}, {} refs)", refs.len())
            }
            Event::ReleaseOut { token, external } => {
                write!(f, "ReleaseOut({token}, {external})")
            }
            Event::InfoOut {
                along, external, ..
            } => {
                write!(f, "InfoOut({along}, {external})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_cover_every_variant() {
        let labels = Event::all_labels();
        assert_eq!(labels.len(), 14);
        let unique: std::collections::BTreeSet<_> = labels.iter().collect();
        assert_eq!(unique.len(), 14);
    }

    #[test]
    fn serde_tags_events_by_rule() {
        let e = Event::Idle {
            actor: ActorAddress(3),
        };
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"rule\":\"Idle\""));
        let back: Event = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
