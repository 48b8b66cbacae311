//! Ground-truth checks evaluated while a run or search is in progress.
//!
//! Each check compares what the actors collectively believe (the
//! configuration) with what actually happened (the ledger) and returns
//! violations rather than panicking, so damaged runs keep going and produce
//! machine-readable reports.

use std::collections::BTreeSet;

use rand::Rng;

use crate::aggregator::{self, SnapshotSet};
use crate::canon;
use crate::model::{ActorAddress, Message, Token};
use crate::oracle;
use crate::semantics::{Ledger, Machine, RefobState};

use super::report::Violation;

/// Structural well-formedness of the configuration itself.
pub fn config_invariants(m: &Machine, step: u64) -> Vec<Violation> {
    m.config
        .invariant_violations()
        .into_iter()
        .map(|detail| Violation::ConfigInvariant { step, detail })
        .collect()
}

/// Every unreleased refob targeting a non-rooted actor must be reachable
/// through creation bookkeeping; rooted actors must be pinned externally.
pub fn chain_lemma(m: &Machine, step: u64) -> Vec<Violation> {
    oracle::check_chain_lemma(&m.config, &m.ledger)
        .into_iter()
        .map(|violation| Violation::ChainLemma { step, violation })
        .collect()
}

/// Activated facts must match live ledger records, and undelivered messages
/// must not travel along released refobs.
pub fn activation_consistency(m: &Machine, step: u64) -> Vec<Violation> {
    let mut out = Vec::new();
    for (a, state) in &m.config.actors {
        for refob in state.knowledge.activated() {
            let record = m.ledger.refob(&refob.token);
            let problem = match record {
                None => Some("has no ledger record".to_string()),
                Some(r) if r.refob != *refob => {
                    Some(format!("ledger records it as {} instead", r.refob))
                }
                Some(r) if r.refob.owner != *a => Some(format!(
                    "is activated by {a} but owned by {}",
                    r.refob.owner
                )),
                Some(r) if r.state != RefobState::Active => {
                    Some(format!("is activated but the ledger says {:?}", r.state))
                }
                Some(_) => None,
            };
            if let Some(detail) = problem {
                out.push(Violation::StaleActivation {
                    step,
                    actor: *a,
                    refob: *refob,
                    detail,
                });
            }
        }
    }
    for (_, message) in m.config.messages() {
        let along = message.along();
        if along == Token::External {
            continue;
        }
        match m.ledger.refob(&along) {
            None => out.push(Violation::TransitAfterRelease {
                step,
                token: along,
                detail: "message in transit along a refob with no ledger record".to_string(),
            }),
            Some(record) if record.is_released() => out.push(Violation::TransitAfterRelease {
                step,
                token: along,
                detail: "message in transit along a released refob".to_string(),
            }),
            Some(record) => {
                if matches!(message, Message::Release { .. })
                    && record.state != RefobState::Inactive
                {
                    out.push(Violation::TransitAfterRelease {
                        step,
                        token: along,
                        detail: format!(
                            "release message in transit but the refob is {:?}",
                            record.state
                        ),
                    });
                }
            }
        }
    }
    out
}

/// Undelivered mailbox contents must equal the ledger's open send records,
/// as multisets of (recipient, message).
pub fn conservation(m: &Machine, step: u64) -> Vec<Violation> {
    let mut in_config: Vec<Vec<u8>> = m
        .config
        .messages()
        .map(|(recipient, message)| canon::canonical_bytes(&(recipient, message)))
        .collect();
    let mut in_ledger: Vec<Vec<u8>> = m
        .ledger
        .in_transit_messages()
        .map(|record| canon::canonical_bytes(&(record.recipient, &record.message)))
        .collect();
    in_config.sort();
    in_ledger.sort();
    if in_config == in_ledger {
        return Vec::new();
    }
    let detail = format!(
        "mailboxes hold {} undelivered messages, the ledger records {}; contents differ",
        in_config.len(),
        in_ledger.len()
    );
    vec![Violation::Conservation { step, detail }]
}

/// An idle actor whose knowledge says every inbound refob is its own and
/// fully received must genuinely be terminated.
pub fn simple_garbage_soundness(m: &Machine, step: u64) -> Vec<Violation> {
    let terminated = oracle::terminated_set(&m.config, &m.ledger);
    m.config
        .actors
        .iter()
        .filter(|(a, state)| {
            state.is_idle()
                && oracle::is_simple_garbage_local(**a, &state.knowledge)
                && !terminated.contains(a)
        })
        .map(|(a, _)| Violation::SimpleGarbageUnsound { step, actor: *a })
        .collect()
}

/// True when some message was sent along `token` strictly after `t1` and at
/// or before `t2`.
fn sends_along_between(ledger: &Ledger, token: &Token, t1: u64, t2: u64) -> bool {
    ledger
        .messages()
        .iter()
        .any(|r| r.message.along() == *token && r.sent_at > t1 && r.sent_at <= t2)
}

/// Samples refobs and observation times, then verifies that the counts the
/// owner and target believe in account exactly for the in-flight messages.
///
/// For a refob observed at `t1` before deactivation, and at `t2` before
/// release, with no sends along it in between, the owner's send count minus
/// the target's receive count must equal the messages sent by `t1` and still
/// undelivered at `t2`. Only refobs between live internal actors qualify:
/// externals keep no counts, and collected actors no longer answer.
pub fn message_counts(m: &Machine, rng: &mut impl Rng, samples: u32, step: u64) -> Vec<Violation> {
    let mut out = Vec::new();
    let records: Vec<_> = m
        .ledger
        .refobs()
        .filter(|r| {
            r.refob.token != Token::External
                && m.config.is_internal(r.refob.owner)
                && m.config.is_internal(r.refob.target)
        })
        .collect();
    if records.is_empty() {
        return out;
    }
    for _ in 0..samples {
        let record = records[rng.gen_range(0..records.len())];
        let t1_max = match record.deactivated_at {
            Some(d) => d.saturating_sub(1),
            None => m.clock,
        };
        let t2_max = match record.released_at {
            Some(r) => r.saturating_sub(1),
            None => m.clock,
        };
        let t1 = rng.gen_range(0..=t1_max);
        let t2 = rng.gen_range(0..=t2_max);
        if t1 < t2 && sends_along_between(&m.ledger, &record.refob.token, t1, t2) {
            continue;
        }
        let sent = record.sent_count_at(t1);
        let received = record.recv_count_at(t2);
        let expected = m.ledger.in_flight_along(&record.refob.token, t1, t2) as u64;
        let actual = sent.saturating_sub(received);
        if actual != expected {
            out.push(Violation::MessageCountMismatch {
                step,
                token: record.refob.token,
                t1,
                t2,
                expected,
                actual,
            });
        }
    }
    out
}

/// Every actor a detection pass reports must genuinely be terminated (or
/// already collected by an earlier pass).
pub fn detect_safety(
    m: &Machine,
    store_delay: u64,
    detected: &BTreeSet<ActorAddress>,
    collected: &BTreeSet<ActorAddress>,
    step: u64,
) -> Vec<Violation> {
    let terminated = oracle::terminated_set(&m.config, &m.ledger);
    detected
        .iter()
        .filter(|a| !terminated.contains(a) && !collected.contains(a))
        .map(|a| Violation::DetectSafety {
            step,
            store_delay,
            actor: *a,
        })
        .collect()
}

/// Termination is irreversible: everything terminated earlier must still be
/// terminated now, unless it was collected in between.
pub fn terminated_monotonic(
    prev: &BTreeSet<ActorAddress>,
    current: &BTreeSet<ActorAddress>,
    collected: &BTreeSet<ActorAddress>,
    step: u64,
) -> Option<Violation> {
    let lost: BTreeSet<ActorAddress> = prev
        .iter()
        .filter(|a| !current.contains(a) && !collected.contains(a))
        .copied()
        .collect();
    if lost.is_empty() {
        None
    } else {
        Some(Violation::TerminatedSetShrank { step, lost })
    }
}

/// Snapshots every idle internal actor in place and verifies that *every*
/// finalized subset of that store names only terminated actors.
///
/// Cost is exponential in the number of idle actors; intended for the small
/// configurations the exhaustive explorer visits.
pub fn instantaneous_subsets_safety(m: &Machine, step: u64) -> Vec<Violation> {
    let idle: Vec<(ActorAddress, &crate::model::KnowledgeSet)> = m
        .config
        .actors
        .iter()
        .filter(|(_, state)| state.is_idle())
        .map(|(a, state)| (*a, &state.knowledge))
        .collect();
    let mut out = Vec::new();
    let terminated = oracle::terminated_set(&m.config, &m.ledger);
    for mask in 1u64..(1 << idle.len()) {
        let mut set = SnapshotSet::new();
        for (bit, (a, phi)) in idle.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                set.insert(*a, (*phi).clone());
            }
        }
        if !aggregator::is_finalized(&set) {
            continue;
        }
        for a in set.actors() {
            if !terminated.contains(&a) {
                out.push(Violation::DetectSafety {
                    step,
                    store_delay: 0,
                    actor: a,
                });
            }
        }
    }
    out
}

/// The checks that need nothing beyond the machine itself, bundled in the
/// order the runner evaluates them.
pub fn structural_checks(m: &Machine, step: u64) -> Vec<Violation> {
    let mut out = config_invariants(m, step);
    out.extend(chain_lemma(m, step));
    out.extend(activation_consistency(m, step));
    out.extend(conservation(m, step));
    out.extend(simple_garbage_soundness(m, step));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, Fact, Refob};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn machine_with_send() -> (Machine, Token) {
        let mut m = Machine::new();
        let root = m.config.root_actor();
        let token = m.config.names.peek_token(root);
        let child = m.config.names.peek_address();
        m.apply(&Event::Spawn {
            token,
            parent: root,
            child,
        })
        .unwrap();
        m.apply(&Event::Send {
            along: token,
            using: Vec::new(),
            created: Vec::new(),
            sender: root,
            recipient: child,
            targets: Vec::new(),
        })
        .unwrap();
        (m, token)
    }

    #[test]
    fn clean_machine_passes_all_checks() {
        let (m, _) = machine_with_send();
        assert!(structural_checks(&m, m.clock).is_empty());
        assert!(instantaneous_subsets_safety(&m, m.clock).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(message_counts(&m, &mut rng, 32, m.clock).is_empty());
    }

    #[test]
    fn understated_send_count_trips_message_counts() {
        use super::super::fault::{apply_event, Fault};
        let mut m = Machine::new();
        let root = m.config.root_actor();
        let token = m.config.names.peek_token(root);
        let child = m.config.names.peek_address();
        m.apply(&Event::Spawn {
            token,
            parent: root,
            child,
        })
        .unwrap();
        let send = Event::Send {
            along: token,
            using: Vec::new(),
            created: Vec::new(),
            sender: root,
            recipient: child,
            targets: Vec::new(),
        };
        // The fault resets the count after each send, so the second send is
        // recorded with the same count as the first and the books no longer
        // cover both in-flight messages.
        apply_event(&mut m, &send, Some(Fault::SkipSentIncrement)).unwrap();
        apply_event(&mut m, &send, Some(Fault::SkipSentIncrement)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let violations = message_counts(&m, &mut rng, 64, m.clock);
        assert!(
            violations
                .iter()
                .any(|v| matches!(v, Violation::MessageCountMismatch { .. })),
            "understated counts must be caught: {violations:?}"
        );
    }

    #[test]
    fn lost_mailbox_message_breaks_conservation() {
        let (mut m, token) = machine_with_send();
        let recipient = m.ledger.refob(&token).unwrap().refob.target;
        let message = m.config.mailbox(recipient)[0].clone();
        assert!(m.config.remove_message(recipient, &message));
        let violations = conservation(&m, m.clock);
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::Conservation { .. }));
    }

    #[test]
    fn phantom_activation_is_reported() {
        let (mut m, _) = machine_with_send();
        let root = m.config.root_actor();
        let ghost = Refob::new(Token::id(ActorAddress(42), 0), root, ActorAddress(42));
        m.config
            .state_mut(root)
            .unwrap()
            .knowledge
            .insert(Fact::Activated(ghost));
        let violations = activation_consistency(&m, m.clock);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::StaleActivation { .. })));
    }

    #[test]
    fn false_detection_is_unsafe() {
        let (m, _) = machine_with_send();
        let root = m.config.root_actor();
        let detected = BTreeSet::from([root]);
        let collected = BTreeSet::new();
        let violations = detect_safety(&m, 0, &detected, &collected, m.clock);
        assert_eq!(violations.len(), 1, "the busy root is not terminated");
        let excused = detect_safety(&m, 0, &detected, &BTreeSet::from([root]), m.clock);
        assert!(excused.is_empty(), "collected actors are excused");
    }

    #[test]
    fn shrinking_terminated_set_is_flagged() {
        let a = ActorAddress(3);
        let prev = BTreeSet::from([a]);
        let empty = BTreeSet::new();
        assert!(terminated_monotonic(&prev, &empty, &empty, 5).is_some());
        assert!(terminated_monotonic(&prev, &empty, &prev, 5).is_none());
        assert!(terminated_monotonic(&empty, &prev, &empty, 5).is_none());
    }
}
