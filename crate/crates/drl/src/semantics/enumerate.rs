//! Enumeration of the transitions enabled in a configuration, used by the
//! exhaustive explorer and as the template menu for random runs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{ActorAddress, Configuration, Event, Message, Refob, Token};

use super::ledger::Ledger;

/// Caps that keep state spaces and random runs finite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationBounds {
    /// Spawn is disabled once this many actors (internal plus external) exist.
    pub max_actors: usize,
    /// Hard cap on non-snapshot events in a single run.
    pub max_events_per_run: u64,
    /// Largest number of refobs a single application message may carry.
    pub max_refobs_per_message: usize,
    /// Environment-injection events are disabled after this many.
    pub max_external_injections: u64,
    /// Whether environment-injection events are enabled at all.
    pub allow_in: bool,
}

impl Default for ExplorationBounds {
    fn default() -> Self {
        Self {
            max_actors: 6,
            max_events_per_run: 300,
            max_refobs_per_message: 2,
            max_external_injections: 3,
            allow_in: true,
        }
    }
}

/// Every non-decreasing selection (with repetition) of 0..=max_len items.
fn multisets<T: Clone>(items: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(usize, Vec<T>)> = vec![(0, Vec::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (start, prefix) in &frontier {
            for (i, item) in items.iter().enumerate().skip(*start) {
                let mut grown = prefix.clone();
                grown.push(item.clone());
                out.push(grown.clone());
                next.push((i, grown));
            }
        }
        frontier = next;
    }
    out
}

fn busy_actor_events(
    k: &Configuration,
    a: ActorAddress,
    bounds: &ExplorationBounds,
    out: &mut Vec<Event>,
) {
    out.push(Event::Idle { actor: a });
    if k.actors.len() + k.externals.len() < bounds.max_actors {
        out.push(Event::Spawn {
            token: k.names.peek_token(a),
            parent: a,
            child: k.names.peek_address(),
        });
    }
    let phi = &k.state(a).expect("busy actor").knowledge;
    let activated: Vec<Refob> = phi.activated().copied().collect();
    for x in &activated {
        for ys in multisets(&activated, bounds.max_refobs_per_message) {
            let created: Vec<Token> = (0..ys.len() as u32)
                .map(|i| k.names.peek_token_at(a, i))
                .collect();
            out.push(Event::Send {
                along: x.token,
                using: ys.iter().map(|y| y.token).collect(),
                created,
                sender: a,
                recipient: x.target,
                targets: ys.iter().map(|y| y.target).collect(),
            });
        }
    }
    for (y, z) in phi.created_using() {
        out.push(Event::SendInfo {
            using: y.token,
            created: *z,
            sender: a,
        });
    }
    for x in &activated {
        if !phi.creates_anything_using(x) {
            out.push(Event::SendRelease {
                token: x.token,
                owner: a,
                target: x.target,
            });
        }
    }
}

pub(crate) fn idle_actor_events(
    k: &Configuration,
    ledger: &Ledger,
    a: ActorAddress,
    include_snapshots: bool,
    out: &mut Vec<Event>,
) {
    let phi = &k.state(a).expect("idle actor").knowledge;
    let mut seen = BTreeSet::new();
    for m in k.mailbox(a) {
        if !seen.insert(m.clone()) {
            continue;
        }
        match m {
            Message::App { along, refs } => {
                out.push(Event::Receive {
                    along: *along,
                    recipient: a,
                    refs: refs.clone(),
                });
            }
            Message::Info { along, created } => {
                out.push(Event::Info {
                    along: *along,
                    created: *created,
                    recipient: a,
                });
            }
            Message::Release { token, count } => {
                if phi.recv_count(token) == *count {
                    let record = ledger
                        .refob(token)
                        .expect("released refob is in the ledger");
                    out.push(Event::Release {
                        token: *token,
                        owner: record.refob.owner,
                        target: a,
                    });
                }
            }
        }
    }
    for created in phi.created() {
        if created.target == a && phi.has_released(created) {
            out.push(Event::Compaction {
                token: created.token,
                owner: created.owner,
                actor: a,
            });
        }
    }
    if include_snapshots {
        out.push(Event::Snapshot { actor: a });
    }
}

/// Addresses an injected message may point refobs at: every receptionist and
/// external, plus one fresh external if the actor cap leaves room.
pub(crate) fn injection_targets(
    k: &Configuration,
    bounds: &ExplorationBounds,
) -> Vec<ActorAddress> {
    let mut candidates: Vec<ActorAddress> = k
        .receptionists
        .iter()
        .chain(k.externals.iter())
        .copied()
        .collect();
    candidates.sort_unstable();
    if k.actors.len() + k.externals.len() < bounds.max_actors {
        candidates.push(k.names.peek_address());
    }
    candidates
}

fn injection_events(
    k: &Configuration,
    ledger: &Ledger,
    bounds: &ExplorationBounds,
    out: &mut Vec<Event>,
) {
    if !bounds.allow_in || ledger.in_events() >= bounds.max_external_injections {
        return;
    }
    let candidates = injection_targets(k, bounds);
    for r in &k.receptionists {
        for targets in multisets(&candidates, bounds.max_refobs_per_message) {
            let refs: BTreeSet<Refob> = targets
                .iter()
                .enumerate()
                .map(|(i, t)| Refob::new(k.names.peek_token_at(*r, i as u32), *r, *t))
                .collect();
            out.push(Event::In {
                recipient: *r,
                refs,
            });
        }
    }
}

pub(crate) fn external_delivery_events(k: &Configuration, e: ActorAddress, out: &mut Vec<Event>) {
    let mut seen = BTreeSet::new();
    for m in k.mailbox(e) {
        if !seen.insert(m.clone()) {
            continue;
        }
        match m {
            Message::App { along, refs } => {
                out.push(Event::Out {
                    along: *along,
                    external: e,
                    refs: refs.clone(),
                });
            }
            Message::Release { token, .. } => {
                out.push(Event::ReleaseOut {
                    token: *token,
                    external: e,
                });
            }
            Message::Info { along, created } => {
                out.push(Event::InfoOut {
                    along: *along,
                    created: *created,
                    external: e,
                });
            }
        }
    }
}

fn environment_events(
    k: &Configuration,
    ledger: &Ledger,
    bounds: &ExplorationBounds,
    out: &mut Vec<Event>,
) {
    injection_events(k, ledger, bounds, out);
    for e in &k.externals {
        external_delivery_events(k, *e, out);
    }
}

/// All transitions enabled in `k`, in a deterministic order. Identical queued
/// messages yield a single delivery event; snapshot events are included only
/// on request.
pub fn enabled_events(
    k: &Configuration,
    ledger: &Ledger,
    bounds: &ExplorationBounds,
    include_snapshots: bool,
) -> Vec<Event> {
    let mut out = Vec::new();
    for (a, state) in &k.actors {
        if state.is_busy() {
            busy_actor_events(k, *a, bounds, &mut out);
        } else {
            idle_actor_events(k, ledger, *a, include_snapshots, &mut out);
        }
    }
    environment_events(k, ledger, bounds, &mut out);
    out.sort_by(|a, b| a.label().cmp(b.label()).then_with(|| a.cmp(b)));
    out.dedup();
    out
}
