//! Ground-truth analyses computed from global knowledge of the instrumented
//! configuration: potential reachability, blocked and terminated actors, the
//! root set, chain search, and the local simple-garbage test. The distributed
//! protocol never sees this information; the harness uses it to judge what
//! the protocol reports.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deduction::derivably_created;
use crate::model::{ActorAddress, Configuration, KnowledgeSet, Message, Refob};
use crate::semantics::Ledger;

/// Rejected inputs for oracle judgements.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} is not an internal actor")]
    NotInternal(ActorAddress),
    #[error("refob {0} is not recorded in the ledger")]
    UnknownRefob(Refob),
    #[error("refob {0} is already released")]
    ReleasedRefob(Refob),
    #[error("refob {0} targets an external actor")]
    ExternalTarget(Refob),
}

/// The potential-acquaintance relation: one edge per unreleased refob, from
/// owner to target, including refobs still inside undelivered messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquaintanceGraph {
    nodes: BTreeSet<ActorAddress>,
    edges: BTreeMap<ActorAddress, BTreeSet<ActorAddress>>,
}

impl AcquaintanceGraph {
    pub fn new(k: &Configuration, ledger: &Ledger) -> Self {
        let nodes = k.actors.keys().chain(k.externals.iter()).copied().collect();
        let mut edges: BTreeMap<ActorAddress, BTreeSet<ActorAddress>> = BTreeMap::new();
        for record in ledger.unreleased_refobs() {
            edges
                .entry(record.refob.owner)
                .or_default()
                .insert(record.refob.target);
        }
        AcquaintanceGraph { nodes, edges }
    }

    pub fn nodes(&self) -> impl Iterator<Item = ActorAddress> + '_ {
        self.nodes.iter().copied()
    }

    pub fn successors(&self, a: ActorAddress) -> impl Iterator<Item = ActorAddress> + '_ {
        self.edges.get(&a).into_iter().flatten().copied()
    }

    /// Every node with a (possibly empty) path from some source.
    pub fn reachable_from(
        &self,
        sources: impl IntoIterator<Item = ActorAddress>,
    ) -> BTreeSet<ActorAddress> {
        let mut reached: BTreeSet<ActorAddress> = sources.into_iter().collect();
        let mut queue: VecDeque<ActorAddress> = reached.iter().copied().collect();
        while let Some(a) = queue.pop_front() {
            for b in self.successors(a) {
                if reached.insert(b) {
                    queue.push_back(b);
                }
            }
        }
        reached
    }
}

fn blocked_internal(k: &Configuration, a: ActorAddress) -> bool {
    k.state(a).is_some_and(|s| s.is_idle()) && !k.is_receptionist(a) && k.mailbox(a).is_empty()
}

/// True when an internal actor can take no step on its own: idle, not a
/// receptionist, and no undelivered messages of any kind.
pub fn is_blocked(k: &Configuration, a: ActorAddress) -> Result<bool, OracleError> {
    if !k.is_internal(a) {
        return Err(OracleError::NotInternal(a));
    }
    Ok(blocked_internal(k, a))
}

/// The internal actors that only blocked actors can potentially reach:
/// exactly those outside the forward closure of the unblocked actors
/// (external actors are never blocked).
pub fn terminated_set(k: &Configuration, ledger: &Ledger) -> BTreeSet<ActorAddress> {
    let graph = AcquaintanceGraph::new(k, ledger);
    let sources = k.externals.iter().copied().chain(
        k.actors
            .keys()
            .copied()
            .filter(|a| !blocked_internal(k, *a)),
    );
    let reached = graph.reachable_from(sources);
    k.actors
        .keys()
        .copied()
        .filter(|a| !reached.contains(a))
        .collect()
}

/// Receptionists plus internal targets of application messages still in
/// transit to external actors. These actors may be contacted by the outside
/// world and must never be reported as terminated.
pub fn root_set(k: &Configuration) -> BTreeSet<ActorAddress> {
    let mut roots = k.receptionists.clone();
    for (recipient, message) in k.messages() {
        if !k.is_external(recipient) {
            continue;
        }
        if let Message::App { refs, .. } = message {
            roots.extend(refs.iter().map(|r| r.target).filter(|t| k.is_internal(*t)));
        }
    }
    roots
}

/// Successor chain elements of `cur`: unreleased refobs with the same target
/// whose creation `cur`'s owner still remembers, or whose announcement is
/// still in transit to the target.
fn chain_links(k: &Configuration, candidates: &BTreeSet<Refob>, cur: &Refob) -> Vec<Refob> {
    let mut out = Vec::new();
    if let Some(phi) = k.knowledge(cur.owner) {
        for (using, created) in phi.created_using() {
            if using == cur && candidates.contains(created) {
                out.push(*created);
            }
        }
    }
    for m in k.mailbox(cur.target) {
        if let Message::Info { along, created } = m {
            if *along == cur.token && candidates.contains(created) {
                out.push(*created);
            }
        }
    }
    out
}

/// Searches for a chain to `x`: a sequence of unreleased refobs sharing
/// `x`'s target, starting from one the target knows was created, where each
/// link is remembered by its owner or announced in a message still in
/// transit, and ending at `x` itself.
pub fn find_chain(
    k: &Configuration,
    ledger: &Ledger,
    x: &Refob,
) -> Result<Option<Vec<Refob>>, OracleError> {
    match ledger.refob(&x.token) {
        None => return Err(OracleError::UnknownRefob(*x)),
        Some(record) if record.refob != *x => return Err(OracleError::UnknownRefob(*x)),
        Some(record) if record.is_released() => return Err(OracleError::ReleasedRefob(*x)),
        Some(_) => {}
    }
    let target = x.target;
    if !k.is_internal(target) {
        return Err(OracleError::ExternalTarget(*x));
    }

    let candidates: BTreeSet<Refob> = ledger
        .unreleased_refobs()
        .map(|record| record.refob)
        .filter(|r| r.target == target)
        .collect();
    let phi = k.knowledge(target).expect("internal actor");
    let roots: Vec<Refob> = derivably_created(phi)
        .filter(|r| candidates.contains(r))
        .collect();

    let mut parent: BTreeMap<Refob, Option<Refob>> = roots.iter().map(|r| (*r, None)).collect();
    let mut queue: VecDeque<Refob> = roots.into_iter().collect();
    while let Some(cur) = queue.pop_front() {
        if cur == *x {
            let mut chain = vec![cur];
            let mut up = parent[&cur];
            while let Some(prev) = up {
                chain.push(prev);
                up = parent[&prev];
            }
            chain.reverse();
            return Ok(Some(chain));
        }
        for next in chain_links(k, &candidates, &cur) {
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some(cur));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// A refob (or rooted actor) whose required chain is missing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainViolation {
    pub target: ActorAddress,
    pub refob: Option<Refob>,
    pub detail: String,
}

/// Verifies the chain invariant for every internal actor: a non-rooted
/// actor must have a chain to each unreleased refob targeting it, and a
/// rooted actor must have a chain to at least one externally owned refob
/// targeting it. Returns every counterexample found.
pub fn check_chain_lemma(k: &Configuration, ledger: &Ledger) -> Vec<ChainViolation> {
    let roots = root_set(k);
    let mut violations = Vec::new();
    for b in k.actors.keys() {
        let incoming: Vec<Refob> = ledger
            .unreleased_refobs()
            .map(|record| record.refob)
            .filter(|r| r.target == *b)
            .collect();
        if roots.contains(b) {
            let mut external_owned = incoming
                .iter()
                .filter(|r| k.is_external(r.owner))
                .peekable();
            if external_owned.peek().is_none() {
                violations.push(ChainViolation {
                    target: *b,
                    refob: None,
                    detail: "rooted actor has no externally owned refob at all".into(),
                });
                continue;
            }
            let witnessed = external_owned.any(|r| matches!(find_chain(k, ledger, r), Ok(Some(_))));
            if !witnessed {
                violations.push(ChainViolation {
                    target: *b,
                    refob: None,
                    detail: "no externally owned refob targeting this rooted actor has a chain"
                        .into(),
                });
            }
        } else {
            for r in incoming {
                if !matches!(find_chain(k, ledger, &r), Ok(Some(_))) {
                    violations.push(ChainViolation {
                        target: *b,
                        refob: Some(r),
                        detail: "unreleased refob to a non-rooted actor has no chain".into(),
                    });
                }
            }
        }
    }
    violations
}

/// Local test an idle actor can run on its own knowledge set: true when
/// every refob it can tell was created targeting itself, and not yet
/// released, is its own, still activated, with matching send and receive
/// counts. Activation matters: a deactivated self-refob may have a release
/// notice in flight, which the counts cannot see. A true verdict means the
/// actor is garbage on the strength of its own knowledge alone.
pub fn is_simple_garbage_local(b: ActorAddress, phi: &KnowledgeSet) -> bool {
    derivably_created(phi)
        .filter(|r| r.target == b && !phi.has_released(r))
        .all(|r| {
            r.owner == b
                && phi.has_activated(&r)
                && phi.sent_count(&r.token) == phi.recv_count(&r.token)
        })
}
