//! The snapshot store and termination-detection engine. Actors send their
//! knowledge-set snapshots to an aggregator, which keeps the most recent one
//! per actor and periodically scans for a finalized subset: a group whose
//! members can only be reached from inside the group and whose send and
//! receive counts all agree. Such a group has terminated and can be
//! collected.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::deduction::{derives, Query};
use crate::model::{ActorAddress, KnowledgeSet, Refob};

/// A snapshot plus the event index at which it was taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredSnapshot {
    pub knowledge: KnowledgeSet,
    pub taken_at: u64,
}

/// Key-value store mapping each actor to its most recent snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStore {
    entries: BTreeMap<ActorAddress, StoredSnapshot>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a snapshot; an entry is only replaced by one at least as
    /// recent.
    pub fn record(&mut self, actor: ActorAddress, knowledge: KnowledgeSet, taken_at: u64) {
        let newer = self
            .entries
            .get(&actor)
            .is_none_or(|old| taken_at >= old.taken_at);
        if newer {
            self.entries.insert(
                actor,
                StoredSnapshot {
                    knowledge,
                    taken_at,
                },
            );
        }
    }

    pub fn get(&self, actor: ActorAddress) -> Option<&StoredSnapshot> {
        self.entries.get(&actor)
    }

    pub fn remove(&mut self, actor: ActorAddress) -> Option<StoredSnapshot> {
        self.entries.remove(&actor)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActorAddress, &StoredSnapshot)> {
        self.entries.iter().map(|(a, s)| (*a, s))
    }

    /// The current entries as a snapshot set, ready for analysis.
    pub fn snapshot_set(&self) -> SnapshotSet {
        SnapshotSet {
            members: self
                .entries
                .iter()
                .map(|(a, s)| (*a, s.knowledge.clone()))
                .collect(),
        }
    }
}

/// A set of snapshots, at most one per actor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotSet {
    members: BTreeMap<ActorAddress, KnowledgeSet>,
}

impl SnapshotSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, actor: ActorAddress, knowledge: KnowledgeSet) {
        self.members.insert(actor, knowledge);
    }

    pub fn remove(&mut self, actor: ActorAddress) -> Option<KnowledgeSet> {
        self.members.remove(&actor)
    }

    pub fn contains(&self, actor: ActorAddress) -> bool {
        self.members.contains_key(&actor)
    }

    pub fn get(&self, actor: ActorAddress) -> Option<&KnowledgeSet> {
        self.members.get(&actor)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn actors(&self) -> impl Iterator<Item = ActorAddress> + '_ {
        self.members.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActorAddress, &KnowledgeSet)> {
        self.members.iter().map(|(a, phi)| (*a, phi))
    }

    /// Every refob any member knows something about.
    pub fn mentioned_refobs(&self) -> BTreeSet<Refob> {
        self.members
            .values()
            .flat_map(KnowledgeSet::mentioned_refobs)
            .collect()
    }

    /// Set-level derivation: a positive query holds when some member derives
    /// it. Unreleased additionally demands that no member has seen the
    /// release, since a stale created fact in one snapshot may coexist with
    /// the released fact in another.
    pub fn derives(&self, query: &Query) -> bool {
        match query {
            Query::Unreleased(x) => {
                self.members
                    .values()
                    .any(|phi| derives(phi, &Query::Created(*x)))
                    && !self.members.values().any(|phi| phi.has_released(x))
            }
            q => self.members.values().any(|phi| derives(phi, q)),
        }
    }

    fn unreleased_here(&self, x: &Refob) -> bool {
        self.derives(&Query::Unreleased(*x))
    }

    /// The refobs this set can tell are unreleased and whose target is a
    /// member — the edges that matter for closure and blocked-appearance.
    fn unreleased_inward_refobs(&self) -> Vec<Refob> {
        self.mentioned_refobs()
            .into_iter()
            .filter(|x| self.contains(x.target) && self.unreleased_here(x))
            .collect()
    }

    /// A refob passes when its owner's snapshot is present, still holds the
    /// refob activated, and its send count agrees with the target's receive
    /// count. Inward unreleased refobs failing this make the set unusable.
    fn refob_is_accounted(&self, x: &Refob) -> bool {
        let Some(owner) = self.get(x.owner) else {
            return false;
        };
        let target = self.get(x.target).expect("inward refob target is a member");
        owner.has_activated(x) && owner.sent_count(&x.token) == target.recv_count(&x.token)
    }
}

/// True when every unreleased refob the set knows about, targeting a member,
/// has its owner in the set with the refob still activated.
pub fn is_closed(q: &SnapshotSet) -> bool {
    q.unreleased_inward_refobs()
        .iter()
        .all(|x| q.get(x.owner).is_some_and(|phi| phi.has_activated(x)))
}

/// True when, judging by the snapshots alone, `b` has received every message
/// sent to it: every unreleased refob targeting `b` has its owner present
/// with send count equal to `b`'s receive count.
///
/// # Panics
/// If `b` is not a member of the set.
pub fn appears_blocked(q: &SnapshotSet, b: ActorAddress) -> bool {
    assert!(
        q.contains(b),
        "appears_blocked is defined for members of the set"
    );
    q.unreleased_inward_refobs()
        .iter()
        .filter(|x| x.target == b)
        .all(|x| q.refob_is_accounted(x))
}

/// A finalized set is closed and every member appears blocked: the group is
/// self-contained and quiescent as far as its snapshots can tell.
pub fn is_finalized(q: &SnapshotSet) -> bool {
    is_closed(q)
        && q.actors()
            .collect::<Vec<_>>()
            .into_iter()
            .all(|b| appears_blocked(q, b))
}

fn unaccounted_targets(q: &SnapshotSet) -> BTreeSet<ActorAddress> {
    q.unreleased_inward_refobs()
        .iter()
        .filter(|x| !q.refob_is_accounted(x))
        .map(|x| x.target)
        .collect()
}

/// Prunes the set to a finalized subset: repeatedly remove the target of
/// every unreleased refob that is missing its owner's snapshot, is no longer
/// activated there, or whose counts disagree, until no such refob remains.
pub fn maximum_finalized_subset(q: &SnapshotSet) -> SnapshotSet {
    let mut q = q.clone();
    loop {
        let doomed = unaccounted_targets(&q);
        if doomed.is_empty() {
            return q;
        }
        for b in doomed {
            q.remove(b);
        }
    }
}

/// Like [`maximum_finalized_subset`] but removing one target at a time in
/// the order given, used to check that the fixpoint does not depend on
/// removal order. `pick` selects an index into the current list of doomed
/// targets.
pub fn pruned_in_order(q: &SnapshotSet, mut pick: impl FnMut(usize) -> usize) -> SnapshotSet {
    let mut q = q.clone();
    loop {
        let doomed: Vec<ActorAddress> = unaccounted_targets(&q).into_iter().collect();
        if doomed.is_empty() {
            return q;
        }
        let choice = pick(doomed.len());
        q.remove(doomed[choice % doomed.len()]);
    }
}

/// Scans a store for terminated actors: the members of the pruned,
/// finalized subset of all current entries.
pub fn detect(store: &SnapshotStore) -> BTreeSet<ActorAddress> {
    maximum_finalized_subset(&store.snapshot_set())
        .actors()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fact, Token};

    fn addr(n: u32) -> ActorAddress {
        ActorAddress(n)
    }

    fn refob(creator: u32, seq: u32, owner: u32, target: u32) -> Refob {
        Refob::new(Token::id(addr(creator), seq), addr(owner), addr(target))
    }

    /// Snapshot of an actor holding one activated refob with a send count.
    fn owner_snapshot(x: &Refob, sent: u64) -> KnowledgeSet {
        let mut phi = KnowledgeSet::new();
        phi.insert(Fact::Activated(*x));
        if sent > 0 {
            phi.insert(Fact::SentCount(x.token, sent));
        }
        phi
    }

    /// Snapshot of an actor that knows `x` targets it, with a receive count.
    fn target_snapshot(x: &Refob, recv: u64) -> KnowledgeSet {
        let mut phi = KnowledgeSet::new();
        phi.insert(Fact::Created(*x));
        if recv > 0 {
            phi.insert(Fact::RecvCount(x.token, recv));
        }
        phi
    }

    #[test]
    fn set_derivation_lifts_member_derivation() {
        let x = refob(1, 0, 1, 3);
        let z = refob(1, 1, 2, 3);
        let mut creator = KnowledgeSet::new();
        creator.insert(Fact::CreatedUsing(x, z));
        let mut q = SnapshotSet::new();
        assert!(!q.derives(&Query::Created(z)), "empty set derives nothing");
        q.insert(addr(1), creator);
        assert!(q.derives(&Query::Created(z)));
        assert!(q.derives(&Query::Unreleased(z)));
    }

    #[test]
    fn release_seen_by_any_member_defeats_unreleased() {
        let x = refob(1, 0, 1, 3);
        let mut q = SnapshotSet::new();
        q.insert(addr(2), target_snapshot(&x, 0));
        assert!(q.derives(&Query::Unreleased(x)));
        let mut released = KnowledgeSet::new();
        released.insert(Fact::Released(x));
        q.insert(addr(3), released);
        assert!(q.derives(&Query::Created(x)));
        assert!(!q.derives(&Query::Unreleased(x)));
    }

    #[test]
    fn empty_set_is_closed_and_finalized() {
        let q = SnapshotSet::new();
        assert!(is_closed(&q));
        assert!(is_finalized(&q));
        assert!(maximum_finalized_subset(&q).is_empty());
    }

    #[test]
    fn missing_owner_snapshot_breaks_closure() {
        let x = refob(1, 0, 1, 3);
        let mut q = SnapshotSet::new();
        q.insert(addr(3), target_snapshot(&x, 0));
        assert!(!is_closed(&q));
        assert!(!is_finalized(&q));

        q.insert(addr(1), owner_snapshot(&x, 0));
        assert!(is_closed(&q));
        assert!(is_finalized(&q));
    }

    #[test]
    fn count_disagreement_looks_unblocked() {
        let x = refob(1, 0, 1, 3);
        let mut q = SnapshotSet::new();
        q.insert(addr(1), owner_snapshot(&x, 2));
        q.insert(addr(3), target_snapshot(&x, 2));
        assert!(appears_blocked(&q, addr(3)));
        assert!(is_finalized(&q));

        q.insert(addr(1), owner_snapshot(&x, 1));
        q.insert(addr(3), target_snapshot(&x, 0));
        assert!(is_closed(&q), "closure does not look at counts");
        assert!(!appears_blocked(&q, addr(3)));
        assert!(!is_finalized(&q));
    }

    #[test]
    fn member_with_no_inward_refobs_appears_blocked_vacuously() {
        let mut q = SnapshotSet::new();
        q.insert(addr(5), KnowledgeSet::new());
        assert!(appears_blocked(&q, addr(5)));
        assert!(is_finalized(&q));
    }

    #[test]
    #[should_panic(expected = "defined for members")]
    fn appears_blocked_rejects_non_members() {
        appears_blocked(&SnapshotSet::new(), addr(1));
    }

    #[test]
    fn pruning_keeps_finalized_sets_intact() {
        let x = refob(1, 0, 1, 3);
        let mut q = SnapshotSet::new();
        q.insert(addr(1), owner_snapshot(&x, 4));
        q.insert(addr(3), target_snapshot(&x, 4));
        assert_eq!(maximum_finalized_subset(&q), q);
    }

    #[test]
    fn pruning_cascades_along_missing_owners() {
        // A -> B -> C, with A's snapshot absent: B must go (x unaccounted),
        // then C (y's owner vanished from the set).
        let x = refob(1, 0, 1, 2);
        let y = refob(2, 0, 2, 3);
        let mut phi_b = target_snapshot(&x, 0);
        phi_b.insert(Fact::Activated(y));
        let mut q = SnapshotSet::new();
        q.insert(addr(2), phi_b);
        let mut phi_c = target_snapshot(&y, 0);
        phi_c.insert(Fact::Created(refob(3, 0, 3, 3)));
        q.insert(addr(3), phi_c);

        let pruned = maximum_finalized_subset(&q);
        assert!(
            pruned.is_empty(),
            "both members depend on missing evidence: {pruned:?}"
        );
    }

    #[test]
    fn pruning_removes_unblocked_member_but_keeps_rest() {
        // x: 1 -> 3 with agreeing counts, y: 2 -> 2 self-loop with a pending
        // message. Member 2 is pruned; 1 and 3 stay.
        let x = refob(1, 0, 1, 3);
        let y = refob(2, 0, 2, 2);
        let mut q = SnapshotSet::new();
        q.insert(addr(1), owner_snapshot(&x, 1));
        q.insert(addr(3), target_snapshot(&x, 1));
        let mut phi2 = owner_snapshot(&y, 3);
        phi2.insert(Fact::Created(y));
        phi2.insert(Fact::RecvCount(y.token, 2));
        q.insert(addr(2), phi2);

        assert!(!is_finalized(&q));
        let pruned = maximum_finalized_subset(&q);
        assert!(is_finalized(&pruned));
        assert_eq!(pruned.actors().collect::<Vec<_>>(), vec![addr(1), addr(3)]);
        // Pruning again changes nothing.
        assert_eq!(maximum_finalized_subset(&pruned), pruned);
    }

    #[test]
    fn single_step_pruning_reaches_the_same_fixpoint() {
        let x = refob(1, 0, 1, 2);
        let y = refob(2, 0, 2, 3);
        let z = refob(3, 0, 3, 1);
        let mut q = SnapshotSet::new();
        let mut phi1 = owner_snapshot(&x, 1);
        phi1.insert(Fact::Created(z));
        q.insert(addr(1), phi1);
        let mut phi2 = target_snapshot(&x, 0);
        phi2.insert(Fact::Activated(y));
        phi2.insert(Fact::SentCount(y.token, 2));
        q.insert(addr(2), phi2);
        let mut phi3 = target_snapshot(&y, 1);
        phi3.insert(Fact::Activated(z));
        q.insert(addr(3), phi3);

        let batch = maximum_finalized_subset(&q);
        for salt in 0..7u64 {
            let mut state = salt;
            let sequential = pruned_in_order(&q, |n| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 33) as usize % n.max(1)
            });
            assert_eq!(sequential, batch, "order with salt {salt} diverged");
        }
    }

    #[test]
    fn store_keeps_most_recent_snapshot() {
        let mut store = SnapshotStore::new();
        let x = refob(1, 0, 1, 1);
        store.record(addr(1), owner_snapshot(&x, 1), 10);
        store.record(addr(1), owner_snapshot(&x, 2), 5);
        assert_eq!(
            store.get(addr(1)).unwrap().knowledge.sent_count(&x.token),
            1
        );
        store.record(addr(1), owner_snapshot(&x, 3), 12);
        assert_eq!(
            store.get(addr(1)).unwrap().knowledge.sent_count(&x.token),
            3
        );
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn detect_on_empty_store_is_empty() {
        assert!(detect(&SnapshotStore::new()).is_empty());
    }

    #[test]
    fn detect_reports_quiescent_pair() {
        let x = refob(1, 0, 1, 3);
        let mut store = SnapshotStore::new();
        store.record(addr(1), owner_snapshot(&x, 4), 7);
        store.record(addr(3), target_snapshot(&x, 4), 9);
        assert_eq!(detect(&store), [addr(1), addr(3)].into());
    }
}
