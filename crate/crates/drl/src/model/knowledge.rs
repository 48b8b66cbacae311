//! Facts and per-actor knowledge sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ids::{Refob, Token};

/// A single fact an actor can hold about a refob or token.
///
/// Send and receive counts are kept at most once per token; inserting a new
/// count fact replaces the old one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Fact {
    /// The target knows the refob was created.
    Created(Refob),
    /// The target has processed the release of the refob.
    Released(Refob),
    /// The creator made the second refob using the first; both share a target.
    CreatedUsing(Refob, Refob),
    /// The owner holds the refob and may send along it.
    Activated(Refob),
    /// Number of messages the owner has sent along the token.
    SentCount(Token, u64),
    /// Number of messages the target has received along the token.
    RecvCount(Token, u64),
}

/// An actor's local knowledge: the set of facts it currently holds.
///
/// Counts are stored structurally as token-indexed maps, which enforces the
/// invariant that at most one count fact per token exists. A token absent
/// from a map carries the default count of zero when queried through
/// [`sent_count`](KnowledgeSet::sent_count) or
/// [`recv_count`](KnowledgeSet::recv_count).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct KnowledgeSet {
    created: BTreeSet<Refob>,
    released: BTreeSet<Refob>,
    created_using: BTreeSet<(Refob, Refob)>,
    activated: BTreeSet<Refob>,
    sent: BTreeMap<Token, u64>,
    recv: BTreeMap<Token, u64>,
}

impl KnowledgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.created.is_empty()
            && self.released.is_empty()
            && self.created_using.is_empty()
            && self.activated.is_empty()
            && self.sent.is_empty()
            && self.recv.is_empty()
    }

    /// Inserts a fact. Count facts replace any existing count for the token.
    pub fn insert(&mut self, fact: Fact) {
        match fact {
            Fact::Created(r) => {
                self.created.insert(r);
            }
            Fact::Released(r) => {
                self.released.insert(r);
            }
            Fact::CreatedUsing(x, z) => {
                debug_assert_eq!(x.target, z.target, "created-using pair must share a target");
                self.created_using.insert((x, z));
            }
            Fact::Activated(r) => {
                self.activated.insert(r);
            }
            Fact::SentCount(t, n) => {
                self.sent.insert(t, n);
            }
            Fact::RecvCount(t, n) => {
                self.recv.insert(t, n);
            }
        }
    }

    /// Removes a fact if literally present; returns whether it was there.
    /// A count fact only matches when its value agrees.
    pub fn remove(&mut self, fact: &Fact) -> bool {
        match fact {
            Fact::Created(r) => self.created.remove(r),
            Fact::Released(r) => self.released.remove(r),
            Fact::CreatedUsing(x, z) => self.created_using.remove(&(*x, *z)),
            Fact::Activated(r) => self.activated.remove(r),
            Fact::SentCount(t, n) => {
                if self.sent.get(t) == Some(n) {
                    self.sent.remove(t);
                    true
                } else {
                    false
                }
            }
            Fact::RecvCount(t, n) => {
                if self.recv.get(t) == Some(n) {
                    self.recv.remove(t);
                    true
                } else {
                    false
                }
            }
        }
    }

    /// Literal membership of a fact, without applying any derivation.
    pub fn contains(&self, fact: &Fact) -> bool {
        match fact {
            Fact::Created(r) => self.created.contains(r),
            Fact::Released(r) => self.released.contains(r),
            Fact::CreatedUsing(x, z) => self.created_using.contains(&(*x, *z)),
            Fact::Activated(r) => self.activated.contains(r),
            Fact::SentCount(t, n) => self.sent.get(t) == Some(n),
            Fact::RecvCount(t, n) => self.recv.get(t) == Some(n),
        }
    }

    /// All facts in a canonical order.
    pub fn facts(&self) -> Vec<Fact> {
        let mut out = Vec::new();
        out.extend(self.created.iter().map(|r| Fact::Created(*r)));
        out.extend(self.released.iter().map(|r| Fact::Released(*r)));
        out.extend(
            self.created_using
                .iter()
                .map(|(x, z)| Fact::CreatedUsing(*x, *z)),
        );
        out.extend(self.activated.iter().map(|r| Fact::Activated(*r)));
        out.extend(self.sent.iter().map(|(t, n)| Fact::SentCount(*t, *n)));
        out.extend(self.recv.iter().map(|(t, n)| Fact::RecvCount(*t, *n)));
        out
    }

    pub fn created(&self) -> impl Iterator<Item = &Refob> {
        self.created.iter()
    }

    pub fn released(&self) -> impl Iterator<Item = &Refob> {
        self.released.iter()
    }

    pub fn created_using(&self) -> impl Iterator<Item = &(Refob, Refob)> {
        self.created_using.iter()
    }

    pub fn activated(&self) -> impl Iterator<Item = &Refob> {
        self.activated.iter()
    }

    pub fn has_activated(&self, refob: &Refob) -> bool {
        self.activated.contains(refob)
    }

    pub fn has_released(&self, refob: &Refob) -> bool {
        self.released.contains(refob)
    }

    /// Whether any fact records a refob created using `using`.
    pub fn creates_anything_using(&self, using: &Refob) -> bool {
        self.created_using.iter().any(|(x, _)| x == using)
    }

    /// Send count derived for the token: the stored fact or the zero default.
    pub fn sent_count(&self, token: &Token) -> u64 {
        self.sent.get(token).copied().unwrap_or(0)
    }

    /// Receive count derived for the token: the stored fact or the zero default.
    pub fn recv_count(&self, token: &Token) -> u64 {
        self.recv.get(token).copied().unwrap_or(0)
    }

    /// Whether a send-count fact is literally stored for the token.
    pub fn has_sent_fact(&self, token: &Token) -> bool {
        self.sent.contains_key(token)
    }

    /// Whether a receive-count fact is literally stored for the token.
    pub fn has_recv_fact(&self, token: &Token) -> bool {
        self.recv.contains_key(token)
    }

    /// Replaces the send count with its successor, starting from the default.
    pub fn inc_sent(&mut self, token: Token) -> u64 {
        let n = self.sent_count(&token) + 1;
        self.sent.insert(token, n);
        n
    }

    /// Replaces the receive count with its successor, starting from the default.
    pub fn inc_recv(&mut self, token: Token) -> u64 {
        let n = self.recv_count(&token) + 1;
        self.recv.insert(token, n);
        n
    }

    /// Drops the stored send-count fact for the token, if any.
    pub fn clear_sent(&mut self, token: &Token) {
        self.sent.remove(token);
    }

    /// Drops the stored receive-count fact for the token, if any.
    pub fn clear_recv(&mut self, token: &Token) {
        self.recv.remove(token);
    }

    /// Every refob appearing in a refob-shaped fact.
    pub fn mentioned_refobs(&self) -> BTreeSet<Refob> {
        let mut out = BTreeSet::new();
        out.extend(self.created.iter().copied());
        out.extend(self.released.iter().copied());
        out.extend(self.activated.iter().copied());
        for (x, z) in &self.created_using {
            out.insert(*x);
            out.insert(*z);
        }
        out
    }

    /// Removes every fact that mentions the refob or its token. Used only by
    /// fault injection and tests; protocol rules remove facts individually.
    pub fn purge_refob(&mut self, refob: &Refob) {
        self.created.remove(refob);
        self.released.remove(refob);
        self.activated.remove(refob);
        self.created_using.retain(|(x, z)| x != refob && z != refob);
        self.sent.remove(&refob.token);
        self.recv.remove(&refob.token);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ids::ActorAddress;

    fn refob(seq: u32, owner: u32, target: u32) -> Refob {
        Refob::new(
            Token::id(ActorAddress(owner), seq),
            ActorAddress(owner),
            ActorAddress(target),
        )
    }

    #[test]
    fn counts_default_to_zero() {
        let ks = KnowledgeSet::new();
        let t = Token::id(ActorAddress(0), 0);
        assert_eq!(ks.sent_count(&t), 0);
        assert_eq!(ks.recv_count(&t), 0);
        assert!(!ks.has_sent_fact(&t));
    }

    #[test]
    fn inc_sent_starts_at_one_and_replaces() {
        let mut ks = KnowledgeSet::new();
        let t = Token::id(ActorAddress(0), 0);
        assert_eq!(ks.inc_sent(t), 1);
        assert_eq!(ks.inc_sent(t), 2);
        assert_eq!(ks.sent_count(&t), 2);
        // The old fact is gone: only the current value matches literally.
        assert!(!ks.contains(&Fact::SentCount(t, 1)));
        assert!(ks.contains(&Fact::SentCount(t, 2)));
    }

    #[test]
    fn count_fact_removal_requires_matching_value() {
        let mut ks = KnowledgeSet::new();
        let t = Token::id(ActorAddress(0), 0);
        ks.insert(Fact::RecvCount(t, 3));
        assert!(!ks.remove(&Fact::RecvCount(t, 2)));
        assert!(ks.remove(&Fact::RecvCount(t, 3)));
        assert_eq!(ks.recv_count(&t), 0);
    }

    #[test]
    fn mentioned_refobs_covers_created_using_pairs() {
        let mut ks = KnowledgeSet::new();
        let x = refob(0, 1, 3);
        let z = refob(1, 2, 3);
        ks.insert(Fact::CreatedUsing(x, z));
        let mentioned = ks.mentioned_refobs();
        assert!(mentioned.contains(&x));
        assert!(mentioned.contains(&z));
    }
}
