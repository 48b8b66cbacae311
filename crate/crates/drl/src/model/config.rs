//! Global configurations: actors, undelivered messages, receptionists, and
//! external actors, plus the name supply that keeps identifiers fresh.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ids::{ActorAddress, Refob, Token};
use super::knowledge::{Fact, KnowledgeSet};
use super::message::Message;

/// Whether an actor is processing a message or waiting for one.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Busy,
    Idle,
}

/// The local state of one internal actor.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ActorState {
    pub mode: Mode,
    pub knowledge: KnowledgeSet,
}

impl ActorState {
    pub fn busy(knowledge: KnowledgeSet) -> Self {
        ActorState {
            mode: Mode::Busy,
            knowledge,
        }
    }

    pub fn is_busy(&self) -> bool {
        self.mode == Mode::Busy
    }

    pub fn is_idle(&self) -> bool {
        self.mode == Mode::Idle
    }
}

/// Allocator for fresh addresses and tokens.
///
/// Addresses are numbered globally; tokens are numbered per creator. The
/// supply travels with the configuration so that replayed events can verify
/// freshness and so equal configurations enumerate identical successor events.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct NameSupply {
    next_address: u32,
    next_token: BTreeMap<ActorAddress, u32>,
}

impl NameSupply {
    /// The address the next allocation will return.
    pub fn peek_address(&self) -> ActorAddress {
        ActorAddress(self.next_address)
    }

    pub fn fresh_address(&mut self) -> ActorAddress {
        let a = ActorAddress(self.next_address);
        self.next_address += 1;
        a
    }

    /// The token the next allocation for `creator` will return.
    pub fn peek_token(&self, creator: ActorAddress) -> Token {
        Token::id(creator, self.next_token.get(&creator).copied().unwrap_or(0))
    }

    /// The token `offset` allocations ahead for `creator`.
    pub fn peek_token_at(&self, creator: ActorAddress, offset: u32) -> Token {
        let base = self.next_token.get(&creator).copied().unwrap_or(0);
        Token::id(creator, base + offset)
    }

    pub fn fresh_token(&mut self, creator: ActorAddress) -> Token {
        let seq = self.next_token.entry(creator).or_insert(0);
        let t = Token::id(creator, *seq);
        *seq += 1;
        t
    }

    /// Whether the address has never been allocated.
    pub fn address_is_fresh(&self, address: ActorAddress) -> bool {
        address.0 >= self.next_address
    }

    /// Whether the token has never been allocated.
    pub fn token_is_fresh(&self, token: &Token) -> bool {
        match token {
            Token::External => false,
            Token::Id { creator, seq } => {
                *seq >= self.next_token.get(creator).copied().unwrap_or(0)
            }
        }
    }

    /// Marks the address used, along with every lower-numbered address.
    pub fn claim_address(&mut self, address: ActorAddress) {
        self.next_address = self.next_address.max(address.0 + 1);
    }

    /// Marks the token used, along with earlier sequence numbers of the same
    /// creator.
    pub fn claim_token(&mut self, token: &Token) {
        if let Token::Id { creator, seq } = token {
            let next = self.next_token.entry(*creator).or_insert(0);
            *next = (*next).max(seq + 1);
        }
    }
}

/// A complete system state: internal actors, undelivered messages,
/// receptionists, and known external actors.
///
/// Mailboxes are kept as sorted lists representing multisets; delivery picks
/// any element by value, so equal multisets compare, hash, and serialize
/// identically no matter the arrival order. Empty mailboxes are removed so
/// that equal configurations compare equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Configuration {
    pub actors: BTreeMap<ActorAddress, ActorState>,
    pub mailboxes: BTreeMap<ActorAddress, Vec<Message>>,
    pub receptionists: BTreeSet<ActorAddress>,
    pub externals: BTreeSet<ActorAddress>,
    pub names: NameSupply,
}

impl Configuration {
    /// The initial configuration: one busy internal actor holding a refob to
    /// a single external actor plus its own self-refob.
    pub fn initial() -> Self {
        let mut names = NameSupply::default();
        let root = names.fresh_address();
        let external = names.fresh_address();
        let to_external = Refob::new(names.fresh_token(root), root, external);
        let self_ref = Refob::new(names.fresh_token(root), root, root);

        let mut knowledge = KnowledgeSet::new();
        knowledge.insert(Fact::Activated(to_external));
        knowledge.insert(Fact::Created(self_ref));
        knowledge.insert(Fact::Activated(self_ref));

        Configuration {
            actors: BTreeMap::from([(root, ActorState::busy(knowledge))]),
            mailboxes: BTreeMap::new(),
            receptionists: BTreeSet::new(),
            externals: BTreeSet::from([external]),
            names,
        }
    }

    /// The first internal actor of the initial configuration.
    pub fn root_actor(&self) -> ActorAddress {
        *self
            .actors
            .keys()
            .next()
            .expect("configuration has no actors")
    }

    pub fn is_internal(&self, a: ActorAddress) -> bool {
        self.actors.contains_key(&a)
    }

    pub fn is_external(&self, a: ActorAddress) -> bool {
        self.externals.contains(&a)
    }

    pub fn is_receptionist(&self, a: ActorAddress) -> bool {
        self.receptionists.contains(&a)
    }

    pub fn state(&self, a: ActorAddress) -> Option<&ActorState> {
        self.actors.get(&a)
    }

    pub fn state_mut(&mut self, a: ActorAddress) -> Option<&mut ActorState> {
        self.actors.get_mut(&a)
    }

    pub fn knowledge(&self, a: ActorAddress) -> Option<&KnowledgeSet> {
        self.actors.get(&a).map(|s| &s.knowledge)
    }

    /// Undelivered messages addressed to `a`.
    pub fn mailbox(&self, a: ActorAddress) -> &[Message] {
        self.mailboxes.get(&a).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn push_message(&mut self, to: ActorAddress, message: Message) {
        let queue = self.mailboxes.entry(to).or_default();
        let at = queue.partition_point(|m| m <= &message);
        queue.insert(at, message);
    }

    /// Removes one instance equal to `message`; returns whether one existed.
    pub fn remove_message(&mut self, to: ActorAddress, message: &Message) -> bool {
        let Some(queue) = self.mailboxes.get_mut(&to) else {
            return false;
        };
        let Some(pos) = queue.iter().position(|m| m == message) else {
            return false;
        };
        queue.remove(pos);
        if queue.is_empty() {
            self.mailboxes.remove(&to);
        }
        true
    }

    /// All undelivered messages with their recipients.
    pub fn messages(&self) -> impl Iterator<Item = (ActorAddress, &Message)> {
        self.mailboxes
            .iter()
            .flat_map(|(to, queue)| queue.iter().map(move |m| (*to, m)))
    }

    /// Structural well-formedness; returns a description of each breach.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for r in &self.receptionists {
            if !self.is_internal(*r) {
                problems.push(format!("receptionist {r} is not an internal actor"));
            }
        }
        for e in &self.externals {
            if self.is_internal(*e) {
                problems.push(format!("external actor {e} is also internal"));
            }
        }
        for (to, queue) in &self.mailboxes {
            if !self.is_internal(*to) && !self.is_external(*to) {
                problems.push(format!("mailbox for unknown actor {to}"));
            }
            if queue.is_empty() {
                problems.push(format!("empty mailbox entry for {to}"));
            }
            for m in queue {
                if let Message::App { refs, .. } = m {
                    for r in refs {
                        if r.owner != *to {
                            problems.push(format!(
                                "application message to {to} carries refob {r} owned by another actor"
                            ));
                        }
                    }
                }
            }
        }
        for (a, state) in &self.actors {
            for (x, z) in state.knowledge.created_using() {
                if x.target != z.target {
                    problems.push(format!(
                        "created-using fact at {a} pairs refobs {x} and {z} with different targets"
                    ));
                }
            }
        }
        for a in self.actors.keys() {
            if !self.names.address_is_fresh(*a) {
                continue;
            }
            problems.push(format!("actor {a} was never allocated by the name supply"));
        }
        problems
    }
}
