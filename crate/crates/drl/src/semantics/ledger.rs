//! Ground-truth instrumentation maintained alongside the configuration.
//!
//! The ledger records the true lifecycle of every refob and every message so
//! that oracles can decide reachability and check count arithmetic without
//! trusting the protocol's own bookkeeping. It observes transitions; it never
//! influences them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ActorAddress, Message, Refob, Token};

/// Lifecycle states of a refob, in order. The ledger only ever advances.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefobState {
    /// Created but not yet delivered to its owner.
    Pending,
    /// Held by its owner, usable for sends.
    Active,
    /// Deactivated by its owner; a release may be in flight.
    Inactive,
    /// The target has processed the release.
    Released,
}

/// Everything the ledger knows about one refob.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefobRecord {
    pub refob: Refob,
    pub state: RefobState,
    pub created_at: u64,
    pub activated_at: Option<u64>,
    pub deactivated_at: Option<u64>,
    pub released_at: Option<u64>,
    /// Derived send count at the owner after each change, as (time, value).
    pub sent_history: Vec<(u64, u64)>,
    /// Derived receive count at the target after each change, as (time, value).
    pub recv_history: Vec<(u64, u64)>,
}

impl RefobRecord {
    fn new(refob: Refob, state: RefobState, now: u64) -> Self {
        RefobRecord {
            refob,
            state,
            created_at: now,
            activated_at: (state == RefobState::Active).then_some(now),
            deactivated_at: None,
            released_at: None,
            sent_history: Vec::new(),
            recv_history: Vec::new(),
        }
    }

    pub fn is_released(&self) -> bool {
        self.state == RefobState::Released
    }

    /// Derived send count at the owner as of time `t`.
    pub fn sent_count_at(&self, t: u64) -> u64 {
        value_at(&self.sent_history, t)
    }

    /// Derived receive count at the target as of time `t`.
    pub fn recv_count_at(&self, t: u64) -> u64 {
        value_at(&self.recv_history, t)
    }
}

fn value_at(history: &[(u64, u64)], t: u64) -> u64 {
    history
        .iter()
        .take_while(|(when, _)| *when <= t)
        .last()
        .map(|(_, v)| *v)
        .unwrap_or(0)
}

/// One message's journey from send to delivery.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MessageRecord {
    pub recipient: ActorAddress,
    pub message: Message,
    pub sent_at: u64,
    pub delivered_at: Option<u64>,
}

impl MessageRecord {
    pub fn in_transit(&self) -> bool {
        self.delivered_at.is_none()
    }

    /// Whether the message was undelivered throughout the moment `t`.
    pub fn in_transit_at(&self, t: u64) -> bool {
        self.sent_at <= t && self.delivered_at.is_none_or(|d| d > t)
    }
}

/// The run-wide ground truth: every refob and message ever observed.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Ledger {
    refobs: BTreeMap<Token, RefobRecord>,
    messages: Vec<MessageRecord>,
    in_events: u64,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a refob the moment it comes into existence.
    pub fn refob_created(&mut self, refob: Refob, state: RefobState, now: u64) {
        let prior = self
            .refobs
            .insert(refob.token, RefobRecord::new(refob, state, now));
        debug_assert!(
            prior.is_none(),
            "token {} was introduced twice",
            refob.token
        );
    }

    pub fn refob(&self, token: &Token) -> Option<&RefobRecord> {
        self.refobs.get(token)
    }

    pub fn refobs(&self) -> impl Iterator<Item = &RefobRecord> {
        self.refobs.values()
    }

    /// Refobs whose release the target has not yet processed. These are the
    /// edges of the potential-acquaintance graph.
    pub fn unreleased_refobs(&self) -> impl Iterator<Item = &RefobRecord> {
        self.refobs.values().filter(|r| !r.is_released())
    }

    pub fn advance_refob(&mut self, token: &Token, to: RefobState, now: u64) {
        let record = self
            .refobs
            .get_mut(token)
            .unwrap_or_else(|| panic!("unknown refob token {token}"));
        debug_assert!(
            record.state < to,
            "refob {} lifecycle must advance monotonically ({:?} -> {:?})",
            token,
            record.state,
            to
        );
        record.state = to;
        match to {
            RefobState::Pending => {}
            RefobState::Active => record.activated_at = Some(now),
            RefobState::Inactive => record.deactivated_at = Some(now),
            RefobState::Released => record.released_at = Some(now),
        }
    }

    /// Records the owner's derived send count after a change.
    pub fn note_sent_count(&mut self, token: &Token, value: u64, now: u64) {
        if let Some(record) = self.refobs.get_mut(token) {
            record.sent_history.push((now, value));
        }
    }

    /// Records the target's derived receive count after a change.
    pub fn note_recv_count(&mut self, token: &Token, value: u64, now: u64) {
        if let Some(record) = self.refobs.get_mut(token) {
            record.recv_history.push((now, value));
        }
    }

    pub fn message_sent(&mut self, recipient: ActorAddress, message: Message, now: u64) {
        self.messages.push(MessageRecord {
            recipient,
            message,
            sent_at: now,
            delivered_at: None,
        });
    }

    /// Marks the oldest matching undelivered record as delivered. Identical
    /// messages are interchangeable, so oldest-first matching is sound.
    pub fn message_delivered(&mut self, recipient: ActorAddress, message: &Message, now: u64) {
        let record = self
            .messages
            .iter_mut()
            .find(|r| r.in_transit() && r.recipient == recipient && r.message == *message)
            .unwrap_or_else(|| panic!("no undelivered record for message to {recipient}"));
        record.delivered_at = Some(now);
    }

    pub fn messages(&self) -> &[MessageRecord] {
        &self.messages
    }

    pub fn in_transit_messages(&self) -> impl Iterator<Item = &MessageRecord> {
        self.messages.iter().filter(|r| r.in_transit())
    }

    pub fn note_in_event(&mut self) {
        self.in_events += 1;
    }

    /// How many environment injections the run has performed.
    pub fn in_events(&self) -> u64 {
        self.in_events
    }

    /// Messages sent along `token` at or before `t1` and still undelivered at
    /// the end of `t2`.
    pub fn in_flight_along(&self, token: &Token, t1: u64, t2: u64) -> usize {
        self.messages
            .iter()
            .filter(|r| {
                r.message.along() == *token
                    && r.sent_at <= t1
                    && r.delivered_at.is_none_or(|d| d > t2)
            })
            .count()
    }
}
