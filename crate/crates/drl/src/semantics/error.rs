//! Rejection reasons for transition events.

use crate::model::{ActorAddress, Message, Token};

/// Why an event could not be applied to a configuration. Enumerated events
/// always apply cleanly, so any rejection signals a harness or replay bug.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("actor {0} does not exist in the configuration")]
    UnknownActor(ActorAddress),
    #[error("actor {0} is not busy")]
    NotBusy(ActorAddress),
    #[error("actor {0} is not idle")]
    NotIdle(ActorAddress),
    #[error("actor {0} is not a receptionist")]
    NotReceptionist(ActorAddress),
    #[error("actor {0} is not an external actor")]
    NotExternal(ActorAddress),
    #[error("address {0} has already been used")]
    StaleAddress(ActorAddress),
    #[error("token {0} has already been used")]
    StaleToken(Token),
    #[error("message {0:?} is not queued for {1}")]
    MessageNotQueued(Message, ActorAddress),
    #[error("required fact is missing: {0}")]
    MissingFact(String),
    #[error("refob {0} still has pending created-using facts")]
    PendingCreatedUsing(Token),
    #[error("release for {token} carries count {expected} but receiver has {actual}")]
    ReleaseCountMismatch {
        token: Token,
        expected: u64,
        actual: u64,
    },
    #[error("event parameter lists disagree in length")]
    ArityMismatch,
    #[error("in-message target {0} is internal but not a receptionist")]
    TargetNotReceptionist(ActorAddress),
    #[error("refob {0} is malformed for this rule: {1}")]
    MalformedRefob(Token, String),
}
