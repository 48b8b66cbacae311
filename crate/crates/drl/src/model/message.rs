//! Messages exchanged between actors.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ids::{Refob, Token};

/// A message in transit. Every message travels along a token; application
/// messages injected by the environment travel along the external token.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Message {
    /// Application payload carrying refobs the recipient will own.
    App { along: Token, refs: BTreeSet<Refob> },
    /// Tells the target that `created` exists, sent along the refob used to
    /// create it.
    Info { along: Token, created: Refob },
    /// Tells the target its refob is deactivated; `count` is the number of
    /// messages the owner sent along it in total.
    Release { token: Token, count: u64 },
}

impl Message {
    /// The token the message travels along.
    pub fn along(&self) -> Token {
        match self {
            Message::App { along, .. } => *along,
            Message::Info { along, .. } => *along,
            Message::Release { token, .. } => *token,
        }
    }

    /// Refobs contained in the payload, if any.
    pub fn contained_refobs(&self) -> Vec<Refob> {
        match self {
            Message::App { refs, .. } => refs.iter().copied().collect(),
            Message::Info { created, .. } => vec![*created],
            Message::Release { .. } => Vec::new(),
        }
    }

    pub fn is_app(&self) -> bool {
        matches!(self, Message::App { .. })
    }
}
