//! Identifiers: actor addresses, reference tokens, and refobs.
//!
//! Addresses and tokens are allocated from a [`NameSupply`](super::NameSupply)
//! so that a run never reuses a name. Both serialize as short strings
//! (`"A3"`, `"A3.7"`) which keeps traces compact and lets them serve as JSON
//! map keys.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Unique address of an actor, internal or external.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorAddress(pub u32);

impl fmt::Display for ActorAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

impl fmt::Debug for ActorAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ActorAddress {
    type Err = ParseIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix('A').ok_or_else(|| ParseIdError::new(s))?;
        let n = digits.parse().map_err(|_| ParseIdError::new(s))?;
        Ok(ActorAddress(n))
    }
}

impl Serialize for ActorAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActorAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Token naming a reference. Tokens created by an actor pair the creator's
/// address with a per-creator sequence number; messages injected by the
/// environment travel along the distinguished external token.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    /// The external token: tags application messages injected from outside.
    External,
    /// A token minted by `creator`; `seq` increases per creator.
    Id { creator: ActorAddress, seq: u32 },
}

impl Token {
    pub fn id(creator: ActorAddress, seq: u32) -> Self {
        Token::Id { creator, seq }
    }

    pub fn is_external(&self) -> bool {
        matches!(self, Token::External)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::External => write!(f, "ext"),
            Token::Id { creator, seq } => write!(f, "{creator}.{seq}"),
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Token {
    type Err = ParseIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ext" {
            return Ok(Token::External);
        }
        let (creator, seq) = s.split_once('.').ok_or_else(|| ParseIdError::new(s))?;
        Ok(Token::Id {
            creator: creator.parse()?,
            seq: seq.parse().map_err(|_| ParseIdError::new(s))?,
        })
    }
}

impl Serialize for Token {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A reference object: the unit of acquaintance tracked by the protocol.
///
/// `owner` is the only actor entitled to send along the refob and `target`
/// is the recipient of those messages. A token never names two distinct
/// (owner, target) pairs within one run.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Refob {
    pub token: Token,
    pub owner: ActorAddress,
    pub target: ActorAddress,
}

impl Refob {
    pub fn new(token: Token, owner: ActorAddress, target: ActorAddress) -> Self {
        Refob {
            token,
            owner,
            target,
        }
    }
}

impl fmt::Display for Refob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}->{}", self.token, self.owner, self.target)
    }
}

impl fmt::Debug for Refob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Error parsing an address or token from its string form.
#[derive(Debug, thiserror::Error)]
#[error("malformed identifier: {text:?}")]
pub struct ParseIdError {
    text: String,
}

impl ParseIdError {
    fn new(text: &str) -> Self {
        ParseIdError {
            text: text.to_owned(),
        }
    }
}
