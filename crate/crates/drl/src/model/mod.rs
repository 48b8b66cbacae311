//! Core value types of the protocol: identifiers, facts, knowledge sets,
//! messages, configurations, and transition events.

mod config;
mod event;
mod ids;
mod knowledge;
mod message;

pub use config::{ActorState, Configuration, Mode, NameSupply};
pub use event::Event;
pub use ids::{ActorAddress, ParseIdError, Refob, Token};
pub use knowledge::{Fact, KnowledgeSet};
pub use message::Message;

/// Builds the initial configuration: a single busy actor that knows one
/// external acquaintance and itself.
pub fn initial_configuration() -> Configuration {
    Configuration::initial()
}
