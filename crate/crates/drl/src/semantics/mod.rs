//! Executable operational semantics: transition rules over configurations,
//! plus the ground-truth ledger that instruments every run.

pub(crate) mod enumerate;
mod error;
mod ledger;
pub mod rules;

pub use enumerate::{enabled_events, ExplorationBounds};
pub use error::RuleError;
pub use ledger::{Ledger, MessageRecord, RefobRecord, RefobState};

use crate::model::{Configuration, Event};

/// A configuration paired with its ground-truth ledger and a logical clock
/// that stamps one tick per applied event.
#[derive(Debug, Clone)]
pub struct Machine {
    pub config: Configuration,
    pub ledger: Ledger,
    pub clock: u64,
}

impl Machine {
    /// The initial system: one busy root actor holding a refob to one
    /// external actor, at time zero.
    pub fn new() -> Self {
        let config = Configuration::initial();
        let mut ledger = Ledger::new();
        let root = config.root_actor();
        for refob in config.knowledge(root).expect("root actor").activated() {
            ledger.refob_created(*refob, RefobState::Active, 0);
        }
        Machine {
            config,
            ledger,
            clock: 0,
        }
    }

    /// Applies one event, advancing the clock on success. A failed
    /// application leaves the machine unchanged.
    pub fn apply(&mut self, event: &Event) -> Result<(), RuleError> {
        let now = self.clock + 1;
        let k = &mut self.config;
        let ledger = &mut self.ledger;
        match event {
            Event::Spawn {
                token,
                parent,
                child,
            } => rules::spawn(k, ledger, now, token, *parent, *child),
            Event::Send {
                along,
                using,
                created,
                sender,
                recipient,
                targets,
            } => rules::send(
                k, ledger, now, along, using, created, *sender, *recipient, targets,
            ),
            Event::Receive {
                along,
                recipient,
                refs,
            } => rules::receive(k, ledger, now, along, *recipient, refs),
            Event::Idle { actor } => rules::idle(k, *actor),
            Event::SendInfo {
                using,
                created,
                sender,
            } => rules::send_info(k, ledger, now, using, created, *sender),
            Event::Info {
                along,
                created,
                recipient,
            } => rules::info(k, ledger, now, along, created, *recipient),
            Event::SendRelease {
                token,
                owner,
                target,
            } => rules::send_release(k, ledger, now, token, *owner, *target),
            Event::Release {
                token,
                owner,
                target,
            } => rules::release(k, ledger, now, token, *owner, *target),
            Event::Compaction {
                token,
                owner,
                actor,
            } => rules::compaction(k, ledger, now, token, *owner, *actor),
            Event::Snapshot { actor } => rules::snapshot(k, *actor),
            Event::In { recipient, refs } => rules::apply_in(k, ledger, now, *recipient, refs),
            Event::Out {
                along,
                external,
                refs,
            } => rules::apply_out(k, ledger, now, along, *external, refs),
            Event::ReleaseOut { token, external } => {
                rules::release_out(k, ledger, now, token, *external)
            }
            Event::InfoOut {
                along,
                created,
                external,
            } => rules::info_out(k, ledger, now, along, created, *external),
        }?;
        self.clock = now;
        Ok(())
    }

    /// The transitions enabled right now.
    pub fn enabled_events(
        &self,
        bounds: &ExplorationBounds,
        include_snapshots: bool,
    ) -> Vec<Event> {
        enabled_events(&self.config, &self.ledger, bounds, include_snapshots)
    }

    /// Stable fingerprint of the configuration (the ledger and clock are
    /// instrumentation, not system state).
    pub fn config_fingerprint(&self) -> String {
        crate::canon::fingerprint(&self.config)
    }
}

impl Default for Machine {
    fn default() -> Self {
        Self::new()
    }
}
