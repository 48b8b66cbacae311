//! Hand-scripted end-to-end walkthroughs with pinned expected outcomes.
//!
//! Each scenario drives a fixed event sequence and records named checks, so
//! a regression pinpoints exactly which guarantee broke. They double as
//! executable documentation of the protocol's intended behavior.

use std::collections::BTreeSet;
use std::fmt::Debug;

use crate::aggregator::{self, SnapshotStore};
use crate::model::{ActorAddress, Event, Fact, KnowledgeSet, Message, Refob, Token};
use crate::oracle;
use crate::semantics::Machine;

use super::checks;
use super::report::{ScenarioCheck, ScenarioReport};

/// Applies a fixed script, converting failures into failed checks instead of
/// panics so reports stay machine-readable.
struct Script {
    machine: Machine,
    name: &'static str,
    checks: Vec<ScenarioCheck>,
    events: u64,
    wrecked: bool,
}

impl Script {
    fn new(name: &'static str) -> Self {
        Script {
            machine: Machine::new(),
            name,
            checks: Vec::new(),
            events: 0,
            wrecked: false,
        }
    }

    fn apply(&mut self, event: Event) {
        if self.wrecked {
            return;
        }
        match self.machine.apply(&event) {
            Ok(()) => self.events += 1,
            Err(error) => {
                self.checks.push(ScenarioCheck::new(
                    "script-applies",
                    false,
                    format!("{event} failed: {error}"),
                ));
                self.wrecked = true;
            }
        }
    }

    /// Spawns a child and lets it go idle; returns the parent's refob to it.
    fn spawn_idle(&mut self, parent: ActorAddress) -> Refob {
        let token = self.machine.config.names.peek_token(parent);
        let child = self.machine.config.names.peek_address();
        self.apply(Event::Spawn {
            token,
            parent,
            child,
        });
        self.apply(Event::Idle { actor: child });
        Refob::new(token, parent, child)
    }

    /// Sends along `along`, creating one refob per `using` entry for the
    /// recipient; returns the created refobs in order.
    fn send(&mut self, along: Refob, using: &[Refob]) -> Vec<Refob> {
        let sender = along.owner;
        let created: Vec<Token> = (0..using.len() as u32)
            .map(|i| self.machine.config.names.peek_token_at(sender, i))
            .collect();
        let refobs: Vec<Refob> = created
            .iter()
            .zip(using)
            .map(|(token, y)| Refob::new(*token, along.target, y.target))
            .collect();
        self.apply(Event::Send {
            along: along.token,
            using: using.iter().map(|y| y.token).collect(),
            created,
            sender,
            recipient: along.target,
            targets: using.iter().map(|y| y.target).collect(),
        });
        refobs
    }

    fn receive(&mut self, along: Refob, refs: &[Refob]) {
        self.apply(Event::Receive {
            along: along.token,
            recipient: along.target,
            refs: refs.iter().copied().collect(),
        });
    }

    fn send_info(&mut self, using: Refob, created: Refob) {
        self.apply(Event::SendInfo {
            using: using.token,
            created,
            sender: using.owner,
        });
    }

    fn info(&mut self, along: Refob, created: Refob) {
        self.apply(Event::Info {
            along: along.token,
            created,
            recipient: created.target,
        });
    }

    fn send_release(&mut self, refob: Refob) {
        self.apply(Event::SendRelease {
            token: refob.token,
            owner: refob.owner,
            target: refob.target,
        });
    }

    fn release(&mut self, refob: Refob) {
        self.apply(Event::Release {
            token: refob.token,
            owner: refob.owner,
            target: refob.target,
        });
    }

    fn compact(&mut self, refob: Refob) {
        self.apply(Event::Compaction {
            token: refob.token,
            owner: refob.owner,
            actor: refob.target,
        });
    }

    fn idle(&mut self, actor: ActorAddress) {
        self.apply(Event::Idle { actor });
    }

    fn snapshot_into(&mut self, store: &mut SnapshotStore, actor: ActorAddress) {
        self.apply(Event::Snapshot { actor });
        if self.wrecked {
            return;
        }
        let knowledge = self
            .machine
            .config
            .knowledge(actor)
            .expect("snapshotted actor exists")
            .clone();
        store.record(actor, knowledge, self.machine.clock);
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        if self.wrecked {
            return;
        }
        self.checks.push(ScenarioCheck::new(name, passed, detail));
    }

    fn check_eq<T: Debug + PartialEq>(&mut self, name: &str, actual: T, expected: T) {
        let passed = actual == expected;
        self.check(
            name,
            passed,
            format!("expected {expected:?}, got {actual:?}"),
        );
    }

    fn check_clean(&mut self, name: &str) {
        if self.wrecked {
            return;
        }
        let violations = checks::structural_checks(&self.machine, self.machine.clock);
        self.check(name, violations.is_empty(), format!("{violations:?}"));
    }

    fn terminated(&self) -> BTreeSet<ActorAddress> {
        oracle::terminated_set(&self.machine.config, &self.machine.ledger)
    }

    fn knowledge(&self, actor: ActorAddress) -> &KnowledgeSet {
        self.machine.config.knowledge(actor).expect("actor exists")
    }

    fn finish(self) -> ScenarioReport {
        ScenarioReport {
            name: self.name.to_string(),
            events_applied: self.events,
            checks: self.checks,
        }
    }
}

/// Six actors; one of them provably terminates while a message it sent is
/// still in flight to a live actor, and delivering that message changes
/// nothing about who is terminated.
fn lone_terminated() -> ScenarioReport {
    let mut s = Script::new("lone-terminated");
    let a = s.machine.config.root_actor();
    let _xb = s.spawn_idle(a);
    let xc = s.spawn_idle(a);
    let xd = s.spawn_idle(a);
    let xe = s.spawn_idle(a);
    let xf = s.spawn_idle(a);
    let (c, f) = (xc.target, xf.target);

    // The root introduces c to d, announcing the new refob to d.
    let u = s.send(xc, &[xd])[0];
    s.send_info(xd, u);
    s.receive(xc, &[u]);
    s.idle(c);
    s.info(xd, u);

    // The root introduces f to c and e2, announces both, then forgets f.
    let created = s.send(xf, &[xc, xe]);
    let (w, v) = (created[0], created[1]);
    s.send_info(xc, w);
    s.send_info(xe, v);
    s.receive(xf, &[w, v]);
    s.send_release(xf);

    // f introduces c to e2 inside a message to c, announces it to e2, then
    // deactivates everything it holds and stops for good.
    let z = s.send(w, &[v])[0];
    s.send_info(v, z);
    s.send_release(w);
    s.send_release(v);
    s.idle(f);
    s.release(xf);
    s.compact(xf);

    // e2 hears both announcements and processes v's release.
    s.info(xe, v);
    s.info(v, z);
    s.release(v);
    s.compact(v);

    // c hears about w while f's application message is still in flight.
    s.info(xc, w);

    let term = s.terminated();
    s.check_eq("only-the-quitter-terminated", term, BTreeSet::from([f]));
    let introduction_in_flight = s
        .machine
        .config
        .mailbox(c)
        .iter()
        .any(|m| matches!(m, Message::App { along, .. } if *along == w.token));
    s.check(
        "introduction-still-in-flight",
        introduction_in_flight,
        "the message from the terminated sender is still queued",
    );
    s.check_clean("invariants-at-checkpoint");

    // Delivering the terminated actor's message must not resurrect it.
    s.receive(w, &[z]);
    let term = s.terminated();
    s.check_eq(
        "terminated-set-unchanged-by-delivery",
        term,
        BTreeSet::from([f]),
    );
    s.check_clean("invariants-after-delivery");
    s.finish()
}

/// One refob from birth to complete erasure: created inside a message,
/// announced, used twice, deactivated with the right count, released, and
/// finally compacted away so nobody remembers it at all.
fn refob_lifecycle() -> ScenarioReport {
    let mut s = Script::new("refob-lifecycle");
    let a = s.machine.config.root_actor();
    let xb = s.spawn_idle(a);
    let xc = s.spawn_idle(a);
    let (b, c) = (xb.target, xc.target);

    let z = s.send(xb, &[xc])[0];
    s.send_info(xc, z);
    s.receive(xb, &[z]);

    let owner_active = s.knowledge(b).has_activated(&z);
    let target_knows = s
        .knowledge(c)
        .facts()
        .iter()
        .any(|f| matches!(f, Fact::Created(r) if *r == z));
    s.check(
        "owner-activates-before-target-learns",
        owner_active && !target_knows,
        format!("owner holds it: {owner_active}, target already knows: {target_knows}"),
    );

    s.send(z, &[]);
    s.send(z, &[]);
    s.send_release(z);
    s.idle(b);

    s.info(xc, z);
    s.receive(z, &[]);
    s.idle(c);
    s.receive(z, &[]);
    s.idle(c);
    s.release(z);
    s.compact(z);

    let mentions = |phi: &KnowledgeSet| {
        phi.mentioned_refobs().contains(&z)
            || phi.has_sent_fact(&z.token)
            || phi.has_recv_fact(&z.token)
    };
    let remembered: Vec<ActorAddress> = s
        .machine
        .config
        .actors
        .iter()
        .filter(|(_, state)| mentions(&state.knowledge))
        .map(|(actor, _)| *actor)
        .collect();
    s.check(
        "no-knowledge-mentions-the-refob",
        remembered.is_empty(),
        format!("still remembered by {remembered:?}"),
    );
    let in_flight = s.machine.config.messages().count();
    s.check_eq("nothing-in-flight", in_flight, 0);
    let record = s.machine.ledger.refob(&z.token).cloned();
    let lifecycle_complete = record.as_ref().is_some_and(|r| {
        r.is_released()
            && r.activated_at.is_some()
            && r.deactivated_at.is_some()
            && r.deactivated_at < r.released_at
    });
    s.check(
        "ledger-recorded-the-full-lifecycle",
        lifecycle_complete,
        format!("{record:?}"),
    );
    s.check_clean("invariants-at-end");
    s.finish()
}

/// Three owners of refobs to the same actor, each created from the previous
/// one; the creation bookkeeping must link every refob back to one the
/// target itself knows about, even while an announcement is in flight.
fn chain_of_introductions() -> ScenarioReport {
    let mut s = Script::new("chain");
    let root = s.machine.config.root_actor();
    let x1 = s.spawn_idle(root);
    let xa2 = s.spawn_idle(root);
    let x2 = s.send(xa2, &[x1])[0];
    s.receive(xa2, &[x2]);
    let a2 = xa2.target;
    let xa3 = s.spawn_idle(a2);
    let x3 = s.send(xa3, &[x2])[0];
    s.receive(xa3, &[x3]);

    let chain_of = |s: &Script, x: &Refob| {
        oracle::find_chain(&s.machine.config, &s.machine.ledger, x)
            .ok()
            .flatten()
    };
    s.check_eq(
        "spawned-refob-is-its-own-chain",
        chain_of(&s, &x1),
        Some(vec![x1]),
    );
    s.check_eq(
        "second-hop-chains-through-creator",
        chain_of(&s, &x2),
        Some(vec![x1, x2]),
    );
    s.check_eq(
        "third-hop-chains-through-both-creators",
        chain_of(&s, &x3),
        Some(vec![x1, x2, x3]),
    );

    // Announcing x2 moves its link from the creator's knowledge into an
    // in-flight message; the chains must survive the hand-off.
    s.send_info(x1, x2);
    s.check_eq(
        "chain-survives-in-flight-announcement",
        chain_of(&s, &x3),
        Some(vec![x1, x2, x3]),
    );
    s.check_eq(
        "announced-refob-still-chained",
        chain_of(&s, &x2),
        Some(vec![x1, x2]),
    );
    s.check_clean("invariants-at-end");
    s.finish()
}

/// Detection must refuse to report an actor whose owner has sent it more
/// than it has received, and must report it once the counts agree.
fn count_gated_detection() -> ScenarioReport {
    let mut s = Script::new("counts");
    let a = s.machine.config.root_actor();
    let xb = s.spawn_idle(a);
    let xc = s.spawn_idle(a);
    let (b, c) = (xb.target, xc.target);

    s.send(xb, &[]);
    s.idle(a);

    let mut store = SnapshotStore::new();
    s.snapshot_into(&mut store, a);
    s.snapshot_into(&mut store, b);
    s.snapshot_into(&mut store, c);

    if !s.wrecked {
        let q = store.snapshot_set();
        s.check(
            "in-flight-message-defeats-blocked-appearance",
            !aggregator::appears_blocked(&q, b),
            "one message sent, none received",
        );
        let detected = aggregator::detect(&store);
        s.check_eq(
            "detection-skips-the-lagging-target",
            detected.contains(&b),
            false,
        );
        let term = s.terminated();
        s.check_eq(
            "detection-matches-ground-truth-before-delivery",
            detected,
            term,
        );
    }

    s.receive(xb, &[]);
    s.idle(b);
    s.snapshot_into(&mut store, b);

    if !s.wrecked {
        let detected = aggregator::detect(&store);
        let term = s.terminated();
        s.check_eq(
            "everyone-terminated-after-delivery",
            term.clone(),
            BTreeSet::from([a, b, c]),
        );
        s.check_eq("detection-exact-after-delivery", detected, term);
    }
    s.check_clean("invariants-at-end");
    s.finish()
}

/// Names of every scripted scenario, in reporting order.
pub fn scenario_names() -> &'static [&'static str] {
    &["chain", "counts", "lone-terminated", "refob-lifecycle"]
}

/// Runs one scenario by name.
pub fn run_scenario(name: &str) -> Option<ScenarioReport> {
    match name {
        "chain" => Some(chain_of_introductions()),
        "counts" => Some(count_gated_detection()),
        "lone-terminated" => Some(lone_terminated()),
        "refob-lifecycle" => Some(refob_lifecycle()),
        _ => None,
    }
}

/// Runs every scenario in order.
pub fn run_all() -> Vec<ScenarioReport> {
    scenario_names()
        .iter()
        .map(|name| run_scenario(name).expect("registered scenario"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_passes() {
        for report in run_all() {
            assert!(
                report.passed(),
                "{} failed: {:?}",
                report.name,
                report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .collect::<Vec<_>>()
            );
            assert!(report.events_applied > 0);
        }
    }

    #[test]
    fn scenarios_are_deterministic() {
        assert_eq!(run_all(), run_all());
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(run_scenario("no-such-scenario").is_none());
    }
}
