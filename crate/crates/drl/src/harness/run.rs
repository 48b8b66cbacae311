//! Seeded random runs with in-line verification, trace recording,
//! deterministic replay, and multi-run campaigns.
//!
//! A run has three phases. The random phase picks weighted-uniform actions
//! until the event budget or quiescence. The drain phase only delivers,
//! idles, compacts, and absorbs until nothing is left in flight. Finally
//! every idle actor is snapshotted once more and detection runs against the
//! completed store, which is where liveness is judged.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::mpsc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregator::{self, SnapshotStore};
use crate::model::{ActorAddress, Event, KnowledgeSet, Refob, Token};
use crate::oracle;
use crate::semantics::enumerate;
use crate::semantics::{ExplorationBounds, Machine, RuleError};

use super::checks;
use super::fault::{self, Fault};
use super::policy::{SchedulerDescriptor, SnapshotPolicy};
use super::report::{CampaignSummary, RunReport, Violation};
use super::trace::{Trace, TraceStep};

/// Distinguishes the scheduling stream from the check-sampling stream so
/// replays draw identical check samples.
const CHECK_STREAM_SALT: u64 = 0x636865_636b73;

/// Everything that parameterizes a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub bounds: ExplorationBounds,
    pub snapshot_policy: SnapshotPolicy,
    /// Ground-truth checks run each time this many non-snapshot events have
    /// been applied; zero disables periodic checks.
    pub check_every: u64,
    /// Detection runs against every store at this non-snapshot cadence;
    /// zero disables periodic detection.
    pub detect_every: u64,
    /// Environment injections stop after this many non-snapshot events.
    pub allow_in_until: Option<u64>,
    /// Probability of choosing an injection when one is available.
    pub in_probability: f64,
    /// One snapshot store per entry, receiving snapshots this many events
    /// late. The first entry is the primary store used for liveness.
    pub store_delays: Vec<u64>,
    /// Count-consistency samples drawn per check pass.
    pub message_count_samples: u32,
    /// Remove detected actors from the configuration as they are found.
    pub self_destruct: bool,
    /// Stop at the first violation instead of running to completion.
    pub halt_on_violation: bool,
    /// Optional knowledge corruption, for negative controls.
    pub fault: Option<Fault>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            bounds: ExplorationBounds::default(),
            snapshot_policy: SnapshotPolicy::AfterFinalAction,
            check_every: 10,
            detect_every: 10,
            allow_in_until: Some(150),
            in_probability: 0.15,
            store_delays: vec![0, 25],
            message_count_samples: 3,
            self_destruct: false,
            halt_on_violation: false,
            fault: None,
        }
    }
}

/// A finished run: its report plus the trace that reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: Trace,
}

/// A snapshot store whose entries arrive a fixed number of events late.
struct DelayedStore {
    delay: u64,
    store: SnapshotStore,
    pending: VecDeque<(u64, ActorAddress, KnowledgeSet, u64)>,
}

impl DelayedStore {
    fn new(delay: u64) -> Self {
        DelayedStore {
            delay,
            store: SnapshotStore::new(),
            pending: VecDeque::new(),
        }
    }

    fn enqueue(&mut self, clock: u64, actor: ActorAddress, knowledge: KnowledgeSet) {
        if self.delay == 0 {
            self.store.record(actor, knowledge, clock);
        } else {
            self.pending
                .push_back((clock + self.delay, actor, knowledge, clock));
        }
    }

    fn flush_due(&mut self, clock: u64) {
        while self.pending.front().is_some_and(|(due, ..)| *due <= clock) {
            let (_, actor, knowledge, taken_at) = self.pending.pop_front().expect("nonempty");
            self.store.record(actor, knowledge, taken_at);
        }
    }

    fn flush_all(&mut self) {
        while let Some((_, actor, knowledge, taken_at)) = self.pending.pop_front() {
            self.store.record(actor, knowledge, taken_at);
        }
    }

    fn forget(&mut self, actor: ActorAddress) {
        self.store.remove(actor);
        self.pending.retain(|(_, a, _, _)| *a != actor);
    }
}

/// One schedulable choice; send-like choices carry their randomized payload
/// only once materialized.
#[derive(Debug, Clone)]
enum Action {
    Fixed(Event),
    SpawnFrom(ActorAddress),
    SendAlong(Refob),
    Inject(ActorAddress),
}

/// The actions available right now, split into regular ones and environment
/// injections (which are throttled separately). During the drain phase only
/// deliveries, idling, compaction, and external absorption are offered.
fn action_menu(
    m: &Machine,
    bounds: &ExplorationBounds,
    drain: bool,
    inject_allowed: bool,
) -> (Vec<Action>, Vec<Action>) {
    let k = &m.config;
    let mut regular = Vec::new();
    let mut events = Vec::new();
    for (a, state) in &k.actors {
        if state.is_busy() {
            regular.push(Action::Fixed(Event::Idle { actor: *a }));
            if drain {
                continue;
            }
            if k.actors.len() + k.externals.len() < bounds.max_actors {
                regular.push(Action::SpawnFrom(*a));
            }
            let phi = &state.knowledge;
            for refob in phi.activated() {
                regular.push(Action::SendAlong(*refob));
            }
            for (using, created) in phi.created_using() {
                regular.push(Action::Fixed(Event::SendInfo {
                    using: using.token,
                    created: *created,
                    sender: *a,
                }));
            }
            for refob in phi.activated() {
                if !phi.creates_anything_using(refob) {
                    regular.push(Action::Fixed(Event::SendRelease {
                        token: refob.token,
                        owner: *a,
                        target: refob.target,
                    }));
                }
            }
        } else {
            enumerate::idle_actor_events(k, &m.ledger, *a, false, &mut events);
        }
    }
    for e in &k.externals {
        enumerate::external_delivery_events(k, *e, &mut events);
    }
    regular.extend(events.into_iter().map(Action::Fixed));
    let mut injections = Vec::new();
    if inject_allowed && !drain {
        injections.extend(k.receptionists.iter().map(|r| Action::Inject(*r)));
    }
    (regular, injections)
}

/// Fills in the randomized payload of an action.
fn materialize(
    m: &Machine,
    bounds: &ExplorationBounds,
    action: &Action,
    rng: &mut ChaCha8Rng,
) -> Event {
    let k = &m.config;
    match action {
        Action::Fixed(event) => event.clone(),
        Action::SpawnFrom(parent) => Event::Spawn {
            token: k.names.peek_token(*parent),
            parent: *parent,
            child: k.names.peek_address(),
        },
        Action::SendAlong(refob) => {
            let phi = k.knowledge(refob.owner).expect("sender exists");
            let activated: Vec<Refob> = phi.activated().copied().collect();
            let fan_out = rng.gen_range(0..=bounds.max_refobs_per_message);
            let mut using = Vec::new();
            let mut created = Vec::new();
            let mut targets = Vec::new();
            for i in 0..fan_out {
                let y = activated[rng.gen_range(0..activated.len())];
                using.push(y.token);
                created.push(k.names.peek_token_at(refob.owner, i as u32));
                targets.push(y.target);
            }
            Event::Send {
                along: refob.token,
                using,
                created,
                sender: refob.owner,
                recipient: refob.target,
                targets,
            }
        }
        Action::Inject(recipient) => {
            let candidates = enumerate::injection_targets(k, bounds);
            let fan_out = rng.gen_range(0..=bounds.max_refobs_per_message);
            let refs: BTreeSet<Refob> = (0..fan_out)
                .map(|i| {
                    let target = candidates[rng.gen_range(0..candidates.len())];
                    Refob::new(
                        k.names.peek_token_at(*recipient, i as u32),
                        *recipient,
                        target,
                    )
                })
                .collect();
            Event::In {
                recipient: *recipient,
                refs,
            }
        }
    }
}

/// Drives one run and accumulates its report.
struct Runner {
    machine: Machine,
    config: RunConfig,
    rng: ChaCha8Rng,
    check_rng: ChaCha8Rng,
    stores: Vec<DelayedStore>,
    trace: Trace,
    events_by_rule: BTreeMap<String, u64>,
    non_snapshot: u64,
    snapshots: u64,
    detections: u64,
    violations: Vec<Violation>,
    prev_terminated: BTreeSet<ActorAddress>,
    terminated_first: BTreeMap<ActorAddress, u64>,
    detected_first: BTreeMap<ActorAddress, u64>,
    collected: BTreeSet<ActorAddress>,
    halted: bool,
}

impl Runner {
    fn new(mut config: RunConfig) -> Self {
        if config.store_delays.is_empty() {
            config.store_delays.push(0);
        }
        config.in_probability = config.in_probability.clamp(0.0, 1.0);
        let stores = config
            .store_delays
            .iter()
            .map(|d| DelayedStore::new(*d))
            .collect();
        Runner {
            machine: Machine::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            check_rng: ChaCha8Rng::seed_from_u64(config.seed ^ CHECK_STREAM_SALT),
            stores,
            trace: Trace::new(config.clone()),
            events_by_rule: BTreeMap::new(),
            non_snapshot: 0,
            snapshots: 0,
            detections: 0,
            violations: Vec::new(),
            prev_terminated: BTreeSet::new(),
            terminated_first: BTreeMap::new(),
            detected_first: BTreeMap::new(),
            collected: BTreeSet::new(),
            halted: false,
            config,
        }
    }

    /// Applies the event, records it in the trace, and routes snapshots into
    /// the stores.
    fn apply_recorded(&mut self, event: &Event) -> Result<(), RuleError> {
        fault::apply_event(&mut self.machine, event, self.config.fault)?;
        *self
            .events_by_rule
            .entry(event.label().to_string())
            .or_default() += 1;
        self.trace.steps.push(TraceStep {
            index: self.machine.clock,
            event: event.clone(),
            config: self.machine.config_fingerprint(),
        });
        if event.is_snapshot() {
            self.snapshots += 1;
            let actor = event.subject();
            let knowledge = self
                .machine
                .config
                .knowledge(actor)
                .expect("snapshotted actor exists")
                .clone();
            for store in &mut self.stores {
                store.enqueue(self.machine.clock, actor, knowledge.clone());
            }
        } else {
            self.non_snapshot += 1;
        }
        let clock = self.machine.clock;
        for store in &mut self.stores {
            store.flush_due(clock);
        }
        Ok(())
    }

    fn apply_expected(&mut self, event: &Event) {
        self.apply_recorded(event)
            .unwrap_or_else(|e| panic!("scheduler offered an unappliable event {event}: {e}"));
    }

    /// Checks and detection that fire on non-snapshot cadence boundaries.
    /// Runs right after each event, in live runs and replays alike.
    fn cadence(&mut self, event: &Event) {
        if !event.is_snapshot() {
            if self.config.check_every > 0
                && self.non_snapshot.is_multiple_of(self.config.check_every)
            {
                self.run_checks();
            }
            if self.config.detect_every > 0
                && self.non_snapshot.is_multiple_of(self.config.detect_every)
                && !self.config.snapshot_policy.is_never()
            {
                self.run_detect();
            }
        }
        if self.config.halt_on_violation && !self.violations.is_empty() {
            self.halted = true;
        }
    }

    /// Applies one scheduled event plus whatever snapshots the policy adds.
    fn step(&mut self, event: &Event) {
        self.apply_expected(event);
        self.cadence(event);
        if self.halted {
            return;
        }
        if self.config.snapshot_policy.snapshot_after(event) {
            let actor = event.subject();
            if self
                .machine
                .config
                .state(actor)
                .is_some_and(|s| s.is_idle())
            {
                let snap = Event::Snapshot { actor };
                self.apply_expected(&snap);
                self.cadence(&snap);
            }
        }
        if !event.is_snapshot() && self.config.snapshot_policy.sweep_due(self.non_snapshot) {
            self.sweep_idle_snapshots();
        }
    }

    fn sweep_idle_snapshots(&mut self) {
        let idle: Vec<ActorAddress> = self
            .machine
            .config
            .actors
            .iter()
            .filter(|(_, s)| s.is_idle())
            .map(|(a, _)| *a)
            .collect();
        for actor in idle {
            if self.halted {
                break;
            }
            let snap = Event::Snapshot { actor };
            self.apply_expected(&snap);
            self.cadence(&snap);
        }
    }

    fn run_checks(&mut self) {
        let step = self.machine.clock;
        let mut found = checks::structural_checks(&self.machine, step);
        if !self.collected.is_empty() {
            // Collected actors take their knowledge with them, so chains that
            // relied on it cannot be re-verified; skip those refobs.
            let collected = &self.collected;
            found.retain(|v| match v {
                Violation::ChainLemma { violation, .. } => match violation.refob {
                    Some(refob) => {
                        let creator = match refob.token {
                            Token::Id { creator, .. } => Some(creator),
                            Token::External => None,
                        };
                        !collected.contains(&refob.owner)
                            && creator.is_none_or(|c| !collected.contains(&c))
                    }
                    None => false,
                },
                _ => true,
            });
        }
        found.extend(checks::message_counts(
            &self.machine,
            &mut self.check_rng,
            self.config.message_count_samples,
            step,
        ));
        let current = oracle::terminated_set(&self.machine.config, &self.machine.ledger);
        if let Some(v) =
            checks::terminated_monotonic(&self.prev_terminated, &current, &self.collected, step)
        {
            found.push(v);
        }
        for a in &current {
            self.terminated_first.entry(*a).or_insert(self.non_snapshot);
        }
        self.prev_terminated = current;
        self.violations.extend(found);
    }

    /// Runs detection against every store; optionally collects what the
    /// primary store reports.
    fn run_detect(&mut self) {
        self.detections += 1;
        let step = self.machine.clock;
        let mut to_collect = BTreeSet::new();
        for (i, store) in self.stores.iter_mut().enumerate() {
            let detected = aggregator::detect(&store.store);
            self.violations.extend(checks::detect_safety(
                &self.machine,
                store.delay,
                &detected,
                &self.collected,
                step,
            ));
            if i == 0 {
                for a in &detected {
                    self.detected_first.entry(*a).or_insert(self.non_snapshot);
                }
                if self.config.self_destruct {
                    to_collect = detected
                        .into_iter()
                        .filter(|a| self.machine.config.actors.contains_key(a))
                        .collect();
                }
            }
        }
        if !to_collect.is_empty() {
            self.collect(&to_collect);
        }
    }

    /// Removes detected actors from the configuration, as a collecting
    /// runtime would.
    fn collect(&mut self, actors: &BTreeSet<ActorAddress>) {
        let step = self.machine.clock;
        for a in actors {
            let undelivered = !self.machine.config.mailbox(*a).is_empty();
            if undelivered || self.machine.config.is_receptionist(*a) {
                self.violations
                    .push(Violation::CollectedActorTouched { step, actor: *a });
            }
            self.machine.config.actors.remove(a);
            self.machine.config.mailboxes.remove(a);
            self.machine.config.receptionists.remove(a);
            for store in &mut self.stores {
                store.forget(*a);
            }
            self.collected.insert(*a);
        }
    }

    fn random_phase(&mut self) {
        while !self.halted && self.non_snapshot < self.config.bounds.max_events_per_run {
            let inject_allowed = self.config.bounds.allow_in
                && self
                    .config
                    .allow_in_until
                    .is_none_or(|cutoff| self.non_snapshot < cutoff)
                && self.machine.ledger.in_events() < self.config.bounds.max_external_injections;
            let (regular, injections) =
                action_menu(&self.machine, &self.config.bounds, false, inject_allowed);
            if regular.is_empty() && injections.is_empty() {
                break;
            }
            let use_injection = !injections.is_empty()
                && (regular.is_empty() || self.rng.gen_bool(self.config.in_probability));
            let pool = if use_injection { &injections } else { &regular };
            let action = pool[self.rng.gen_range(0..pool.len())].clone();
            let event = materialize(&self.machine, &self.config.bounds, &action, &mut self.rng);
            self.step(&event);
        }
    }

    /// Runs the system to quiescence: everything in flight is delivered or
    /// absorbed, busy actors idle, and released refobs are compacted.
    fn drain_phase(&mut self) {
        // Deliveries strictly shrink (messages, busy actors, compactable
        // pairs), so this terminates; the valve guards against bugs.
        let mut valve = 10 * self.config.bounds.max_events_per_run + 10_000;
        while !self.halted {
            let (actions, _) = action_menu(&self.machine, &self.config.bounds, true, false);
            if actions.is_empty() {
                break;
            }
            let action = actions[self.rng.gen_range(0..actions.len())].clone();
            let event = materialize(&self.machine, &self.config.bounds, &action, &mut self.rng);
            self.step(&event);
            valve -= 1;
            if valve == 0 {
                self.violations.push(Violation::ConfigInvariant {
                    step: self.machine.clock,
                    detail: "drain phase failed to quiesce".to_string(),
                });
                break;
            }
        }
    }

    /// Final sweep, final checks, final detection, and the liveness verdict.
    /// Replays skip the sweep: the recorded trace already carries the
    /// original run's final snapshots.
    fn finalize(&mut self, sweep: bool) -> (BTreeSet<ActorAddress>, BTreeSet<ActorAddress>) {
        if sweep && !self.config.snapshot_policy.is_never() && !self.halted {
            self.sweep_idle_snapshots();
        }
        for store in &mut self.stores {
            store.flush_all();
        }
        self.run_checks();
        let terminated = oracle::terminated_set(&self.machine.config, &self.machine.ledger);
        let step = self.machine.clock;
        let mut final_detected = BTreeSet::new();
        if !self.config.snapshot_policy.is_never() {
            self.detections += 1;
            for (i, store) in self.stores.iter_mut().enumerate() {
                let detected = aggregator::detect(&store.store);
                self.violations.extend(checks::detect_safety(
                    &self.machine,
                    store.delay,
                    &detected,
                    &self.collected,
                    step,
                ));
                if i == 0 {
                    for a in &detected {
                        self.detected_first.entry(*a).or_insert(self.non_snapshot);
                    }
                    final_detected = detected;
                }
            }
            if !self.halted {
                for actor in terminated.iter() {
                    if !final_detected.contains(actor) && !self.collected.contains(actor) {
                        self.violations.push(Violation::LivenessMiss {
                            step,
                            actor: *actor,
                        });
                    }
                }
            }
        }
        (terminated, final_detected)
    }

    fn finish(mut self, sweep: bool) -> RunOutcome {
        let (terminated, detected) = self.finalize(sweep);
        let mut latency_sum = 0.0;
        let mut latency_count = 0u64;
        for (actor, d) in &self.detected_first {
            if let Some(t) = self.terminated_first.get(actor) {
                if d >= t {
                    latency_sum += (d - t) as f64;
                    latency_count += 1;
                }
            }
        }
        let liveness_misses: BTreeSet<ActorAddress> = terminated
            .iter()
            .filter(|a| !detected.contains(a) && !self.collected.contains(a))
            .copied()
            .collect();
        let report = RunReport {
            seed: self.config.seed,
            scheduler: SchedulerDescriptor::UniformRandom {
                seed: self.config.seed,
            },
            snapshot_policy: self.config.snapshot_policy,
            events_applied: self.non_snapshot,
            snapshots_taken: self.snapshots,
            events_by_rule: self.events_by_rule,
            final_terminated: terminated,
            final_detected: detected,
            collected: self.collected,
            liveness_misses,
            detections: self.detections,
            mean_detection_latency: (latency_count > 0).then(|| latency_sum / latency_count as f64),
            violations: self.violations,
            trace_fingerprint: self.trace.fingerprint(),
            final_config_fingerprint: self.machine.config_fingerprint(),
        };
        RunOutcome {
            report,
            trace: self.trace,
        }
    }
}

/// Runs one seeded random schedule to completion.
pub fn run_random(config: &RunConfig) -> RunOutcome {
    let mut runner = Runner::new(config.clone());
    runner.random_phase();
    runner.drain_phase();
    runner.finish(true)
}

/// Re-applies a recorded trace, re-verifying every configuration fingerprint
/// and re-running the same checks at the same cadence. A clean replay of an
/// unmodified trace produces a report identical to the original run's.
pub fn replay_trace(trace: &Trace) -> RunOutcome {
    let mut runner = Runner::new(trace.header.run.clone());
    for step in &trace.steps {
        if runner.halted {
            break;
        }
        if let Err(error) = runner.apply_recorded(&step.event) {
            runner.violations.push(Violation::ReplayDivergence {
                step: step.index,
                expected: step.config.clone(),
                actual: format!("event failed to apply: {error}"),
            });
            runner.halted = true;
            break;
        }
        let actual = &runner.trace.steps.last().expect("just recorded").config;
        if *actual != step.config {
            let actual = actual.clone();
            runner.violations.push(Violation::ReplayDivergence {
                step: step.index,
                expected: step.config.clone(),
                actual,
            });
            runner.halted = true;
            break;
        }
        runner.cadence(&step.event);
    }
    runner.finish(false)
}

/// Runs every seed with `base`'s settings, fanning out over `threads`
/// worker threads, and feeds each outcome to `sink` in seed order.
pub fn run_many<F>(
    base: &RunConfig,
    seeds: impl IntoIterator<Item = u64>,
    threads: usize,
    mut sink: F,
) -> CampaignSummary
where
    F: FnMut(&RunOutcome),
{
    let seeds: Vec<u64> = seeds.into_iter().collect();
    if seeds.is_empty() {
        return CampaignSummary::from_reports(Vec::new());
    }
    let threads = threads.clamp(1, seeds.len());
    let mut ordered: BTreeMap<usize, RunOutcome> = BTreeMap::new();
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for worker in 0..threads {
            let tx = tx.clone();
            let seeds = &seeds;
            let base = base.clone();
            scope.spawn(move || {
                let mut index = worker;
                while index < seeds.len() {
                    let mut config = base.clone();
                    config.seed = seeds[index];
                    let outcome = run_random(&config);
                    if tx.send((index, outcome)).is_err() {
                        return;
                    }
                    index += threads;
                }
            });
        }
        drop(tx);
        for (index, outcome) in rx {
            ordered.insert(index, outcome);
        }
    });
    let mut reports = Vec::with_capacity(ordered.len());
    for (_, outcome) in ordered {
        sink(&outcome);
        reports.push(outcome.report);
    }
    CampaignSummary::from_reports(reports)
}

/// Convenience wrapper: consecutive seeds, reports only.
pub fn run_campaign(
    base: &RunConfig,
    first_seed: u64,
    runs: u64,
    threads: usize,
) -> CampaignSummary {
    run_many(base, first_seed..first_seed + runs, threads, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seed: u64) -> RunConfig {
        RunConfig {
            seed,
            bounds: ExplorationBounds {
                max_events_per_run: 80,
                ..ExplorationBounds::default()
            },
            allow_in_until: Some(40),
            ..RunConfig::default()
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let a = run_random(&small_config(11));
        let b = run_random(&small_config(11));
        assert_eq!(a.report, b.report);
        assert_eq!(a.trace, b.trace);
        let c = run_random(&small_config(12));
        assert_ne!(
            a.trace.fingerprint(),
            c.trace.fingerprint(),
            "different seeds should explore different schedules"
        );
    }

    #[test]
    fn default_runs_are_clean_and_live() {
        for seed in 0..4 {
            let outcome = run_random(&small_config(seed));
            assert!(
                outcome.report.is_clean(),
                "seed {seed}: {:?}",
                outcome.report.violations
            );
            assert!(outcome.report.liveness_misses.is_empty());
            assert_eq!(
                outcome.report.final_detected, outcome.report.final_terminated,
                "seed {seed}: after the final sweep, detection is exact"
            );
        }
    }

    #[test]
    fn replay_reproduces_the_original_report() {
        let original = run_random(&small_config(21));
        let replayed = replay_trace(&original.trace);
        assert_eq!(original.report, replayed.report);
        assert_eq!(original.trace, replayed.trace);
    }

    #[test]
    fn replay_flags_a_tampered_trace() {
        let original = run_random(&small_config(33));
        let mut tampered = original.trace.clone();
        let middle = tampered.steps.len() / 2;
        tampered.steps[middle].config = "0000".to_string();
        let outcome = replay_trace(&tampered);
        assert!(outcome
            .report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ReplayDivergence { .. })));
    }

    #[test]
    fn never_policy_takes_no_snapshots_and_detects_nothing() {
        let config = RunConfig {
            snapshot_policy: SnapshotPolicy::Never,
            ..small_config(5)
        };
        let outcome = run_random(&config);
        assert_eq!(outcome.report.snapshots_taken, 0);
        assert!(outcome.report.final_detected.is_empty());
        assert!(outcome.report.is_clean(), "{:?}", outcome.report.violations);
    }

    #[test]
    fn periodic_policy_sweeps_and_stays_live() {
        let config = RunConfig {
            snapshot_policy: SnapshotPolicy::Periodic { every: 15 },
            ..small_config(9)
        };
        let outcome = run_random(&config);
        assert!(outcome.report.snapshots_taken > 0);
        assert!(outcome.report.is_clean(), "{:?}", outcome.report.violations);
        assert!(outcome.report.liveness_misses.is_empty());
    }

    #[test]
    fn campaign_aggregates_in_seed_order() {
        let base = small_config(0);
        let mut seen = Vec::new();
        let summary = run_many(&base, [3u64, 1, 2], 2, |outcome| {
            seen.push(outcome.report.seed);
        });
        assert_eq!(seen, vec![3, 1, 2], "sink preserves requested order");
        assert_eq!(summary.runs, 3);
        assert_eq!(
            summary.reports.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![1, 2, 3],
            "summary reports are seed-sorted"
        );
        let again = run_campaign(&base, 1, 3, 3);
        assert_eq!(again.runs, 3);
    }

    #[test]
    fn fault_injection_is_caught() {
        let mut caught = false;
        for seed in 0..6 {
            let config = RunConfig {
                fault: Some(Fault::SkipSentIncrement),
                ..small_config(seed)
            };
            let outcome = run_random(&config);
            caught |= !outcome.report.is_clean();
        }
        assert!(caught, "a run of damaged bookkeeping must trip some check");
    }
}
