//! Simulation driver: snapshot policies, ground-truth checks, fault
//! injection, trace recording and replay, random and exhaustive schedulers,
//! scripted scenarios, and store sampling.

pub mod checks;
pub mod explore;
pub mod fault;
pub mod policy;
pub mod report;
pub mod run;
pub mod sampler;
pub mod scenario;
pub mod trace;

pub use explore::{explore, ExploreConfig};
pub use fault::Fault;
pub use policy::{SchedulerDescriptor, SnapshotPolicy};
pub use report::{CampaignSummary, ExploreReport, RunReport, ScenarioReport, Violation};
pub use run::{replay_trace, run_campaign, run_many, run_random, RunConfig, RunOutcome};
pub use trace::{Trace, TraceError};
