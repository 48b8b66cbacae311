//! Deferred reference-listing garbage collection for actor systems:
//! executable operational semantics, a ground-truth termination oracle,
//! snapshot aggregation, and a deterministic simulation harness.

pub mod aggregator;
pub mod canon;
pub mod deduction;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod semantics;
