//! Peer-review assignment with group-fairness guarantees.
//!
//! * [`model`]: instances, assignments, validity and additive utilities.
//! * [`cobra`]: the core-stable assignment algorithm.
//! * [`baselines`]: welfare-maximizing assigners (total score, minimum paper score).
//! * [`audit`]: search for coalitions that would rather review among themselves.
//! * [`ingest`]: CSV loading, authorship derivation, normalization, subsampling.
//! * [`experiment`]: seeded multi-run comparisons and summary tables.

pub mod audit;
pub mod baselines;
pub mod cobra;
pub mod experiment;
pub mod fixtures;
pub mod flow;
pub mod ingest;
pub mod model;

pub use cobra::run_cobra;
pub use model::{AgentId, Assignment, Instance, PaperId};
