//! Core-stable assignment by top-trading-cycles followed by gap filling.
//!
//! [`run_cobra`] pads the instance so every agent has the same number of
//! submissions, runs [`pra_ttc`] on the preference graph, completes the
//! remaining papers with [`filling_gaps`] when some agent is left unfinished,
//! and strips the dummy papers again. The result depends only on the
//! rankings, never on score magnitudes.
//!
//! Every place where the procedure allows a free choice is resolved towards
//! the lowest index, so runs are reproducible.

mod filling;
mod partial;
mod trace;
mod ttc;

use thiserror::Error;

use crate::model::{
    pad_to_uniform, strip_dummies, validate_assignment, Assignment, Instance, InstanceViolation,
};

pub use filling::{build_greedy_graph, filling_gaps, GreedyGraph};
pub use partial::PartialAssignment;
pub use trace::{Observer, Stage, TraceEvent, TraceLog};
pub use ttc::{build_preference_graph, find_cycle, pra_ttc, PreferenceGraph, TtcOutcome};

#[derive(Debug, Error)]
pub enum CobraError {
    #[error("invalid instance: {}", list(.0))]
    InvalidInstance(Vec<InstanceViolation>),
    /// An internal invariant failed. Never expected on a valid instance.
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
}

fn list(v: &[InstanceViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Computes a core assignment for `inst`.
pub fn run_cobra(inst: &Instance) -> Result<Assignment, CobraError> {
    run_cobra_observed(inst, &mut ())
}

/// [`run_cobra`] with a hook receiving trace events and state snapshots.
pub fn run_cobra_observed(
    inst: &Instance,
    observer: &mut dyn Observer,
) -> Result<Assignment, CobraError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(CobraError::InvalidInstance(violations));
    }
    let padded = pad_to_uniform(inst);
    if padded.per_agent() == 0 {
        return Ok(Assignment::new());
    }
    let ttc = pra_ttc(&padded, observer)?;
    let full = if ttc.unfinished.is_empty() {
        ttc.partial.to_assignment()
    } else {
        filling_gaps(&padded, ttc, observer)?
    };
    let asg = strip_dummies(&padded, &full);
    let broken = validate_assignment(inst, &asg)
        .map_err(|e| CobraError::InvariantBreach(e.to_string()))?;
    if !broken.is_empty() {
        return Err(CobraError::InvariantBreach(format!(
            "output is not a valid assignment: {}",
            broken
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    Ok(asg)
}
