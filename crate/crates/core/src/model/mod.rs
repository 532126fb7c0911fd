//! Problem and solution data model.
//!
//! Agents are both authors and reviewers. Each agent `i` owns `m_i` submissions,
//! each submission carries a strict ranking over the other agents, and an
//! [`Assignment`] is a set of `(reviewer, paper)` pairs. All indices are
//! zero-based; labels from input files are kept alongside for output.

mod assignment;
mod instance;
mod padding;
mod scores;

use std::fmt;

use thiserror::Error;

pub use assignment::{
    compute_utilities, paper_score_units, validate_assignment, Assignment, AssignmentViolation, Utilities,
};
pub use instance::{Instance, InstanceViolation};
pub use padding::{pad_to_uniform, strip_dummies, PaddedInstance};
pub use scores::{rankings_from_scores, score_units, SimilarityMatrix, SCORE_UNITS};

/// An agent, indexed from zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A submission, identified by its author and its position among the author's papers.
///
/// The derived ordering (author first, then slot) is the "lowest index" order
/// used by every deterministic tie-break in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaperId {
    pub author: AgentId,
    pub slot: usize,
}

impl PaperId {
    pub fn new(author: usize, slot: usize) -> Self {
        Self { author: AgentId(author), slot }
    }
}

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.author.0, self.slot)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("similarity matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ScoreShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("no similarity score for reviewer {reviewer} on paper {paper}")]
    MissingScore { reviewer: AgentId, paper: PaperId },
    #[error("instance carries no similarity scores")]
    NoScores,
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("unknown paper {0}")]
    UnknownPaper(PaperId),
    #[error("expected {expected} labels, got {found}")]
    LabelCount { expected: usize, found: usize },
}
