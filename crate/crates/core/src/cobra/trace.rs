//! Run events and observation hooks.
//!
//! Each [`TraceEvent`] renders as one line. Agents print 1-based and papers
//! print as `p<author>.<slot>` (both 1-based), so a trace reads like the
//! hand-worked tables this format is meant to be diffed against:
//!
//! ```text
//! ttc round=1 cycle=1,2,3
//! ttc round=1 assign reviewer=2 paper=p1.1
//! ttc done U=4,5,6 L=3
//! fill1 round=1 cycle=4,6
//! fill1 round=1 assign reviewer=6 paper=p4.1
//! fill1 round=1 to-L agent=4
//! fill2 order=6,5
//! fill2 round=1 swap agent=6 paper=p6.1 via=p3.1 donor=1
//! ```

use std::fmt;

use super::PartialAssignment;
use crate::model::{AgentId, PaperId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Cycle elimination on the preference graph.
    Ttc,
    /// Cycle elimination on the greedy graph.
    FillCycles,
    /// Topological-order swap repair.
    FillSwaps,
}

impl Stage {
    fn tag(self) -> &'static str {
        match self {
            Stage::Ttc => "ttc",
            Stage::FillCycles => "fill1",
            Stage::FillSwaps => "fill2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Cycle {
        stage: Stage,
        round: u64,
        agents: Vec<AgentId>,
    },
    Assign {
        stage: Stage,
        round: u64,
        reviewer: AgentId,
        paper: PaperId,
    },
    TtcDone {
        unfinished: Vec<AgentId>,
        last: Vec<AgentId>,
    },
    MovedToLast {
        round: u64,
        agent: AgentId,
    },
    Order {
        order: Vec<AgentId>,
    },
    /// `donor` hands `via` to `agent` and takes `paper` instead.
    Swap {
        round: u64,
        agent: AgentId,
        paper: PaperId,
        via: PaperId,
        donor: AgentId,
    },
}

struct Agents<'a>(&'a [AgentId]);

impl fmt::Display for Agents<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", a.0 + 1)?;
        }
        Ok(())
    }
}

struct Paper(PaperId);

impl fmt::Display for Paper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}.{}", self.0.author.0 + 1, self.0.slot + 1)
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cycle {
                stage,
                round,
                agents,
            } => write!(f, "{} round={round} cycle={}", stage.tag(), Agents(agents)),
            Self::Assign {
                stage,
                round,
                reviewer,
                paper,
            } => write!(
                f,
                "{} round={round} assign reviewer={} paper={}",
                stage.tag(),
                reviewer.0 + 1,
                Paper(*paper)
            ),
            Self::TtcDone { unfinished, last } => {
                write!(f, "ttc done U={} L={}", Agents(unfinished), Agents(last))
            }
            Self::MovedToLast { round, agent } => {
                write!(f, "fill1 round={round} to-L agent={}", agent.0 + 1)
            }
            Self::Order { order } => write!(f, "fill2 order={}", Agents(order)),
            Self::Swap {
                round,
                agent,
                paper,
                via,
                donor,
            } => write!(
                f,
                "fill2 round={round} swap agent={} paper={} via={} donor={}",
                agent.0 + 1,
                Paper(*paper),
                Paper(*via),
                donor.0 + 1
            ),
        }
    }
}

/// Hooks called during a run. Both methods default to no-ops.
pub trait Observer {
    fn event(&mut self, _event: &TraceEvent) {}

    /// Called with the current state at every iteration boundary of cycle
    /// elimination (including the initial empty state) and after each swap.
    fn boundary(&mut self, _stage: Stage, _state: &PartialAssignment) {}
}

impl Observer for () {}

/// Collects every event in order.
#[derive(Clone, Debug, Default)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn lines(&self) -> Vec<String> {
        self.events.iter().map(ToString::to_string).collect()
    }
}

impl Observer for TraceLog {
    fn event(&mut self, event: &TraceEvent) {
        self.events.push(event.clone());
    }
}
