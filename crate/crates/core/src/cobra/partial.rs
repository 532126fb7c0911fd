use std::collections::BTreeSet;

use crate::model::{AgentId, Assignment, PaddedInstance, PaperId};

/// An assignment under construction on a padded instance.
///
/// Tracks, per agent, the slots of papers that still have fewer than `k_p`
/// reviewers (`P̄_i`) and the clock value at which the agent's last paper
/// became completely assigned.
#[derive(Clone, Debug)]
pub struct PartialAssignment {
    n: usize,
    per_agent: usize,
    k_a: usize,
    k_p: usize,
    reviews: Vec<bool>,
    load: Vec<usize>,
    count: Vec<usize>,
    incomplete: Vec<BTreeSet<usize>>,
    completed_at: Vec<Option<u64>>,
    clock: u64,
}

impl PartialAssignment {
    /// The empty assignment; agents without papers count as completed at time 0.
    pub fn empty(padded: &PaddedInstance) -> Self {
        let inst = padded.instance();
        let n = inst.n();
        let per_agent = padded.per_agent();
        let incomplete: Vec<BTreeSet<usize>> =
            (0..n).map(|_| (0..per_agent).collect()).collect();
        let completed_at = incomplete
            .iter()
            .map(|s| s.is_empty().then_some(0))
            .collect();
        Self {
            n,
            per_agent,
            k_a: inst.k_a(),
            k_p: inst.k_p(),
            reviews: vec![false; n * n * per_agent],
            load: vec![0; n],
            count: vec![0; n * per_agent],
            incomplete,
            completed_at,
            clock: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn per_agent(&self) -> usize {
        self.per_agent
    }

    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_p(&self) -> usize {
        self.k_p
    }

    fn col(&self, paper: PaperId) -> usize {
        paper.author.0 * self.per_agent + paper.slot
    }

    pub fn reviews(&self, reviewer: AgentId, paper: PaperId) -> bool {
        self.reviews[reviewer.0 * self.n * self.per_agent + self.col(paper)]
    }

    /// `|R^a_i|`.
    pub fn load(&self, reviewer: AgentId) -> usize {
        self.load[reviewer.0]
    }

    /// `|R^p_j|`.
    pub fn reviewer_count(&self, paper: PaperId) -> usize {
        self.count[self.col(paper)]
    }

    pub fn is_paper_complete(&self, paper: PaperId) -> bool {
        self.reviewer_count(paper) >= self.k_p
    }

    /// `P̄_i`, lowest slot first.
    pub fn incomplete_papers(&self, agent: AgentId) -> impl Iterator<Item = PaperId> + '_ {
        self.incomplete[agent.0]
            .iter()
            .map(move |&slot| PaperId { author: agent, slot })
    }

    pub fn first_incomplete(&self, agent: AgentId) -> Option<PaperId> {
        self.incomplete[agent.0]
            .first()
            .map(|&slot| PaperId { author: agent, slot })
    }

    pub fn is_agent_complete(&self, agent: AgentId) -> bool {
        self.incomplete[agent.0].is_empty()
    }

    pub fn completed_at(&self, agent: AgentId) -> Option<u64> {
        self.completed_at[agent.0]
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Agents with `P̄_i ≠ ∅`, ascending.
    pub fn incomplete_agents(&self) -> Vec<AgentId> {
        (0..self.n)
            .filter(|&i| !self.incomplete[i].is_empty())
            .map(AgentId)
            .collect()
    }

    pub fn total_pairs(&self) -> usize {
        self.load.iter().sum()
    }

    /// Adds `(reviewer, paper)`. Completion bookkeeping is deferred to [`Self::tick`].
    pub fn assign(&mut self, reviewer: AgentId, paper: PaperId) {
        let idx = reviewer.0 * self.n * self.per_agent + self.col(paper);
        debug_assert!(!self.reviews[idx], "{reviewer} already reviews {paper}");
        self.reviews[idx] = true;
        self.load[reviewer.0] += 1;
        let c = self.col(paper);
        self.count[c] += 1;
        if self.count[c] >= self.k_p {
            self.incomplete[paper.author.0].remove(&paper.slot);
        }
    }

    pub fn unassign(&mut self, reviewer: AgentId, paper: PaperId) {
        let idx = reviewer.0 * self.n * self.per_agent + self.col(paper);
        debug_assert!(self.reviews[idx], "{reviewer} does not review {paper}");
        self.reviews[idx] = false;
        self.load[reviewer.0] -= 1;
        let c = self.col(paper);
        self.count[c] -= 1;
        if self.count[c] < self.k_p {
            self.incomplete[paper.author.0].insert(paper.slot);
        }
    }

    /// Advances the clock and stamps every agent that became complete since
    /// the previous tick. Returns the newly completed agents, ascending.
    pub fn tick(&mut self) -> Vec<AgentId> {
        self.clock += 1;
        let mut done = Vec::new();
        for i in 0..self.n {
            if self.incomplete[i].is_empty() && self.completed_at[i].is_none() {
                self.completed_at[i] = Some(self.clock);
                done.push(AgentId(i));
            }
        }
        done
    }

    fn received(&self, i: usize) -> usize {
        (0..self.per_agent)
            .map(|s| self.count[i * self.per_agent + s])
            .sum()
    }

    /// Agents violating `|R^a_i| = Σ_ℓ |R^p_{p_{i,ℓ}}|` among those with `P̄_i ≠ ∅`.
    ///
    /// The equality holds throughout when `k_a = m*·k_p`. With a larger `k_a`, a
    /// complete agent keeps spare capacity and can sit on a cycle, so the
    /// agent it points to receives a review without giving one.
    pub fn load_balance_violations(&self) -> Vec<AgentId> {
        (0..self.n)
            .filter(|&i| !self.incomplete[i].is_empty() && self.received(i) != self.load[i])
            .map(AgentId)
            .collect()
    }

    /// Agents with `P̄_i ≠ ∅` that review more papers than their own papers
    /// have received reviews. Validity of the final assignment rests on this
    /// set staying empty.
    pub fn load_excess_violations(&self) -> Vec<AgentId> {
        (0..self.n)
            .filter(|&i| !self.incomplete[i].is_empty() && self.load[i] > self.received(i))
            .map(AgentId)
            .collect()
    }

    pub fn to_assignment(&self) -> Assignment {
        let cols = self.n * self.per_agent;
        self.reviews
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(idx, _)| {
                let (r, c) = (idx / cols, idx % cols);
                (
                    AgentId(r),
                    PaperId::new(c / self.per_agent, c % self.per_agent),
                )
            })
            .collect()
    }
}
