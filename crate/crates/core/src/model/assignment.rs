use std::collections::BTreeSet;
use std::fmt;

use super::{AgentId, Instance, ModelError, PaperId};

/// A reviewing relation: the set of `(reviewer, paper)` pairs with `R(i, j) = 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    pairs: BTreeSet<(AgentId, PaperId)>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, reviewer: AgentId, paper: PaperId) -> bool {
        self.pairs.insert((reviewer, paper))
    }

    pub fn remove(&mut self, reviewer: AgentId, paper: PaperId) -> bool {
        self.pairs.remove(&(reviewer, paper))
    }

    pub fn contains(&self, reviewer: AgentId, paper: PaperId) -> bool {
        self.pairs.contains(&(reviewer, paper))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs ordered by reviewer, then paper.
    pub fn pairs(&self) -> impl Iterator<Item = (AgentId, PaperId)> + '_ {
        self.pairs.iter().copied()
    }

    /// `R^a_i`: the papers reviewed by `reviewer`.
    pub fn papers_of(&self, reviewer: AgentId) -> Vec<PaperId> {
        let lo = (reviewer, PaperId::new(0, 0));
        self.pairs
            .range(lo..)
            .take_while(|(r, _)| *r == reviewer)
            .map(|&(_, p)| p)
            .collect()
    }

    /// `R^p_j`: the reviewers of `paper`.
    pub fn reviewers_of(&self, paper: PaperId) -> Vec<AgentId> {
        self.pairs
            .iter()
            .filter(|(_, p)| *p == paper)
            .map(|&(r, _)| r)
            .collect()
    }

    /// Reviewer sets for every paper of `inst`, in flat order.
    ///
    /// Fails on pairs that name an agent or paper outside `inst`.
    pub fn reviewer_sets(&self, inst: &Instance) -> Result<Vec<Vec<AgentId>>, ModelError> {
        let mut sets = vec![Vec::new(); inst.m()];
        for (r, p) in self.pairs() {
            if !inst.contains_agent(r) {
                return Err(ModelError::UnknownAgent(r));
            }
            let j = inst.paper_index(p).ok_or(ModelError::UnknownPaper(p))?;
            sets[j].push(r);
        }
        Ok(sets)
    }

    /// Number of papers per reviewer, for `n` reviewers.
    pub fn loads(&self, n: usize) -> Vec<usize> {
        let mut loads = vec![0; n];
        for (r, _) in self.pairs() {
            if r.0 < n {
                loads[r.0] += 1;
            }
        }
        loads
    }
}

impl FromIterator<(AgentId, PaperId)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (AgentId, PaperId)>>(iter: T) -> Self {
        Self {
            pairs: iter.into_iter().collect(),
        }
    }
}

/// One broken validity constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssignmentViolation {
    SelfReview { agent: AgentId, paper: PaperId },
    Overloaded {
        agent: AgentId,
        load: usize,
        k_a: usize,
    },
    ReviewerCount {
        paper: PaperId,
        count: usize,
        k_p: usize,
    },
}

impl fmt::Display for AssignmentViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SelfReview { agent, paper } => {
                write!(f, "agent {agent} reviews own paper {paper}")
            }
            Self::Overloaded { agent, load, k_a } => {
                write!(f, "agent {agent} reviews {load} papers, more than k_a = {k_a}")
            }
            Self::ReviewerCount { paper, count, k_p } => {
                write!(f, "paper {paper} has {count} reviewers instead of k_p = {k_p}")
            }
        }
    }
}

/// Checks the three validity constraints; an empty list means `asg` is valid.
pub fn validate_assignment(
    inst: &Instance,
    asg: &Assignment,
) -> Result<Vec<AssignmentViolation>, ModelError> {
    let sets = asg.reviewer_sets(inst)?;
    let mut out = Vec::new();
    for (r, p) in asg.pairs() {
        if r == p.author {
            out.push(AssignmentViolation::SelfReview { agent: r, paper: p });
        }
    }
    for (agent, load) in asg.loads(inst.n()).into_iter().enumerate() {
        if load > inst.k_a() {
            out.push(AssignmentViolation::Overloaded {
                agent: AgentId(agent),
                load,
                k_a: inst.k_a(),
            });
        }
    }
    for (j, set) in sets.iter().enumerate() {
        if set.len() != inst.k_p() {
            out.push(AssignmentViolation::ReviewerCount {
                paper: inst.paper_at(j),
                count: set.len(),
                k_p: inst.k_p(),
            });
        }
    }
    Ok(out)
}

/// Additive welfare of an assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Utilities {
    /// `u^p_j`, flat paper order.
    pub paper_scores: Vec<f64>,
    /// `u_i`, the summed score of the agent's papers.
    pub agent_utilities: Vec<f64>,
    pub usw: f64,
    /// Minimum paper score; 0 when there are no papers.
    pub esw: f64,
}

/// `u^p_j = Σ_{i ∈ R^p_j} S(i, j)` for every paper, plus agent totals, USW and ESW.
pub fn compute_utilities(inst: &Instance, asg: &Assignment) -> Result<Utilities, ModelError> {
    let scores = inst.scores().ok_or(ModelError::NoScores)?;
    let sets = asg.reviewer_sets(inst)?;
    let mut paper_scores = Vec::with_capacity(inst.m());
    for (j, set) in sets.iter().enumerate() {
        let mut total = 0.0;
        for &r in set {
            total += scores.get(r.0, j).ok_or(ModelError::MissingScore {
                reviewer: r,
                paper: inst.paper_at(j),
            })?;
        }
        paper_scores.push(total);
    }
    let mut agent_utilities = vec![0.0; inst.n()];
    for (j, s) in paper_scores.iter().enumerate() {
        agent_utilities[inst.paper_at(j).author.0] += s;
    }
    let usw = paper_scores.iter().sum();
    let esw = paper_scores.iter().copied().reduce(f64::min).unwrap_or(0.0);
    Ok(Utilities {
        paper_scores,
        agent_utilities,
        usw,
        esw,
    })
}

/// Paper scores in integer [`score_units`](super::score_units), flat paper order.
pub fn paper_score_units(inst: &Instance, asg: &Assignment) -> Result<Vec<i64>, ModelError> {
    let scores = inst.scores().ok_or(ModelError::NoScores)?;
    let sets = asg.reviewer_sets(inst)?;
    sets.iter()
        .enumerate()
        .map(|(j, set)| {
            set.iter()
                .map(|&r| {
                    scores
                        .get(r.0, j)
                        .map(super::score_units)
                        .ok_or(ModelError::MissingScore {
                            reviewer: r,
                            paper: inst.paper_at(j),
                        })
                })
                .sum()
        })
        .collect()
}
