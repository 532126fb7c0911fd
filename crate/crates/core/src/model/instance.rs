use std::fmt;

use super::{rankings_from_scores, AgentId, ModelError, PaperId, SimilarityMatrix};

/// A peer-review problem: agents, their submissions, capacities and
/// per-submission reviewer rankings.
///
/// Papers are stored in a flat order (author ascending, then slot), which
/// agrees with the ordering of [`PaperId`].
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    k_a: usize,
    k_p: usize,
    submissions: Vec<usize>,
    offsets: Vec<usize>,
    rankings: Vec<Vec<AgentId>>,
    scores: Option<SimilarityMatrix>,
    agent_labels: Vec<String>,
    paper_labels: Vec<String>,
}

/// One broken instance invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceViolation {
    ZeroReviewLoad,
    ZeroReviewersPerPaper,
    /// `m_i · k_p > k_a`.
    SubmissionLoad {
        agent: AgentId,
        demand: usize,
        k_a: usize,
    },
    /// `n < k_p + 1`: some paper cannot find `k_p` reviewers other than its author.
    TooFewAgents { n: usize, k_p: usize },
    RankingNotPermutation { paper: PaperId },
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroReviewLoad => write!(f, "k_a must be positive"),
            Self::ZeroReviewersPerPaper => write!(f, "k_p must be positive"),
            Self::SubmissionLoad { agent, demand, k_a } => write!(
                f,
                "agent {agent} needs {demand} reviews (m_i * k_p) but only provides k_a = {k_a}"
            ),
            Self::TooFewAgents { n, k_p } => {
                write!(f, "n = {n} agents cannot supply k_p = {k_p} non-author reviewers")
            }
            Self::RankingNotPermutation { paper } => {
                write!(f, "ranking of paper {paper} is not a permutation of the other agents")
            }
        }
    }
}

fn offsets_of(submissions: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(submissions.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &m in submissions {
        acc += m;
        offsets.push(acc);
    }
    offsets
}

impl Instance {
    /// Builds an instance from explicit rankings, `rankings[i][l]` being the
    /// order over reviewers for the `l`-th submission of agent `i`.
    ///
    /// No invariant is checked here; see [`Instance::validate`].
    pub fn new(
        k_a: usize,
        k_p: usize,
        rankings: Vec<Vec<Vec<AgentId>>>,
    ) -> Self {
        let submissions: Vec<usize> = rankings.iter().map(Vec::len).collect();
        let offsets = offsets_of(&submissions);
        let flat: Vec<Vec<AgentId>> = rankings.into_iter().flatten().collect();
        let n = submissions.len();
        Self {
            k_a,
            k_p,
            agent_labels: (1..=n).map(|i| i.to_string()).collect(),
            paper_labels: default_paper_labels(&submissions),
            submissions,
            offsets,
            rankings: flat,
            scores: None,
        }
    }

    /// Builds an instance whose rankings are derived from `scores`
    /// (reviewers × flat papers), see [`rankings_from_scores`].
    pub fn from_scores(
        k_a: usize,
        k_p: usize,
        submissions: Vec<usize>,
        scores: SimilarityMatrix,
    ) -> Result<Self, ModelError> {
        let offsets = offsets_of(&submissions);
        let n = submissions.len();
        let m = offsets[n];
        check_score_shape(&scores, n, m)?;
        let ids: Vec<PaperId> = flat_ids(&submissions);
        let authors: Vec<AgentId> = ids.iter().map(|p| p.author).collect();
        let rankings = rankings_from_scores(&scores, &authors, &ids)?;
        Ok(Self {
            k_a,
            k_p,
            agent_labels: (1..=n).map(|i| i.to_string()).collect(),
            paper_labels: default_paper_labels(&submissions),
            submissions,
            offsets,
            rankings,
            scores: Some(scores),
        })
    }

    /// Attaches scores without touching the rankings.
    pub fn with_scores(mut self, scores: SimilarityMatrix) -> Result<Self, ModelError> {
        check_score_shape(&scores, self.n(), self.m())?;
        self.scores = Some(scores);
        Ok(self)
    }

    pub fn with_labels(
        mut self,
        agent_labels: Vec<String>,
        paper_labels: Vec<String>,
    ) -> Result<Self, ModelError> {
        if agent_labels.len() != self.n() {
            return Err(ModelError::LabelCount {
                expected: self.n(),
                found: agent_labels.len(),
            });
        }
        if paper_labels.len() != self.m() {
            return Err(ModelError::LabelCount {
                expected: self.m(),
                found: paper_labels.len(),
            });
        }
        self.agent_labels = agent_labels;
        self.paper_labels = paper_labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.submissions.len()
    }

    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_p(&self) -> usize {
        self.k_p
    }

    /// Total number of submissions.
    pub fn m(&self) -> usize {
        self.rankings.len()
    }

    pub fn submissions(&self, agent: AgentId) -> usize {
        self.submissions[agent.0]
    }

    pub fn submission_counts(&self) -> &[usize] {
        &self.submissions
    }

    pub fn max_submissions(&self) -> usize {
        self.submissions.iter().copied().max().unwrap_or(0)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.n()).map(AgentId)
    }

    /// All papers in flat order.
    pub fn papers(&self) -> impl Iterator<Item = PaperId> + '_ {
        self.submissions
            .iter()
            .enumerate()
            .flat_map(|(i, &m)| (0..m).map(move |l| PaperId::new(i, l)))
    }

    pub fn papers_of(&self, agent: AgentId) -> impl Iterator<Item = PaperId> {
        (0..self.submissions[agent.0]).map(move |l| PaperId { author: agent, slot: l })
    }

    pub fn contains_agent(&self, agent: AgentId) -> bool {
        agent.0 < self.n()
    }

    /// Flat index of `paper`, if it belongs to this instance.
    pub fn paper_index(&self, paper: PaperId) -> Option<usize> {
        let i = paper.author.0;
        (i < self.n() && paper.slot < self.submissions[i]).then(|| self.offsets[i] + paper.slot)
    }

    /// Inverse of [`Instance::paper_index`].
    pub fn paper_at(&self, index: usize) -> PaperId {
        let author = self.offsets.partition_point(|&o| o <= index) - 1;
        PaperId::new(author, index - self.offsets[author])
    }

    pub fn ranking(&self, paper: PaperId) -> &[AgentId] {
        let j = self.paper_index(paper).expect("paper belongs to instance");
        &self.rankings[j]
    }

    pub fn scores(&self) -> Option<&SimilarityMatrix> {
        self.scores.as_ref()
    }

    /// `S(reviewer, paper)`, if scores are attached and the entry exists.
    pub fn score(&self, reviewer: AgentId, paper: PaperId) -> Option<f64> {
        let j = self.paper_index(paper)?;
        self.scores.as_ref()?.get(reviewer.0, j)
    }

    pub fn agent_label(&self, agent: AgentId) -> &str {
        &self.agent_labels[agent.0]
    }

    pub fn paper_label(&self, paper: PaperId) -> &str {
        let j = self.paper_index(paper).expect("paper belongs to instance");
        &self.paper_labels[j]
    }

    pub fn agent_labels(&self) -> &[String] {
        &self.agent_labels
    }

    pub fn paper_labels(&self) -> &[String] {
        &self.paper_labels
    }

    /// Lists every broken invariant; an empty list means the instance is valid.
    pub fn validate(&self) -> Vec<InstanceViolation> {
        let mut out = Vec::new();
        if self.k_a == 0 {
            out.push(InstanceViolation::ZeroReviewLoad);
        }
        if self.k_p == 0 {
            out.push(InstanceViolation::ZeroReviewersPerPaper);
        }
        for agent in self.agents() {
            let demand = self.submissions(agent) * self.k_p;
            if demand > self.k_a {
                out.push(InstanceViolation::SubmissionLoad {
                    agent,
                    demand,
                    k_a: self.k_a,
                });
            }
        }
        if self.n() < self.k_p + 1 {
            out.push(InstanceViolation::TooFewAgents {
                n: self.n(),
                k_p: self.k_p,
            });
        }
        let n = self.n();
        let mut seen = vec![false; n];
        for paper in self.papers() {
            seen.iter_mut().for_each(|s| *s = false);
            let ranking = self.ranking(paper);
            let ok = ranking.len() + 1 == n
                && ranking.iter().all(|&r| {
                    r.0 < n && r != paper.author && !std::mem::replace(&mut seen[r.0], true)
                });
            if !ok {
                out.push(InstanceViolation::RankingNotPermutation { paper });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Sub-instance on a subset of agents, keeping only the listed papers of
    /// each kept agent. Rankings are re-derived by filtering the original
    /// orders, scores and labels are carried over.
    pub fn restrict(&self, agents: &[AgentId], keep: impl Fn(PaperId) -> bool) -> Self {
        let mut new_index = vec![None; self.n()];
        for (k, a) in agents.iter().enumerate() {
            new_index[a.0] = Some(k);
        }
        let kept: Vec<Vec<PaperId>> = agents
            .iter()
            .map(|&a| self.papers_of(a).filter(|&p| keep(p)).collect())
            .collect();
        let submissions: Vec<usize> = kept.iter().map(Vec::len).collect();
        let old_cols: Vec<usize> = kept
            .iter()
            .flatten()
            .map(|&p| self.paper_index(p).unwrap())
            .collect();
        let rankings: Vec<Vec<AgentId>> = old_cols
            .iter()
            .map(|&j| {
                self.rankings[j]
                    .iter()
                    .filter_map(|r| new_index[r.0].map(AgentId))
                    .collect()
            })
            .collect();
        let old_rows: Vec<usize> = agents.iter().map(|a| a.0).collect();
        Self {
            k_a: self.k_a,
            k_p: self.k_p,
            offsets: offsets_of(&submissions),
            submissions,
            rankings,
            scores: self.scores.as_ref().map(|s| s.select(&old_rows, &old_cols)),
            agent_labels: old_rows.iter().map(|&r| self.agent_labels[r].clone()).collect(),
            paper_labels: old_cols.iter().map(|&j| self.paper_labels[j].clone()).collect(),
        }
    }

    pub(crate) fn from_parts(
        k_a: usize,
        k_p: usize,
        submissions: Vec<usize>,
        rankings: Vec<Vec<AgentId>>,
        scores: Option<SimilarityMatrix>,
        agent_labels: Vec<String>,
        paper_labels: Vec<String>,
    ) -> Self {
        Self {
            k_a,
            k_p,
            offsets: offsets_of(&submissions),
            submissions,
            rankings,
            scores,
            agent_labels,
            paper_labels,
        }
    }
}

fn check_score_shape(scores: &SimilarityMatrix, n: usize, m: usize) -> Result<(), ModelError> {
    if scores.reviewers() != n || scores.papers() != m {
        return Err(ModelError::ScoreShape {
            rows: scores.reviewers(),
            cols: scores.papers(),
            expected_rows: n,
            expected_cols: m,
        });
    }
    Ok(())
}

fn flat_ids(submissions: &[usize]) -> Vec<PaperId> {
    submissions
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| (0..m).map(move |l| PaperId::new(i, l)))
        .collect()
}

fn default_paper_labels(submissions: &[usize]) -> Vec<String> {
    flat_ids(submissions)
        .into_iter()
        .map(|p| {
            if submissions[p.author.0] == 1 {
                format!("p{}", p.author.0 + 1)
            } else {
                format!("p{}.{}", p.author.0 + 1, p.slot + 1)
            }
        })
        .collect()
}
