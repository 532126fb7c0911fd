use super::{AgentId, Assignment, Instance};

/// An instance in which every agent has exactly `m* = max_i m_i` submissions.
///
/// Dummy papers occupy the slots `m_i..m*` of agent `i`, so a [`super::PaperId`]
/// means the same real paper in the source and the padded instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedInstance {
    instance: Instance,
    original_submissions: Vec<usize>,
}

impl PaddedInstance {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn per_agent(&self) -> usize {
        self.instance.max_submissions()
    }

    pub fn is_dummy(&self, paper: super::PaperId) -> bool {
        paper.slot >= self.original_submissions[paper.author.0]
    }

    /// Dummy flag per paper, in flat order.
    pub fn dummy_flags(&self) -> Vec<bool> {
        self.instance.papers().map(|p| self.is_dummy(p)).collect()
    }
}

/// Tops every agent up to `m*` submissions with dummy papers ranked by
/// ascending agent index.
pub fn pad_to_uniform(inst: &Instance) -> PaddedInstance {
    let m_star = inst.max_submissions();
    let n = inst.n();
    let mut rankings = Vec::with_capacity(n * m_star);
    let mut paper_labels = Vec::with_capacity(n * m_star);
    for agent in inst.agents() {
        for slot in 0..m_star {
            if slot < inst.submissions(agent) {
                let p = super::PaperId { author: agent, slot };
                rankings.push(inst.ranking(p).to_vec());
                paper_labels.push(inst.paper_label(p).to_string());
            } else {
                rankings.push((0..n).filter(|&r| r != agent.0).map(AgentId).collect());
                paper_labels.push(format!("dummy:{}:{}", inst.agent_label(agent), slot));
            }
        }
    }
    let scores = inst.scores().map(|s| {
        let mut padded = super::SimilarityMatrix::new(n, n * m_star);
        for (j, p) in inst.papers().enumerate() {
            let col = p.author.0 * m_star + p.slot;
            for r in 0..n {
                if let Some(v) = s.get(r, j) {
                    padded.set(r, col, v);
                }
            }
        }
        padded
    });
    PaddedInstance {
        instance: Instance::from_parts(
            inst.k_a(),
            inst.k_p(),
            vec![m_star; n],
            rankings,
            scores,
            inst.agent_labels().to_vec(),
            paper_labels,
        ),
        original_submissions: inst.submission_counts().to_vec(),
    }
}

/// Drops every pair that touches a dummy paper.
pub fn strip_dummies(padded: &PaddedInstance, asg: &Assignment) -> Assignment {
    asg.pairs()
        .filter(|&(_, p)| !padded.is_dummy(p))
        .collect()
}
