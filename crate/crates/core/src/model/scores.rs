use super::{AgentId, ModelError, PaperId};

/// Resolution of exact score arithmetic: scores are compared as integer
/// multiples of `1 / SCORE_UNITS`.
pub const SCORE_UNITS: f64 = 1e9;

/// `score` as an integer count of `1 / SCORE_UNITS`, for comparisons that must
/// not depend on floating-point summation order.
pub fn score_units(score: f64) -> i64 {
    (score * SCORE_UNITS).round() as i64
}

/// Dense reviewer × paper similarity scores. Entries may be absent; the
/// author's own column entry is never read.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    reviewers: usize,
    papers: usize,
    values: Vec<Option<f64>>,
}

impl SimilarityMatrix {
    pub fn new(reviewers: usize, papers: usize) -> Self {
        Self {
            reviewers,
            papers,
            values: vec![None; reviewers * papers],
        }
    }

    /// Builds a complete matrix from rows indexed by reviewer.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let reviewers = rows.len();
        let papers = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(reviewers, papers);
        for (r, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), papers, "ragged similarity rows");
            for (p, v) in row.into_iter().enumerate() {
                m.set(r, p, v);
            }
        }
        m
    }

    pub fn reviewers(&self) -> usize {
        self.reviewers
    }

    pub fn papers(&self) -> usize {
        self.papers
    }

    pub fn get(&self, reviewer: usize, paper: usize) -> Option<f64> {
        self.values[reviewer * self.papers + paper]
    }

    pub fn set(&mut self, reviewer: usize, paper: usize, value: f64) {
        self.values[reviewer * self.papers + paper] = Some(value);
    }

    /// Largest present entry, or `None` for an empty matrix.
    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            reviewers: self.reviewers,
            papers: self.papers,
            values: self.values.iter().map(|v| v.map(&f)).collect(),
        }
    }

    /// Column subset, in the given order.
    pub fn select(&self, reviewers: &[usize], papers: &[usize]) -> Self {
        let mut out = Self::new(reviewers.len(), papers.len());
        for (nr, &r) in reviewers.iter().enumerate() {
            for (np, &p) in papers.iter().enumerate() {
                out.values[nr * papers.len() + np] = self.get(r, p);
            }
        }
        out
    }
}

/// Derives each paper's reviewer ranking from similarity scores.
///
/// `authors[j]` is the author of column `j`; rows are reviewers. Reviewers are
/// sorted by descending score, ties broken by ascending reviewer index, and the
/// author is left out. `paper_ids[j]` is only used to name a missing entry.
pub fn rankings_from_scores(
    scores: &SimilarityMatrix,
    authors: &[AgentId],
    paper_ids: &[PaperId],
) -> Result<Vec<Vec<AgentId>>, ModelError> {
    debug_assert_eq!(authors.len(), scores.papers());
    authors
        .iter()
        .enumerate()
        .map(|(j, &author)| {
            let mut scored = Vec::with_capacity(scores.reviewers().saturating_sub(1));
            for r in (0..scores.reviewers()).filter(|&r| r != author.0) {
                let s = scores.get(r, j).ok_or(ModelError::MissingScore {
                    reviewer: AgentId(r),
                    paper: paper_ids[j],
                })?;
                scored.push((s, r));
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            Ok(scored.into_iter().map(|(_, r)| AgentId(r)).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_paper(scores: &[(usize, f64)]) -> Vec<AgentId> {
        let mut m = SimilarityMatrix::new(5, 1);
        for &(r, s) in scores {
            m.set(r, 0, s);
        }
        let n = 1 + scores.len();
        let m = m.select(&(0..n).collect::<Vec<_>>(), &[0]);
        rankings_from_scores(&m, &[AgentId(0)], &[PaperId::new(0, 0)])
            .unwrap()
            .remove(0)
    }

    #[test]
    fn two_distinct_scores() {
        assert_eq!(one_paper(&[(1, 0.8), (2, 0.2)]), vec![AgentId(1), AgentId(2)]);
    }

    #[test]
    fn equal_scores_fall_back_to_index() {
        assert_eq!(
            one_paper(&[(1, 0.4), (2, 0.4), (3, 0.4)]),
            vec![AgentId(1), AgentId(2), AgentId(3)]
        );
    }

    #[test]
    fn single_tie_resolved_by_index() {
        assert_eq!(
            one_paper(&[(1, 0.5), (2, 0.5), (3, 0.9)]),
            vec![AgentId(3), AgentId(1), AgentId(2)]
        );
    }

    #[test]
    fn missing_entry_names_the_pair() {
        let mut m = SimilarityMatrix::new(3, 1);
        m.set(1, 0, 0.3);
        let err = rankings_from_scores(&m, &[AgentId(0)], &[PaperId::new(0, 0)]).unwrap_err();
        assert_eq!(
            err,
            ModelError::MissingScore {
                reviewer: AgentId(2),
                paper: PaperId::new(0, 0)
            }
        );
    }
}
