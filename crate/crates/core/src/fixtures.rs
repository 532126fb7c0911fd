//! Small hand-checked instances used by the tests, the acceptance suite and
//! the CLI examples.

use crate::model::{AgentId, Instance, PaperId, SimilarityMatrix};

fn one_based(order: &[usize]) -> Vec<AgentId> {
    order.iter().map(|&a| AgentId(a - 1)).collect()
}

/// Six agents with one paper each, `k_a = k_p = 3`.
///
/// Ranking prefixes (1-based): 1: 2 3 4, 2: 3 1 5, 3: 1 2 5, 4: 1 3 5,
/// 5: 6 4, 6: 2. Each ranking continues with the remaining agents in
/// ascending order.
pub fn six_agent_example() -> Instance {
    let prefixes: [&[usize]; 6] = [&[2, 3, 4], &[3, 1, 5], &[1, 2, 5], &[1, 3, 5], &[6, 4], &[2]];
    let rankings = prefixes
        .iter()
        .enumerate()
        .map(|(i, prefix)| {
            let author = i + 1;
            let mut order = prefix.to_vec();
            order.extend((1..=6).filter(|a| *a != author && !prefix.contains(a)));
            vec![one_based(&order)]
        })
        .collect();
    Instance::new(3, 3, rankings)
}

/// [`six_agent_example`] with scores `S(r, p) = (5 − position of r in p's ranking) / 5`,
/// so the scores reproduce the rankings exactly.
pub fn six_agent_example_with_scores() -> Instance {
    let inst = six_agent_example();
    let mut s = SimilarityMatrix::new(6, 6);
    for p in inst.papers().collect::<Vec<_>>() {
        let j = inst.paper_index(p).unwrap();
        s.set(p.author.0, j, 0.0);
        for (pos, r) in inst.ranking(p).iter().enumerate() {
            s.set(r.0, j, (5 - pos) as f64 / 5.0);
        }
    }
    inst.with_scores(s).expect("shape matches")
}

/// The final assignment of the worked six-agent run, as 1-based
/// `(reviewer, paper author)` pairs.
pub const SIX_AGENT_FINAL: [(usize, [usize; 3]); 6] = [
    (1, [6, 2, 5]),
    (2, [1, 3, 6]),
    (3, [2, 1, 4]),
    (4, [1, 5, 6]),
    (5, [2, 3, 4]),
    (6, [5, 4, 3]),
];

/// Partial assignment left by cycle elimination on [`six_agent_example`],
/// as 1-based `(reviewer, paper authors)`.
pub const SIX_AGENT_AFTER_TTC: [(usize, &[usize]); 6] = [
    (1, &[3, 2, 4]),
    (2, &[1, 3, 6]),
    (3, &[2, 1, 4]),
    (4, &[1, 5]),
    (5, &[2, 3]),
    (6, &[5]),
];

/// Expands 1-based `(reviewer, authors)` rows into single-paper pairs.
pub fn one_based_pairs<'a>(
    rows: impl IntoIterator<Item = (usize, &'a [usize])>,
) -> crate::model::Assignment {
    rows.into_iter()
        .flat_map(|(r, papers)| {
            papers
                .iter()
                .map(move |&a| (AgentId(r - 1), PaperId::new(a - 1, 0)))
        })
        .collect()
}

/// Three agents, `k_a = k_p = 1`. The derangement 1→p2, 2→p3, 3→p1 has
/// USW 1.6 and ESW 0.2; the other derangement has 1.3 and 0.1.
pub fn three_agent_scores() -> Instance {
    Instance::from_scores(
        1,
        1,
        vec![1, 1, 1],
        SimilarityMatrix::from_rows(vec![
            vec![0.0, 0.9, 0.1],
            vec![0.8, 0.0, 0.5],
            vec![0.2, 0.4, 0.0],
        ]),
    )
    .expect("square scores")
}

/// Four agents, `k_a = k_p = 1`, built so that the USW-optimal assignment
/// 1→p4, 2→p3, 3→p1, 4→p2 leaves agents 1 and 2 better off reviewing each
/// other (utilities 0.2 → 0.9 and 0.3 → 0.9).
pub fn four_agent_deviation() -> Instance {
    Instance::from_scores(
        1,
        1,
        vec![1, 1, 1, 1],
        SimilarityMatrix::from_rows(vec![
            vec![0.0, 0.9, 0.0, 1.0],
            vec![0.9, 0.0, 1.0, 0.0],
            vec![0.2, 0.0, 0.0, 0.0],
            vec![0.0, 0.3, 0.0, 0.0],
        ]),
    )
    .expect("square scores")
}

/// The USW-optimal assignment of [`four_agent_deviation`].
pub fn four_agent_usw_assignment() -> crate::model::Assignment {
    one_based_pairs([(1, &[4][..]), (2, &[3]), (3, &[1]), (4, &[2])])
}

/// Random scored instance: `n` agents with 1 to `max_papers` submissions each,
/// scores with three decimals drawn uniformly from `[0, 1]`, and
/// `k_a = load_factor · m* · k_p`, which keeps the instance valid.
pub fn random_instance(
    rng: &mut impl rand::Rng,
    n: usize,
    max_papers: usize,
    k_p: usize,
    load_factor: usize,
) -> Instance {
    let submissions: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_papers)).collect();
    let m: usize = submissions.iter().sum();
    let m_star = submissions.iter().copied().max().unwrap_or(0);
    let rows = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(0..=1000) as f64 / 1000.0).collect())
        .collect();
    Instance::from_scores(
        load_factor * m_star * k_p,
        k_p,
        submissions,
        SimilarityMatrix::from_rows(rows),
    )
    .expect("complete scores")
}

/// Random strict rankings without scores, one paper per agent.
pub fn random_rankings(rng: &mut impl rand::Rng, n: usize, k_a: usize, k_p: usize) -> Instance {
    use rand::seq::SliceRandom;
    let rankings = (0..n)
        .map(|i| {
            let mut order: Vec<AgentId> = (0..n).filter(|&r| r != i).map(AgentId).collect();
            order.shuffle(rng);
            vec![order]
        })
        .collect();
    Instance::new(k_a, k_p, rankings)
}

/// Synthetic conference data with topical communities.
///
/// `n` reviewers each author the paper with the same index (the conflict
/// matrix is the identity). Reviewer `r` belongs to community `r % topics`.
/// Scores are drawn from `[0.4, 1.0]` inside a community and from `[0, 0.3]`
/// outside it, a fifth of the outside entries are exactly zero, and all values
/// have three decimals.
pub fn synthetic_dataset(seed: u64, n: usize, topics: usize) -> crate::ingest::RawDataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut scores = SimilarityMatrix::new(n, n);
    for r in 0..n {
        for p in 0..n {
            let v = if r % topics == p % topics {
                rng.random_range(400..=1000)
            } else if rng.random_bool(0.2) {
                0
            } else {
                rng.random_range(0..=300)
            };
            scores.set(r, p, v as f64 / 1000.0);
        }
    }
    crate::ingest::RawDataset {
        reviewer_ids: (1..=n).map(|i| format!("r{i}")).collect(),
        paper_ids: (1..=n).map(|i| format!("p{i}")).collect(),
        scores,
        conflicts: Some((0..n).map(|r| (0..n).map(|p| r == p).collect()).collect()),
    }
}

/// The scores of a single-paper instance as a dataset whose reviewer `i`
/// authors paper `i`, labelled like the instance.
pub fn dataset_of(inst: &Instance) -> crate::ingest::RawDataset {
    let n = inst.n();
    let mut scores = inst.scores().cloned().unwrap_or_else(|| SimilarityMatrix::new(n, n));
    for i in 0..n {
        if scores.get(i, i).is_none() {
            scores.set(i, i, 0.0);
        }
    }
    crate::ingest::RawDataset {
        reviewer_ids: inst.agent_labels().to_vec(),
        paper_ids: inst.paper_labels().to_vec(),
        scores,
        conflicts: Some((0..n).map(|r| (0..n).map(|p| r == p).collect()).collect()),
    }
}
