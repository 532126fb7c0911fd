use super::{CobraError, Observer, PartialAssignment, Stage, TraceEvent};
use crate::model::{AgentId, PaddedInstance, PaperId};

/// Out-degree ≤ 1 digraph: every agent points to at most one other agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceGraph {
    pub out_edge: Vec<Option<AgentId>>,
    /// `p_{i,ℓ*}` for agents with an incomplete paper.
    pub chosen_paper: Vec<Option<PaperId>>,
}

/// Result of cycle elimination on the preference graph.
#[derive(Clone, Debug)]
pub struct TtcOutcome {
    pub partial: PartialAssignment,
    /// Agents that still have an incompletely assigned paper, ascending.
    pub unfinished: Vec<AgentId>,
    /// The last `k_p − |U| + 1` agents to complete, in completion order.
    /// Empty when `unfinished` is empty.
    pub last: Vec<AgentId>,
}

fn eligible(part: &PartialAssignment, reviewer: AgentId, paper: PaperId) -> bool {
    !part.reviews(reviewer, paper) && part.load(reviewer) < part.k_a()
}

/// Builds the graph, advancing `cursors` (one per padded paper, indexing its
/// ranking) past reviewers that can no longer take the paper. During cycle
/// elimination a reviewer never becomes eligible again, so cursors only move
/// forward.
fn build_with_cursors(
    padded: &PaddedInstance,
    part: &PartialAssignment,
    cursors: &mut [usize],
) -> PreferenceGraph {
    let inst = padded.instance();
    let n = inst.n();
    let per_agent = padded.per_agent();
    let first_open = (0..n).map(AgentId).find(|&a| !part.is_agent_complete(a));
    let mut out_edge = vec![None; n];
    let mut chosen_paper = vec![None; n];
    for agent in inst.agents() {
        match part.first_incomplete(agent) {
            Some(paper) => {
                chosen_paper[agent.0] = Some(paper);
                let ranking = inst.ranking(paper);
                let cursor = &mut cursors[agent.0 * per_agent + paper.slot];
                while *cursor < ranking.len() && !eligible(part, ranking[*cursor], paper) {
                    *cursor += 1;
                }
                out_edge[agent.0] = ranking.get(*cursor).copied();
            }
            None => out_edge[agent.0] = first_open,
        }
    }
    PreferenceGraph {
        out_edge,
        chosen_paper,
    }
}

/// Each agent with an incomplete paper points to the highest-ranked agent,
/// for its lowest-slot incomplete paper, that neither reviews that paper nor
/// is at capacity. Complete agents point to the lowest-index agent that is
/// not complete.
pub fn build_preference_graph(padded: &PaddedInstance, part: &PartialAssignment) -> PreferenceGraph {
    let mut cursors = vec![0; padded.instance().m()];
    build_with_cursors(padded, part, &mut cursors)
}

/// The cycle through the lowest-index agent that lies on any cycle, listed
/// from that agent along the edges.
pub fn find_cycle(graph: &PreferenceGraph) -> Option<Vec<AgentId>> {
    let n = graph.out_edge.len();
    // 0 = unseen, 1 = on current walk, 2 = finished
    let mut state = vec![0u8; n];
    let mut best: Option<usize> = None;
    let mut path = Vec::new();
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        path.clear();
        let mut v = Some(start);
        while let Some(x) = v {
            match state[x] {
                0 => {
                    state[x] = 1;
                    path.push(x);
                    v = graph.out_edge[x].map(|a| a.0);
                }
                1 => {
                    let from = path.iter().position(|&y| y == x).unwrap();
                    let low = *path[from..].iter().min().unwrap();
                    best = Some(best.map_or(low, |b: usize| b.min(low)));
                    break;
                }
                _ => break,
            }
        }
        for &y in &path {
            state[y] = 2;
        }
    }
    let low = best?;
    let mut cycle = vec![AgentId(low)];
    let mut v = graph.out_edge[low].unwrap().0;
    while v != low {
        cycle.push(AgentId(v));
        v = graph.out_edge[v].unwrap().0;
    }
    Some(cycle)
}

pub(crate) fn check_load_balance(
    part: &PartialAssignment,
    stage: Stage,
) -> Result<(), CobraError> {
    let bad = part.load_excess_violations();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CobraError::InvariantBreach(format!(
            "{stage:?}: review load exceeds received reviews for agents {bad:?}"
        )))
    }
}

/// Top-trading-cycles on the preference graph, starting from the empty assignment.
///
/// For every cycle edge `(i, i')` where `i` still has an incomplete paper,
/// `i'` is assigned `i`'s chosen paper. One cycle is eliminated per round and
/// the graph is rebuilt, until no cycle remains.
pub fn pra_ttc(
    padded: &PaddedInstance,
    observer: &mut dyn Observer,
) -> Result<TtcOutcome, CobraError> {
    let inst = padded.instance();
    let mut part = PartialAssignment::empty(padded);
    let mut cursors = vec![0; inst.m()];
    let budget = inst.m() * inst.k_p();
    check_load_balance(&part, Stage::Ttc)?;
    observer.boundary(Stage::Ttc, &part);

    loop {
        let graph = build_with_cursors(padded, &part, &mut cursors);
        let Some(cycle) = find_cycle(&graph) else {
            break;
        };
        let round = part.clock() + 1;
        observer.event(&TraceEvent::Cycle {
            stage: Stage::Ttc,
            round,
            agents: cycle.clone(),
        });
        let before = part.total_pairs();
        for (k, &giver) in cycle.iter().enumerate() {
            let taker = cycle[(k + 1) % cycle.len()];
            if part.is_agent_complete(giver) {
                continue;
            }
            let paper = graph.chosen_paper[giver.0].expect("incomplete agent has a chosen paper");
            if !eligible(&part, taker, paper) {
                return Err(CobraError::InvariantBreach(format!(
                    "preference edge {giver}->{taker} points to an ineligible reviewer"
                )));
            }
            part.assign(taker, paper);
            observer.event(&TraceEvent::Assign {
                stage: Stage::Ttc,
                round,
                reviewer: taker,
                paper,
            });
        }
        part.tick();
        if part.total_pairs() <= before || part.total_pairs() > budget {
            return Err(CobraError::InvariantBreach(format!(
                "cycle elimination moved assigned pairs from {before} to {}",
                part.total_pairs()
            )));
        }
        check_load_balance(&part, Stage::Ttc)?;
        observer.boundary(Stage::Ttc, &part);
    }

    let unfinished = part.incomplete_agents();
    if unfinished.len() > inst.k_p() {
        return Err(CobraError::InvariantBreach(format!(
            "{} agents left with incomplete papers, more than k_p = {}",
            unfinished.len(),
            inst.k_p()
        )));
    }
    let last = if unfinished.is_empty() {
        Vec::new()
    } else {
        last_completed(&part, inst.k_p() + 1 - unfinished.len())
    };
    observer.event(&TraceEvent::TtcDone {
        unfinished: unfinished.clone(),
        last: last.clone(),
    });
    Ok(TtcOutcome {
        partial: part,
        unfinished,
        last,
    })
}

/// The `count` most recently completed agents, oldest first. Agents stamped
/// in the same round are ordered by index.
fn last_completed(part: &PartialAssignment, count: usize) -> Vec<AgentId> {
    let mut done: Vec<(u64, AgentId)> = (0..part.n())
        .map(AgentId)
        .filter_map(|a| part.completed_at(a).map(|t| (t, a)))
        .collect();
    done.sort();
    let skip = done.len().saturating_sub(count);
    done.into_iter().skip(skip).map(|(_, a)| a).collect()
}
