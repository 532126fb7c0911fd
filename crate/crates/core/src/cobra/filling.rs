use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::ttc::check_load_balance;
use super::{CobraError, Observer, PartialAssignment, Stage, TraceEvent, TtcOutcome};
use crate::model::{AgentId, Assignment, PaddedInstance, PaperId};

/// Digraph on the unfinished agents: `i → i'` when `i'` does not yet review
/// some incomplete paper of `i`. Each edge carries the lowest such paper.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GreedyGraph {
    pub nodes: Vec<AgentId>,
    pub edges: BTreeMap<AgentId, Vec<(AgentId, PaperId)>>,
}

impl GreedyGraph {
    pub fn successors(&self, agent: AgentId) -> &[(AgentId, PaperId)] {
        self.edges.get(&agent).map_or(&[], Vec::as_slice)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }

    /// First cycle closed by a back edge in a depth-first search that starts
    /// from the lowest node and visits successors in ascending order. Returns
    /// the cycle's labelled edges in path order.
    pub fn find_cycle(&self) -> Option<Vec<(AgentId, AgentId, PaperId)>> {
        // 0 = unseen, 1 = on stack, 2 = done
        let mut state: BTreeMap<AgentId, u8> = self.nodes.iter().map(|&a| (a, 0)).collect();
        for &root in &self.nodes {
            if state[&root] != 0 {
                continue;
            }
            // (node, next successor position)
            let mut stack: Vec<(AgentId, usize)> = vec![(root, 0)];
            state.insert(root, 1);
            while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
                let succ = self.successors(v);
                if *pos == succ.len() {
                    state.insert(v, 2);
                    stack.pop();
                    continue;
                }
                let (w, _) = succ[*pos];
                *pos += 1;
                match state[&w] {
                    0 => {
                        state.insert(w, 1);
                        stack.push((w, 0));
                    }
                    1 => {
                        let from = stack.iter().position(|&(x, _)| x == w).unwrap();
                        let members: Vec<AgentId> = stack[from..].iter().map(|&(x, _)| x).collect();
                        let edges = members
                            .iter()
                            .enumerate()
                            .map(|(k, &a)| {
                                let b = members[(k + 1) % members.len()];
                                let label = self
                                    .successors(a)
                                    .iter()
                                    .find(|&&(t, _)| t == b)
                                    .unwrap()
                                    .1;
                                (a, b, label)
                            })
                            .collect();
                        return Some(edges);
                    }
                    _ => {}
                }
            }
        }
        None
    }

    /// Sources-first order: an agent is emitted once no remaining agent
    /// points to it; ties go to the lowest index. `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<AgentId>> {
        let mut indegree: BTreeMap<AgentId, usize> = self.nodes.iter().map(|&a| (a, 0)).collect();
        for succ in self.edges.values() {
            for &(w, _) in succ {
                *indegree.get_mut(&w).unwrap() += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<AgentId>> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&a, _)| Reverse(a))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &(w, _) in self.successors(v) {
                let d = indegree.get_mut(&w).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse(w));
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }
}

/// Builds the greedy graph over `unfinished`.
pub fn build_greedy_graph(
    _padded: &PaddedInstance,
    part: &PartialAssignment,
    unfinished: &[AgentId],
) -> GreedyGraph {
    let mut nodes = unfinished.to_vec();
    nodes.sort();
    let mut edges = BTreeMap::new();
    for &i in &nodes {
        let succ: Vec<(AgentId, PaperId)> = nodes
            .iter()
            .filter(|&&t| t != i)
            .filter_map(|&t| {
                part.incomplete_papers(i)
                    .find(|&p| !part.reviews(t, p))
                    .map(|p| (t, p))
            })
            .collect();
        if !succ.is_empty() {
            edges.insert(i, succ);
        }
    }
    GreedyGraph { nodes, edges }
}

/// Completes the partial assignment left by [`super::pra_ttc`].
///
/// Phase one eliminates greedy-graph cycles, moving agents whose papers all
/// become complete to the back of the `last` list. Phase two walks the
/// remaining agents in sources-first topological order; for each incomplete
/// paper `p` of the current agent `a` it takes the lowest complete paper `q`
/// of another agent in `unfinished ∪ last` that `a` does not review, and the
/// lowest reviewer `d` of `q` that does not review `p`, then rewires
/// `d: q → p` and gives `q` to `a`.
///
/// Returns the assignment on the padded instance.
pub fn filling_gaps(
    padded: &PaddedInstance,
    ttc: TtcOutcome,
    observer: &mut dyn Observer,
) -> Result<Assignment, CobraError> {
    let TtcOutcome {
        partial: mut part,
        unfinished: mut open,
        mut last,
    } = ttc;
    if open.is_empty() {
        return Ok(part.to_assignment());
    }

    // Phase 1
    loop {
        let graph = build_greedy_graph(padded, &part, &open);
        let Some(cycle) = graph.find_cycle() else {
            break;
        };
        let round = part.clock() + 1;
        observer.event(&TraceEvent::Cycle {
            stage: Stage::FillCycles,
            round,
            agents: cycle.iter().map(|&(a, _, _)| a).collect(),
        });
        for &(_, taker, paper) in &cycle {
            if part.load(taker) >= part.k_a() || part.reviews(taker, paper) {
                return Err(CobraError::InvariantBreach(format!(
                    "greedy edge gives {paper} to {taker}, who cannot take it"
                )));
            }
            part.assign(taker, paper);
            observer.event(&TraceEvent::Assign {
                stage: Stage::FillCycles,
                round,
                reviewer: taker,
                paper,
            });
        }
        for agent in part.tick() {
            open.retain(|&a| a != agent);
            last.push(agent);
            observer.event(&TraceEvent::MovedToLast { round, agent });
        }
        check_load_balance(&part, Stage::FillCycles)?;
        observer.boundary(Stage::FillCycles, &part);
        if open.is_empty() {
            return Ok(part.to_assignment());
        }
    }

    // Phase 2
    let graph = build_greedy_graph(padded, &part, &open);
    let order = graph
        .topological_order()
        .ok_or_else(|| CobraError::InvariantBreach("greedy graph still cyclic".into()))?;
    observer.event(&TraceEvent::Order {
        order: order.clone(),
    });
    let mut pool: Vec<AgentId> = open.iter().chain(last.iter()).copied().collect();
    pool.sort();
    let per_agent = padded.per_agent();

    for (t, &agent) in order.iter().enumerate() {
        let round = t as u64 + 1;
        while let Some(paper) = part.first_incomplete(agent) {
            let via = pool
                .iter()
                .filter(|&&a| a != agent)
                .flat_map(|&a| (0..per_agent).map(move |slot| PaperId { author: a, slot }))
                .find(|&q| part.is_paper_complete(q) && !part.reviews(agent, q))
                .ok_or_else(|| {
                    CobraError::InvariantBreach(format!(
                        "no complete paper available to hand to agent {agent}"
                    ))
                })?;
            let donor = (0..part.n())
                .map(AgentId)
                .find(|&d| d != agent && part.reviews(d, via) && !part.reviews(d, paper))
                .ok_or_else(|| {
                    CobraError::InvariantBreach(format!(
                        "no reviewer of {via} can take {paper} instead"
                    ))
                })?;
            part.assign(donor, paper);
            part.unassign(donor, via);
            part.assign(agent, via);
            if part.load(agent) > part.k_a() {
                return Err(CobraError::InvariantBreach(format!(
                    "agent {agent} exceeds k_a after a swap"
                )));
            }
            observer.event(&TraceEvent::Swap {
                round,
                agent,
                paper,
                via,
                donor,
            });
            observer.boundary(Stage::FillSwaps, &part);
        }
    }
    Ok(part.to_assignment())
}
