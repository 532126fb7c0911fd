//! Integral min-cost flow by successive shortest paths.
//!
//! Dijkstra with Johnson potentials; negative arc costs are allowed as long
//! as the initial graph has no negative cycle (potentials are seeded with
//! Bellman-Ford in that case). Ties between equal-cost paths resolve towards
//! lower node ids, so results are deterministic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

#[derive(Clone, Debug)]
pub struct MinCostFlow {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

/// Handle to an arc added with [`MinCostFlow::add_arc`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcId(usize);

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> ArcId {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        ArcId(id)
    }

    /// Flow currently routed through `arc`.
    pub fn flow(&self, arc: ArcId) -> i64 {
        self.arcs[arc.0 ^ 1].cap
    }

    fn initial_potentials(&self, source: usize) -> Vec<i64> {
        let n = self.nodes();
        if self.arcs.iter().step_by(2).all(|a| a.cost >= 0) {
            return vec![0; n];
        }
        let mut dist = vec![i64::MAX; n];
        dist[source] = 0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == i64::MAX {
                    continue;
                }
                for &e in &self.adj[u] {
                    let a = &self.arcs[e];
                    if a.cap > 0 && dist[u] + a.cost < dist[a.to] {
                        dist[a.to] = dist[u] + a.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist.into_iter()
            .map(|d| if d == i64::MAX { 0 } else { d })
            .collect()
    }

    /// Pushes up to `limit` units from `source` to `sink` at minimum cost.
    /// Returns `(flow, cost)`.
    pub fn solve(&mut self, source: usize, sink: usize, limit: i64) -> (i64, i64) {
        let n = self.nodes();
        let mut potential = self.initial_potentials(source);
        let mut flow = 0;
        let mut cost = 0;
        let mut dist = vec![i64::MAX; n];
        let mut parent = vec![usize::MAX; n];
        while flow < limit {
            dist.iter_mut().for_each(|d| *d = i64::MAX);
            parent.iter_mut().for_each(|p| *p = usize::MAX);
            dist[source] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let a = &self.arcs[e];
                    if a.cap == 0 {
                        continue;
                    }
                    let nd = d + a.cost + potential[u] - potential[a.to];
                    if nd < dist[a.to] {
                        dist[a.to] = nd;
                        parent[a.to] = e;
                        heap.push(Reverse((nd, a.to)));
                    }
                }
            }
            if dist[sink] == i64::MAX {
                break;
            }
            for v in 0..n {
                if dist[v] != i64::MAX {
                    potential[v] += dist[v];
                }
            }
            let mut push = limit - flow;
            let mut v = sink;
            while v != source {
                let e = parent[v];
                push = push.min(self.arcs[e].cap);
                v = self.arcs[e ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let e = parent[v];
                self.arcs[e].cap -= push;
                self.arcs[e ^ 1].cap += push;
                cost += push * self.arcs[e].cost;
                v = self.arcs[e ^ 1].to;
            }
            flow += push;
        }
        (flow, cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_parallel_route() {
        let mut g = MinCostFlow::new(4);
        let a = g.add_arc(0, 1, 1, 5);
        let b = g.add_arc(0, 2, 1, 1);
        g.add_arc(1, 3, 1, 0);
        g.add_arc(2, 3, 1, 0);
        assert_eq!(g.solve(0, 3, 1), (1, 1));
        assert_eq!((g.flow(a), g.flow(b)), (0, 1));
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // Classic case where the second path cancels part of the first.
        let mut g = MinCostFlow::new(4);
        g.add_arc(0, 1, 1, 1);
        g.add_arc(0, 2, 1, 2);
        g.add_arc(1, 2, 1, 0);
        g.add_arc(1, 3, 1, 2);
        g.add_arc(2, 3, 1, 1);
        assert_eq!(g.solve(0, 3, 2), (2, 6));
    }

    #[test]
    fn negative_costs_use_bellman_ford_seed() {
        let mut g = MinCostFlow::new(3);
        g.add_arc(0, 1, 2, -3);
        g.add_arc(1, 2, 1, 0);
        g.add_arc(0, 2, 1, -1);
        assert_eq!(g.solve(0, 2, 5), (2, -4));
    }
}
