#![allow(dead_code)]

use std::collections::HashMap;

use cobra_core::model::score_units;
use cobra_core::{AgentId, Instance};

/// Best achievable `(USW, ESW)` in score units, by exhaustive search over the
/// reviewer set of each paper with memoization on the load vector.
pub fn welfare_oracle(inst: &Instance) -> (i64, i64) {
    let papers: Vec<_> = inst.papers().collect();
    let units: Vec<Vec<i64>> = papers
        .iter()
        .map(|&p| {
            inst.agents()
                .map(|r| inst.score(r, p).map(score_units).unwrap_or(0))
                .collect()
        })
        .collect();
    let choices: Vec<Vec<Vec<usize>>> = papers
        .iter()
        .map(|p| {
            let pool: Vec<usize> = inst.agents().filter(|&r| r != p.author).map(AgentId::index).collect();
            subsets(&pool, inst.k_p())
        })
        .collect();
    let search = |sum_mode: bool| {
        let mut memo = HashMap::new();
        best(0, &mut vec![0u8; inst.n()], inst.k_a() as u8, &choices, &units, sum_mode, &mut memo)
            .expect("instance admits a valid assignment")
    };
    (search(true), search(false))
}

fn best(
    j: usize,
    loads: &mut Vec<u8>,
    k_a: u8,
    choices: &[Vec<Vec<usize>>],
    units: &[Vec<i64>],
    sum_mode: bool,
    memo: &mut HashMap<(usize, Vec<u8>), Option<i64>>,
) -> Option<i64> {
    if j == choices.len() {
        return Some(if sum_mode { 0 } else { i64::MAX });
    }
    if let Some(v) = memo.get(&(j, loads.clone())) {
        return *v;
    }
    let mut out: Option<i64> = None;
    for set in &choices[j] {
        if set.iter().any(|&r| loads[r] >= k_a) {
            continue;
        }
        set.iter().for_each(|&r| loads[r] += 1);
        if let Some(rest) = best(j + 1, loads, k_a, choices, units, sum_mode, memo) {
            let here: i64 = set.iter().map(|&r| units[j][r]).sum();
            let v = if sum_mode { here + rest } else { here.min(rest) };
            out = Some(out.map_or(v, |o| o.max(v)));
        }
        set.iter().for_each(|&r| loads[r] -= 1);
    }
    memo.insert((j, loads.clone()), out);
    out
}

pub fn subsets(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if pool.len() < k {
        return vec![];
    }
    let mut with: Vec<Vec<usize>> = subsets(&pool[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, pool[0]);
            s
        })
        .collect();
    with.extend(subsets(&pool[1..], k));
    with
}

/// Classic top trading cycles on a housing market where agent `i` owns house
/// `i` and `prefs[i]` ranks the other houses; the own house is implicitly
/// last. Returns `(reviewer, author)` pairs for agents that trade away from
/// their own house.
pub fn classic_ttc(prefs: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let n = prefs.len();
    let mut active = vec![true; n];
    let mut pairs = Vec::new();
    while active.iter().any(|&a| a) {
        let target: Vec<usize> = (0..n)
            .map(|i| {
                if !active[i] {
                    return usize::MAX;
                }
                prefs[i].iter().copied().find(|&h| active[h]).unwrap_or(i)
            })
            .collect();
        let start = (0..n).find(|&i| active[i]).unwrap();
        // walk until a node repeats; that node lies on a cycle
        let mut seen = vec![false; n];
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            v = target[v];
        }
        let mut cycle = vec![v];
        let mut w = target[v];
        while w != v {
            cycle.push(w);
            w = target[w];
        }
        for &i in &cycle {
            // i obtains house target[i]: i's paper is reviewed by the owner of
            // the house i receives, in the reviewing direction used by PRA-TTC.
            if target[i] != i {
                pairs.push((target[i], i));
            }
            active[i] = false;
        }
    }
    pairs.sort();
    pairs
}
