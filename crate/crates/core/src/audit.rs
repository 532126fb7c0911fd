//! Core-violation audits.
//!
//! A coalition `N′` deviates from an assignment `R` when it can cover each of
//! its members' papers with `k_p` reviewers drawn from `N′` itself, without
//! exceeding `k_a` reviews per member and without self-review, so that every
//! member's utility strictly increases. Utilities are additive similarity
//! scores, compared in integer score units.
//!
//! The improvement factor of a deviation is the minimum of
//! `u_i(R̂) / u_i(R)` over members, where members with `u_i(R) = 0` impose no
//! bound. A deviation whose members all start at zero is unbounded.
//!
//! Audits assume each agent has exactly one paper.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::flow::MinCostFlow;
use crate::model::{
    paper_score_units, score_units, validate_assignment, AgentId, Assignment, AssignmentViolation,
    Instance, ModelError, PaperId,
};

/// Default largest `n` accepted by [`exact_audit`].
pub const EXACT_MAX_N: usize = 16;
/// Default coalition size cap of [`heuristic_audit`].
pub const GROWTH_CAP: usize = 20;
/// Absolute tolerance of [`alpha_bisection`].
pub const ALPHA_TOLERANCE: f64 = 1e-3;
const GROWTH_SEEDS: usize = 64;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("audits need exactly one paper per agent; agent {0} has {1}")]
    MultiplePapers(AgentId, usize),
    #[error("assignment is not valid: {}", join(.0))]
    InvalidAssignment(Vec<AssignmentViolation>),
    #[error("exact audit is limited to {max_n} agents, instance has {n}; use the heuristic audit")]
    TooLarge { n: usize, max_n: usize },
    #[error("no deviating coalition exists at factor 1")]
    NoViolation,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A coalition together with the restricted assignment it would deviate to.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationWitness {
    /// Members, ascending.
    pub coalition: Vec<AgentId>,
    /// `R̂`: reviewer-paper pairs among the members.
    pub restricted: Assignment,
    /// `u_i(R)` per member, in score units.
    pub before: Vec<i64>,
    /// `u_i(R̂)` per member, in score units.
    pub after: Vec<i64>,
}

impl DeviationWitness {
    /// `u_i(R̂) / u_i(R)` per member; infinite when `u_i(R) = 0`.
    pub fn improvement_factors(&self) -> Vec<f64> {
        self.before
            .iter()
            .zip(&self.after)
            .map(|(&b, &a)| if b == 0 { f64::INFINITY } else { a as f64 / b as f64 })
            .collect()
    }

    /// Minimum improvement factor over members.
    pub fn alpha(&self) -> f64 {
        self.improvement_factors().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_unbounded(&self) -> bool {
        self.before.iter().all(|&b| b == 0)
    }

    pub fn size(&self) -> usize {
        self.coalition.len()
    }
}

/// Why a witness does not describe a strictly improving deviation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessFlaw {
    TooSmall { size: usize, k_p: usize },
    UnknownAgent(AgentId),
    OutsideCoalition { reviewer: AgentId, paper: PaperId },
    SelfReview(AgentId),
    ReviewerCount { paper: PaperId, count: usize },
    Overloaded { reviewer: AgentId, load: usize },
    UtilityMismatch(AgentId),
    NotStrict { agent: AgentId, before: i64, after: i64 },
}

impl fmt::Display for WitnessFlaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooSmall { size, k_p } => write!(
                f,
                "coalition of {size} is too small to complete papers with {k_p} reviewers each"
            ),
            Self::UnknownAgent(a) => write!(f, "agent {a} is not a single-paper agent of the instance"),
            Self::OutsideCoalition { reviewer, paper } => {
                write!(f, "pair ({reviewer}, {paper}) leaves the coalition")
            }
            Self::SelfReview(a) => write!(f, "agent {a} reviews own paper"),
            Self::ReviewerCount { paper, count } => {
                write!(f, "paper {paper} has {count} reviewers in the deviation")
            }
            Self::Overloaded { reviewer, load } => write!(f, "reviewer {reviewer} reviews {load} papers"),
            Self::UtilityMismatch(a) => write!(f, "recorded utilities of agent {a} are wrong"),
            Self::NotStrict { agent, before, after } => write!(
                f,
                "non-strict improvement for agent {agent}: {before} -> {after} units"
            ),
        }
    }
}

/// Per-agent data shared by all searches. Agent `i` owns paper `i`.
struct Market {
    n: usize,
    k_a: usize,
    k_p: usize,
    /// `units[r][j]`: score of reviewer `r` on agent `j`'s paper.
    units: Vec<Vec<i64>>,
    before: Vec<i64>,
}

impl Market {
    fn new(inst: &Instance, asg: &Assignment) -> Result<Self, AuditError> {
        for a in inst.agents() {
            if inst.submissions(a) != 1 {
                return Err(AuditError::MultiplePapers(a, inst.submissions(a)));
            }
        }
        let violations = validate_assignment(inst, asg)?;
        if !violations.is_empty() {
            return Err(AuditError::InvalidAssignment(violations));
        }
        let scores = inst.scores().ok_or(ModelError::NoScores)?;
        let n = inst.n();
        let mut units = vec![vec![0; n]; n];
        for r in 0..n {
            for j in (0..n).filter(|&j| j != r) {
                let s = scores.get(r, j).ok_or(ModelError::MissingScore {
                    reviewer: AgentId(r),
                    paper: PaperId::new(j, 0),
                })?;
                units[r][j] = score_units(s);
            }
        }
        Ok(Self {
            n,
            k_a: inst.k_a(),
            k_p: inst.k_p(),
            units,
            before: paper_score_units(inst, asg)?,
        })
    }

    /// Utility `j` must reach under factor `alpha`.
    fn need(&self, j: usize, alpha: f64) -> i64 {
        let b = self.before[j];
        (b + 1).max((alpha * b as f64).ceil() as i64)
    }

    fn witness(&self, members: &[usize], sets: &[Vec<usize>]) -> DeviationWitness {
        let restricted = members
            .iter()
            .zip(sets)
            .flat_map(|(&j, set)| set.iter().map(move |&r| (AgentId(r), PaperId::new(j, 0))))
            .collect();
        DeviationWitness {
            coalition: members.iter().map(|&i| AgentId(i)).collect(),
            restricted,
            before: members.iter().map(|&j| self.before[j]).collect(),
            after: members
                .iter()
                .zip(sets)
                .map(|(&j, set)| set.iter().map(|&r| self.units[r][j]).sum())
                .collect(),
        }
    }

    fn is_strict(&self, w: &DeviationWitness) -> bool {
        w.before.iter().zip(&w.after).all(|(b, a)| a > b)
    }

    /// Exhaustive search for reviewer sets giving each member at least its
    /// `need`. Returns one set per member, in member order.
    fn search(&self, members: &[usize], need: &[i64]) -> Option<Vec<Vec<usize>>> {
        if members.len() <= self.k_p {
            return None;
        }
        let mut options: Vec<(usize, Vec<(i64, Vec<usize>)>)> = Vec::with_capacity(members.len());
        for (pos, &j) in members.iter().enumerate() {
            let pool: Vec<usize> = members.iter().copied().filter(|&r| r != j).collect();
            let mut found = Vec::new();
            for_each_subset(&pool, self.k_p, &mut |set| {
                let s: i64 = set.iter().map(|&r| self.units[r][j]).sum();
                if s >= need[pos] {
                    found.push((s, set.to_vec()));
                }
            });
            if found.is_empty() {
                return None;
            }
            found.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            options.push((pos, found));
        }
        options.sort_by_key(|(pos, o)| (o.len(), *pos));
        let mut loads = vec![0usize; self.n];
        let mut chosen = vec![0usize; options.len()];
        if self.place(&options, 0, &mut loads, &mut chosen) {
            let mut sets = vec![Vec::new(); members.len()];
            for (k, (pos, o)) in options.iter().enumerate() {
                sets[*pos] = o[chosen[k]].1.clone();
            }
            Some(sets)
        } else {
            None
        }
    }

    fn place(
        &self,
        options: &[(usize, Vec<(i64, Vec<usize>)>)],
        depth: usize,
        loads: &mut [usize],
        chosen: &mut [usize],
    ) -> bool {
        if depth == options.len() {
            return true;
        }
        for (c, (_, set)) in options[depth].1.iter().enumerate() {
            if set.iter().any(|&r| loads[r] >= self.k_a) {
                continue;
            }
            set.iter().for_each(|&r| loads[r] += 1);
            chosen[depth] = c;
            if self.place(options, depth + 1, loads, chosen) {
                return true;
            }
            set.iter().for_each(|&r| loads[r] -= 1);
        }
        false
    }

    /// The best possible utility of `j` from any `k_p` reviewers in `pool`.
    fn top_sum(&self, j: usize, pool: impl Iterator<Item = usize>) -> i64 {
        let mut s: Vec<i64> = pool.filter(|&r| r != j).map(|r| self.units[r][j]).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s.iter().take(self.k_p).sum()
    }
}

fn for_each_subset(pool: &[usize], k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            go(pool, k, i + 1, cur, f);
            cur.pop();
        }
    }
    go(pool, k, 0, &mut Vec::with_capacity(k), f);
}

/// Checks that `w` is a strictly improving deviation from `asg`.
pub fn verify_witness(
    inst: &Instance,
    asg: &Assignment,
    w: &DeviationWitness,
) -> Result<(), WitnessFlaw> {
    let k_p = inst.k_p();
    if w.coalition.len() <= k_p {
        return Err(WitnessFlaw::TooSmall { size: w.coalition.len(), k_p });
    }
    let members: BTreeSet<AgentId> = w.coalition.iter().copied().collect();
    for &a in &members {
        if !inst.contains_agent(a) || inst.submissions(a) != 1 {
            return Err(WitnessFlaw::UnknownAgent(a));
        }
    }
    let mut loads = std::collections::BTreeMap::new();
    for (r, p) in w.restricted.pairs() {
        if !members.contains(&r) || !members.contains(&p.author) || p.slot != 0 {
            return Err(WitnessFlaw::OutsideCoalition { reviewer: r, paper: p });
        }
        if r == p.author {
            return Err(WitnessFlaw::SelfReview(r));
        }
        *loads.entry(r).or_insert(0usize) += 1;
    }
    for &a in &members {
        let paper = PaperId { author: a, slot: 0 };
        let count = w.restricted.reviewers_of(paper).len();
        if count != k_p {
            return Err(WitnessFlaw::ReviewerCount { paper, count });
        }
    }
    if let Some((&reviewer, &load)) = loads.iter().find(|(_, &l)| l > inst.k_a()) {
        return Err(WitnessFlaw::Overloaded { reviewer, load });
    }
    let unit = |r: AgentId, p: PaperId| inst.score(r, p).map(score_units).unwrap_or(0);
    if w.before.len() != w.coalition.len() || w.after.len() != w.coalition.len() {
        return Err(WitnessFlaw::UtilityMismatch(w.coalition[0]));
    }
    for (k, &a) in w.coalition.iter().enumerate() {
        let paper = PaperId { author: a, slot: 0 };
        let before: i64 = asg.reviewers_of(paper).iter().map(|&r| unit(r, paper)).sum();
        let after: i64 = w.restricted.reviewers_of(paper).iter().map(|&r| unit(r, paper)).sum();
        if before != w.before[k] || after != w.after[k] {
            return Err(WitnessFlaw::UtilityMismatch(a));
        }
        if after <= before {
            return Err(WitnessFlaw::NotStrict { agent: a, before, after });
        }
    }
    Ok(())
}

/// Every deviation by exactly `k_p + 1` agents.
///
/// With one paper per agent, such a coalition can only cover its papers by
/// having every member review every other member, so each coalition has one
/// candidate deviation. Complete for this coalition size.
pub fn forced_coalition_scan(
    inst: &Instance,
    asg: &Assignment,
) -> Result<Vec<DeviationWitness>, AuditError> {
    let market = Market::new(inst, asg)?;
    Ok(scan(&market))
}

fn scan(market: &Market) -> Vec<DeviationWitness> {
    let size = market.k_p + 1;
    if market.n < size || market.k_a < market.k_p {
        return Vec::new();
    }
    // Split on the lowest member so the work parallelizes.
    (0..market.n)
        .into_par_iter()
        .flat_map_iter(|first| {
            let rest: Vec<usize> = (first + 1..market.n).collect();
            let mut found = Vec::new();
            for_each_subset(&rest, size - 1, &mut |tail| {
                let mut members = Vec::with_capacity(size);
                members.push(first);
                members.extend_from_slice(tail);
                let strict = members.iter().all(|&j| {
                    let after: i64 = members.iter().filter(|&&r| r != j).map(|&r| market.units[r][j]).sum();
                    after > market.before[j]
                });
                if strict {
                    let sets: Vec<Vec<usize>> = members
                        .iter()
                        .map(|&j| members.iter().copied().filter(|&r| r != j).collect())
                        .collect();
                    found.push(market.witness(&members, &sets));
                }
            });
            found
        })
        .collect()
}

/// Largest `α` in `[1, cap]` accepted by the monotone `feasible`, to within
/// [`ALPHA_TOLERANCE`]. Returns the midpoint of the final bracket.
pub fn alpha_bisection(cap: f64, mut feasible: impl FnMut(f64) -> bool) -> Result<f64, AuditError> {
    if !feasible(1.0) {
        return Err(AuditError::NoViolation);
    }
    let (mut lo, mut hi) = (1.0, cap.max(1.0));
    if feasible(hi) {
        return Ok(hi);
    }
    while hi - lo > ALPHA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    HeuristicLowerBound,
}

impl fmt::Display for Exactness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::HeuristicLowerBound => "heuristic-lower-bound",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub violated: bool,
    pub unbounded: bool,
    /// Present only when a bounded violation exists.
    pub alpha_star: Option<f64>,
    pub witness: Option<DeviationWitness>,
    /// Largest coalition among the deviations found; 0 when none.
    pub largest_group: usize,
    pub exactness: Exactness,
}

impl AuditReport {
    fn clean(exactness: Exactness) -> Self {
        Self {
            violated: false,
            unbounded: false,
            alpha_star: None,
            witness: None,
            largest_group: 0,
            exactness,
        }
    }

    /// The violation factor used in summaries: 1 without a violation,
    /// infinite when unbounded.
    pub fn alpha(&self) -> f64 {
        if self.unbounded {
            f64::INFINITY
        } else {
            self.alpha_star.unwrap_or(1.0)
        }
    }

    /// From a set of verified witnesses; `alpha_star` is the best witness factor.
    fn from_witnesses(witnesses: &[DeviationWitness], exactness: Exactness) -> Self {
        if witnesses.is_empty() {
            return Self::clean(exactness);
        }
        let largest_group = witnesses.iter().map(DeviationWitness::size).max().unwrap_or(0);
        if let Some(w) = witnesses.iter().find(|w| w.is_unbounded()) {
            return Self {
                violated: true,
                unbounded: true,
                alpha_star: None,
                witness: Some(w.clone()),
                largest_group,
                exactness,
            };
        }
        let mut best = &witnesses[0];
        for w in witnesses {
            if w.alpha() > best.alpha() {
                best = w;
            }
        }
        Self {
            violated: true,
            unbounded: false,
            alpha_star: Some(best.alpha()),
            witness: Some(best.clone()),
            largest_group,
            exactness,
        }
    }
}

/// Exhaustive audit over all coalitions of at least `k_p + 1` agents.
pub fn exact_audit(inst: &Instance, asg: &Assignment, max_n: usize) -> Result<AuditReport, AuditError> {
    if inst.n() > max_n {
        return Err(AuditError::TooLarge { n: inst.n(), max_n });
    }
    let market = Market::new(inst, asg)?;
    let n = market.n;
    // Agents that could improve at all given every other agent as a reviewer.
    let able: Vec<usize> = (0..n)
        .filter(|&j| market.top_sum(j, 0..n) >= market.need(j, 1.0))
        .collect();
    if able.len() <= market.k_p {
        return Ok(AuditReport::clean(Exactness::Exact));
    }
    let masks: Vec<u64> = (1u64..(1 << able.len()))
        .filter(|m| m.count_ones() as usize > market.k_p)
        .collect();
    let members_of = |mask: u64| -> Vec<usize> {
        (0..able.len()).filter(|&b| mask >> b & 1 == 1).map(|b| able[b]).collect()
    };
    let deviating: Vec<(u64, Vec<Vec<usize>>)> = masks
        .par_iter()
        .filter_map(|&mask| {
            let members = members_of(mask);
            let need: Vec<i64> = members.iter().map(|&j| market.need(j, 1.0)).collect();
            market.search(&members, &need).map(|sets| (mask, sets))
        })
        .collect();
    if deviating.is_empty() {
        return Ok(AuditReport::clean(Exactness::Exact));
    }
    let largest_group = deviating.iter().map(|(m, _)| m.count_ones() as usize).max().unwrap_or(0);

    let unbounded = deviating.iter().find(|(mask, _)| members_of(*mask).iter().all(|&j| market.before[j] == 0));
    if let Some((mask, sets)) = unbounded {
        return Ok(AuditReport {
            violated: true,
            unbounded: true,
            alpha_star: None,
            witness: Some(market.witness(&members_of(*mask), sets)),
            largest_group,
            exactness: Exactness::Exact,
        });
    }

    let feasible_at = |alpha: f64| -> Option<DeviationWitness> {
        deviating.par_iter().find_map_first(|(mask, _)| {
            let members = members_of(*mask);
            let need: Vec<i64> = members.iter().map(|&j| market.need(j, alpha)).collect();
            market.search(&members, &need).map(|sets| market.witness(&members, &sets))
        })
    };
    let cap = (0..n)
        .filter(|&j| market.before[j] > 0)
        .map(|j| market.top_sum(j, 0..n) as f64 / market.before[j] as f64)
        .fold(1.0, f64::max);
    let alpha = alpha_bisection(cap, |a| feasible_at(a).is_some())?;
    let lower = (alpha - ALPHA_TOLERANCE).max(1.0);
    let witness = feasible_at(lower)
        .or_else(|| feasible_at(1.0))
        .expect("deviation exists at factor 1");
    debug_assert!(market.is_strict(&witness));
    Ok(AuditReport {
        violated: true,
        unbounded: false,
        alpha_star: Some(alpha),
        witness: Some(witness),
        largest_group,
        exactness: Exactness::Exact,
    })
}

/// Audit from [`forced_coalition_scan`] alone.
pub fn scan_audit(inst: &Instance, asg: &Assignment) -> Result<AuditReport, AuditError> {
    let witnesses = forced_coalition_scan(inst, asg)?;
    Ok(AuditReport::from_witnesses(&witnesses, Exactness::HeuristicLowerBound))
}

/// Forced-coalition scan followed by greedy coalition growth up to `cap`
/// members. Every reported deviation is verified, so `violated = true` is
/// sound; `violated = false` proves nothing.
pub fn heuristic_audit(inst: &Instance, asg: &Assignment, cap: usize) -> Result<AuditReport, AuditError> {
    let market = Market::new(inst, asg)?;
    let mut witnesses = scan(&market);

    let mut ranked: Vec<&DeviationWitness> = witnesses.iter().collect();
    ranked.sort_by(|a, b| b.alpha().total_cmp(&a.alpha()).then_with(|| a.coalition.cmp(&b.coalition)));
    let mut seeds: BTreeSet<Vec<usize>> = ranked
        .iter()
        .take(GROWTH_SEEDS)
        .map(|w| w.coalition.iter().map(|a| a.0).collect())
        .collect();
    for j in 0..market.n {
        seeds.insert(best_reviewers_seed(&market, j));
    }
    let grown: Vec<DeviationWitness> = seeds
        .into_par_iter()
        .flat_map_iter(|seed| grow(&market, seed, cap))
        .collect();
    witnesses.extend(grown);
    for w in &witnesses {
        debug_assert_eq!(verify_witness(inst, asg, w), Ok(()));
    }
    witnesses.retain(|w| verify_witness(inst, asg, w).is_ok());
    Ok(AuditReport::from_witnesses(&witnesses, Exactness::HeuristicLowerBound))
}

/// Agent `j` together with its `k_p` highest-scoring reviewers.
fn best_reviewers_seed(market: &Market, j: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..market.n).filter(|&r| r != j).collect();
    others.sort_by(|&a, &b| market.units[b][j].cmp(&market.units[a][j]).then(a.cmp(&b)));
    let mut seed: Vec<usize> = others.into_iter().take(market.k_p).chain([j]).collect();
    seed.sort_unstable();
    seed
}

/// Each member's `k_p` best coalition reviewers, ignoring review loads.
fn top_sets(market: &Market, members: &[usize]) -> (Vec<Vec<usize>>, bool) {
    let mut loads = vec![0; market.n];
    let mut sets = Vec::with_capacity(members.len());
    for &j in members {
        let mut pool: Vec<usize> = members.iter().copied().filter(|&r| r != j).collect();
        pool.sort_by(|&a, &b| market.units[b][j].cmp(&market.units[a][j]).then(a.cmp(&b)));
        pool.truncate(market.k_p);
        pool.iter().for_each(|&r| loads[r] += 1);
        sets.push(pool);
    }
    let fits = loads.iter().all(|&l| l <= market.k_a);
    (sets, fits)
}

/// Restricted assignment for a fixed coalition: each paper takes its top
/// `k_p` coalition reviewers, or, when that overloads someone, a flow that
/// maximizes score relative to each member's current utility.
fn restricted_sets(market: &Market, members: &[usize]) -> Option<Vec<Vec<usize>>> {
    if members.len() <= market.k_p {
        return None;
    }
    let (sets, fits) = top_sets(market, members);
    if fits {
        return Some(sets);
    }
    balanced_sets(market, members)
}

fn balanced_sets(market: &Market, members: &[usize]) -> Option<Vec<Vec<usize>>> {
    let c = members.len();
    let (source, sink) = (0, 2 * c + 1);
    let mut g = MinCostFlow::new(2 * c + 2);
    const SCALE: i64 = 1_000_000;
    let weight = |r: usize, j: usize| {
        let base = market.before[j].max(1) as i128;
        (market.units[r][j] as i128 * SCALE as i128 / base) as i64
    };
    let top = members
        .iter()
        .flat_map(|&r| members.iter().filter(move |&&j| j != r).map(move |&j| (r, j)))
        .map(|(r, j)| weight(r, j))
        .max()
        .unwrap_or(0);
    let mut arcs = Vec::new();
    for (a, &r) in members.iter().enumerate() {
        g.add_arc(source, 1 + a, market.k_a as i64, 0);
        for (b, &j) in members.iter().enumerate() {
            if r != j {
                arcs.push((g.add_arc(1 + a, 1 + c + b, 1, top - weight(r, j)), r, b));
            }
        }
    }
    for b in 0..c {
        g.add_arc(1 + c + b, sink, market.k_p as i64, 0);
    }
    let need = (c * market.k_p) as i64;
    if g.solve(source, sink, need).0 < need {
        return None;
    }
    let mut sets = vec![Vec::new(); c];
    for (id, r, b) in arcs {
        if g.flow(id) > 0 {
            sets[b].push(r);
        }
    }
    Some(sets)
}

fn min_factor(market: &Market, members: &[usize], sets: &[Vec<usize>]) -> f64 {
    let mut value = f64::INFINITY;
    for (&j, set) in members.iter().zip(sets) {
        let after: i64 = set.iter().map(|&r| market.units[r][j]).sum();
        let b = market.before[j];
        let f = if after <= b {
            if b == 0 { 0.0 } else { after as f64 / b as f64 }
        } else if b == 0 {
            f64::INFINITY
        } else {
            after as f64 / b as f64
        };
        value = value.min(f);
    }
    value
}

/// Minimum improvement factor of a coalition under [`restricted_sets`];
/// values above 1 mean every member strictly improves.
fn coalition_value(market: &Market, members: &[usize]) -> Option<(f64, Vec<Vec<usize>>)> {
    let sets = restricted_sets(market, members)?;
    Some((min_factor(market, members, &sets), sets))
}

fn with_member(members: &[usize], cand: usize) -> Vec<usize> {
    let mut trial = members.to_vec();
    let at = trial.partition_point(|&x| x < cand);
    trial.insert(at, cand);
    trial
}

fn grow(market: &Market, seed: Vec<usize>, cap: usize) -> Vec<DeviationWitness> {
    let mut found = Vec::new();
    let mut members = seed;
    let record = |members: &[usize], found: &mut Vec<DeviationWitness>| {
        if let Some((_, sets)) = coalition_value(market, members) {
            let w = market.witness(members, &sets);
            if market.is_strict(&w) {
                found.push(w);
            }
        }
    };
    record(&members, &mut found);
    while members.len() < cap.min(market.n) {
        // Top sets bound every member's utility from above, so a candidate
        // whose bound is below the best value so far cannot win.
        let mut bounded: Vec<(f64, usize, Option<f64>)> = Vec::new();
        for cand in (0..market.n).filter(|c| !members.contains(c)) {
            let trial = with_member(&members, cand);
            if trial.len() <= market.k_p {
                continue;
            }
            let (sets, fits) = top_sets(market, &trial);
            let bound = min_factor(market, &trial, &sets);
            bounded.push((bound, cand, fits.then_some(bound)));
        }
        bounded.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut best: Option<(f64, usize)> = None;
        for (bound, cand, exact) in bounded {
            if best.is_some_and(|(bv, _)| bound < bv) {
                break;
            }
            let value = match exact {
                Some(v) => Some(v),
                None => balanced_sets(market, &with_member(&members, cand))
                    .map(|sets| min_factor(market, &with_member(&members, cand), &sets)),
            };
            if let Some(v) = value {
                if best.is_none_or(|(bv, bc)| v > bv || (v == bv && cand < bc)) {
                    best = Some((v, cand));
                }
            }
        }
        let Some((_, cand)) = best else { break };
        let at = members.partition_point(|&x| x < cand);
        members.insert(at, cand);
        record(&members, &mut found);
    }
    found
}

/// Which audit to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditMode {
    Exact,
    Heuristic,
    ForcedScan,
}

#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    pub mode: AuditMode,
    pub exact_max_n: usize,
    pub growth_cap: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            mode: AuditMode::Heuristic,
            exact_max_n: EXACT_MAX_N,
            growth_cap: GROWTH_CAP,
        }
    }
}

pub fn audit(inst: &Instance, asg: &Assignment, options: AuditOptions) -> Result<AuditReport, AuditError> {
    match options.mode {
        AuditMode::Exact => exact_audit(inst, asg, options.exact_max_n),
        AuditMode::Heuristic => heuristic_audit(inst, asg, options.growth_cap),
        AuditMode::ForcedScan => scan_audit(inst, asg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{four_agent_deviation, four_agent_usw_assignment};

    fn pair(r: usize, a: usize) -> (AgentId, PaperId) {
        (AgentId(r - 1), PaperId::new(a - 1, 0))
    }

    fn fixture_witness() -> DeviationWitness {
        DeviationWitness {
            coalition: vec![AgentId(0), AgentId(1)],
            restricted: [pair(1, 2), pair(2, 1)].into_iter().collect(),
            before: vec![score_units(0.2), score_units(0.3)],
            after: vec![score_units(0.9), score_units(0.9)],
        }
    }

    #[test]
    fn fixture_witness_verifies() {
        let inst = four_agent_deviation();
        let asg = four_agent_usw_assignment();
        assert_eq!(verify_witness(&inst, &asg, &fixture_witness()), Ok(()));
        assert!((fixture_witness().alpha() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_coalition_is_rejected() {
        let inst = four_agent_deviation();
        let asg = four_agent_usw_assignment();
        let w = DeviationWitness {
            coalition: vec![AgentId(0)],
            restricted: Assignment::new(),
            before: vec![score_units(0.2)],
            after: vec![0],
        };
        assert!(matches!(verify_witness(&inst, &asg, &w), Err(WitnessFlaw::TooSmall { .. })));
    }

    #[test]
    fn unchanged_utility_is_not_strict() {
        let inst = four_agent_deviation();
        // 1 reviews p4 and 3 reviews p1 in both assignments.
        let asg: Assignment = [pair(1, 2), pair(2, 1), pair(3, 4), pair(4, 3)].into_iter().collect();
        let w = DeviationWitness {
            coalition: vec![AgentId(0), AgentId(1)],
            restricted: [pair(1, 2), pair(2, 1)].into_iter().collect(),
            before: vec![score_units(0.9), score_units(0.9)],
            after: vec![score_units(0.9), score_units(0.9)],
        };
        assert!(matches!(verify_witness(&inst, &asg, &w), Err(WitnessFlaw::NotStrict { .. })));
    }

    #[test]
    fn scan_finds_the_pair() {
        let inst = four_agent_deviation();
        let found = forced_coalition_scan(&inst, &four_agent_usw_assignment()).unwrap();
        assert_eq!(found, vec![fixture_witness()]);
    }

    #[test]
    fn bisection_on_synthetic_oracles() {
        let doubled = alpha_bisection(10.0, |a| a <= 2.0).unwrap();
        assert!((doubled - 2.0).abs() <= ALPHA_TOLERANCE);
        let best_of_two = alpha_bisection(4.0, |a| a <= 1.2 || a <= 1.5).unwrap();
        assert!((best_of_two - 1.5).abs() <= ALPHA_TOLERANCE);
        assert!(matches!(alpha_bisection(4.0, |_| false), Err(AuditError::NoViolation)));
    }

    #[test]
    fn exact_and_heuristic_on_fixture() {
        let inst = four_agent_deviation();
        let asg = four_agent_usw_assignment();
        for report in [
            exact_audit(&inst, &asg, EXACT_MAX_N).unwrap(),
            heuristic_audit(&inst, &asg, GROWTH_CAP).unwrap(),
        ] {
            assert!(report.violated && !report.unbounded);
            assert!((report.alpha_star.unwrap() - 3.0).abs() <= ALPHA_TOLERANCE);
            assert_eq!(report.largest_group, 2);
        }
    }

    #[test]
    fn all_zero_utilities_are_unbounded() {
        let inst = Instance::from_scores(
            1,
            1,
            vec![1; 4],
            crate::model::SimilarityMatrix::from_rows(vec![
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0],
            ]),
        )
        .unwrap();
        let asg: Assignment = [pair(1, 3), pair(3, 1), pair(2, 4), pair(4, 2)].into_iter().collect();
        let report = exact_audit(&inst, &asg, EXACT_MAX_N).unwrap();
        assert!(report.violated && report.unbounded && report.alpha_star.is_none());
        assert!(report.alpha().is_infinite());
        assert!(heuristic_audit(&inst, &asg, GROWTH_CAP).unwrap().unbounded);
    }

    #[test]
    fn forced_instance_has_no_violation() {
        let inst = crate::fixtures::three_agent_scores();
        let inst = Instance::from_scores(2, 2, vec![1; 3], inst.scores().unwrap().clone()).unwrap();
        let asg = crate::run_cobra(&inst).unwrap();
        assert!(!exact_audit(&inst, &asg, EXACT_MAX_N).unwrap().violated);
        assert!(!heuristic_audit(&inst, &asg, GROWTH_CAP).unwrap().violated);
    }

    #[test]
    fn oversized_instance_is_refused() {
        let inst = four_agent_deviation();
        let asg = four_agent_usw_assignment();
        assert!(matches!(exact_audit(&inst, &asg, 3), Err(AuditError::TooLarge { n: 4, max_n: 3 })));
    }
}
