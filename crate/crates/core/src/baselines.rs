//! Score-driven baseline assigners.
//!
//! [`assign_max_usw`] maximizes the total paper score (the TPMS objective) with
//! an integral min-cost flow. [`assign_maxmin_esw`] maximizes the minimum paper
//! score (the first level of the PR4A objective) and, among those optima, the
//! total score. Max-min over summed scores is NP-hard in general, so it is
//! solved as a mixed-integer program with HiGHS.

use good_lp::solvers::highs::highs;
use good_lp::{
    constraint, variable, Expression, ProblemVariables, ResolutionError, Solution, SolutionStatus,
    SolverModel, Variable, WithInitialSolution,
};
use thiserror::Error;

use crate::flow::MinCostFlow;
use crate::model::{
    paper_score_units, score_units, AgentId, Assignment, Instance, InstanceViolation, ModelError,
    PaperId,
};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<InstanceViolation>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no valid assignment exists")]
    Infeasible,
    #[error("solver failed: {0}")]
    Solver(String),
}

fn join(v: &[InstanceViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// One admissible reviewer-paper pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub reviewer: AgentId,
    /// Flat paper index.
    pub paper: usize,
    pub score: f64,
    pub units: i64,
}

/// Bipartite b-matching: reviewers supply up to `capacity` reviews, papers
/// demand exactly `demand`, and self-review pairs have no arc.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub reviewers: usize,
    pub capacity: usize,
    pub papers: Vec<PaperId>,
    pub demand: usize,
    /// Sorted by reviewer, then paper.
    pub arcs: Vec<Arc>,
}

impl FlowProblem {
    pub fn from_instance(inst: &Instance) -> Result<Self, BaselineError> {
        let violations = inst.validate();
        if !violations.is_empty() {
            return Err(BaselineError::InvalidInstance(violations));
        }
        let scores = inst.scores().ok_or(ModelError::NoScores)?;
        let papers: Vec<PaperId> = inst.papers().collect();
        let mut arcs = Vec::new();
        for r in inst.agents() {
            for (j, p) in papers.iter().enumerate() {
                if p.author == r {
                    continue;
                }
                let score = scores.get(r.0, j).ok_or(ModelError::MissingScore {
                    reviewer: r,
                    paper: *p,
                })?;
                arcs.push(Arc {
                    reviewer: r,
                    paper: j,
                    score,
                    units: score_units(score),
                });
            }
        }
        Ok(Self {
            reviewers: inst.n(),
            capacity: inst.k_a(),
            papers,
            demand: inst.k_p(),
            arcs,
        })
    }

    pub fn total_demand(&self) -> usize {
        self.papers.len() * self.demand
    }

    fn assignment(&self, chosen: impl IntoIterator<Item = usize>) -> Assignment {
        chosen
            .into_iter()
            .map(|a| (self.arcs[a].reviewer, self.papers[self.arcs[a].paper]))
            .collect()
    }

    /// Maximum-weight assignment meeting every demand.
    pub fn max_weight(&self) -> Result<Assignment, BaselineError> {
        let n = self.reviewers;
        let m = self.papers.len();
        let (source, sink) = (0, n + m + 1);
        let mut g = MinCostFlow::new(n + m + 2);
        for r in 0..n {
            g.add_arc(source, 1 + r, self.capacity as i64, 0);
        }
        let top = self.arcs.iter().map(|a| a.units).max().unwrap_or(0).max(0);
        let ids: Vec<_> = self
            .arcs
            .iter()
            .map(|a| g.add_arc(1 + a.reviewer.0, 1 + n + a.paper, 1, top - a.units))
            .collect();
        for j in 0..m {
            g.add_arc(1 + n + j, sink, self.demand as i64, 0);
        }
        let need = self.total_demand() as i64;
        let (flow, _) = g.solve(source, sink, need);
        if flow < need {
            return Err(BaselineError::Infeasible);
        }
        Ok(self.assignment((0..ids.len()).filter(|&a| g.flow(ids[a]) > 0)))
    }
}

/// Assignment maximizing utilitarian welfare `Σ_j u^p_j`.
///
/// Scores are compared in integer units, so the result is exactly optimal for
/// scores with at most nine decimals. Equal-score optima are resolved
/// deterministically by the flow's lowest-index path preference.
pub fn assign_max_usw(inst: &Instance) -> Result<Assignment, BaselineError> {
    FlowProblem::from_instance(inst)?.max_weight()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MaxMinOptions {
    /// Wall-clock limit per solver stage, in seconds.
    pub time_limit: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MaxMinOutcome {
    pub assignment: Assignment,
    /// Minimum paper score in integer score units.
    pub esw_units: i64,
    /// False when a time limit stopped either stage before optimality was proven.
    pub proven_optimal: bool,
}

/// Assignment maximizing egalitarian welfare (the minimum paper score), then
/// total score among those.
pub fn assign_maxmin_esw(inst: &Instance) -> Result<Assignment, BaselineError> {
    Ok(assign_maxmin_esw_with(inst, MaxMinOptions::default())?.assignment)
}

pub fn assign_maxmin_esw_with(
    inst: &Instance,
    options: MaxMinOptions,
) -> Result<MaxMinOutcome, BaselineError> {
    let problem = FlowProblem::from_instance(inst)?;
    let start = problem.max_weight()?;
    let esw_of = |asg: &Assignment| -> Result<i64, BaselineError> {
        Ok(paper_score_units(inst, asg)?.into_iter().min().unwrap_or(0))
    };
    if problem.papers.is_empty() {
        return Ok(MaxMinOutcome {
            assignment: start,
            esw_units: 0,
            proven_optimal: true,
        });
    }

    let first = solve_milp(&problem, &start, Stage::MaxMin, options)?;
    let (best, mut proven) = match first {
        Some((asg, optimal)) if esw_of(&asg)? >= esw_of(&start)? => (asg, optimal),
        Some((_, optimal)) => (start, optimal),
        None => (start, false),
    };
    let esw = esw_of(&best)?;
    let floor = esw as f64 / crate::model::SCORE_UNITS;

    let second = solve_milp(&problem, &best, Stage::MaxSum { floor }, options)?;
    let chosen = match second {
        Some((asg, optimal)) => {
            proven &= optimal;
            let usw_gain = paper_score_units(inst, &asg)?.iter().sum::<i64>()
                >= paper_score_units(inst, &best)?.iter().sum::<i64>();
            if esw_of(&asg)? >= esw && usw_gain {
                asg
            } else {
                best
            }
        }
        None => {
            proven = false;
            best
        }
    };
    Ok(MaxMinOutcome {
        esw_units: esw_of(&chosen)?,
        assignment: chosen,
        proven_optimal: proven,
    })
}

#[derive(Clone, Copy)]
enum Stage {
    MaxMin,
    MaxSum { floor: f64 },
}

/// Solves one stage from the feasible `warm` assignment. `None` means the
/// solver stopped without a usable incumbent.
fn solve_milp(
    problem: &FlowProblem,
    warm: &Assignment,
    stage: Stage,
    options: MaxMinOptions,
) -> Result<Option<(Assignment, bool)>, BaselineError> {
    const SLACK: f64 = 1e-9;
    let mut vars = ProblemVariables::new();
    let x: Vec<Variable> = problem
        .arcs
        .iter()
        .map(|_| vars.add(variable().binary()))
        .collect();
    let t = vars.add(variable().min(0.0));
    let objective: Expression = match stage {
        Stage::MaxMin => t.into(),
        Stage::MaxSum { .. } => problem
            .arcs
            .iter()
            .zip(&x)
            .map(|(a, &v)| a.score * v)
            .sum(),
    };
    let mut model = vars
        .maximise(objective)
        .using(highs)
        .set_threads(1)
        .set_option("mip_rel_gap", 0.0)
        .set_option("mip_abs_gap", SLACK);
    if let Some(limit) = options.time_limit {
        model = model.set_time_limit(limit);
    }

    let mut by_paper = vec![Vec::new(); problem.papers.len()];
    let mut by_reviewer = vec![Vec::new(); problem.reviewers];
    for (a, arc) in problem.arcs.iter().enumerate() {
        by_paper[arc.paper].push(a);
        by_reviewer[arc.reviewer.0].push(a);
    }
    for arcs in &by_paper {
        let count: Expression = arcs.iter().map(|&a| x[a]).sum();
        model = model.with(constraint!(count == problem.demand as f64));
        let score: Expression = arcs.iter().map(|&a| problem.arcs[a].score * x[a]).sum();
        model = match stage {
            Stage::MaxMin => model.with(constraint!(score >= t)),
            Stage::MaxSum { floor } => model.with(constraint!(score >= floor - SLACK)),
        };
    }
    for arcs in &by_reviewer {
        let load: Expression = arcs.iter().map(|&a| x[a]).sum();
        model = model.with(constraint!(load <= problem.capacity as f64));
    }

    let warm_scores = by_paper.iter().map(|arcs| {
        arcs.iter()
            .filter(|&&a| warm.contains(problem.arcs[a].reviewer, problem.papers[problem.arcs[a].paper]))
            .map(|&a| problem.arcs[a].score)
            .sum::<f64>()
    });
    let warm_t = warm_scores.fold(f64::INFINITY, f64::min).max(0.0);
    let initial = problem.arcs.iter().zip(&x).map(|(a, &v)| {
        let on = warm.contains(a.reviewer, problem.papers[a.paper]);
        (v, if on { 1.0 } else { 0.0 })
    });
    let model = model.with_initial_solution(initial.chain([(t, warm_t)]));

    let solution = match model.solve() {
        Ok(s) => s,
        Err(ResolutionError::Infeasible) => return Err(BaselineError::Infeasible),
        Err(ResolutionError::Other("NoSolutionFound")) => return Ok(None),
        Err(e) => return Err(BaselineError::Solver(e.to_string())),
    };
    // The absolute gap limit sits below the score resolution, so hitting it
    // proves optimality just as well.
    let optimal = matches!(solution.status(), SolutionStatus::Optimal | SolutionStatus::GapLimit);
    let chosen = (0..x.len()).filter(|&a| solution.value(x[a]) > 0.5);
    let asg = problem.assignment(chosen);
    if !is_complete(problem, &asg) {
        return Ok(None);
    }
    Ok(Some((asg, optimal)))
}

fn is_complete(problem: &FlowProblem, asg: &Assignment) -> bool {
    let mut count = vec![0; problem.papers.len()];
    let mut load = vec![0; problem.reviewers];
    for (r, p) in asg.pairs() {
        if let Ok(j) = problem.papers.binary_search(&p) {
            count[j] += 1;
        }
        load[r.0] += 1;
    }
    count.iter().all(|&c| c == problem.demand) && load.iter().all(|&l| l <= problem.capacity)
}
