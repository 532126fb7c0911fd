//! Seeded multi-run comparisons of the assigners.
//!
//! Run `r` uses seed `base_seed + r` for its subsample, runs execute in
//! parallel and results are merged by run index, so output is identical for a
//! fixed configuration.
//!
//! Per-run CSV columns:
//! `run,seed,algorithm,agents,usw,esw,violated,unbounded,alpha,largest_group,audit,solver_optimal`.
//! `alpha` is 1 without a violation and `inf` when unbounded.
//!
//! Summary CSV columns:
//! `algorithm,runs,usw_mean,usw_se,esw_mean,esw_se,unb_alpha_pct,alpha_mean,alpha_se,cv_pr_pct,largest_group_mean,largest_group_se`.
//! `*_se` is the standard error of the mean. `alpha_mean` averages the runs
//! whose violation is bounded, counting runs without a violation as 1.
//! `largest_group_mean` averages the runs with a violation and is 0 when
//! there are none.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::audit::{audit, AuditError, AuditOptions};
use crate::baselines::{assign_max_usw, assign_maxmin_esw_with, BaselineError, MaxMinOptions};
use crate::cobra::{run_cobra, CobraError};
use crate::ingest::{subsample_instance, IngestError};
use crate::model::{compute_utilities, Assignment, Instance, ModelError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Cobra,
    MaxUsw,
    MaxMinEsw,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Cobra, Algorithm::MaxUsw, Algorithm::MaxMinEsw];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cobra => "cobra",
            Self::MaxUsw => "max-usw",
            Self::MaxMinEsw => "maxmin-esw",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected cobra, max-usw or maxmin-esw)"))
    }
}

#[derive(Debug, Error)]
pub enum AssignError {
    #[error(transparent)]
    Cobra(#[from] CobraError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// The assignment produced by `algorithm`, plus whether the solver proved
/// optimality (always true except for a time-limited ESW solve).
pub fn assign(
    inst: &Instance,
    algorithm: Algorithm,
    esw: MaxMinOptions,
) -> Result<(Assignment, bool), AssignError> {
    Ok(match algorithm {
        Algorithm::Cobra => (run_cobra(inst)?, true),
        Algorithm::MaxUsw => (assign_max_usw(inst)?, true),
        Algorithm::MaxMinEsw => {
            let out = assign_maxmin_esw_with(inst, esw)?;
            (out.assignment, out.proven_optimal)
        }
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    /// Papers per run; `None` uses the whole instance.
    pub subsample: Option<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub audit: AuditOptions,
    pub esw: MaxMinOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            subsample: Some(100),
            runs: 100,
            base_seed: 0,
            audit: AuditOptions::default(),
            esw: MaxMinOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("run count must be at least 1")]
    NoRuns,
    #[error("subsample size {size} is below k_p + 1 = {min}")]
    SubsampleTooSmall { size: usize, min: usize },
    #[error("run {run} (seed {seed}), {algorithm}: {source}")]
    Run {
        run: usize,
        seed: u64,
        algorithm: String,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("per-run CSV: {0}")]
    Csv(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub agents: usize,
    pub usw: f64,
    pub esw: f64,
    pub violated: bool,
    pub unbounded: bool,
    pub alpha: f64,
    pub largest_group: usize,
    pub audit: String,
    pub solver_optimal: bool,
}

pub fn run_experiment(full: &Instance, config: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    if config.runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    if let Some(size) = config.subsample {
        if size < full.k_p() + 1 {
            return Err(ExperimentError::SubsampleTooSmall { size, min: full.k_p() + 1 });
        }
    }
    let per_run: Vec<Result<Vec<RunRecord>, ExperimentError>> = (0..config.runs)
        .into_par_iter()
        .map(|run| single_run(full, config, run))
        .collect();
    let mut records = Vec::new();
    for r in per_run {
        records.extend(r?);
    }
    Ok(records)
}

fn single_run(full: &Instance, config: &ExperimentConfig, run: usize) -> Result<Vec<RunRecord>, ExperimentError> {
    let seed = config.base_seed.wrapping_add(run as u64);
    let fail = |algorithm: &str, e: Box<dyn std::error::Error + Send + Sync>| ExperimentError::Run {
        run,
        seed,
        algorithm: algorithm.to_string(),
        source: e,
    };
    let inst = match config.subsample {
        Some(size) => subsample_instance(full, size, seed).map_err(|e: IngestError| fail("subsample", e.into()))?,
        None => full.clone(),
    };
    let mut out = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let (asg, solver_optimal) = assign(&inst, algorithm, config.esw).map_err(|e| fail(algorithm.name(), e.into()))?;
        let u = compute_utilities(&inst, &asg).map_err(|e: ModelError| fail(algorithm.name(), e.into()))?;
        let report = audit(&inst, &asg, config.audit).map_err(|e: AuditError| fail(algorithm.name(), e.into()))?;
        out.push(RunRecord {
            run,
            seed,
            algorithm,
            agents: inst.n(),
            usw: u.usw,
            esw: u.esw,
            violated: report.violated,
            unbounded: report.unbounded,
            alpha: report.alpha(),
            largest_group: report.largest_group,
            audit: report.exactness.to_string(),
            solver_optimal,
        });
    }
    Ok(out)
}

/// Mean and standard error of the mean; the error is 0 for fewer than two values.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub usw: (f64, f64),
    pub esw: (f64, f64),
    pub unbounded_pct: f64,
    pub alpha: (f64, f64),
    pub cv_pr_pct: f64,
    pub largest_group: (f64, f64),
}

/// One row per algorithm, in the order they first appear.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<Algorithm> = Vec::new();
    for r in records {
        if !order.contains(&r.algorithm) {
            order.push(r.algorithm);
        }
    }
    order
        .into_iter()
        .map(|algorithm| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == algorithm).collect();
            let runs = rows.len();
            let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
            let pct = |k: usize| 100.0 * k as f64 / runs as f64;
            SummaryRow {
                algorithm,
                runs,
                usw: mean_se(&collect(&|r| Some(r.usw))),
                esw: mean_se(&collect(&|r| Some(r.esw))),
                unbounded_pct: pct(rows.iter().filter(|r| r.unbounded).count()),
                alpha: mean_se(&collect(&|r| (!r.unbounded).then_some(r.alpha))),
                cv_pr_pct: pct(rows.iter().filter(|r| r.violated).count()),
                largest_group: mean_se(&collect(&|r| r.violated.then_some(r.largest_group as f64))),
            }
        })
        .collect()
}

fn csv_fail(e: impl fmt::Display) -> ExperimentError {
    ExperimentError::Csv(e.to_string())
}

pub const RUN_HEADER: [&str; 12] = [
    "run", "seed", "algorithm", "agents", "usw", "esw", "violated", "unbounded", "alpha", "largest_group", "audit",
    "solver_optimal",
];

pub const SUMMARY_HEADER: [&str; 12] = [
    "algorithm", "runs", "usw_mean", "usw_se", "esw_mean", "esw_se", "unb_alpha_pct", "alpha_mean", "alpha_se",
    "cv_pr_pct", "largest_group_mean", "largest_group_se",
];

/// Welfare rounded to the score resolution, without trailing zeros.
fn welfare_text(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

pub fn write_runs_csv(records: &[RunRecord], out: impl Write) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER).map_err(csv_fail)?;
    for r in records {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.algorithm.to_string(),
            r.agents.to_string(),
            welfare_text(r.usw),
            welfare_text(r.esw),
            r.violated.to_string(),
            r.unbounded.to_string(),
            r.alpha.to_string(),
            r.largest_group.to_string(),
            r.audit.clone(),
            r.solver_optimal.to_string(),
        ])
        .map_err(csv_fail)?;
    }
    w.flush().map_err(csv_fail)
}

pub fn read_runs_csv(input: impl Read) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_fail)?.clone();
    if header.iter().ne(RUN_HEADER) {
        return Err(ExperimentError::Csv(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(csv_fail)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        fn parse<T: FromStr>(s: &str) -> Result<T, ExperimentError> {
            s.parse().map_err(|_| ExperimentError::Csv(format!("bad value {s:?}")))
        }
        out.push(RunRecord {
            run: parse(field(0))?,
            seed: parse(field(1))?,
            algorithm: field(2).parse().map_err(ExperimentError::Csv)?,
            agents: parse(field(3))?,
            usw: parse(field(4))?,
            esw: parse(field(5))?,
            violated: parse(field(6))?,
            unbounded: parse(field(7))?,
            alpha: parse(field(8))?,
            largest_group: parse(field(9))?,
            audit: field(10).to_string(),
            solver_optimal: parse(field(11))?,
        });
    }
    Ok(out)
}

pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_fail)?;
    let f = |v: f64| format!("{v:.6}");
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.runs.to_string(),
            f(r.usw.0),
            f(r.usw.1),
            f(r.esw.0),
            f(r.esw.1),
            format!("{:.1}", r.unbounded_pct),
            f(r.alpha.0),
            f(r.alpha.1),
            format!("{:.1}", r.cv_pr_pct),
            f(r.largest_group.0),
            f(r.largest_group.1),
        ])
        .map_err(csv_fail)?;
    }
    w.flush().map_err(csv_fail)
}

/// Human-readable table in the layout of the summary CSV.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<11} {:>5} {:>20} {:>20} {:>7} {:>20} {:>7} {:>16}\n",
        "algorithm", "runs", "USW (±SE)", "ESW (±SE)", "#unb-α", "α* (±SE)", "CV-Pr", "largest group"
    );
    for r in rows {
        s += &format!(
            "{:<11} {:>5} {:>20} {:>20} {:>6.1}% {:>20} {:>6.1}% {:>16}\n",
            r.algorithm.name(),
            r.runs,
            format!("{:.3} ± {:.3}", r.usw.0, r.usw.1),
            format!("{:.3} ± {:.3}", r.esw.0, r.esw.1),
            r.unbounded_pct,
            format!("{:.3} ± {:.3}", r.alpha.0, r.alpha.1),
            r.cv_pr_pct,
            format!("{:.2} ± {:.2}", r.largest_group.0, r.largest_group.1),
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        assert_eq!(mean_se(&[]), (0.0, 0.0));
        assert_eq!(mean_se(&[2.0]), (2.0, 0.0));
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        // sample sd = sqrt(5/3), se = sd / 2
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
    }

    fn record(algorithm: Algorithm, violated: bool, unbounded: bool, alpha: f64, group: usize) -> RunRecord {
        RunRecord {
            run: 0,
            seed: 0,
            algorithm,
            agents: 4,
            usw: 1.0,
            esw: 0.5,
            violated,
            unbounded,
            alpha,
            largest_group: group,
            audit: "exact".into(),
            solver_optimal: true,
        }
    }

    #[test]
    fn alpha_averages_bounded_runs_only() {
        let rows = summarize(&[
            record(Algorithm::MaxUsw, true, false, 1.5, 3),
            record(Algorithm::MaxUsw, false, false, 1.0, 0),
            record(Algorithm::MaxUsw, true, true, f64::INFINITY, 5),
        ]);
        let r = &rows[0];
        assert!((r.alpha.0 - 1.25).abs() < 1e-12);
        assert!((r.unbounded_pct - 100.0 / 3.0).abs() < 1e-9);
        assert!((r.cv_pr_pct - 200.0 / 3.0).abs() < 1e-9);
        assert!((r.largest_group.0 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clean_runs_report_unit_alpha() {
        let rows = summarize(&vec![record(Algorithm::Cobra, false, false, 1.0, 0); 3]);
        assert_eq!(rows[0].alpha, (1.0, 0.0));
        assert_eq!(rows[0].cv_pr_pct, 0.0);
        assert_eq!(rows[0].largest_group, (0.0, 0.0));
    }

    #[test]
    fn runs_csv_round_trips() {
        let recs = vec![
            record(Algorithm::Cobra, false, false, 1.0, 0),
            record(Algorithm::MaxMinEsw, true, true, f64::INFINITY, 2),
            RunRecord { usw: 0.1 + 0.2, ..record(Algorithm::MaxUsw, true, false, 1.0 / 3.0, 2) },
        ];
        let mut buf = Vec::new();
        write_runs_csv(&recs, &mut buf).unwrap();
        let mut expected = recs.clone();
        expected[2].usw = 0.3;
        assert_eq!(read_runs_csv(buf.as_slice()).unwrap(), expected);
    }
}
