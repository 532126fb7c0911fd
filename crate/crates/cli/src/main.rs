use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cobra_core::audit::{audit, AuditMode, AuditOptions, AuditReport, EXACT_MAX_N, GROWTH_CAP};
use cobra_core::baselines::MaxMinOptions;
use cobra_core::cobra::{run_cobra_observed, TraceLog};
use cobra_core::experiment::{
    assign, format_summary, run_experiment, summarize, write_runs_csv, write_summary_csv, Algorithm,
    ExperimentConfig,
};
use cobra_core::ingest::{
    authorship_by_greedy, authorship_by_max_matching, build_instance, load_similarity_csv, normalize_scores,
    read_assignment_csv, subsample_instance, write_assignment_csv, Authorship,
};
use cobra_core::model::{compute_utilities, validate_assignment};
use cobra_core::Instance;

/// Peer-review assignment with core-stability audits.
#[derive(Parser)]
#[command(name = "cobra", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an assignment and print its welfare.
    Assign(AssignArgs),
    /// Search an assignment for deviating coalitions.
    Audit(AuditArgs),
    /// Repeat subsampled runs of several algorithms and summarize them.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AuthorshipMode {
    MaxMatching,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Cobra,
    MaxUsw,
    MaxminEsw,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Cobra => Algorithm::Cobra,
            AlgorithmArg::MaxUsw => Algorithm::MaxUsw,
            AlgorithmArg::MaxminEsw => Algorithm::MaxMinEsw,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditModeArg {
    Exact,
    Heuristic,
    ForcedScan,
}

#[derive(Args)]
struct DataArgs {
    /// Similarity CSV: `reviewer_id,<paper ids>` header, one row per reviewer.
    #[arg(long)]
    similarity: PathBuf,
    /// Conflicts CSV with the same layout and 0/1 cells.
    #[arg(long)]
    conflicts: Option<PathBuf>,
    /// How to derive authorship when no authorship file is given
    /// [default: max-matching with conflicts, greedy otherwise].
    #[arg(long, value_enum)]
    authorship: Option<AuthorshipMode>,
    /// Authorship CSV: `paper_id,author_reviewer_id`.
    #[arg(long, conflicts_with = "authorship")]
    authorship_file: Option<PathBuf>,
    /// Divide all scores by the largest one.
    #[arg(long)]
    normalize: bool,
    /// Maximum papers per reviewer.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    k_a: u32,
    /// Reviewers per paper.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    k_p: u32,
}

#[derive(Args)]
struct AssignArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "cobra")]
    algorithm: AlgorithmArg,
    /// Sample this many papers before assigning.
    #[arg(long)]
    subsample: Option<usize>,
    /// Seed for --subsample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Assignment CSV to write (`paper_id,reviewer_id`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the CoBRA execution trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Time limit in seconds for each max-min solver stage.
    #[arg(long)]
    esw_time_limit: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Assignment CSV (`paper_id,reviewer_id`) to audit.
    #[arg(long)]
    assignment: PathBuf,
    /// Audit on the same paper sample `assign --subsample` drew.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "heuristic")]
    audit_mode: AuditModeArg,
    /// Largest instance the exact audit accepts.
    #[arg(long, default_value_t = EXACT_MAX_N)]
    exact_max_n: usize,
    /// Coalition size cap of the heuristic audit.
    #[arg(long, default_value_t = GROWTH_CAP)]
    growth_cap: usize,
    /// Report CSV to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated algorithms.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cobra,max-usw,maxmin-esw")]
    algorithm: Vec<AlgorithmArg>,
    /// Papers per run; 0 uses every paper.
    #[arg(long, default_value_t = 100)]
    subsample: usize,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "heuristic")]
    audit_mode: AuditModeArg,
    #[arg(long, default_value_t = EXACT_MAX_N)]
    exact_max_n: usize,
    #[arg(long, default_value_t = GROWTH_CAP)]
    growth_cap: usize,
    /// Time limit in seconds for each max-min solver stage.
    #[arg(long)]
    esw_time_limit: Option<f64>,
    /// Directory for runs.csv and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

fn load_instance(args: &DataArgs) -> Result<Instance> {
    let mut ds = load_similarity_csv(&args.similarity)?;
    if let Some(path) = &args.conflicts {
        ds = ds.load_conflicts_csv(path)?;
    }
    if args.normalize {
        ds = normalize_scores(ds)?;
    }
    let authorship = match (&args.authorship_file, args.authorship) {
        (Some(path), _) => Authorship::load_csv(&ds, path)?,
        (None, Some(AuthorshipMode::MaxMatching)) => authorship_by_max_matching(&ds)?,
        (None, Some(AuthorshipMode::Greedy)) => authorship_by_greedy(&ds),
        (None, None) if ds.conflicts.is_some() => authorship_by_max_matching(&ds)?,
        (None, None) => authorship_by_greedy(&ds),
    };
    ensure!(authorship.matched() > 0, "no paper could be matched to an author");
    let inst = build_instance(&ds, &authorship, args.k_a as usize, args.k_p as usize)?;
    let violations = inst.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        bail!("invalid instance: {}", list.join("; "));
    }
    Ok(inst)
}

fn audit_options(mode: AuditModeArg, exact_max_n: usize, growth_cap: usize) -> AuditOptions {
    AuditOptions {
        mode: match mode {
            AuditModeArg::Exact => AuditMode::Exact,
            AuditModeArg::Heuristic => AuditMode::Heuristic,
            AuditModeArg::ForcedScan => AuditMode::ForcedScan,
        },
        exact_max_n,
        growth_cap,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn cmd_assign(args: AssignArgs) -> Result<()> {
    let mut inst = load_instance(&args.data)?;
    if let Some(size) = args.subsample {
        inst = subsample_instance(&inst, size, args.seed)?;
    }
    let algorithm = Algorithm::from(args.algorithm);
    let asg = match (&args.trace, algorithm) {
        (Some(path), Algorithm::Cobra) => {
            let mut log = TraceLog::default();
            let asg = run_cobra_observed(&inst, &mut log)?;
            fs::write(path, log.lines().join("\n") + "\n")
                .with_context(|| format!("cannot write {}", path.display()))?;
            asg
        }
        (Some(_), _) => bail!("--trace is only available for cobra"),
        (None, _) => {
            let options = MaxMinOptions { time_limit: args.esw_time_limit };
            let (asg, optimal) = assign(&inst, algorithm, options)?;
            if !optimal {
                eprintln!("warning: time limit reached before optimality was proven");
            }
            asg
        }
    };
    let problems = validate_assignment(&inst, &asg)?;
    ensure!(problems.is_empty(), "produced an invalid assignment: {problems:?}");
    if let Some(path) = &args.out {
        write_assignment_csv(&inst, &asg, create(path)?)?;
    }
    let u = compute_utilities(&inst, &asg)?;
    println!(
        "algorithm={} agents={} papers={} pairs={} usw={:.6} esw={:.6}",
        algorithm,
        inst.n(),
        inst.m(),
        asg.len(),
        u.usw,
        u.esw
    );
    Ok(())
}

fn report_line(inst: &Instance, report: &AuditReport) -> Vec<String> {
    let witness = report.witness.as_ref().map_or(String::new(), |w| {
        w.coalition.iter().map(|&a| inst.agent_label(a)).collect::<Vec<_>>().join(" ")
    });
    vec![
        report.violated.to_string(),
        report.unbounded.to_string(),
        report.alpha().to_string(),
        report.largest_group.to_string(),
        report.exactness.to_string(),
        witness,
    ]
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let mut inst = load_instance(&args.data)?;
    if let Some(size) = args.subsample {
        inst = subsample_instance(&inst, size, args.seed)?;
    }
    let file = File::open(&args.assignment).with_context(|| format!("cannot open {}", args.assignment.display()))?;
    let asg = read_assignment_csv(&inst, file)?;
    let problems = validate_assignment(&inst, &asg)?;
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
        bail!("invalid assignment:\n  {}", list.join("\n  "));
    }
    let report = audit(&inst, &asg, audit_options(args.audit_mode, args.exact_max_n, args.growth_cap))?;
    let u = compute_utilities(&inst, &asg)?;
    let fields = report_line(&inst, &report);
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        writeln!(w, "agents,usw,esw,violated,unbounded,alpha,largest_group,audit,witness")?;
        writeln!(w, "{},{},{},{}", inst.n(), u.usw, u.esw, fields.join(","))?;
        w.flush()?;
    }
    println!(
        "violated={} unbounded={} alpha={} largest_group={} audit={} witness=[{}]",
        fields[0],
        fields[1],
        report.alpha_star.map_or_else(|| fields[2].clone(), |a| format!("{a:.3}")),
        fields[3],
        fields[4],
        fields[5]
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let inst = load_instance(&args.data)?;
    let config = ExperimentConfig {
        algorithms: args.algorithm.iter().map(|&a| a.into()).collect(),
        subsample: (args.subsample > 0).then_some(args.subsample),
        runs: args.runs as usize,
        base_seed: args.seed,
        audit: audit_options(args.audit_mode, args.exact_max_n, args.growth_cap),
        esw: MaxMinOptions { time_limit: args.esw_time_limit },
    };
    let records = run_experiment(&inst, &config)?;
    let rows = summarize(&records);
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_runs_csv(&records, create(&args.out.join("runs.csv"))?)?;
    write_summary_csv(&rows, create(&args.out.join("summary.csv"))?)?;
    print!("{}", format_summary(&rows));
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Assign(a) => cmd_assign(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}
