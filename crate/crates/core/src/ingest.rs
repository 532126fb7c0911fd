//! Loading similarity and conflict data and turning it into instances.
//!
//! File formats:
//!
//! * similarity CSV: header `reviewer_id,<paper_id>,...`, then one row per
//!   reviewer with a non-negative decimal per paper;
//! * conflicts CSV: the same shape with `0`/`1` cells;
//! * authorship CSV: header `paper_id,author_reviewer_id`, one row per paper.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{AgentId, Assignment, Instance, ModelError, PaperId, SimilarityMatrix};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("input is empty")]
    Empty,
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column}: invalid value {value:?}")]
    BadCell { line: u64, column: String, value: String },
    #[error("line {line}: duplicate {kind} id {id:?}")]
    Duplicate { kind: &'static str, id: String, line: u64 },
    #[error("line {line}: unknown {kind} id {id:?}")]
    UnknownId { kind: &'static str, id: String, line: u64 },
    #[error("conflict matrix does not match the similarity matrix: {0}")]
    ConflictShape(String),
    #[error("dataset has no conflict information")]
    NoConflicts,
    #[error("all similarity scores are zero")]
    AllZero,
    #[error("cannot sample {size} papers from {available}")]
    SubsampleTooLarge { size: usize, available: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Raw reviewer × paper data, before authorship is known.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub reviewer_ids: Vec<String>,
    pub paper_ids: Vec<String>,
    /// Complete, finite and non-negative.
    pub scores: SimilarityMatrix,
    /// `conflicts[r][p]`, same shape as the scores.
    pub conflicts: Option<Vec<Vec<bool>>>,
}

struct Table {
    columns: Vec<String>,
    rows: Vec<String>,
    cells: Vec<Vec<String>>,
    lines: Vec<u64>,
}

fn read_table(input: impl Read) -> Result<Table, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(IngestError::Empty),
        Some(r) => r.map_err(csv_err)?,
    };
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashMap::new();
    for c in &columns {
        if seen.insert(c.clone(), ()).is_some() {
            return Err(IngestError::Duplicate {
                kind: "paper",
                id: c.clone(),
                line: 1,
            });
        }
    }
    let mut table = Table {
        columns,
        rows: Vec::new(),
        cells: Vec::new(),
        lines: Vec::new(),
    };
    let mut row_ids = HashMap::new();
    for record in records {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != table.columns.len() + 1 {
            return Err(IngestError::Ragged {
                line,
                expected: table.columns.len() + 1,
                found: record.len(),
            });
        }
        let id = record[0].to_string();
        if row_ids.insert(id.clone(), ()).is_some() {
            return Err(IngestError::Duplicate {
                kind: "reviewer",
                id,
                line,
            });
        }
        table.rows.push(id);
        table.cells.push(record.iter().skip(1).map(str::to_string).collect());
        table.lines.push(line);
    }
    if table.rows.is_empty() || table.columns.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(table)
}

fn csv_err(e: csv::Error) -> IngestError {
    IngestError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Parses a similarity CSV from any reader.
pub fn read_similarity(input: impl Read) -> Result<RawDataset, IngestError> {
    let t = read_table(input)?;
    let mut scores = SimilarityMatrix::new(t.rows.len(), t.columns.len());
    for (r, row) in t.cells.iter().enumerate() {
        for (p, cell) in row.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| bad_cell(&t, r, p))?;
            if !v.is_finite() || v < 0.0 {
                return Err(bad_cell(&t, r, p));
            }
            scores.set(r, p, v);
        }
    }
    Ok(RawDataset {
        reviewer_ids: t.rows,
        paper_ids: t.columns,
        scores,
        conflicts: None,
    })
}

fn bad_cell(t: &Table, r: usize, p: usize) -> IngestError {
    IngestError::BadCell {
        line: t.lines[r],
        column: t.columns[p].clone(),
        value: t.cells[r][p].clone(),
    }
}

pub fn load_similarity_csv(path: impl AsRef<Path>) -> Result<RawDataset, IngestError> {
    let path = path.as_ref();
    read_similarity(File::open(path).map_err(io_err(path))?)
}

impl RawDataset {
    pub fn reviewers(&self) -> usize {
        self.reviewer_ids.len()
    }

    pub fn papers(&self) -> usize {
        self.paper_ids.len()
    }

    /// Attaches a conflicts CSV with the same reviewer and paper ids, in the same order.
    pub fn read_conflicts(mut self, input: impl Read) -> Result<Self, IngestError> {
        let t = read_table(input)?;
        if t.columns != self.paper_ids {
            return Err(IngestError::ConflictShape("paper ids differ".into()));
        }
        if t.rows != self.reviewer_ids {
            return Err(IngestError::ConflictShape("reviewer ids differ".into()));
        }
        let mut conflicts = Vec::with_capacity(t.rows.len());
        for (r, row) in t.cells.iter().enumerate() {
            let parsed = row
                .iter()
                .enumerate()
                .map(|(p, c)| match c.as_str() {
                    "1" | "true" => Ok(true),
                    "0" | "false" => Ok(false),
                    _ => Err(bad_cell(&t, r, p)),
                })
                .collect::<Result<Vec<bool>, _>>()?;
            conflicts.push(parsed);
        }
        self.conflicts = Some(conflicts);
        Ok(self)
    }

    pub fn load_conflicts_csv(self, path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        self.read_conflicts(File::open(path).map_err(io_err(path))?)
    }

    fn score(&self, r: usize, p: usize) -> f64 {
        self.scores.get(r, p).unwrap_or(0.0)
    }
}

/// Author of each paper, by reviewer index; `None` for dropped papers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Authorship {
    pub author_of: Vec<Option<usize>>,
}

impl Authorship {
    pub fn matched(&self) -> usize {
        self.author_of.iter().flatten().count()
    }

    /// `(paper, reviewer)` index pairs, paper ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.author_of
            .iter()
            .enumerate()
            .filter_map(|(p, a)| a.map(|a| (p, a)))
    }

    pub fn write_csv(&self, ds: &RawDataset, out: impl Write) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| IngestError::Csv { line: 0, message: e.to_string() };
        w.write_record(["paper_id", "author_reviewer_id"]).map_err(fail)?;
        for (p, a) in self.pairs() {
            w.write_record([&ds.paper_ids[p], &ds.reviewer_ids[a]]).map_err(fail)?;
        }
        w.flush().map_err(|e| IngestError::Csv { line: 0, message: e.to_string() })
    }

    /// Reads `paper_id,author_reviewer_id` rows against `ds`'s ids. Papers
    /// without a row are dropped.
    pub fn read_csv(ds: &RawDataset, input: impl Read) -> Result<Self, IngestError> {
        let papers: HashMap<&str, usize> = ds.paper_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let reviewers: HashMap<&str, usize> =
            ds.reviewer_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut author_of = vec![None; ds.papers()];
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(IngestError::Ragged { line, expected: 2, found: record.len() });
            }
            let unknown = |kind, id: &str| IngestError::UnknownId { kind, id: id.to_string(), line };
            let p = *papers.get(&record[0]).ok_or_else(|| unknown("paper", &record[0]))?;
            let a = *reviewers.get(&record[1]).ok_or_else(|| unknown("reviewer", &record[1]))?;
            if author_of[p].replace(a).is_some() {
                return Err(IngestError::Duplicate { kind: "paper", id: record[0].to_string(), line });
            }
        }
        Ok(Self { author_of })
    }

    pub fn load_csv(ds: &RawDataset, path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        Self::read_csv(ds, File::open(path).map_err(io_err(path))?)
    }
}

/// Maximum-cardinality matching between papers and conflicted reviewers.
///
/// Augmenting paths are searched paper by paper in file order, trying
/// reviewers in ascending index, so the result is deterministic.
pub fn authorship_by_max_matching(ds: &RawDataset) -> Result<Authorship, IngestError> {
    let conflicts = ds.conflicts.as_ref().ok_or(IngestError::NoConflicts)?;
    let adj: Vec<Vec<usize>> = (0..ds.papers())
        .map(|p| (0..ds.reviewers()).filter(|&r| conflicts[r][p]).collect())
        .collect();
    let mut paper_of = vec![None; ds.reviewers()];
    for p in 0..ds.papers() {
        let mut seen = vec![false; ds.reviewers()];
        augment(p, &adj, &mut paper_of, &mut seen);
    }
    let mut author_of = vec![None; ds.papers()];
    for (r, p) in paper_of.iter().enumerate() {
        if let Some(p) = *p {
            author_of[p] = Some(r);
        }
    }
    Ok(Authorship { author_of })
}

fn augment(p: usize, adj: &[Vec<usize>], paper_of: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &r in &adj[p] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if paper_of[r].is_none_or(|q| augment(q, adj, paper_of, seen)) {
            paper_of[r] = Some(p);
            return true;
        }
    }
    false
}

/// Papers in file order take their highest-scoring reviewer (lowest index on
/// ties) if that reviewer is still free; otherwise the paper is dropped.
pub fn authorship_by_greedy(ds: &RawDataset) -> Authorship {
    let mut taken = vec![false; ds.reviewers()];
    let author_of = (0..ds.papers())
        .map(|p| {
            let best = (0..ds.reviewers()).reduce(|a, b| if ds.score(b, p) > ds.score(a, p) { b } else { a })?;
            if taken[best] {
                None
            } else {
                taken[best] = true;
                Some(best)
            }
        })
        .collect();
    Authorship { author_of }
}

/// Divides every score by the global maximum.
pub fn normalize_scores(mut ds: RawDataset) -> Result<RawDataset, IngestError> {
    let max = ds.scores.max().unwrap_or(0.0);
    if max <= 0.0 {
        return Err(IngestError::AllZero);
    }
    ds.scores = ds.scores.map(|v| v / max);
    Ok(ds)
}

/// The instance formed by authors and their matched papers. Reviewers who
/// author nothing are left out; agents keep the dataset's reviewer order.
pub fn build_instance(
    ds: &RawDataset,
    authorship: &Authorship,
    k_a: usize,
    k_p: usize,
) -> Result<Instance, IngestError> {
    let authors: BTreeSet<usize> = authorship.pairs().map(|(_, a)| a).collect();
    let agents: Vec<usize> = authors.into_iter().collect();
    let index: HashMap<usize, usize> = agents.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let mut papers_by_agent: Vec<Vec<usize>> = vec![Vec::new(); agents.len()];
    for (p, a) in authorship.pairs() {
        papers_by_agent[index[&a]].push(p);
    }
    let columns: Vec<usize> = papers_by_agent.iter().flatten().copied().collect();
    let scores = ds.scores.select(&agents, &columns);
    let submissions = papers_by_agent.iter().map(Vec::len).collect();
    let inst = Instance::from_scores(k_a, k_p, submissions, scores)?;
    let agent_labels = agents.iter().map(|&a| ds.reviewer_ids[a].clone()).collect();
    let paper_labels = columns.iter().map(|&p| ds.paper_ids[p].clone()).collect();
    Ok(inst.with_labels(agent_labels, paper_labels)?)
}

/// Samples `size` papers uniformly without replacement and keeps only them and
/// their authors. The same `(size, seed)` always yields the same instance.
pub fn subsample_instance(full: &Instance, size: usize, seed: u64) -> Result<Instance, IngestError> {
    if size > full.m() {
        return Err(IngestError::SubsampleTooLarge { size, available: full.m() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: BTreeSet<usize> = rand::seq::index::sample(&mut rng, full.m(), size).into_iter().collect();
    let keep: BTreeSet<PaperId> = picked.iter().map(|&j| full.paper_at(j)).collect();
    let agents: Vec<AgentId> = keep.iter().map(|p| p.author).collect::<BTreeSet<_>>().into_iter().collect();
    Ok(full.restrict(&agents, |p| keep.contains(&p)))
}

/// Writes a similarity CSV for the given ids and complete scores.
pub fn write_similarity(ds: &RawDataset, out: impl Write) -> Result<(), IngestError> {
    let fail = |e: csv::Error| IngestError::Csv { line: 0, message: e.to_string() };
    let mut w = csv::Writer::from_writer(out);
    let header = std::iter::once("reviewer_id").chain(ds.paper_ids.iter().map(String::as_str));
    w.write_record(header).map_err(fail)?;
    for (r, id) in ds.reviewer_ids.iter().enumerate() {
        let row = std::iter::once(id.clone()).chain((0..ds.papers()).map(|p| ds.score(r, p).to_string()));
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| IngestError::Csv { line: 0, message: e.to_string() })
}

/// Writes the conflict matrix in the similarity layout with `0`/`1` cells.
pub fn write_conflicts(ds: &RawDataset, out: impl Write) -> Result<(), IngestError> {
    let conflicts = ds.conflicts.as_ref().ok_or(IngestError::NoConflicts)?;
    let fail = |e: csv::Error| IngestError::Csv { line: 0, message: e.to_string() };
    let mut w = csv::Writer::from_writer(out);
    let header = std::iter::once("reviewer_id").chain(ds.paper_ids.iter().map(String::as_str));
    w.write_record(header).map_err(fail)?;
    for (id, row) in ds.reviewer_ids.iter().zip(conflicts) {
        let cells = row.iter().map(|&c| if c { "1" } else { "0" });
        w.write_record(std::iter::once(id.as_str()).chain(cells)).map_err(fail)?;
    }
    w.flush().map_err(|e| IngestError::Csv { line: 0, message: e.to_string() })
}

/// Writes `paper_id,reviewer_id` rows using the instance labels, in pair order.
pub fn write_assignment_csv(inst: &Instance, asg: &Assignment, out: impl Write) -> Result<(), IngestError> {
    let fail = |e: csv::Error| IngestError::Csv { line: 0, message: e.to_string() };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["paper_id", "reviewer_id"]).map_err(fail)?;
    let mut rows: Vec<(PaperId, AgentId)> = asg.pairs().map(|(r, p)| (p, r)).collect();
    rows.sort();
    for (p, r) in rows {
        if !inst.contains_agent(r) || inst.paper_index(p).is_none() {
            return Err(IngestError::Model(ModelError::UnknownPaper(p)));
        }
        w.write_record([inst.paper_label(p), inst.agent_label(r)]).map_err(fail)?;
    }
    w.flush().map_err(|e| IngestError::Csv { line: 0, message: e.to_string() })
}

/// Reads `paper_id,reviewer_id` rows against the instance labels.
pub fn read_assignment_csv(inst: &Instance, input: impl Read) -> Result<Assignment, IngestError> {
    let papers: HashMap<&str, PaperId> = inst.papers().map(|p| (inst.paper_label(p), p)).collect();
    let agents: HashMap<&str, AgentId> = inst.agents().map(|a| (inst.agent_label(a), a)).collect();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut asg = Assignment::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(IngestError::Ragged { line, expected: 2, found: record.len() });
        }
        let unknown = |kind, id: &str| IngestError::UnknownId { kind, id: id.to_string(), line };
        let p = *papers.get(&record[0]).ok_or_else(|| unknown("paper", &record[0]))?;
        let r = *agents.get(&record[1]).ok_or_else(|| unknown("reviewer", &record[1]))?;
        if !asg.insert(r, p) {
            return Err(IngestError::Duplicate { kind: "pair", id: format!("{},{}", &record[0], &record[1]), line });
        }
    }
    Ok(asg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(text: &str) -> Result<RawDataset, IngestError> {
        read_similarity(text.as_bytes())
    }

    #[test]
    fn parses_two_by_two() {
        let d = ds("reviewer_id,p1,p2\nr1,0.5,0.1\nr2,0.3,0.9\n").unwrap();
        assert_eq!(d.reviewer_ids, ["r1", "r2"]);
        assert_eq!(d.paper_ids, ["p1", "p2"]);
        assert_eq!(d.scores, SimilarityMatrix::from_rows(vec![vec![0.5, 0.1], vec![0.3, 0.9]]));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(ds(""), Err(IngestError::Empty)));
        match ds("reviewer_id,p1,p2\nr1,0.5,NaN\n") {
            Err(IngestError::BadCell { line: 2, column, .. }) => assert_eq!(column, "p2"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ds("reviewer_id,p1\nr1,0.5,0.2\n"), Err(IngestError::Ragged { line: 2, .. })));
        assert!(matches!(ds("reviewer_id,p1\nr1,x\n"), Err(IngestError::BadCell { .. })));
        assert!(matches!(ds("reviewer_id,p1\nr1,-1\n"), Err(IngestError::BadCell { .. })));
        assert!(matches!(
            ds("reviewer_id,p1\nr1,0.1\nr1,0.2\n"),
            Err(IngestError::Duplicate { kind: "reviewer", line: 3, .. })
        ));
        assert!(matches!(ds("reviewer_id,p1,p1\nr1,0.1,0.2\n"), Err(IngestError::Duplicate { kind: "paper", .. })));
    }

    fn with_conflicts(n: usize, rows: &[&str]) -> RawDataset {
        let header: String = std::iter::once("reviewer_id".to_string())
            .chain((1..=n).map(|p| format!("p{p}")))
            .collect::<Vec<_>>()
            .join(",");
        let zeros: Vec<String> = (1..=rows.len())
            .map(|r| format!("r{r},{}", vec!["0"; n].join(",")))
            .collect();
        let conflicts: Vec<String> = rows.iter().enumerate().map(|(r, c)| format!("r{},{c}", r + 1)).collect();
        ds(&format!("{header}\n{}\n", zeros.join("\n")))
            .unwrap()
            .read_conflicts(format!("{header}\n{}\n", conflicts.join("\n")).as_bytes())
            .unwrap()
    }

    #[test]
    fn matching_on_diagonal() {
        let d = with_conflicts(3, &["1,0,0", "0,1,0", "0,0,1"]);
        assert_eq!(authorship_by_max_matching(&d).unwrap().author_of, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn matching_without_conflicts() {
        let d = with_conflicts(2, &["0,0", "0,0"]);
        assert_eq!(authorship_by_max_matching(&d).unwrap().matched(), 0);
        let plain = ds("reviewer_id,p1\nr1,0.5\n").unwrap();
        assert!(matches!(authorship_by_max_matching(&plain), Err(IngestError::NoConflicts)));
    }

    #[test]
    fn matching_on_shared_conflict() {
        let d = with_conflicts(2, &["1,0", "1,0"]);
        let a = authorship_by_max_matching(&d).unwrap();
        assert_eq!(a.matched(), 1);
        assert_eq!(a.author_of, vec![Some(0), None]);
    }

    #[test]
    fn matching_augments() {
        // Paper 1 first takes r1; paper 2 can only use r1, so paper 1 moves to r2.
        let d = with_conflicts(2, &["1,1", "1,0"]);
        assert_eq!(authorship_by_max_matching(&d).unwrap().author_of, vec![Some(1), Some(0)]);
    }

    #[test]
    fn greedy_authorship() {
        let d = ds("reviewer_id,p1,p2\nr1,0.9,0.8\nr2,0.1,0.2\n").unwrap();
        assert_eq!(authorship_by_greedy(&d).author_of, vec![Some(0), None]);
        let d = ds("reviewer_id,p1,p2\nr1,0.9,0.1\nr2,0.1,0.8\n").unwrap();
        assert_eq!(authorship_by_greedy(&d).author_of, vec![Some(0), Some(1)]);
        let d = ds("reviewer_id,p1\nr1,0.5\nr2,0.5\n").unwrap();
        assert_eq!(authorship_by_greedy(&d).author_of, vec![Some(0)]);
    }

    #[test]
    fn normalization() {
        let d = normalize_scores(ds("reviewer_id,p1,p2\nr1,2.0,0.5\n").unwrap()).unwrap();
        assert_eq!(d.scores.get(0, 1), Some(0.25));
        let unit = ds("reviewer_id,p1,p2\nr1,1.0,0.3\n").unwrap();
        assert_eq!(normalize_scores(unit.clone()).unwrap(), unit);
        let single = normalize_scores(ds("reviewer_id,p1\nr1,5.0\n").unwrap()).unwrap();
        assert_eq!(single.scores.get(0, 0), Some(1.0));
        assert!(matches!(normalize_scores(ds("reviewer_id,p1\nr1,0\n").unwrap()), Err(IngestError::AllZero)));
    }

    #[test]
    fn authorship_csv_round_trip() {
        let d = ds("reviewer_id,a,b,c\nx,0.1,0.2,0.3\ny,0.3,0.2,0.1\n").unwrap();
        let auth = Authorship { author_of: vec![Some(1), None, Some(0)] };
        let mut buf = Vec::new();
        auth.write_csv(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "paper_id,author_reviewer_id\na,y\nc,x\n");
        assert_eq!(Authorship::read_csv(&d, buf.as_slice()).unwrap(), auth);
    }
}
