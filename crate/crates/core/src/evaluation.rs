//! Benchmark metrics: multiple-choice and boolean accuracy, AUROC, average
//! precision, ECE, macro averages, and curve points for plotting.
//!
//! Rank metrics are computed on raw logits. Sigmoid and division by a
//! positive temperature are strictly increasing, so the ordering is the
//! same as that of the scores, and it stays exact where scores would
//! round to equal values.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{self, CalibrationConfig, CalibrationError};
use crate::scorer::{FeatureExtractor, VerifierModel};
use crate::types::{GroupKind, ScoredStatement, StatementGroup};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("WrongKind: group {group_id} is not multiple-choice")]
    WrongKind { group_id: String },
    #[error("EmptyInput: no statements to evaluate")]
    EmptyInput,
    #[error("DegenerateLabels: {0}")]
    DegenerateLabels(String),
    #[error("MissingMetric: {metric} is absent from benchmark {benchmark}")]
    MissingMetric { benchmark: String, metric: Metric },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AccMc,
    AccBool,
    Auroc,
    Ap,
    Ece,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::AccMc => "acc_mc",
            Metric::AccBool => "acc_bool",
            Metric::Auroc => "auroc",
            Metric::Ap => "ap",
            Metric::Ece => "ece",
        })
    }
}

/// A statement group with every statement scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    pub group_id: String,
    pub kind: GroupKind,
    pub statements: Vec<ScoredStatement>,
}

pub fn score_group<E: FeatureExtractor>(model: &VerifierModel<E>, group: &StatementGroup) -> ScoredGroup {
    ScoredGroup {
        group_id: group.group_id.clone(),
        kind: group.kind,
        statements: group.statements.iter().map(|s| model.score_statement(s)).collect(),
    }
}

/// Multiple-choice accuracy and the number of groups whose top logit was
/// shared by more than one statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McAccuracy {
    pub accuracy: f64,
    pub groups: usize,
    pub tied_groups: usize,
}

/// Index of the first maximal logit and whether the maximum is shared.
fn argmax(statements: &[ScoredStatement]) -> (usize, bool) {
    let mut best = 0;
    let mut tied = false;
    for (i, s) in statements.iter().enumerate().skip(1) {
        if s.logit > statements[best].logit {
            best = i;
            tied = false;
        } else if s.logit == statements[best].logit {
            tied = true;
        }
    }
    (best, tied)
}

/// Fraction of groups whose correct statement scores highest. Ties go to
/// the lowest index.
pub fn accuracy_mc_detailed(groups: &[ScoredGroup]) -> Result<McAccuracy, EvalError> {
    if groups.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut correct = 0;
    let mut tied_groups = 0;
    for g in groups {
        if g.kind != GroupKind::MultipleChoice || g.statements.is_empty() {
            return Err(EvalError::WrongKind {
                group_id: g.group_id.clone(),
            });
        }
        let (best, tied) = argmax(&g.statements);
        correct += usize::from(g.statements[best].statement.label);
        tied_groups += usize::from(tied);
    }
    Ok(McAccuracy {
        accuracy: correct as f64 / groups.len() as f64,
        groups: groups.len(),
        tied_groups,
    })
}

pub fn accuracy_mc(groups: &[ScoredGroup]) -> Result<f64, EvalError> {
    Ok(accuracy_mc_detailed(groups)?.accuracy)
}

/// Fraction of statements where `logit > 0` matches the label.
pub fn accuracy_bool(statements: &[ScoredStatement]) -> Result<f64, EvalError> {
    if statements.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let hits = statements.iter().filter(|s| (s.logit > 0.0) == s.statement.label).count();
    Ok(hits as f64 / statements.len() as f64)
}

fn class_counts(ranked: &[(f64, bool)]) -> (usize, usize) {
    let pos = ranked.iter().filter(|p| p.1).count();
    (pos, ranked.len() - pos)
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half.
pub fn auroc(ranked: &[(f64, bool)]) -> Result<f64, EvalError> {
    let (pos, neg) = class_counts(ranked);
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateLabels(format!(
            "AUROC needs both classes ({pos} positive, {neg} negative)"
        )));
    }
    let mut sorted = ranked.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    // Twice the concordant count, to keep half-ties integral.
    let mut twice: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let (p, n) = class_counts(&sorted[i..j]);
        twice += p as u128 * (2 * neg_below + n as u128);
        neg_below += n as u128;
        i = j;
    }
    Ok(twice as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Input indices in descending score order, equal scores in input order.
fn descending(ranked: &[(f64, bool)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    order.sort_by(|&a, &b| ranked[b].0.partial_cmp(&ranked[a].0).unwrap_or(Ordering::Equal));
    order
}

/// Mean over positives of the precision at the positive's rank.
pub fn average_precision(ranked: &[(f64, bool)]) -> Result<f64, EvalError> {
    let (pos, _) = class_counts(ranked);
    if pos == 0 {
        return Err(EvalError::DegenerateLabels("average precision needs a positive".into()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, i) in descending(ranked).into_iter().enumerate() {
        if ranked[i].1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// Number of unordered pairs sharing a score, for the report metadata.
pub fn tied_pairs(ranked: &[(f64, bool)]) -> usize {
    let mut scores: Vec<f64> = ranked.iter().map(|p| p.0).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut total = 0;
    let mut i = 0;
    while i < scores.len() {
        let mut j = i;
        while j < scores.len() && scores[j] == scores[i] {
            j += 1;
        }
        total += (j - i) * (j - i - 1) / 2;
        i = j;
    }
    total
}

/// ROC points `(false positive rate, true positive rate)`, one per
/// distinct score from the top, starting at the origin.
pub fn roc_points(ranked: &[(f64, bool)]) -> Result<Vec<(f64, f64)>, EvalError> {
    let (pos, neg) = class_counts(ranked);
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateLabels("ROC needs both classes".into()));
    }
    let order = descending(ranked);
    let mut out = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (k, &i) in order.iter().enumerate() {
        if ranked[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_score = order.get(k + 1).is_none_or(|&n| ranked[n].0 != ranked[i].0);
        if last_of_score {
            out.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        }
    }
    Ok(out)
}

/// Precision-recall points `(recall, precision)`, one per distinct score.
pub fn pr_points(ranked: &[(f64, bool)]) -> Result<Vec<(f64, f64)>, EvalError> {
    let (pos, _) = class_counts(ranked);
    if pos == 0 {
        return Err(EvalError::DegenerateLabels("precision-recall needs a positive".into()));
    }
    let order = descending(ranked);
    let mut out = Vec::new();
    let mut tp = 0usize;
    for (k, &i) in order.iter().enumerate() {
        tp += usize::from(ranked[i].1);
        let last_of_score = order.get(k + 1).is_none_or(|&n| ranked[n].0 != ranked[i].0);
        if last_of_score {
            out.push((tp as f64 / pos as f64, tp as f64 / (k + 1) as f64));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    MultipleChoice,
    Boolean,
}

/// One benchmark listed in a manifest. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub kind: BenchmarkKind,
    #[serde(default)]
    pub balanced: bool,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, EvalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| EvalError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    for e in &mut entries {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark: String,
    pub kind: BenchmarkKind,
    pub acc_mc: Option<f64>,
    /// Groups whose top score was shared; present with `acc_mc`.
    pub mc_tied_groups: Option<usize>,
    pub acc_bool: Option<f64>,
    pub auroc: f64,
    pub ap: f64,
    pub ece: f64,
    pub tied_score_pairs: usize,
    pub n_groups: usize,
    pub n_statements: usize,
}

impl BenchmarkReport {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::AccMc => self.acc_mc,
            Metric::AccBool => self.acc_bool,
            Metric::Auroc => Some(self.auroc),
            Metric::Ap => Some(self.ap),
            Metric::Ece => Some(self.ece),
        }
    }
}

/// Unweighted mean of `metric` over `reports`.
pub fn macro_average(reports: &[BenchmarkReport], metric: Metric) -> Result<f64, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sum = 0.0;
    for r in reports {
        sum += r.metric(metric).ok_or_else(|| EvalError::MissingMetric {
            benchmark: r.benchmark.clone(),
            metric,
        })?;
    }
    Ok(sum / reports.len() as f64)
}

/// Evaluates already-scored groups. `acc_mc` is reported for
/// multiple-choice benchmarks and `acc_bool` for balanced boolean ones.
pub fn evaluate_scored(
    entry: &ManifestEntry,
    groups: &[ScoredGroup],
    calibration: &CalibrationConfig,
) -> Result<BenchmarkReport, EvalError> {
    let statements: Vec<ScoredStatement> = groups.iter().flat_map(|g| g.statements.iter().cloned()).collect();
    if statements.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let by_logit: Vec<(f64, bool)> = statements.iter().map(|s| (s.logit, s.statement.label)).collect();
    let by_score: Vec<(f64, bool)> = statements.iter().map(|s| (s.score, s.statement.label)).collect();
    let mc = match entry.kind {
        BenchmarkKind::MultipleChoice => Some(accuracy_mc_detailed(groups)?),
        BenchmarkKind::Boolean => None,
    };
    let acc_bool = match (entry.kind, entry.balanced) {
        (BenchmarkKind::Boolean, true) => Some(accuracy_bool(&statements)?),
        _ => None,
    };
    Ok(BenchmarkReport {
        benchmark: entry.name.clone(),
        kind: entry.kind,
        acc_mc: mc.map(|m| m.accuracy),
        mc_tied_groups: mc.map(|m| m.tied_groups),
        acc_bool,
        auroc: auroc(&by_logit)?,
        ap: average_precision(&by_logit)?,
        ece: calibration::compute_ece(&by_score, calibration)?,
        tied_score_pairs: tied_pairs(&by_logit),
        n_groups: groups.len(),
        n_statements: statements.len(),
    })
}

pub fn evaluate_benchmark<E: FeatureExtractor>(
    model: &VerifierModel<E>,
    entry: &ManifestEntry,
    groups: &[StatementGroup],
    calibration: &CalibrationConfig,
) -> Result<BenchmarkReport, EvalError> {
    let scored: Vec<ScoredGroup> = groups.iter().map(|g| score_group(model, g)).collect();
    evaluate_scored(entry, &scored, calibration)
}

/// Conventions that shape the numbers, carried in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub temperature: f64,
    pub ece_bins: usize,
    pub ece_binning: calibration::Binning,
    pub auroc: String,
    pub average_precision: String,
    pub argmax_ties: String,
    pub acc_bool_threshold: String,
    pub macro_average: String,
}

impl ReportMetadata {
    pub fn new(temperature: f64, calibration: &CalibrationConfig) -> Self {
        Self {
            temperature,
            ece_bins: calibration.bins,
            ece_binning: calibration.binning,
            auroc: "pair counting over raw logits, ties count 1/2".into(),
            average_precision: "step interpolation, mean precision at each positive, ties in input order".into(),
            argmax_ties: "lowest within-group index wins; tied groups counted per benchmark".into(),
            acc_bool_threshold: "logit > 0".into(),
            macro_average: "unweighted mean over benchmarks reporting the metric".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroAverages {
    pub acc_mc: Option<f64>,
    pub acc_bool: Option<f64>,
    pub auroc: Option<f64>,
    pub ap: Option<f64>,
    pub ece: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub benchmarks: Vec<BenchmarkReport>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroAverages,
}

impl EvaluationReport {
    pub fn new(metadata: ReportMetadata, benchmarks: Vec<BenchmarkReport>) -> Self {
        let over = |metric: Metric| {
            let with: Vec<BenchmarkReport> = benchmarks.iter().filter(|b| b.metric(metric).is_some()).cloned().collect();
            macro_average(&with, metric).ok()
        };
        let macro_avg = MacroAverages {
            acc_mc: over(Metric::AccMc),
            acc_bool: over(Metric::AccBool),
            auroc: over(Metric::Auroc),
            ap: over(Metric::Ap),
            ece: over(Metric::Ece),
        };
        Self {
            metadata,
            benchmarks,
            macro_avg,
        }
    }

    /// Aligned plain-text table, one row per benchmark plus the macro row.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut rows = vec![[
            "benchmark".to_string(),
            "acc_mc".into(),
            "acc_bool".into(),
            "auroc".into(),
            "ap".into(),
            "ece".into(),
            "groups".into(),
            "statements".into(),
        ]];
        for b in &self.benchmarks {
            rows.push([
                b.benchmark.clone(),
                fmt(b.acc_mc),
                fmt(b.acc_bool),
                fmt(Some(b.auroc)),
                fmt(Some(b.ap)),
                fmt(Some(b.ece)),
                b.n_groups.to_string(),
                b.n_statements.to_string(),
            ]);
        }
        let m = &self.macro_avg;
        rows.push([
            "macro".into(),
            fmt(m.acc_mc),
            fmt(m.acc_bool),
            fmt(m.auroc),
            fmt(m.ap),
            fmt(m.ece),
            String::new(),
            String::new(),
        ]);
        let widths: Vec<usize> = (0..8).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (k, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
            if k == 0 || k == rows.len() - 2 {
                writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * 7)).expect("write to string");
            }
        }
        out
    }
}

/// Scores and evaluates every benchmark of a manifest.
pub fn evaluate_manifest<E: FeatureExtractor>(
    model: &VerifierModel<E>,
    manifest: &[ManifestEntry],
    calibration: &CalibrationConfig,
) -> Result<(EvaluationReport, Vec<Vec<ScoredGroup>>), EvalError> {
    let mut reports = Vec::new();
    let mut scored = Vec::new();
    for entry in manifest {
        let groups = crate::jsonl::read_groups(&entry.path)?;
        let s: Vec<ScoredGroup> = groups.iter().map(|g| score_group(model, g)).collect();
        reports.push(evaluate_scored(entry, &s, calibration)?);
        scored.push(s);
    }
    Ok((
        EvaluationReport::new(ReportMetadata::new(model.temperature(), calibration), reports),
        scored,
    ))
}

/// Writes `<name>.roc.csv`, `<name>.pr.csv` and `<name>.reliability.csv`
/// into `dir`.
pub fn write_curves(
    dir: impl AsRef<Path>,
    name: &str,
    groups: &[ScoredGroup],
    calibration: &CalibrationConfig,
) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let statements: Vec<&ScoredStatement> = groups.iter().flat_map(|g| &g.statements).collect();
    let by_logit: Vec<(f64, bool)> = statements.iter().map(|s| (s.logit, s.statement.label)).collect();
    let by_score: Vec<(f64, bool)> = statements.iter().map(|s| (s.score, s.statement.label)).collect();

    let mut roc = csv::Writer::from_path(dir.join(format!("{name}.roc.csv")))?;
    roc.write_record(["fpr", "tpr"])?;
    for (x, y) in roc_points(&by_logit)? {
        roc.serialize((x, y))?;
    }
    roc.flush()?;

    let mut pr = csv::Writer::from_path(dir.join(format!("{name}.pr.csv")))?;
    pr.write_record(["recall", "precision"])?;
    for (x, y) in pr_points(&by_logit)? {
        pr.serialize((x, y))?;
    }
    pr.flush()?;

    let mut rel = csv::Writer::from_path(dir.join(format!("{name}.reliability.csv")))?;
    for row in calibration::reliability_curve(&by_score, calibration)? {
        rel.serialize(row)?;
    }
    rel.flush()?;
    Ok(())
}
