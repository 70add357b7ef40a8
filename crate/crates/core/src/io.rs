//! Score files and report serialization.
//!
//! Score files are UTF-8 TSV with three columns, `system`, `segment` and
//! `score`. An optional header line `system\tsegment\tscore` may come first;
//! lines starting with `#` and blank lines are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::calibration::CalibrationResult;
use crate::counts::PairCounts;
use crate::error::{Error, Result};
use crate::grouping::CorrelationReport;
use crate::matrix::ScoreMatrix;
use crate::score::EpsilonPolicy;
use crate::stats::{StatKind, StatValue};

pub const HEADER: &str = "system\tsegment\tscore";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Human,
    Metric,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Human => "human",
            Role::Metric => "metric",
        }
    }
}

/// A score file on disk and what it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignFile {
    pub path: PathBuf,
    pub role: Role,
    /// Metric name; `"human"` for human judgments.
    pub name: String,
}

impl CampaignFile {
    pub fn human(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            role: Role::Human,
            name: "human".into(),
        }
    }

    pub fn metric(name: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            role: Role::Metric,
            name: name.into(),
        }
    }

    pub fn load(&self) -> Result<ScoreMatrix> {
        load_scores(&self.path)
    }

    pub fn digest(&self) -> Result<InputDigest> {
        let bytes = fs::read(&self.path).map_err(|source| Error::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(InputDigest {
            role: self.role,
            name: self.name.clone(),
            path: self.path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scores(std::io::BufReader::new(file), &path.display().to_string())
}

/// Parses TSV score rows. `source` names the input in diagnostics.
pub fn parse_scores(reader: impl BufRead, source: &str) -> Result<ScoreMatrix> {
    let parse_err = |line: usize, column: usize, reason: String| Error::Parse {
        path: source.to_string(),
        line,
        column,
        reason,
    };
    let mut matrix = ScoreMatrix::new();
    let mut first_seen: HashMap<(String, String), usize> = HashMap::new();
    let mut seen_content = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, 1, format!("unreadable line: {e}")))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if line == HEADER {
                continue;
            }
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                fields.len().min(3) + 1,
                format!("expected 3 tab-separated columns, found {}", fields.len()),
            ));
        }
        let (system, segment, raw) = (fields[0], fields[1], fields[2]);
        if system.is_empty() {
            return Err(parse_err(lineno, 1, "empty system id".into()));
        }
        if segment.is_empty() {
            return Err(parse_err(lineno, 2, "empty segment id".into()));
        }
        let score = f64::from_str(raw.trim())
            .map_err(|_| parse_err(lineno, 3, format!("cannot parse score `{raw}`")))?;
        if !score.is_finite() {
            return Err(parse_err(lineno, 3, format!("score `{raw}` is not finite")));
        }
        let key = (system.to_string(), segment.to_string());
        if let Some(&first_line) = first_seen.get(&key) {
            return Err(Error::DuplicateKey {
                path: source.to_string(),
                line: lineno,
                first_line,
                system: key.0,
                segment: key.1,
            });
        }
        matrix.insert(system, segment, score)?;
        first_seen.insert(key, lineno);
    }
    Ok(matrix)
}

/// Writes a matrix in the score-file format. Scores use the shortest
/// representation that parses back to the same value.
pub fn write_scores(matrix: &ScoreMatrix) -> String {
    let mut out = String::with_capacity(matrix.len() * 24);
    out.push_str(HEADER);
    out.push('\n');
    for (sys, seg, v) in matrix.iter() {
        let _ = writeln!(out, "{sys}\t{seg}\t{v}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub role: Role,
    pub name: String,
    pub path: String,
    pub sha256: String,
}

/// Results for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricEntry {
    pub name: String,
    pub reports: Vec<CorrelationReport>,
    pub calibration: Option<CalibrationResult>,
}

impl MetricEntry {
    /// The value used for ranking: the calibrated value when present,
    /// otherwise the report for `kind`.
    pub fn ranking_value(&self, kind: StatKind) -> StatValue {
        if let Some(cal) = &self.calibration {
            return cal.stat_star;
        }
        self.reports
            .iter()
            .find(|r| r.stat == kind)
            .map_or(StatValue::Undefined, |r| r.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub rank_by: StatKind,
    /// Entries in input order.
    pub metrics: Vec<MetricEntry>,
    /// Metric names, best first.
    pub ranking: Vec<String>,
}

impl ReportDocument {
    pub fn new(
        tool_version: impl Into<String>,
        inputs: Vec<InputDigest>,
        rank_by: StatKind,
        metrics: Vec<MetricEntry>,
    ) -> Self {
        let ranking = rank_metrics(&metrics, rank_by);
        Self {
            tool_version: tool_version.into(),
            inputs,
            rank_by,
            metrics,
            ranking,
        }
    }

    /// 1-based rank of `name`.
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.ranking.iter().position(|n| n == name).map(|p| p + 1)
    }
}

/// Names sorted by value descending, ties broken by name; undefined values last.
pub fn rank_metrics(metrics: &[MetricEntry], kind: StatKind) -> Vec<String> {
    let mut keyed: Vec<(Option<f64>, &str)> = metrics
        .iter()
        .map(|e| (e.ranking_value(kind).value(), e.name.as_str()))
        .collect();
    keyed.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.1.cmp(b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(b.1),
    });
    keyed.into_iter().map(|(_, n)| n.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format `{s}`"))),
        }
    }
}

/// Six digits after the decimal point, or `NaN` when undefined.
pub fn format_stat(v: StatValue) -> String {
    match v {
        StatValue::Defined(x) => {
            let s = format!("{x:.6}");
            if s == "-0.000000" {
                "0.000000".to_string()
            } else {
                s
            }
        }
        StatValue::Undefined => "NaN".to_string(),
    }
}

fn stat_json(v: StatValue) -> Value {
    match v {
        StatValue::Defined(_) => {
            let rounded: f64 = format_stat(v).parse().expect("formatted number parses");
            json!(rounded)
        }
        StatValue::Undefined => Value::Null,
    }
}

pub fn write_report(doc: &ReportDocument, format: Format) -> Vec<u8> {
    match format {
        Format::Tsv => report_tsv(doc).into_bytes(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(doc)).expect("json values serialize");
            s.push('\n');
            s.into_bytes()
        }
    }
}

pub const REPORT_COLUMNS: [&str; 18] = [
    "metric",
    "rank",
    "stat",
    "mode",
    "eps_mode",
    "epsilon",
    "value",
    "groups_total",
    "groups_used",
    "pairs_total",
    "concordant",
    "discordant",
    "human_ties",
    "metric_ties",
    "joint_ties",
    "calibrated",
    "candidates",
    "sample_fraction",
];

fn report_tsv(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tiecal {}", doc.tool_version);
    for input in &doc.inputs {
        let _ = writeln!(
            out,
            "# input\t{}\t{}\t{}\tsha256={}",
            input.role.as_str(),
            input.name,
            input.path,
            input.sha256
        );
    }
    let _ = writeln!(out, "# rank_by\t{}", doc.rank_by);
    out.push_str(&REPORT_COLUMNS.join("\t"));
    out.push('\n');
    for entry in &doc.metrics {
        let rank = doc.rank_of(&entry.name).unwrap_or(0);
        for r in &entry.reports {
            push_row(&mut out, &entry.name, rank, r, None);
        }
        if let Some(cal) = &entry.calibration {
            push_row(&mut out, &entry.name, rank, &cal.report, Some(cal));
        }
    }
    out
}

fn push_row(
    out: &mut String,
    name: &str,
    rank: usize,
    r: &CorrelationReport,
    cal: Option<&CalibrationResult>,
) {
    let c = &r.pairs_by_class;
    let (calibrated, candidates, fraction) = match cal {
        Some(cal) => (
            if cal.exact { "exact" } else { "sampled" }.to_string(),
            cal.candidates_evaluated.to_string(),
            cal.config.sample_fraction.to_string(),
        ),
        None => ("-".into(), "-".into(), "-".into()),
    };
    let _ = writeln!(
        out,
        "{name}\t{rank}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{calibrated}\t{candidates}\t{fraction}",
        r.stat,
        r.mode,
        r.epsilon.mode,
        r.epsilon.epsilon,
        format_stat(r.value),
        r.groups_total,
        r.groups_used,
        r.pairs_total,
        c.concordant,
        c.discordant,
        c.human_ties,
        c.metric_ties,
        c.joint_ties,
    );
}

fn counts_json(c: &PairCounts) -> Value {
    json!({
        "concordant": c.concordant,
        "discordant": c.discordant,
        "human_ties": c.human_ties,
        "metric_ties": c.metric_ties,
        "joint_ties": c.joint_ties,
    })
}

fn epsilon_json(e: &EpsilonPolicy) -> Value {
    json!({ "mode": e.mode.as_str(), "value": e.epsilon })
}

fn correlation_json(r: &CorrelationReport) -> Value {
    json!({
        "stat": r.stat.name(),
        "mode": r.mode.as_str(),
        "value": stat_json(r.value),
        "groups_total": r.groups_total,
        "groups_used": r.groups_used,
        "pairs_total": r.pairs_total,
        "pairs_by_class": counts_json(&r.pairs_by_class),
        "epsilon": epsilon_json(&r.epsilon),
    })
}

fn calibration_json(c: &CalibrationResult) -> Value {
    json!({
        "epsilon_star": c.epsilon_star,
        "stat_star": stat_json(c.stat_star),
        "candidates_evaluated": c.candidates_evaluated,
        "exact": c.exact,
        "sample_fraction": c.config.sample_fraction,
        "seed": c.config.seed,
        "eps_mode": c.config.eps_mode.as_str(),
        "report": correlation_json(&c.report),
    })
}

fn report_json(doc: &ReportDocument) -> Value {
    let inputs: Vec<Value> = doc
        .inputs
        .iter()
        .map(|i| {
            json!({
                "role": i.role.as_str(),
                "name": i.name,
                "path": i.path,
                "sha256": i.sha256,
            })
        })
        .collect();
    let metrics: Vec<Value> = doc
        .metrics
        .iter()
        .map(|e| {
            let mut obj = Map::new();
            obj.insert("name".into(), json!(e.name));
            obj.insert("rank".into(), json!(doc.rank_of(&e.name)));
            obj.insert("value".into(), stat_json(e.ranking_value(doc.rank_by)));
            obj.insert(
                "reports".into(),
                Value::Array(e.reports.iter().map(correlation_json).collect()),
            );
            obj.insert(
                "calibration".into(),
                e.calibration.as_ref().map_or(Value::Null, calibration_json),
            );
            Value::Object(obj)
        })
        .collect();
    json!({
        "tool": "tiecal",
        "version": doc.tool_version,
        "inputs": inputs,
        "rank_by": doc.rank_by.name(),
        "ranking": doc.ranking,
        "metrics": metrics,
    })
}
