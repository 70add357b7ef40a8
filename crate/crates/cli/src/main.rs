use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tiecal_core::{
    apply_epsilon, bucket_curve, break_ties_randomly, calibrate, f1_curve, format_stat,
    tie_location_histogram, write_report, write_scores, CalibrationConfig, CampaignFile,
    EpsMode, EpsilonPolicy, Error, Format, GroupingMode, MetricEntry, ReportDocument,
    ScoreMatrix, ScoreVector, StatKind, StatValue,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const BASELINE_NAME: &str = "Constant-Metric";

#[derive(Parser)]
#[command(name = "tiecal", version, about = "Rank-based meta-evaluation of metrics against human scores, with tie calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment-level statistics for each metric at a fixed epsilon.
    Correlate(CorrelateArgs),
    /// Find the epsilon that maximises a statistic.
    Calibrate(CalibrateArgs),
    /// Rank metrics by a statistic, optionally after calibration.
    Rank(RankArgs),
    /// Re-evaluate a metric after equal-width bucketing into k buckets.
    Buckets(BucketsArgs),
    /// Histogram of where epsilon introduces new metric ties.
    TieHist(TieHistArgs),
    /// Ties F1, correct-rank F1 and acc_eq over an epsilon grid.
    F1Curve(F1CurveArgs),
    /// Break metric ties at random and write the resulting ranks.
    Perturb(PerturbArgs),
}

#[derive(Args)]
struct Inputs {
    /// Human score file (TSV: system, segment, score).
    #[arg(long, value_name = "FILE")]
    human: PathBuf,
    /// Metric score file as NAME=FILE; repeatable.
    #[arg(long = "metric", value_name = "NAME=FILE", required = true, value_parser = parse_metric_arg)]
    metrics: Vec<(String, PathBuf)>,
    /// no-grouping, group-by-item or group-by-system.
    #[arg(long, default_value = "group-by-item")]
    mode: GroupingMode,
    /// absolute: |a - b| <= eps; relative: |a - b| <= eps * max(|a|, |b|).
    #[arg(long, default_value = "absolute")]
    eps_mode: EpsMode,
}

#[derive(Args)]
struct Output {
    /// Write to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// tsv or json.
    #[arg(long, env = "TIECAL_FORMAT", default_value = "tsv", value_parser = parse_format)]
    format: Format,
}

#[derive(Args)]
struct EpsilonArgs {
    /// Metric tie threshold.
    #[arg(long, default_value_t = 0.0, conflicts_with = "epsilon_file")]
    epsilon: f64,
    /// Thresholds written by `calibrate --emit-epsilon`.
    #[arg(long, value_name = "FILE")]
    epsilon_file: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Statistic name, comma-separated list, or `all`.
    #[arg(long, default_value = "acc_eq")]
    stat: String,
    #[command(flatten)]
    eps: EpsilonArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Statistic to maximise.
    #[arg(long, default_value = "acc_eq")]
    stat: StatKind,
    /// Fraction of pairs whose gaps become candidate thresholds.
    #[arg(long, default_value_t = 1.0)]
    sample_fraction: f64,
    /// Seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the chosen thresholds to FILE.
    #[arg(long, value_name = "FILE")]
    emit_epsilon: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Statistic to rank by.
    #[arg(long, default_value = "acc_eq")]
    stat: StatKind,
    /// Rank by the calibrated statistic.
    #[arg(long)]
    calibrate: bool,
    /// Fraction of pairs whose gaps become candidate thresholds.
    #[arg(long, default_value_t = 1.0, requires = "calibrate")]
    sample_fraction: f64,
    /// Seed for pair sampling.
    #[arg(long, default_value_t = 0, requires = "calibrate")]
    seed: u64,
    /// Add a metric that gives every translation the same score.
    #[arg(long)]
    baseline: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BucketsArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Statistic to evaluate at each k.
    #[arg(long, default_value = "tau_b")]
    stat: StatKind,
    /// Bucket counts to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
    k_list: Vec<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TieHistArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    eps: EpsilonArgs,
    /// Number of equal-width bins over the metric's score range.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct F1CurveArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Thresholds to evaluate.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PerturbArgs {
    /// Metric score file, as FILE or NAME=FILE.
    #[arg(long, value_name = "FILE")]
    metric: String,
    /// Metric tie threshold.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// absolute or relative.
    #[arg(long, default_value = "absolute")]
    eps_mode: EpsMode,
    /// Seed for tie breaking.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_metric_arg(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=FILE, got `{s}`")),
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failures, split by exit code.
enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Verification { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Correlate(a) => correlate(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Rank(a) => rank(a),
        Command::Buckets(a) => buckets(a),
        Command::TieHist(a) => tie_hist(a),
        Command::F1Curve(a) => f1(a),
        Command::Perturb(a) => perturb(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("tiecal: error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("tiecal: internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

struct Loaded {
    human: ScoreMatrix,
    metrics: Vec<(String, ScoreMatrix)>,
    files: Vec<CampaignFile>,
}

impl Loaded {
    fn digests(&self) -> Result<Vec<tiecal_core::InputDigest>, Failure> {
        Ok(self.files.iter().map(CampaignFile::digest).collect::<Result<_, _>>()?)
    }
}

fn load(inputs: &Inputs) -> Result<Loaded, Failure> {
    let mut seen = std::collections::HashSet::new();
    for (name, _) in &inputs.metrics {
        if !seen.insert(name.as_str()) {
            return Err(Failure::Input(format!("metric name `{name}` given twice")));
        }
    }
    let mut files = vec![CampaignFile::human(&inputs.human)];
    files.extend(inputs.metrics.iter().map(|(n, p)| CampaignFile::metric(n, p)));
    let human = files[0].load()?;
    let metrics = files[1..]
        .iter()
        .map(|f| Ok((f.name.clone(), f.load()?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Loaded {
        human,
        metrics,
        files,
    })
}

fn single_metric(inputs: &Inputs, command: &str) -> Result<(), Failure> {
    if inputs.metrics.len() != 1 {
        return Err(Failure::Input(format!("{command} takes exactly one --metric")));
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Internal(format!("writing output: {e}")))
        }
    }
}

fn parse_stat_list(s: &str) -> Result<Vec<StatKind>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(StatKind::CORRELATIONS.to_vec());
    }
    s.split(',')
        .map(|t| t.trim().parse::<StatKind>().map_err(Failure::from))
        .collect()
}

/// Per-metric thresholds. A line with a single number applies to every metric.
struct EpsilonTable {
    default: Option<EpsilonPolicy>,
    by_metric: HashMap<String, EpsilonPolicy>,
}

impl EpsilonTable {
    fn resolve(args: &EpsilonArgs, eps_mode: EpsMode) -> Result<Self, Failure> {
        match &args.epsilon_file {
            None => Ok(Self {
                default: Some(EpsilonPolicy::new(eps_mode, args.epsilon)?),
                by_metric: HashMap::new(),
            }),
            Some(path) => read_epsilon_file(path, eps_mode),
        }
    }

    fn for_metric(&self, name: &str) -> Result<EpsilonPolicy, Failure> {
        self.by_metric
            .get(name)
            .copied()
            .or(self.default)
            .ok_or_else(|| Failure::Input(format!("no epsilon for metric `{name}`")))
    }
}

fn read_epsilon_file(path: &Path, eps_mode: EpsMode) -> Result<EpsilonTable, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, why: String| Failure::Input(format!("{}:{line}: {why}", path.display()));
    let mut table = EpsilonTable {
        default: None,
        by_metric: HashMap::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 1, format!("bad epsilon `{s}`")));
        match fields.as_slice() {
            [eps] => table.default = Some(EpsilonPolicy::new(eps_mode, number(eps)?)?),
            [name, eps] => {
                table.by_metric.insert(name.to_string(), EpsilonPolicy::new(eps_mode, number(eps)?)?);
            }
            [name, eps, mode] => {
                let mode: EpsMode = mode.parse()?;
                table.by_metric.insert(name.to_string(), EpsilonPolicy::new(mode, number(eps)?)?);
            }
            _ => return Err(bad(i + 1, "expected `epsilon` or `metric<TAB>epsilon[<TAB>mode]`".into())),
        }
    }
    Ok(table)
}

fn correlate(args: CorrelateArgs) -> CmdResult {
    let kinds = parse_stat_list(&args.stat)?;
    let eps = EpsilonTable::resolve(&args.eps, args.inputs.eps_mode)?;
    let data = load(&args.inputs)?;
    let mut entries = Vec::new();
    for (name, m) in &data.metrics {
        let policy = eps.for_metric(name)?;
        let reports = kinds
            .iter()
            .map(|&k| apply_epsilon(&data.human, m, args.inputs.mode, k, policy))
            .collect();
        entries.push(MetricEntry {
            name: name.clone(),
            reports,
            calibration: None,
        });
    }
    let doc = ReportDocument::new(VERSION, data.digests()?, kinds[0], entries);
    emit(&args.output.out, &write_report(&doc, args.output.format))
}

fn warn_if_tie_unaware(kind: StatKind) -> Option<String> {
    (!kind.rewards_ties()).then(|| {
        format!(
            "warning: {kind} does not reward correctly predicted ties; calibrating it may lead to unexpected results"
        )
    })
}

fn run_calibrate(args: CalibrateArgs) -> CmdResult {
    let data = load(&args.inputs)?;
    let cfg = CalibrationConfig::new(args.stat, args.inputs.mode)
        .with_eps_mode(args.inputs.eps_mode)
        .with_sampling(args.sample_fraction, args.seed);
    let warning = warn_if_tie_unaware(args.stat);
    if let Some(w) = &warning {
        eprintln!("tiecal: {w}");
    }

    let mut entries = Vec::new();
    for (name, m) in &data.metrics {
        let result = calibrate(&data.human, m, &cfg)?;
        entries.push(MetricEntry {
            name: name.clone(),
            reports: Vec::new(),
            calibration: Some(result),
        });
    }

    if let Some(path) = &args.emit_epsilon {
        let mut text = String::from("# metric\tepsilon\teps_mode\n");
        for e in &entries {
            let cal = e.calibration.as_ref().expect("calibrated");
            let _ = writeln!(text, "{}\t{}\t{}", e.name, cal.epsilon_star, cal.config.eps_mode);
        }
        fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }

    let doc = ReportDocument::new(VERSION, data.digests()?, args.stat, entries);
    let bytes = match args.output.format {
        Format::Json => write_report(&doc, Format::Json),
        Format::Tsv => {
            let mut text = String::new();
            if let Some(w) = &warning {
                let _ = writeln!(text, "# {w}");
            }
            for e in &doc.metrics {
                let cal = e.calibration.as_ref().expect("calibrated");
                let _ = writeln!(
                    text,
                    "metric={} epsilon={} {}={} groups_used={}/{} candidates={} exact={}",
                    e.name,
                    cal.epsilon_star,
                    args.stat,
                    format_stat(cal.stat_star),
                    cal.report.groups_used,
                    cal.report.groups_total,
                    cal.candidates_evaluated,
                    cal.exact,
                );
            }
            text.into_bytes()
        }
    };
    emit(&args.output.out, &bytes)
}

/// The same score for every key of the human matrix.
fn constant_metric(human: &ScoreMatrix) -> ScoreMatrix {
    human.map_scores(|_| 0.0)
}

fn rank(args: RankArgs) -> CmdResult {
    let data = load(&args.inputs)?;
    let mut metrics = data.metrics.clone();
    if args.baseline {
        if metrics.iter().any(|(n, _)| n == BASELINE_NAME) {
            return Err(Failure::Input(format!("metric name `{BASELINE_NAME}` is reserved by --baseline")));
        }
        metrics.push((BASELINE_NAME.to_string(), constant_metric(&data.human)));
    }
    if args.calibrate {
        if let Some(w) = warn_if_tie_unaware(args.stat) {
            eprintln!("tiecal: {w}");
        }
    }
    let cfg = CalibrationConfig::new(args.stat, args.inputs.mode)
        .with_eps_mode(args.inputs.eps_mode)
        .with_sampling(args.sample_fraction, args.seed);

    let mut entries = Vec::new();
    for (name, m) in &metrics {
        let plain = apply_epsilon(&data.human, m, args.inputs.mode, args.stat, EpsilonPolicy::exact());
        let calibration = if args.calibrate {
            Some(calibrate(&data.human, m, &cfg)?)
        } else {
            None
        };
        entries.push(MetricEntry {
            name: name.clone(),
            reports: vec![plain],
            calibration,
        });
    }
    let doc = ReportDocument::new(VERSION, data.digests()?, args.stat, entries);
    emit(&args.output.out, &write_report(&doc, args.output.format))
}

fn buckets(args: BucketsArgs) -> CmdResult {
    single_metric(&args.inputs, "buckets")?;
    if args.k_list.is_empty() {
        return Err(Failure::Input("--k-list is empty".into()));
    }
    let data = load(&args.inputs)?;
    let (name, m) = &data.metrics[0];
    let rows = bucket_curve(&data.human, m, args.inputs.mode, args.stat, &args.k_list)?;
    let bytes = match args.output.format {
        Format::Tsv => {
            let mut text = String::from("metric\tk\tstat\tmode\tvalue\tgroups_total\tgroups_used\tpairs_total\n");
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.k,
                    r.report.stat,
                    r.report.mode,
                    format_stat(r.report.value),
                    r.report.groups_total,
                    r.report.groups_used,
                    r.report.pairs_total,
                );
            }
            text.into_bytes()
        }
        Format::Json => json_rows(rows.iter().map(|r| {
            serde_json::json!({
                "metric": name,
                "k": r.k,
                "stat": r.report.stat.name(),
                "mode": r.report.mode.as_str(),
                "value": json_stat(r.report.value),
                "groups_total": r.report.groups_total,
                "groups_used": r.report.groups_used,
                "pairs_total": r.report.pairs_total,
            })
        })),
    };
    emit(&args.output.out, &bytes)
}

fn tie_hist(args: TieHistArgs) -> CmdResult {
    single_metric(&args.inputs, "tie-hist")?;
    let eps = EpsilonTable::resolve(&args.eps, args.inputs.eps_mode)?;
    let data = load(&args.inputs)?;
    let (name, m) = &data.metrics[0];
    let policy = eps.for_metric(name)?;
    let hist = tie_location_histogram(&data.human, m, args.inputs.mode, policy, args.bins)?;
    let edges = hist.bin_edges();
    let bytes = match args.output.format {
        Format::Tsv => {
            let mut text = format!("# metric={name} epsilon={} eps_mode={}\n", policy.epsilon, policy.mode);
            text.push_str("bin\tlo\thi\tall_pairs\tnewly_tied\n");
            for (i, (all, new)) in hist.all_pairs.iter().zip(&hist.newly_tied).enumerate() {
                let _ = writeln!(text, "{i}\t{}\t{}\t{all}\t{new}", edges[i], edges[i + 1]);
            }
            text.into_bytes()
        }
        Format::Json => json_rows(hist.all_pairs.iter().zip(&hist.newly_tied).enumerate().map(
            |(i, (all, new))| {
                serde_json::json!({
                    "bin": i,
                    "lo": edges[i],
                    "hi": edges[i + 1],
                    "all_pairs": all,
                    "newly_tied": new,
                })
            },
        )),
    };
    emit(&args.output.out, &bytes)
}

fn f1(args: F1CurveArgs) -> CmdResult {
    single_metric(&args.inputs, "f1-curve")?;
    let data = load(&args.inputs)?;
    let (name, m) = &data.metrics[0];
    let rows = f1_curve(&data.human, m, args.inputs.mode, args.inputs.eps_mode, &args.grid)?;
    let bytes = match args.output.format {
        Format::Tsv => {
            let mut text = String::from("metric\tepsilon\tties_f1\trank_f1\tacc_eq\n");
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{name}\t{}\t{}\t{}\t{}",
                    r.epsilon,
                    format_stat(r.ties_f1),
                    format_stat(r.rank_f1),
                    format_stat(r.acc_eq)
                );
            }
            text.into_bytes()
        }
        Format::Json => json_rows(rows.iter().map(|r| {
            serde_json::json!({
                "metric": name,
                "epsilon": r.epsilon,
                "ties_f1": json_stat(r.ties_f1),
                "rank_f1": json_stat(r.rank_f1),
                "acc_eq": json_stat(r.acc_eq),
            })
        })),
    };
    emit(&args.output.out, &bytes)
}

fn perturb(args: PerturbArgs) -> CmdResult {
    let path = match parse_metric_arg(&args.metric) {
        Ok((_, p)) if !Path::new(&args.metric).exists() => p,
        _ => PathBuf::from(&args.metric),
    };
    let m = tiecal_core::load_scores(&path)?;
    let eps = EpsilonPolicy::new(args.eps_mode, args.epsilon)?;
    let keys: Vec<(String, String)> = m.iter().map(|(s, g, _)| (s.to_string(), g.to_string())).collect();
    let scores = ScoreVector::new(m.iter().map(|(_, _, v)| v).collect())?;
    let ranks = break_ties_randomly(&scores, eps, args.seed);
    let mut out = ScoreMatrix::new();
    for ((sys, seg), &r) in keys.into_iter().zip(ranks.iter()) {
        out.insert(sys, seg, r)?;
    }
    emit(&args.out, write_scores(&out).as_bytes())
}

fn json_stat(v: StatValue) -> serde_json::Value {
    match v {
        StatValue::Defined(_) => serde_json::json!(format_stat(v).parse::<f64>().expect("formatted number")),
        StatValue::Undefined => serde_json::Value::Null,
    }
}

fn json_rows(rows: impl Iterator<Item = serde_json::Value>) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(&rows.collect::<Vec<_>>()).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}
