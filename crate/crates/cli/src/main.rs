use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aesop_core::corpus::{jsonl_lines, parse_corpus};
use aesop_core::metric::Normalization;
use aesop_core::report::Metric;
use aesop_core::{
    build_catalog, compare_side_by_side, correlate_variants, evaluate_corpus, perturb_corpus, read_corpus,
    read_triplet_file, AssignmentMode, AssignmentWeights, MetricConfig, MetricReport, PerturbationConfig,
    TokenizerConfig, TripletFormat,
};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Entity-set extraction scoring.
#[derive(Debug, Parser)]
#[command(name = "aesop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a prediction corpus against a gold corpus.
    Evaluate(EvaluateArgs),
    /// Convert a triplet dataset into entity-set JSONL.
    Convert(ConvertArgs),
    /// Write a copy of a corpus with swapped property values.
    Perturb(PerturbArgs),
    /// Correlate the per-sample metrics of an evaluation report.
    Correlate(CorrelateArgs),
    /// Compare two prediction corpora sample by sample.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Multiprop,
    Approxname,
    Exactname,
}

impl From<ModeArg> for AssignmentMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Multiprop => AssignmentMode::MultiProp,
            ModeArg::Approxname => AssignmentMode::ApproxName,
            ModeArg::Exactname => AssignmentMode::ExactName,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Max,
    Precision,
    Recall,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Max => Normalization::Max,
            NormArg::Precision => Normalization::Precision,
            NormArg::Recall => Normalization::Recall,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Nyt,
    Conll04,
    Rebel,
}

impl From<FormatArg> for TripletFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Nyt => TripletFormat::Nyt,
            FormatArg::Conll04 => TripletFormat::Conll04,
            FormatArg::Rebel => TripletFormat::Rebel,
        }
    }
}

#[derive(Debug, Args)]
struct ScoringArgs {
    /// Metric to report; repeatable. Defaults to all variants and triplet metrics.
    #[arg(long = "metric", value_name = "NAME")]
    metrics: Vec<String>,
    #[arg(long, value_enum, default_value = "multiprop")]
    assignment: ModeArg,
    #[arg(long, value_enum, default_value = "max")]
    norm: NormArg,
    /// Name weight of the multiprop assignment similarity.
    #[arg(long, default_value_t = 0.9)]
    name_weight: f64,
    #[arg(long)]
    no_lowercase: bool,
    #[arg(long)]
    keep_punctuation: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Probability of replacing each eligible property value.
    #[arg(long)]
    rate: f64,
    /// Also replace values that do not occur in the sample text.
    #[arg(long)]
    no_text_match: bool,
    /// Change log path; defaults to `<out>.changes.jsonl`.
    #[arg(long)]
    changes: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
    /// Metric to include; repeatable. Defaults to every metric in the report.
    #[arg(long = "metric", value_name = "NAME")]
    metrics: Vec<String>,
    #[arg(long)]
    scatter_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred_a: PathBuf,
    #[arg(long)]
    pred_b: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Input(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Input(_) => 2,
        }
    }
}

impl From<aesop_core::Error> for Failure {
    fn from(e: aesop_core::Error) -> Self {
        use aesop_core::Error as E;
        match e {
            E::InvalidWeights(_) | E::UnknownMetric(_) | E::UnknownFormat(_) | E::InvalidPerturbation(_) => {
                Self::Usage(e.into())
            }
            other => Self::Input(other.into()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn input_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Evaluate(args) => evaluate(args),
        Command::Convert(args) => convert(args),
        Command::Perturb(args) => perturb(args),
        Command::Correlate(args) => correlate(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Usage(e) | Failure::Input(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
    }
}

fn scoring_setup(args: &ScoringArgs) -> CliResult<(MetricConfig, Vec<Metric>)> {
    let weights = AssignmentWeights::from_name_weight(args.name_weight)?;
    let config = MetricConfig {
        assignment_mode: args.assignment.into(),
        normalization: args.norm.into(),
        weights,
        tokenizer: TokenizerConfig {
            lowercase: !args.no_lowercase,
            strip_punctuation: !args.keep_punctuation,
        },
    };
    let metrics = args
        .metrics
        .iter()
        .map(|m| m.parse::<Metric>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok((config, metrics))
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult {
    fs::write(path, contents)
        .with_context(|| format!("cannot write `{}`", path.display()))
        .map_err(input_err)
}

fn emit_json(path: Option<&Path>, json: &str) -> CliResult {
    match path {
        Some(p) => write_file(p, format!("{json}\n").as_bytes()),
        None => writeln!(io::stdout(), "{json}").map_err(input_err),
    }
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn evaluate(args: EvaluateArgs) -> CliResult {
    let (config, metrics) = scoring_setup(&args.scoring)?;
    let gold = read_corpus(&args.gold)?;
    let pred = read_corpus(&args.pred)?;
    let report = evaluate_corpus(&gold, &pred, &config, &metrics)?;
    print_warnings(&report.warnings);
    emit_json(args.report.as_deref(), &report.to_json())?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    if args.report.is_some() {
        eprintln!(
            "{}: {:.2}% over {} samples",
            report.primary_metric,
            report
                .aggregate_percent
                .get(&report.primary_metric)
                .copied()
                .unwrap_or(0.0),
            report.counts.evaluated
        );
    }
    Ok(())
}

fn convert(args: ConvertArgs) -> CliResult {
    let format: TripletFormat = args.format.into();
    let policy = format.default_type_policy();
    let mut out = String::new();
    for sample in read_triplet_file(&args.input, format)? {
        let (sample, warnings) = sample.into_sample(&policy);
        for w in warnings {
            eprintln!("warning: sample `{}`: {w}", sample.id);
        }
        out.push_str(&sample.to_json_line());
        out.push('\n');
    }
    write_file(&args.output, out.as_bytes())
}

fn perturb(args: PerturbArgs) -> CliResult {
    let config = PerturbationConfig::new(args.seed, args.rate, !args.no_text_match)?;
    let raw = fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read `{}`", args.input.display()))
        .map_err(input_err)?;
    let corpus = parse_corpus(&raw, &args.input.display().to_string())?;
    let catalog = build_catalog(&corpus);
    let perturbed = perturb_corpus(&corpus, &catalog, &config);

    // Untouched samples keep their original line bytes.
    let changed: std::collections::HashSet<&str> = perturbed.changes.iter().map(|c| c.sample_id.as_str()).collect();
    let mut replacement = std::collections::HashMap::new();
    for ((line, _), sample) in jsonl_lines(&raw).zip(&perturbed.samples) {
        if changed.contains(sample.id.as_str()) {
            replacement.insert(line, sample.to_json_line());
        }
    }
    let out = if replacement.is_empty() {
        raw
    } else {
        let mut out = String::with_capacity(raw.len());
        for (i, line) in raw.split_inclusive('\n').enumerate() {
            match replacement.get(&(i + 1)) {
                Some(new) => {
                    out.push_str(new);
                    let ending = &line[line.trim_end_matches(['\r', '\n']).len()..];
                    out.push_str(ending);
                }
                None => out.push_str(line),
            }
        }
        out
    };
    write_file(&args.output, out.as_bytes())?;

    let log_path = args.changes.unwrap_or_else(|| {
        let mut p = args.output.clone().into_os_string();
        p.push(".changes.jsonl");
        PathBuf::from(p)
    });
    let mut log = String::new();
    for change in &perturbed.changes {
        log.push_str(&serde_json::to_string(change).map_err(input_err)?);
        log.push('\n');
    }
    write_file(&log_path, log.as_bytes())?;
    eprintln!(
        "{} changes in {} of {} samples",
        perturbed.changes.len(),
        changed.len(),
        corpus.len()
    );
    Ok(())
}

fn correlate(args: CorrelateArgs) -> CliResult {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("cannot read `{}`", args.report.display()))
        .map_err(input_err)?;
    let report: MetricReport = serde_json::from_str(&text)
        .with_context(|| format!("`{}` is not an evaluation report", args.report.display()))
        .map_err(input_err)?;
    let correlation = correlate_variants(&report, &args.metrics)?;
    write_file(&args.output, format!("{}\n", correlation.to_json()).as_bytes())?;
    if let Some(path) = &args.scatter_csv {
        let mut buf = Vec::new();
        correlation.write_scatter_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    Ok(())
}

fn compare(args: CompareArgs) -> CliResult {
    let (config, metrics) = scoring_setup(&args.scoring)?;
    let gold = read_corpus(&args.gold)?;
    let a = read_corpus(&args.pred_a)?;
    let b = read_corpus(&args.pred_b)?;
    let report = compare_side_by_side(&gold, &a, &b, &config, &metrics)?;
    print_warnings(&report.warnings);
    emit_json(args.report.as_deref(), &report.to_json())
}
