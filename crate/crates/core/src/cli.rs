//! The `scd` command-line tool.
//!
//! Results go to stdout, diagnostics to stderr. Exit status is 0 on success,
//! 1 on a usage error and 2 on a data error (unreadable or malformed input).

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::align::{align, AlignmentCosts, EditKind};
use crate::error::ScdError;
use crate::io::{
    format_seconds, parse_change_stamps, parse_nbest, parse_rttm, percent, segment_longform,
    Format, Render, Table,
};
use crate::metrics::{
    purity_coverage, score_changes, ChangeHypothesis, PrecisionRecallReport, SegmentationReport,
};
use crate::risk::{batch_loss, expected_risk, LossBreakdown, RiskConfig, RiskKind};
use crate::token::TokenSequence;
use crate::toy::{enumerate_candidates, train, NBestSize, TrainConfig, TrainStep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "scd", version, about = "Speaker-change token loss and turn metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align two transcripts and print the edit trace and error counts.
    Align(AlignArgs),
    /// Compute the expected-risk loss of an N-best file.
    Risk(RiskArgs),
    /// Train the toy model on an enumerated hypothesis space.
    TrainToy(TrainArgs),
    /// Score predicted change times against an RTTM reference.
    Score(ScoreArgs),
    /// Cut long recordings into windows at speaker-segment boundaries.
    Segment(SegmentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Machine,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Table => Format::Table,
            OutputFormat::Machine => Format::Machine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RiskKindArg {
    Scd,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecallMode {
    Count,
    Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NBestArg(pub NBestSize);

impl FromStr for NBestArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(NBestArg(NBestSize::All));
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(NBestArg(NBestSize::Top(n))),
            _ => Err(format!("expected a positive integer or `all`, got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct RiskWeights {
    /// Speaker-turn insertion/deletion cost (k >= 1, three decimals at most).
    #[arg(long, default_value_t = 1.1)]
    pub k: f64,
    /// Word-error weight.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Speaker-turn insertion (FA) weight.
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    /// Speaker-turn deletion (FR) weight.
    #[arg(long, default_value_t = 10.0)]
    pub gamma: f64,
    /// Treat log scores as log-probabilities instead of softmaxing them.
    #[arg(long)]
    pub no_normalize: bool,
    /// Risk: weighted turn risk or plain edit-error count.
    #[arg(long, value_enum, default_value = "scd")]
    pub risk_kind: RiskKindArg,
}

impl RiskWeights {
    fn config(&self) -> Result<RiskConfig, CliError> {
        let cfg = RiskConfig {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            costs: AlignmentCosts::from_k(self.k).map_err(CliError::usage)?,
            normalize_scores: !self.no_normalize,
            risk_kind: match self.risk_kind {
                RiskKindArg::Scd => RiskKind::ScdWeighted,
                RiskKindArg::Word => RiskKind::WordErrorOnly,
            },
        };
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Reference transcript file.
    #[arg(long = "ref", value_name = "PATH")]
    pub reference: PathBuf,
    /// Hypothesis transcript file.
    #[arg(long = "hyp", value_name = "PATH")]
    pub hypothesis: PathBuf,
    /// Speaker-turn insertion/deletion cost (k >= 1).
    #[arg(long, default_value_t = 1.1)]
    pub k: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// N-best file (one JSON record per line).
    #[arg(long, value_name = "PATH")]
    pub nbest: PathBuf,
    #[command(flatten)]
    pub weights: RiskWeights,
    /// Weight of the negative log-likelihood term.
    #[arg(long, default_value_t = 0.03)]
    pub lambda: f64,
    /// Batch negative log-likelihood -log P(Y|X).
    #[arg(long, default_value_t = 0.0)]
    pub nll: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Reference transcript (defaults to the bundled st-vs-word scenario).
    #[arg(long, default_value = crate::toy::ST_VS_WORD_REFERENCE)]
    pub reference: String,
    /// Comma-separated word vocabulary for candidate generation.
    #[arg(long, default_value = "a,b,c,x")]
    pub vocab: String,
    /// Maximum number of single-token edits per candidate (1..=3).
    #[arg(long, default_value_t = 1)]
    pub budget: usize,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Gradient-descent learning rate.
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    /// Hypotheses contributing risk terms: a count or `all`.
    #[arg(long, default_value = "all")]
    pub nbest: NBestArg,
    /// Weight of the reference negative log-likelihood.
    #[arg(long, default_value_t = 0.03)]
    pub lambda: f64,
    #[command(flatten)]
    pub weights: RiskWeights,
    #[arg(long, default_value_t = crate::toy::ST_VS_WORD_SEED)]
    pub seed: u64,
    /// Write the per-step trace here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Reference RTTM file.
    #[arg(long = "ref", value_name = "PATH")]
    pub reference: PathBuf,
    /// Change-stamp file with predicted change times.
    #[arg(long = "hyp", value_name = "PATH")]
    pub hypothesis: PathBuf,
    /// Matching tolerance in seconds.
    #[arg(long, default_value_t = crate::metrics::DEFAULT_COLLAR)]
    pub collar: f64,
    /// Recall by interval count or by interval duration.
    #[arg(long, value_enum, default_value = "count")]
    pub recall_mode: RecallMode,
    /// Merge same-speaker segments separated by at most this many seconds.
    #[arg(long, default_value_t = 0.0)]
    pub gap_merge: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Reference RTTM file.
    #[arg(long = "ref", value_name = "PATH")]
    pub reference: PathBuf,
    /// Target window length in seconds.
    #[arg(long)]
    pub target: f64,
    /// Write windows here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }

    fn data(e: impl ToString) -> Self {
        CliError::Data(e.to_string())
    }

    fn in_file(path: &Path, e: ScdError) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(CliError::data)
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("values always serialize");
    s.push('\n');
    s
}

fn op_name(kind: EditKind) -> &'static str {
    match kind {
        EditKind::Match => "match",
        EditKind::WordSub => "sub",
        EditKind::Insert => "ins",
        EditKind::Delete => "del",
    }
}

fn run_align(args: &AlignArgs, out: &mut dyn Write) -> CliResult {
    let costs = AlignmentCosts::from_k(args.k).map_err(CliError::usage)?;
    let reference = TokenSequence::parse(&read(&args.reference)?)
        .map_err(|e| CliError::in_file(&args.reference, e))?;
    let hypothesis = TokenSequence::parse(&read(&args.hypothesis)?)
        .map_err(|e| CliError::in_file(&args.hypothesis, e))?;
    let a = align(&reference, &hypothesis, costs);
    match args.format {
        OutputFormat::Machine => emit(out, &json_line(&a)),
        OutputFormat::Table => {
            let mut t = Table::new(["op", "ref", "hyp"]);
            for op in &a.ops {
                let r = op.ref_index.map_or("*".to_string(), |i| reference[i].to_string());
                let h = op.hyp_index.map_or("*".to_string(), |j| hypothesis[j].to_string());
                t.row([op_name(op.kind).to_string(), r, h]);
            }
            let c = &a.counts;
            let text = format!(
                "{}cost {}\nW {}\nFA {}\nFR {}\nst_correct {}\n",
                t.render(),
                a.cost_milli as f64 / 1000.0,
                c.word_errors,
                c.st_insertions,
                c.st_deletions,
                c.st_correct
            );
            emit(out, &text)
        }
    }
}

#[derive(Serialize)]
struct UtteranceLoss<'a> {
    utterance_id: &'a str,
    breakdown: &'a LossBreakdown,
}

#[derive(Serialize)]
struct BatchLoss {
    batch_expected_risk: f64,
    lambda: f64,
    nll: f64,
    total: f64,
}

fn run_risk(args: &RiskArgs, out: &mut dyn Write) -> CliResult {
    let config = args.weights.config()?;
    if !(args.lambda.is_finite() && args.lambda >= 0.0) {
        return Err(CliError::usage("--lambda must be >= 0"));
    }
    if !(args.nll.is_finite() && args.nll >= 0.0) {
        return Err(CliError::usage("--nll must be >= 0"));
    }
    let batch = parse_nbest(&read(&args.nbest)?).map_err(|e| CliError::in_file(&args.nbest, e))?;
    let mut text = String::new();
    for nbest in &batch {
        let b = expected_risk(nbest, &config).map_err(|e| CliError::in_file(&args.nbest, e))?;
        match args.format {
            OutputFormat::Machine => text.push_str(&json_line(&UtteranceLoss {
                utterance_id: &nbest.utterance_id,
                breakdown: &b,
            })),
            OutputFormat::Table => {
                text.push_str(&format!("utterance {}\n", nbest.utterance_id));
                text.push_str(&b.table());
                text.push('\n');
            }
        }
    }
    let total = batch_loss(&batch, args.lambda, args.nll, &config)
        .map_err(|e| CliError::in_file(&args.nbest, e))?;
    let summary = BatchLoss {
        batch_expected_risk: total.expected_risk,
        lambda: args.lambda,
        nll: args.nll,
        total: total.total,
    };
    match args.format {
        OutputFormat::Machine => text.push_str(&json_line(&summary)),
        OutputFormat::Table => text.push_str(&format!(
            "batch expected_risk {:.6}\nbatch total {:.6}\n",
            summary.batch_expected_risk, summary.total
        )),
    }
    emit(out, &text)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    candidates: usize,
    initial: &'a TrainStep,
    last: &'a TrainStep,
    argmax_candidate: String,
}

fn run_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let risk = args.weights.config()?;
    let reference = TokenSequence::parse(&args.reference).map_err(CliError::usage)?;
    let vocab: Vec<String> = args
        .vocab
        .split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect();
    let space = enumerate_candidates("toy", &reference, args.budget, &vocab, args.seed)
        .map_err(CliError::usage)?;
    let config = TrainConfig {
        learning_rate: args.lr,
        steps: args.steps,
        nbest: args.nbest.0,
        lambda: args.lambda,
        risk,
        seed: args.seed,
    };
    config.validate().map_err(CliError::usage)?;
    let trace = train(&space, &config).map_err(CliError::data)?;
    let lines: String = trace.records.iter().map(json_line).collect();
    match &args.output {
        Some(path) => {
            write_file(path, &lines)?;
            let last = trace.last();
            emit(
                out,
                &json_line(&TrainSummary {
                    candidates: space.candidates.len(),
                    initial: trace.initial(),
                    last,
                    argmax_candidate: space.candidates[last.argmax_candidate_index].to_string(),
                }),
            )
        }
        None => emit(out, &lines),
    }
}

#[derive(Serialize)]
struct RecordingScore<'a> {
    recording_id: &'a str,
    changes: &'a PrecisionRecallReport,
    segmentation: &'a SegmentationReport,
}

fn run_score(args: &ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    if !(args.collar.is_finite() && args.collar >= 0.0) {
        return Err(CliError::usage("--collar must be >= 0"));
    }
    if !(args.gap_merge.is_finite() && args.gap_merge >= 0.0) {
        return Err(CliError::usage("--gap-merge must be >= 0"));
    }
    let parsed =
        parse_rttm(&read(&args.reference)?).map_err(|e| CliError::in_file(&args.reference, e))?;
    if parsed.ignored_lines > 0 {
        let _ = writeln!(
            err,
            "warning: {}: ignored {} non-SPEAKER line(s)",
            args.reference.display(),
            parsed.ignored_lines
        );
    }
    let hyps = parse_change_stamps(&read(&args.hypothesis)?)
        .map_err(|e| CliError::in_file(&args.hypothesis, e))?;
    let known: HashSet<&str> = parsed
        .annotations
        .iter()
        .map(|a| a.recording_id.as_str())
        .collect();
    if let Some(h) = hyps.iter().find(|h| !known.contains(h.recording_id.as_str())) {
        return Err(CliError::Data(format!(
            "{}: recording `{}` is not in the reference",
            args.hypothesis.display(),
            h.recording_id
        )));
    }

    let mut rows = Vec::new();
    for ann in &parsed.annotations {
        let ann = if args.gap_merge > 0.0 {
            ann.merge_same_speaker_gaps(args.gap_merge)
        } else {
            ann.clone()
        };
        let hyp = match hyps.iter().find(|h| h.recording_id == ann.recording_id) {
            Some(h) => h.clone(),
            None => {
                let _ = writeln!(
                    err,
                    "warning: no predictions for recording `{}`",
                    ann.recording_id
                );
                ChangeHypothesis::new(ann.recording_id.clone(), Vec::new()).map_err(CliError::data)?
            }
        };
        let pr = score_changes(&ann, &hyp, args.collar).map_err(CliError::data)?;
        let seg = purity_coverage(&ann, &hyp).map_err(CliError::data)?;
        rows.push((ann.recording_id.clone(), pr, seg));
    }
    let pooled_pr = PrecisionRecallReport::pool(rows.iter().map(|r| &r.1));
    let pooled_seg = SegmentationReport::pool(rows.iter().map(|r| &r.2));

    let text = match args.format {
        OutputFormat::Machine => {
            let mut s: String = rows
                .iter()
                .map(|(id, pr, seg)| {
                    json_line(&RecordingScore {
                        recording_id: id,
                        changes: pr,
                        segmentation: seg,
                    })
                })
                .collect();
            s.push_str(&json_line(&RecordingScore {
                recording_id: "<pooled>",
                changes: &pooled_pr,
                segmentation: &pooled_seg,
            }));
            s
        }
        OutputFormat::Table => {
            let recall_header = match args.recall_mode {
                RecallMode::Count => "recall",
                RecallMode::Duration => "recall(dur)",
            };
            let mut t = Table::new([
                "recording",
                "precision",
                recall_header,
                "f1",
                "purity",
                "coverage",
                "f1(pc)",
                "correct",
                "fa",
                "hit",
                "fr",
                "dropped",
            ]);
            let all = rows
                .iter()
                .map(|(id, pr, seg)| (id.as_str(), pr, seg))
                .chain(std::iter::once(("pooled", &pooled_pr, &pooled_seg)));
            for (id, pr, seg) in all {
                let (recall, f1) = match args.recall_mode {
                    RecallMode::Count => (pr.recall_count, pr.f1),
                    RecallMode::Duration => (pr.recall_duration, pr.f1_duration()),
                };
                t.row([
                    id.to_string(),
                    percent(pr.precision),
                    percent(recall),
                    percent(f1),
                    percent(Some(seg.purity)),
                    percent(Some(seg.coverage)),
                    percent(Some(seg.f1)),
                    pr.n_correct.to_string(),
                    pr.n_fa.to_string(),
                    pr.n_hit.to_string(),
                    pr.n_fr.to_string(),
                    pr.n_predictions_dropped.to_string(),
                ]);
            }
            format!("collar {}\n{}", args.collar, t.render())
        }
    };
    emit(out, &text)
}

fn run_segment(args: &SegmentArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    if !(args.target.is_finite() && args.target > 0.0) {
        return Err(CliError::usage("--target must be > 0"));
    }
    let parsed =
        parse_rttm(&read(&args.reference)?).map_err(|e| CliError::in_file(&args.reference, e))?;
    let mut text = String::new();
    for ann in &parsed.annotations {
        for w in segment_longform(ann, args.target).map_err(CliError::usage)? {
            if w.oversized {
                let _ = writeln!(
                    err,
                    "warning: {}: segment [{}, {}] is longer than the target and forms its own window",
                    ann.recording_id,
                    format_seconds(w.start),
                    format_seconds(w.end)
                );
            }
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                ann.recording_id,
                format_seconds(w.start),
                format_seconds(w.end),
                w.segments
            ));
        }
    }
    match &args.output {
        Some(path) => write_file(path, &text),
        None => emit(out, &text),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Align(a) => run_align(a, out),
        Command::Risk(a) => run_risk(a, out),
        Command::TrainToy(a) => run_train(a, out),
        Command::Score(a) => run_score(a, out, err),
        Command::Segment(a) => run_segment(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(err, "run `scd --help` for usage");
            EXIT_USAGE
        }
        Err(CliError::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}
