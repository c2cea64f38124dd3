//! Command-line front end.
//!
//! Exit status: 0 success, 1 scoring or definition error, 2 usage error,
//! 3 backend or protocol failure, 4 I/O or file-format failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use diarkit_core::chunk::{plan_chunks, DEFAULT_CHUNK_LIMIT};
use diarkit_core::der::aggregate_der;
use diarkit_core::fixture::Fixture;
use diarkit_core::pipeline::{
    detect_speech_regions, transcribe_longform, two_pass_diarize, Backend, ChunkErrorPolicy, PipelineError,
};
use diarkit_core::protocol::{Params, Scalar};
use diarkit_core::sweep::{phase1_threshold_sweep, phase2_cache_predictions, SweepError, SweepSpec};
use diarkit_core::text::{NormalizationProfile, UnicodeForm};
use diarkit_core::wer::aggregate_wer;
use diarkit_core::{
    apply_postprocess, clean_transcript, score_der, score_wer, Annotation, DedupParams, DerOptions, PostprocessParams,
    Transcript,
};

use crate::cache::DiskCache;
use crate::files::{
    list_annotation_files, read_annotations, read_text, render_annotations, resolve_format, write_text, FileError,
    Format,
};
use crate::formats::{parse_transcript_json, write_transcript_json};
use crate::mock::{serve_fixture, ServeOutcome};
use crate::process::{ProcessBackend, DEFAULT_TIMEOUT_SECS};
use crate::report::{
    der_table, sweep_text, to_json, wer_table, DerReport, DerRow, Phase1Section, SweepReport, WerReport, WerRow,
};
use crate::run::{parallel_map, phase3_parallel};
use crate::specfile::{load_sweep_spec, SpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Scoring = 1,
    Usage = 2,
    Backend = 3,
    Io = 4,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn scoring(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Scoring, message)
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Usage, message)
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        Self::new(ExitStatus::Io, e.to_string())
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        let status = match e {
            SpecError::Invalid { .. } => ExitStatus::Usage,
            SpecError::File(_) | SpecError::Syntax { .. } => ExitStatus::Io,
        };
        Self::new(status, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let status = match e {
            PipelineError::Request(_) => ExitStatus::Usage,
            _ => ExitStatus::Backend,
        };
        Self::new(status, e.to_string())
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        let status = match e {
            SweepError::InvalidSpec(_) => ExitStatus::Usage,
            SweepError::AllFailed(_) => ExitStatus::Backend,
            SweepError::CacheMiss { .. } | SweepError::Store(_) => ExitStatus::Io,
            SweepError::Der(_) => ExitStatus::Scoring,
        };
        Self::new(status, e.to_string())
    }
}

type CliResult = Result<ExitStatus, CliError>;

#[derive(Debug, Parser)]
#[command(name = "diarkit", version, about = "Diarization and long-form transcription toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert between RTTM and segments JSON, file to file or directory to directory.
    Convert(ConvertArgs),
    /// Diarization error rate of hypothesis annotations against references.
    ScoreDer(ScoreDerArgs),
    /// Word error rate of hypothesis transcripts against references.
    ScoreWer(ScoreWerArgs),
    /// Remove short segments, collapse A-B-A turns and merge same-speaker gaps.
    Postprocess(PostprocessArgs),
    /// Remove word, phrase and letter repetitions from text or a transcript.
    Dedup(DedupArgs),
    /// Pack the speech regions of an annotation into bounded decoding windows.
    ChunkPlan(ChunkPlanArgs),
    /// Diarize, then diarize again with the speaker count fixed to the first result.
    TwoPass(TwoPassArgs),
    /// Transcribe long-form audio one planned window at a time.
    Transcribe(TranscribeArgs),
    /// Staged threshold and post-processing search.
    Sweep(SweepArgs),
    /// Serve canned responses from a fixture file over the backend protocol.
    MockBackend(MockBackendArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Backend program and arguments, split with shell quoting rules.
    #[arg(long, env = "DIARKIT_BACKEND_CMD")]
    pub backend_cmd: String,
    /// Seconds to wait for each response line.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    pub timeout_secs: f64,
    /// Inference parameter sent with every request, as KEY=VALUE. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, Scalar)>,
}

impl BackendArgs {
    fn backend(&self) -> Result<ProcessBackend, CliError> {
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(CliError::usage("--timeout-secs must be positive"));
        }
        ProcessBackend::from_command_line(&self.backend_cmd, Duration::from_secs_f64(self.timeout_secs))
            .map_err(|e| CliError::usage(e.to_string()))
    }

    fn params(&self) -> Params {
        self.params.iter().cloned().collect()
    }
}

/// `true`/`false` become booleans, numbers become numbers, anything else text.
pub fn parse_param(s: &str) -> Result<(String, Scalar), String> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    if key.is_empty() {
        return Err("parameter name is empty".into());
    }
    let scalar = match value {
        "true" => Scalar::Bool(true),
        "false" => Scalar::Bool(false),
        v => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Scalar::Number(x),
            _ => Scalar::Text(v.to_string()),
        },
    };
    Ok((key.to_string(), scalar))
}

#[derive(Debug, Clone, Args)]
pub struct PostprocessFlags {
    /// Drop segments shorter than this many seconds.
    #[arg(long, default_value_t = 0.2)]
    pub min_duration: f64,
    /// Merge same-speaker segments separated by at most this many seconds; 0 disables.
    #[arg(long, default_value_t = 0.5)]
    pub merge_gap: f64,
    /// Collapse A-B-A when B lasts less than this many seconds.
    #[arg(long, default_value_t = 0.3)]
    pub aba_max_duration: f64,
}

impl PostprocessFlags {
    fn params(&self) -> Result<PostprocessParams, CliError> {
        PostprocessParams::new(self.min_duration, self.merge_gap, self.aba_max_duration)
            .map_err(|e| CliError::usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct DedupFlags {
    /// Longest run of one word kept as is.
    #[arg(long, default_value_t = 2)]
    pub max_word_repeat: usize,
    /// Longest phrase, in words, checked for repetition.
    #[arg(long, default_value_t = 5)]
    pub max_phrase_len: usize,
    /// Longest run of one phrase kept as is.
    #[arg(long, default_value_t = 1)]
    pub max_phrase_repeat: usize,
    /// Longest run of one letter kept as is.
    #[arg(long, default_value_t = 2)]
    pub max_char_repeat: usize,
}

impl DedupFlags {
    fn params(&self) -> Result<DedupParams, CliError> {
        let p = DedupParams {
            max_word_repeat: self.max_word_repeat,
            max_phrase_len: self.max_phrase_len,
            max_phrase_repeat: self.max_phrase_repeat,
            max_char_repeat: self.max_char_repeat,
        };
        p.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DerFlags {
    /// Seconds excluded on each side of every reference boundary.
    #[arg(long, default_value_t = 0.0)]
    pub collar: f64,
    /// Leave regions with overlapping reference speakers unscored.
    #[arg(long)]
    pub skip_overlap: bool,
}

impl DerFlags {
    fn options(&self) -> Result<DerOptions, CliError> {
        if !self.collar.is_finite() || self.collar < 0.0 {
            return Err(CliError::usage("--collar must be finite and non-negative"));
        }
        Ok(DerOptions {
            collar: self.collar,
            score_overlap: !self.skip_overlap,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportFlags {
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Input file or directory.
    pub input: PathBuf,
    /// Output file or directory.
    pub output: PathBuf,
    /// Input format; taken from the extension when absent.
    #[arg(long, value_enum)]
    pub from: Option<Format>,
    /// Output format; taken from the extension when absent, required for directories.
    #[arg(long, value_enum)]
    pub to: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ScoreDerArgs {
    /// Reference annotation file or directory.
    pub reference: PathBuf,
    /// Hypothesis annotation file or directory.
    pub hypothesis: PathBuf,
    #[command(flatten)]
    pub der: DerFlags,
    #[command(flatten)]
    pub output: ReportFlags,
    /// Worker threads for scoring.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ScoreWerArgs {
    /// Reference transcript (.json) or plain text file, or a directory of them.
    pub reference: PathBuf,
    /// Hypothesis transcript (.json) or plain text file, or a directory of them.
    pub hypothesis: PathBuf,
    /// Skip NFC normalization.
    #[arg(long)]
    pub no_nfc: bool,
    /// Keep punctuation instead of turning it into spaces.
    #[arg(long)]
    pub keep_punctuation: bool,
    #[command(flatten)]
    pub output: ReportFlags,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    /// Input annotation file (.rttm or .json).
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub params: PostprocessFlags,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Transcript JSON (.json) or plain text, cleaned line by line.
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub params: DedupFlags,
}

#[derive(Debug, Args)]
pub struct ChunkPlanArgs {
    /// Annotation whose speech regions are packed.
    pub input: PathBuf,
    /// Longest window in seconds.
    #[arg(long, default_value_t = DEFAULT_CHUNK_LIMIT)]
    pub chunk_limit: f64,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TwoPassArgs {
    /// Audio path sent to the backend.
    #[arg(long)]
    pub audio: String,
    /// Recording id of the output; the audio file stem when absent.
    #[arg(long)]
    pub recording_id: Option<String>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Output file (.rttm or .json); segments JSON on standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnChunkError {
    /// Stop at the first failed window.
    Fail,
    /// Emit empty text for a failed window and report failures at the end.
    Continue,
}

#[derive(Debug, Args)]
pub struct TranscribeArgs {
    /// Audio path sent to the backend.
    #[arg(long)]
    pub audio: String,
    /// Recording id of the output; the audio file stem when absent.
    #[arg(long)]
    pub recording_id: Option<String>,
    /// Annotation whose speech regions are planned; when absent one diarize request finds them.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// Longest window in seconds.
    #[arg(long, default_value_t = DEFAULT_CHUNK_LIMIT)]
    pub chunk_limit: f64,
    /// What to do when a window fails.
    #[arg(long, value_enum, default_value_t = OnChunkError::Continue)]
    pub on_chunk_error: OnChunkError,
    #[command(flatten)]
    pub dedup: DedupFlags,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Output file; transcript JSON on standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(subcommand)]
    pub phase: SweepPhase,
}

#[derive(Debug, Clone, Args)]
pub struct SpecFlags {
    /// Sweep specification (.toml or .json).
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub output: ReportFlags,
}

#[derive(Debug, Clone, Args)]
pub struct SweepBackendArgs {
    /// Backend program and arguments, split with shell quoting rules.
    #[arg(long, env = "DIARKIT_BACKEND_CMD")]
    pub backend_cmd: String,
    /// Seconds to wait for each response line.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    pub timeout_secs: f64,
}

impl SweepBackendArgs {
    fn backend(&self) -> Result<ProcessBackend, CliError> {
        BackendArgs {
            backend_cmd: self.backend_cmd.clone(),
            timeout_secs: self.timeout_secs,
            params: Vec::new(),
        }
        .backend()
    }
}

#[derive(Debug, Subcommand)]
pub enum SweepPhase {
    /// Sweep the clustering threshold with full inference.
    Phase1 {
        #[command(flatten)]
        spec: SpecFlags,
        #[command(flatten)]
        backend: SweepBackendArgs,
    },
    /// Store raw predictions at one threshold; entries already present are kept.
    Phase2 {
        #[command(flatten)]
        spec: SpecFlags,
        #[command(flatten)]
        backend: SweepBackendArgs,
        /// Prediction cache directory.
        #[arg(long)]
        cache_dir: PathBuf,
        /// Threshold whose predictions are stored.
        #[arg(long)]
        threshold: f64,
    },
    /// Sweep post-processing parameters over stored predictions only.
    Phase3 {
        #[command(flatten)]
        spec: SpecFlags,
        /// Prediction cache directory.
        #[arg(long)]
        cache_dir: PathBuf,
        /// Threshold whose stored predictions are used.
        #[arg(long)]
        threshold: f64,
        /// Worker threads over grid points.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Phases 1, 2 and 3 in sequence.
    All {
        #[command(flatten)]
        spec: SpecFlags,
        #[command(flatten)]
        backend: SweepBackendArgs,
        /// Prediction cache directory.
        #[arg(long)]
        cache_dir: PathBuf,
        /// Worker threads over grid points in phase 3.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Args)]
pub struct MockBackendArgs {
    /// Fixture file: {"entries": [{"op", "audio_path", "response", ...}]}.
    #[arg(long)]
    pub fixture: PathBuf,
}

/// Runs a parsed command line. Diagnostics go to standard error.
pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Convert(a) => convert(&a),
        Command::ScoreDer(a) => score_der_cmd(&a),
        Command::ScoreWer(a) => score_wer_cmd(&a),
        Command::Postprocess(a) => postprocess_cmd(&a),
        Command::Dedup(a) => dedup_cmd(&a),
        Command::ChunkPlan(a) => chunk_plan_cmd(&a),
        Command::TwoPass(a) => two_pass_cmd(&a),
        Command::Transcribe(a) => transcribe_cmd(&a),
        Command::Sweep(a) => sweep_cmd(a.phase),
        Command::MockBackend(a) => mock_backend_cmd(&a),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => Ok(write_text(path, text)?),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::new(ExitStatus::Io, format!("standard output: {e}")))
        }
    }
}

fn emit_report<T: serde::Serialize>(flags: &ReportFlags, report: &T, table: String) -> Result<(), CliError> {
    let json = to_json(report);
    if let Some(path) = &flags.report {
        write_text(path, &json)?;
    }
    emit(None, if flags.json { &json } else { &table })
}

fn default_recording_id(audio: &str) -> String {
    Path::new(audio)
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or(audio)
        .to_string()
}

fn convert(a: &ConvertArgs) -> CliResult {
    if !a.input.is_dir() {
        let annotations = read_annotations(&a.input, a.from)?;
        let to = resolve_format(&a.output, a.to)?;
        write_text(&a.output, &render_annotations(&annotations, to, &a.output)?)?;
        return Ok(ExitStatus::Success);
    }
    let to =
        a.to.ok_or_else(|| CliError::usage("--to is required when converting a directory"))?;
    fs::create_dir_all(&a.output).map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", a.output.display())))?;
    let mut written = 0usize;
    for path in list_annotation_files(&a.input)? {
        let annotations = read_annotations(&path, a.from)?;
        match to {
            Format::Rttm => {
                let stem = path.file_stem().unwrap_or_default();
                let out = a.output.join(stem).with_extension("rttm");
                write_text(&out, &render_annotations(&annotations, to, &out)?)?;
                written += 1;
            }
            Format::Json => {
                for ann in annotations {
                    let out = a
                        .output
                        .join(format!("{}.json", crate::cache::escape_id(ann.recording_id())));
                    write_text(&out, &render_annotations(std::slice::from_ref(&ann), to, &out)?)?;
                    written += 1;
                }
            }
        }
    }
    eprintln!("wrote {written} file(s) to {}", a.output.display());
    Ok(ExitStatus::Success)
}

/// Annotations keyed by recording id from a file or every file of a directory.
fn load_annotation_set(path: &Path) -> Result<BTreeMap<String, Annotation>, CliError> {
    let files = if path.is_dir() {
        list_annotation_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    let mut set = BTreeMap::new();
    for file in files {
        for ann in read_annotations(&file, None)? {
            let id = ann.recording_id().to_string();
            if set.insert(id.clone(), ann).is_some() {
                return Err(CliError::scoring(format!(
                    "recording {id:?} appears twice under {}",
                    path.display()
                )));
            }
        }
    }
    Ok(set)
}

fn score_der_cmd(a: &ScoreDerArgs) -> CliResult {
    let options = a.der.options()?;
    let refs = load_annotation_set(&a.reference)?;
    let mut hyps = load_annotation_set(&a.hypothesis)?;
    if refs.is_empty() {
        return Err(CliError::scoring("no reference recordings"));
    }
    let mut pairs = Vec::with_capacity(refs.len());
    for (id, r) in refs {
        let h = hyps
            .remove(&id)
            .ok_or_else(|| CliError::scoring(format!("no hypothesis for recording {id:?}")))?;
        pairs.push((r, h));
    }
    for id in hyps.keys() {
        eprintln!("warning: hypothesis {id:?} has no reference and is ignored");
    }
    let scores = parallel_map(&pairs, a.jobs, |(r, h)| score_der(r, h, &options));
    let mut rows = Vec::with_capacity(pairs.len());
    for ((r, _), s) in pairs.iter().zip(scores) {
        rows.push(DerRow {
            recording_id: r.recording_id().to_string(),
            breakdown: s.map_err(|e| CliError::scoring(e.to_string()))?,
        });
    }
    let aggregate = aggregate_der(rows.iter().map(|r| &r.breakdown)).map_err(|e| CliError::scoring(e.to_string()))?;
    let report = DerReport {
        metric: "der",
        options,
        recordings: rows,
        aggregate,
    };
    emit_report(&a.output, &report, der_table(&report))?;
    if report.aggregate.der.is_none() {
        eprintln!("error: references contain no scored speech; DER is undefined");
        return Ok(ExitStatus::Scoring);
    }
    Ok(ExitStatus::Success)
}

/// Transcript JSON gives its own id and full text; any other file is plain
/// text identified by its file stem.
fn read_transcript_text(path: &Path) -> Result<(String, String), CliError> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let t = parse_transcript_json(&text)
            .map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", path.display())))?;
        return Ok((t.recording_id().to_string(), t.full_text()));
    }
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    Ok((id, text))
}

fn load_text_set(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", path.display())))? {
        let p = entry
            .map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", path.display())))?
            .path();
        if p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    let mut set = BTreeMap::new();
    for f in files {
        let (id, text) = read_transcript_text(&f)?;
        if set.insert(id.clone(), text).is_some() {
            return Err(CliError::scoring(format!(
                "recording {id:?} appears twice under {}",
                path.display()
            )));
        }
    }
    Ok(set)
}

fn score_wer_cmd(a: &ScoreWerArgs) -> CliResult {
    let profile = NormalizationProfile {
        unicode_form: if a.no_nfc { UnicodeForm::None } else { UnicodeForm::Nfc },
        strip_punctuation: !a.keep_punctuation,
        ..NormalizationProfile::default()
    };
    let pairs: Vec<(String, String, String)> = if a.reference.is_dir() {
        let refs = load_text_set(&a.reference)?;
        let mut hyps = load_text_set(&a.hypothesis)?;
        let mut pairs = Vec::new();
        for (id, r) in refs {
            let h = hyps
                .remove(&id)
                .ok_or_else(|| CliError::scoring(format!("no hypothesis for recording {id:?}")))?;
            pairs.push((id, r, h));
        }
        for id in hyps.keys() {
            eprintln!("warning: hypothesis {id:?} has no reference and is ignored");
        }
        pairs
    } else {
        let (rid, r) = read_transcript_text(&a.reference)?;
        let (hid, h) = read_transcript_text(&a.hypothesis)?;
        let both_json = [&a.reference, &a.hypothesis]
            .iter()
            .all(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")));
        if both_json && rid != hid {
            return Err(CliError::scoring(format!(
                "reference is {rid:?} but hypothesis is {hid:?}"
            )));
        }
        vec![(rid, r, h)]
    };
    if pairs.is_empty() {
        return Err(CliError::scoring("no reference recordings"));
    }
    let rows: Vec<WerRow> = pairs
        .iter()
        .map(|(id, r, h)| WerRow {
            recording_id: id.clone(),
            breakdown: score_wer(r, h, &profile),
        })
        .collect();
    let aggregate = aggregate_wer(rows.iter().map(|r| &r.breakdown)).map_err(|e| CliError::scoring(e.to_string()))?;
    let report = WerReport {
        metric: "wer",
        normalization: profile,
        recordings: rows,
        aggregate,
    };
    emit_report(&a.output, &report, wer_table(&report))?;
    if report.aggregate.wer.is_none() {
        eprintln!(
            "error: references are empty; WER is undefined with {} insertion(s)",
            report.aggregate.insertions
        );
        return Ok(ExitStatus::Scoring);
    }
    Ok(ExitStatus::Success)
}

fn postprocess_cmd(a: &PostprocessArgs) -> CliResult {
    let params = a.params.params()?;
    let format = resolve_format(&a.input, None)?;
    let out_format = match &a.output {
        Some(p) => resolve_format(p, Some(Format::from_path(p).unwrap_or(format)))?,
        None => format,
    };
    let cleaned: Vec<Annotation> = read_annotations(&a.input, Some(format))?
        .iter()
        .map(|ann| apply_postprocess(ann, &params))
        .collect();
    let target = a.output.as_deref().unwrap_or(Path::new("-"));
    emit(a.output.as_deref(), &render_annotations(&cleaned, out_format, target)?)?;
    Ok(ExitStatus::Success)
}

fn dedup_cmd(a: &DedupArgs) -> CliResult {
    let params = a.params.params()?;
    let text = read_text(&a.input)?;
    let out = if a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let t = parse_transcript_json(&text)
            .map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", a.input.display())))?;
        let entries = t
            .entries()
            .iter()
            .map(|e| diarkit_core::TranscriptEntry {
                text: clean_transcript(&e.text, &params),
                ..e.clone()
            })
            .collect();
        let cleaned = Transcript::new(t.recording_id(), entries).expect("entries were already valid");
        write_transcript_json(&cleaned)
    } else {
        let mut out = String::with_capacity(text.len());
        for line in text.lines() {
            out.push_str(&clean_transcript(line, &params));
            out.push('\n');
        }
        out
    };
    emit(a.output.as_deref(), &out)?;
    Ok(ExitStatus::Success)
}

fn plan_json(limit: f64, plan: &diarkit_core::chunk::ChunkPlan) -> String {
    #[derive(serde::Serialize)]
    struct PlanDoc<'a> {
        chunk_limit: f64,
        chunks: &'a [diarkit_core::chunk::Chunk],
    }
    to_json(&PlanDoc {
        chunk_limit: limit,
        chunks: &plan.chunks,
    })
}

fn chunk_plan_cmd(a: &ChunkPlanArgs) -> CliResult {
    let ann = crate::files::read_single(&a.input, None)?;
    let plan = plan_chunks(&ann.speech_regions(), a.chunk_limit).map_err(|e| CliError::usage(e.to_string()))?;
    emit(a.output.as_deref(), &plan_json(a.chunk_limit, &plan))?;
    Ok(ExitStatus::Success)
}

fn two_pass_cmd(a: &TwoPassArgs) -> CliResult {
    let mut backend = a.backend.backend()?;
    let id = a.recording_id.clone().unwrap_or_else(|| default_recording_id(&a.audio));
    let ann = two_pass_diarize(&mut backend, &id, &a.audio, &a.backend.params())?;
    eprintln!("{id}: {} speaker(s), {} segment(s)", ann.speakers().len(), ann.len());
    let (format, target) = match &a.output {
        Some(p) => (resolve_format(p, None)?, p.as_path()),
        None => (Format::Json, Path::new("-")),
    };
    emit(a.output.as_deref(), &render_annotations(&[ann], format, target)?)?;
    Ok(ExitStatus::Success)
}

fn transcribe_cmd(a: &TranscribeArgs) -> CliResult {
    let dedup = a.dedup.params()?;
    let mut backend = a.backend.backend()?;
    let params = a.backend.params();
    let id = a.recording_id.clone().unwrap_or_else(|| default_recording_id(&a.audio));
    let regions = match &a.regions {
        Some(p) => crate::files::read_single(p, None)?.speech_regions(),
        None => detect_speech_regions(&mut backend, &a.audio, &params)?,
    };
    let plan = plan_chunks(&regions, a.chunk_limit).map_err(|e| CliError::usage(e.to_string()))?;
    let policy = match a.on_chunk_error {
        OnChunkError::Fail => ChunkErrorPolicy::FailFast,
        OnChunkError::Continue => ChunkErrorPolicy::Continue,
    };
    let out = transcribe_longform(&mut backend, &id, &a.audio, &plan, &dedup, &params, policy)?;
    emit(a.output.as_deref(), &write_transcript_json(&out.transcript))?;
    if out.failures.is_empty() {
        return Ok(ExitStatus::Success);
    }
    for f in &out.failures {
        eprintln!(
            "error: chunk {} [{}, {}]: {}",
            f.index, f.window.start, f.window.end, f.error
        );
    }
    eprintln!("{} of {} chunk(s) failed", out.failures.len(), plan.len());
    Ok(ExitStatus::Backend)
}

fn sweep_cmd(phase: SweepPhase) -> CliResult {
    let started = Instant::now();
    let (flags, report) = match phase {
        SweepPhase::Phase1 { spec, backend } => {
            let s = load_sweep_spec(&spec.spec)?;
            let mut b = backend.backend()?;
            let (best_threshold, result) = phase1_threshold_sweep(&s, &mut b)?;
            let report = SweepReport {
                phase1: Some(Phase1Section { best_threshold, result }),
                ..SweepReport::default()
            };
            (spec.output, report)
        }
        SweepPhase::Phase2 {
            spec,
            backend,
            cache_dir,
            threshold,
        } => {
            let s = load_sweep_spec(&spec.spec)?;
            let mut b = backend.backend()?;
            let mut cache = DiskCache::new(cache_dir);
            let p2 = phase2_cache_predictions(threshold, &s, &mut b, &mut cache)?;
            let report = SweepReport {
                phase2: Some(p2),
                ..SweepReport::default()
            };
            (spec.output, report)
        }
        SweepPhase::Phase3 {
            spec,
            cache_dir,
            threshold,
            jobs,
        } => {
            let s = load_sweep_spec(&spec.spec)?;
            let cache = DiskCache::new(cache_dir);
            let report = SweepReport {
                phase3: Some(phase3_parallel(&cache, &s, threshold, jobs)?),
                ..SweepReport::default()
            };
            (spec.output, report)
        }
        SweepPhase::All {
            spec,
            backend,
            cache_dir,
            jobs,
        } => {
            let s = load_sweep_spec(&spec.spec)?;
            let mut b = backend.backend()?;
            let mut cache = DiskCache::new(cache_dir);
            let report = sweep_all(&s, &mut b, &mut cache, jobs)?;
            (spec.output, report)
        }
    };
    emit_report(&flags, &report, sweep_text(&report))?;
    eprintln!("sweep finished in {:.2} s", started.elapsed().as_secs_f64());
    match &report.phase2 {
        Some(p2) if !p2.failures.is_empty() => Ok(ExitStatus::Backend),
        _ => Ok(ExitStatus::Success),
    }
}

/// Phase 1 picks the threshold, phase 2 stores its predictions, phase 3
/// sweeps post-processing. Phase 3 is skipped when phase 2 left gaps.
pub fn sweep_all<B: Backend + ?Sized>(
    spec: &SweepSpec,
    backend: &mut B,
    cache: &mut DiskCache,
    jobs: usize,
) -> Result<SweepReport, CliError> {
    let (best_threshold, result) = phase1_threshold_sweep(spec, backend)?;
    let p2 = phase2_cache_predictions(best_threshold, spec, backend, cache)?;
    let phase3 = if p2.failures.is_empty() {
        Some(phase3_parallel(cache, spec, best_threshold, jobs)?)
    } else {
        None
    };
    Ok(SweepReport {
        phase1: Some(Phase1Section { best_threshold, result }),
        phase2: Some(p2),
        phase3,
    })
}

fn mock_backend_cmd(a: &MockBackendArgs) -> CliResult {
    let text = read_text(&a.fixture)?;
    let fixture: Fixture = serde_json::from_str(&text)
        .map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", a.fixture.display())))?;
    let outcome = serve_fixture(&fixture, io::stdin().lock(), io::stdout().lock())
        .map_err(|e| CliError::new(ExitStatus::Io, format!("mock backend: {e}")))?;
    match outcome {
        ServeOutcome::EndOfInput => Ok(ExitStatus::Success),
        ServeOutcome::ExitRequested => Ok(ExitStatus::Backend),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flag_defaults_match_library_defaults() {
        let cli = Cli::try_parse_from(["diarkit", "postprocess", "in.json"]).unwrap();
        let Command::Postprocess(a) = cli.command else { panic!() };
        assert_eq!(a.params.params().unwrap(), PostprocessParams::default());

        let cli = Cli::try_parse_from(["diarkit", "dedup", "in.txt"]).unwrap();
        let Command::Dedup(a) = cli.command else { panic!() };
        assert_eq!(a.params.params().unwrap(), DedupParams::default());

        let cli = Cli::try_parse_from(["diarkit", "score-der", "r", "h"]).unwrap();
        let Command::ScoreDer(a) = cli.command else { panic!() };
        assert_eq!(a.der.options().unwrap(), DerOptions::default());
    }

    #[test]
    fn params_parse_to_scalars() {
        assert_eq!(
            parse_param("threshold=0.5").unwrap(),
            ("threshold".into(), Scalar::Number(0.5))
        );
        assert_eq!(
            parse_param("denoise=true").unwrap(),
            ("denoise".into(), Scalar::Bool(true))
        );
        assert_eq!(
            parse_param("model=a=b").unwrap(),
            ("model".into(), Scalar::Text("a=b".into()))
        );
        assert!(parse_param("novalue").is_err());
        assert!(parse_param("=1").is_err());
    }
}
