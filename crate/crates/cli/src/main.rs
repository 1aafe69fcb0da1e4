use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use broadclass::corpus::{discover, CorpusItem};
use broadclass::evaluation::{EvalConfig, EvalCounts, PhoneClassMap};
use broadclass::pipeline::{analyze, segment};
use broadclass::signal_io::{load_audio, load_labels, AudioFormat};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

mod config;
mod output;

use config::{Config, ConfigError, OutputFormat};
use output::SegmentationRecord;

/// Broad phonetic class segmentation of speech.
#[derive(Debug, Parser)]
#[command(name = "broadclass", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment one audio file.
    Segment {
        audio: PathBuf,
        /// Output path; JSON goes to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Overrides `output_format` from the config.
        #[arg(long)]
        format: Option<Format>,
    },
    /// Segment every audio file under a directory.
    Batch {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Dump per-hop features as CSV.
    Features {
        audio: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score segmentations against reference phone labels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Lab,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct Jobs {
    /// Worker threads; defaults to the number of processors.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory tree of `.phn` reference labels.
    #[arg(long)]
    ref_dir: PathBuf,
    /// Directory of segmentation JSON files written by `batch`.
    #[arg(
        long,
        conflicts_with = "audio_dir",
        required_unless_present = "audio_dir"
    )]
    hyp_dir: Option<PathBuf>,
    /// Directory of audio to segment on the fly.
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    /// Comma-separated tolerances in ms for both accuracy and onset tables.
    #[arg(long, value_delimiter = ',')]
    tolerances: Option<Vec<f64>>,
    /// Phone map file; overrides the config.
    #[arg(long)]
    phone_map: Option<PathBuf>,
    /// Never pair detections further than this from a boundary.
    #[arg(long)]
    max_deviation_ms: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    report: ReportFormat,
    /// Report path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the deviation histogram as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Debug)]
enum CliError {
    Core(broadclass::Error),
    Config(ConfigError),
    Usage(String),
    AllFailed(usize),
    Internal(String),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Config(_) => "INVALID_CONFIG",
            CliError::Usage(_) => "USAGE",
            CliError::AllFailed(_) => "ALL_FAILED",
            CliError::Internal(_) => "INTERNAL",
        }
    }

    fn exit_code(&self) -> u8 {
        use broadclass::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Core(E::InvalidParams(_)) => 1,
            CliError::Core(E::NotFound(_) | E::Io { .. }) => 2,
            CliError::Core(E::InconsistentSequence(_)) | CliError::Internal(_) => 4,
            CliError::Core(_) | CliError::AllFailed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Config(e) => e.fmt(f),
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
            CliError::AllFailed(n) => write!(f, "all {n} inputs failed"),
        }
    }
}

impl From<broadclass::Error> for CliError {
    fn from(e: broadclass::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn write_file(path: &Path, content: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, content).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(broadclass::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, content),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Core(broadclass::Error::NotFound(path.to_path_buf()))
        } else {
            io_error(path, e)
        }
    })?;
    Config::parse(&text).map_err(CliError::Config)
}

fn resolve_format(cli: Option<Format>, cfg: OutputFormat) -> OutputFormat {
    match cli {
        Some(Format::Json) => OutputFormat::Json,
        Some(Format::Lab) => OutputFormat::Lab,
        Some(Format::Both) => OutputFormat::Both,
        None => cfg,
    }
}

fn thread_pool(jobs: &Jobs) -> CliResult<rayon::ThreadPool> {
    if jobs.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn stem_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_segment(
    cfg: &Config,
    audio: &Path,
    out: Option<&Path>,
    format: OutputFormat,
) -> CliResult<()> {
    let raw = load_audio(audio, AudioFormat::Auto)?;
    let seg = segment(&raw, &cfg.pipeline, &stem_id(audio))?;
    info!(
        "{}: {} transitions, {} segments",
        audio.display(),
        seg.transitions.len(),
        seg.segments.len()
    );
    match (out, format) {
        (None, OutputFormat::Lab) => emit(None, &output::segmentation_lab(&seg)),
        (None, _) => emit(None, &output::segmentation_json(&seg)),
        (Some(p), OutputFormat::Json) => write_file(p, &output::segmentation_json(&seg)),
        (Some(p), OutputFormat::Lab) => write_file(p, &output::segmentation_lab(&seg)),
        (Some(p), OutputFormat::Both) => {
            write_file(p, &output::segmentation_json(&seg))?;
            write_file(&p.with_extension("lab"), &output::segmentation_lab(&seg))
        }
    }
}

#[derive(Serialize)]
struct BatchIndex {
    total: usize,
    succeeded: Vec<BatchSuccess>,
    failed: Vec<BatchFailure>,
}

#[derive(Serialize)]
struct BatchSuccess {
    id: String,
    outputs: Vec<String>,
    transitions: usize,
    segments: usize,
}

#[derive(Serialize)]
struct BatchFailure {
    id: String,
    input: String,
    code: &'static str,
    message: String,
}

fn cmd_batch(
    cfg: &Config,
    corpus: &Path,
    out_dir: &Path,
    format: OutputFormat,
    jobs: &Jobs,
) -> CliResult<()> {
    let items = discover(corpus)?;
    if items.is_empty() {
        return Err(broadclass::Error::EmptyCorpus(corpus.to_path_buf()).into());
    }
    let pool = thread_pool(jobs)?;
    let results: Vec<CliResult<BatchSuccess>> = pool.install(|| {
        items
            .par_iter()
            .map(|item| batch_one(cfg, item, out_dir, format))
            .collect()
    });

    let mut index = BatchIndex {
        total: items.len(),
        succeeded: Vec::new(),
        failed: Vec::new(),
    };
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(s) => index.succeeded.push(s),
            Err(e) => {
                warn!("{}: {} {e}", item.audio.display(), e.code());
                index.failed.push(BatchFailure {
                    id: item.id.clone(),
                    input: item.audio.display().to_string(),
                    code: e.code(),
                    message: e.to_string(),
                });
            }
        }
    }
    let mut json = serde_json::to_string_pretty(&index).expect("serializable");
    json.push('\n');
    write_file(&out_dir.join("index.json"), &json)?;
    info!(
        "{} of {} files segmented",
        index.succeeded.len(),
        index.total
    );
    if index.succeeded.is_empty() {
        return Err(CliError::AllFailed(index.total));
    }
    Ok(())
}

fn batch_one(
    cfg: &Config,
    item: &CorpusItem,
    out_dir: &Path,
    format: OutputFormat,
) -> CliResult<BatchSuccess> {
    let raw = load_audio(&item.audio, AudioFormat::Auto)?;
    let seg = segment(&raw, &cfg.pipeline, &item.id)?;
    let mut outputs = Vec::new();
    if format.json() {
        let rel = format!("{}.json", item.id);
        write_file(&out_dir.join(&rel), &output::segmentation_json(&seg))?;
        outputs.push(rel);
    }
    if format.lab() {
        let rel = format!("{}.lab", item.id);
        write_file(&out_dir.join(&rel), &output::segmentation_lab(&seg))?;
        outputs.push(rel);
    }
    Ok(BatchSuccess {
        id: item.id.clone(),
        outputs,
        transitions: seg.transitions.len(),
        segments: seg.segments.len(),
    })
}

fn cmd_features(cfg: &Config, audio: &Path, out: Option<&Path>) -> CliResult<()> {
    let raw = load_audio(audio, AudioFormat::Auto)?;
    let a = analyze(&raw, &cfg.pipeline)?;
    emit(out, &output::features_csv(&a.features))
}

/// Files under `root` with one of `exts`, keyed by relative path without
/// extension.
fn files_by_id(root: &Path, exts: &[&str]) -> CliResult<Vec<(String, PathBuf)>> {
    if !root.is_dir() {
        return Err(broadclass::Error::NotFound(root.to_path_buf()).into());
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            io_error(&path, e.into())
        })?;
        let path = entry.path();
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if !entry.file_type().is_file() || !ext_ok {
            continue;
        }
        let stem = path.with_extension("");
        let rel = stem.strip_prefix(root).unwrap_or(&stem);
        let id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        out.push((id, path.to_path_buf()));
    }
    out.sort();
    Ok(out)
}

fn cmd_eval(cfg: &Config, args: &EvalArgs) -> CliResult<()> {
    let mut eval = EvalConfig {
        max_deviation_ms: args.max_deviation_ms,
        ..EvalConfig::default()
    };
    if let Some(t) = &args.tolerances {
        if t.is_empty() {
            return Err(CliError::Usage("--tolerances is empty".into()));
        }
        eval.tolerances_ms = t.clone();
        eval.onset_tolerances_ms = t.clone();
    }
    eval.validate()?;

    let map = match args.phone_map.as_ref().or(cfg.phone_map.as_ref()) {
        Some(p) => PhoneClassMap::load(p)?,
        None => PhoneClassMap::timit(),
    };

    let refs = files_by_id(&args.ref_dir, &["phn"])?;
    if refs.is_empty() {
        return Err(broadclass::Error::EmptyCorpus(args.ref_dir.clone()).into());
    }
    let hyps: Vec<(String, PathBuf)> = match (&args.hyp_dir, &args.audio_dir) {
        (Some(dir), _) => files_by_id(dir, &["json"])?,
        (None, Some(dir)) => discover(dir)?
            .into_iter()
            .map(|i| (i.id, i.audio))
            .collect(),
        (None, None) => {
            return Err(CliError::Usage(
                "one of --hyp-dir or --audio-dir is required".into(),
            ))
        }
    };
    let from_audio = args.hyp_dir.is_none();

    let pool = thread_pool(&args.jobs)?;
    let scored: Vec<Option<CliResult<EvalCounts>>> = pool.install(|| {
        refs.par_iter()
            .map(|(id, ref_path)| {
                let hyp = hyps.binary_search_by(|(h, _)| h.as_str().cmp(id)).ok()?;
                let hyp_path = &hyps[hyp].1;
                Some(score_one(
                    cfg, id, ref_path, hyp_path, from_audio, &map, &eval,
                ))
            })
            .collect()
    });

    let mut counts = EvalCounts::new(&eval);
    let mut missing = 0;
    let mut failed = 0;
    for ((id, _), r) in refs.iter().zip(&scored) {
        match r {
            None => missing += 1,
            Some(Ok(c)) => counts.merge(c),
            Some(Err(e)) => {
                failed += 1;
                warn!("{id}: {} {e}", e.code());
            }
        }
    }
    if missing > 0 {
        warn!("{missing} reference files have no hypothesis");
    }
    if counts.utterances == 0 {
        return Err(if failed > 0 {
            CliError::AllFailed(failed)
        } else {
            broadclass::Error::EmptyCorpus(args.ref_dir.clone()).into()
        });
    }
    info!(
        "scored {} utterances ({failed} failed, {missing} missing)",
        counts.utterances
    );

    let report = counts.report(&eval);
    let text = match args.report {
        ReportFormat::Json => output::report_json(&report),
        ReportFormat::Csv => output::report_csv(&report),
        ReportFormat::Text => output::report_text(&report),
    };
    emit(args.output.as_deref(), &text)?;
    if let Some(p) = &args.histogram {
        write_file(p, &output::histogram_csv(&report))?;
    }
    Ok(())
}

fn score_one(
    cfg: &Config,
    id: &str,
    ref_path: &Path,
    hyp_path: &Path,
    from_audio: bool,
    map: &PhoneClassMap,
    eval: &EvalConfig,
) -> CliResult<EvalCounts> {
    let labels = load_labels(ref_path)?;
    let seg = if from_audio {
        let raw = load_audio(hyp_path, AudioFormat::Auto)?;
        segment(&raw, &cfg.pipeline, id)?
    } else {
        let text = fs::read_to_string(hyp_path).map_err(|e| io_error(hyp_path, e))?;
        let record: SegmentationRecord = serde_json::from_str(&text).map_err(|e| {
            CliError::Core(broadclass::Error::MalformedLine {
                line: e.line(),
                content: format!("{}: {e}", hyp_path.display()),
            })
        })?;
        record.to_segmentation()
    };
    Ok(EvalCounts::score(&seg, &labels, map, eval))
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    debug!("effective config:\n{}", cfg.serialize());
    cfg.pipeline.plan.validate()?;
    cfg.pipeline.detector.validate()?;
    cfg.pipeline.merge.validate()?;
    match &cli.command {
        Command::Segment {
            audio,
            output,
            format,
        } => cmd_segment(
            &cfg,
            audio,
            output.as_deref(),
            resolve_format(*format, cfg.output_format),
        ),
        Command::Batch {
            corpus,
            output,
            format,
            jobs,
        } => cmd_batch(
            &cfg,
            corpus,
            output,
            resolve_format(*format, cfg.output_format),
            jobs,
        ),
        Command::Features { audio, output } => cmd_features(&cfg, audio, output.as_deref()),
        Command::Eval(args) => cmd_eval(&cfg, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                eprintln!("error[USAGE] invalid command line");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}] {e}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}
