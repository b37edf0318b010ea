//! `chadpod` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 input or parse error, 3 pipeline or
//! validation error, 4 scorer or protocol error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::dataset::{
    adapt_turning_points, build_dataset, read_dataset, read_examples, read_synopses, write_dataset, write_examples,
    DatasetSplit, LabeledExample, SplitCounts,
};
use crate::eval::{evaluate, grid_search_threshold};
use crate::graph::{parse_graph, serialize_graph, GameGraph};
use crate::import::{import_graph, SourceFormat};
use crate::manifest::RunManifest;
use crate::scorer::{train_baseline, BaselineModel, BaselineScorer, Endpoint, ExternalScorer, Scorer};
use crate::segmenter::{segment_sentences, KernelShape};
use crate::text::split_sentences;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_PIPELINE: u8 = 3;
pub const EXIT_SCORER: u8 = 4;

/// Files in a graph directory that are never graphs.
const RESERVED_FILES: [&str; 2] = ["manifest.json", "import_report.json"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Pipeline(String),
    #[error("{0}")]
    Scorer(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Pipeline(_) => EXIT_PIPELINE,
            CliError::Scorer(_) => EXIT_SCORER,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "chadpod", version, about = "Character decision point dataset builder, scorer, and text segmenter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file (JSON or TOML) or a previous run's manifest.json.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for scoring.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScorerArgs {
    /// `baseline:<model.json>` or `external:exec:<program args>` / `external:tcp:<host>:<port>`.
    #[arg(long)]
    pub scorer: String,
    /// Seconds to wait for each external scorer reply.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert source game files into interchange graphs.
    ImportGraph {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Source layout; detected per file when omitted.
        #[arg(long, value_enum)]
        format: Option<SourceFormat>,
        #[command(flatten)]
        common: Common,
    },
    /// Build train/dev/test JSONL files from a directory of interchange graphs.
    BuildDataset {
        graph_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        min_sentences: Option<usize>,
        #[arg(long)]
        min_chars: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the hashed logistic-regression baseline.
    Train {
        dataset_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a split and report accuracy, balanced accuracy, and F1.
    Eval {
        /// Dataset directory or a single JSONL file.
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Split to read when `dataset` is a directory.
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Pick the decision threshold maximizing accuracy on a split.
    GridSearch {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "dev")]
        split: String,
        /// Comma-separated thresholds in (0, 1).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Score every sentence boundary of a text and cut it at detected peaks.
    Segment {
        text: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        kernel_width: Option<usize>,
        #[arg(long, value_enum)]
        kernel: Option<KernelShape>,
        #[arg(long)]
        th1: Option<f64>,
        #[arg(long)]
        th2: Option<f64>,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Turn turning-point-annotated synopses into labeled examples.
    AdaptTp {
        synopses: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        min_context: Option<usize>,
        #[arg(long)]
        max_context: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve_config(common: &Common, apply: impl FnOnce(&mut RunConfig)) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).map_err(|e| CliError::Input(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    apply(&mut cfg);
    cfg.resolve().map_err(|e| CliError::Pipeline(e.to_string()))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn add_input(manifest: &mut RunManifest, path: &Path) -> CliResult<()> {
    manifest
        .add_input(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn finish(manifest: &mut RunManifest, out: &Path, outputs: &[&str]) -> CliResult<()> {
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    manifest.write(out).map_err(|e| CliError::Input(format!("cannot write manifest: {e}")))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn open_scorer(args: &ScorerArgs, cfg: &RunConfig) -> CliResult<Box<dyn Scorer>> {
    if let Some(path) = args.scorer.strip_prefix("baseline:") {
        let path = Path::new(path);
        let model = BaselineModel::load(path).map_err(|e| CliError::Input(e.to_string()))?;
        let label = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(Box::new(BaselineScorer::new(model, label, cfg.jobs)));
    }
    if let Some(spec) = args.scorer.strip_prefix("external:") {
        let endpoint: Endpoint = spec.parse().map_err(CliError::Usage)?;
        let secs = args.timeout.unwrap_or(cfg.scorer.timeout_secs);
        if !(secs.is_finite() && secs > 0.0) {
            return Err(CliError::Usage(format!("--timeout must be positive, got {secs}")));
        }
        let scorer = ExternalScorer::connect(&endpoint, Duration::from_secs_f64(secs))
            .map_err(|e| CliError::Scorer(e.to_string()))?;
        return Ok(Box::new(scorer));
    }
    Err(CliError::Usage(format!(
        "unknown scorer `{}`; expected baseline:<model> or external:<endpoint>",
        args.scorer
    )))
}

fn load_examples(dataset: &Path, split: &str, manifest: &mut RunManifest) -> CliResult<Vec<LabeledExample>> {
    let file = if dataset.is_dir() {
        if !["train", "dev", "test"].contains(&split) {
            return Err(CliError::Usage(format!("unknown split `{split}`; expected train, dev, or test")));
        }
        dataset.join(format!("{split}.jsonl"))
    } else {
        dataset.to_path_buf()
    };
    add_input(manifest, &file)?;
    read_examples(&file).map_err(|e| CliError::Input(e.to_string()))
}

fn scorer_failure(e: impl std::fmt::Display + HasScorerSource) -> CliError {
    if e.is_scorer() {
        CliError::Scorer(e.to_string())
    } else {
        CliError::Pipeline(e.to_string())
    }
}

trait HasScorerSource {
    fn is_scorer(&self) -> bool;
}

impl HasScorerSource for crate::eval::EvalError {
    fn is_scorer(&self) -> bool {
        matches!(self, Self::Scorer { .. } | Self::CountMismatch { .. })
    }
}

impl HasScorerSource for crate::segmenter::SegmentError {
    fn is_scorer(&self) -> bool {
        matches!(self, Self::Scorer { .. } | Self::CountMismatch { .. })
    }
}

#[derive(Serialize)]
struct ImportReport {
    converted: Vec<ImportSuccess>,
    failed: Vec<ImportFailure>,
}

#[derive(Serialize)]
struct ImportSuccess {
    input: String,
    output: String,
    game_id: String,
    nodes: usize,
    edges: usize,
}

#[derive(Serialize)]
struct ImportFailure {
    input: String,
    error: String,
}

fn cmd_import_graph(
    inputs: &[PathBuf],
    out: &Path,
    format: Option<SourceFormat>,
    common: &Common,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let cfg = resolve_config(common, |_| {})?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("import-graph", &cfg);
    let mut report = ImportReport { converted: Vec::new(), failed: Vec::new() };
    let mut outputs: Vec<String> = Vec::new();
    for input in inputs {
        let input_name = input.display().to_string();
        let result = fs::read(input)
            .map_err(|e| e.to_string())
            .and_then(|doc| import_graph(&doc, &file_stem(input), format).map_err(|e| e.to_string()));
        match result {
            Ok(graph) => {
                let name = format!("{}.json", graph.game_id());
                if outputs.contains(&name) || RESERVED_FILES.contains(&name.as_str()) {
                    report.failed.push(ImportFailure {
                        input: input_name,
                        error: format!("output {name} would collide with another file"),
                    });
                    continue;
                }
                write_file(&out.join(&name), serialize_graph(&graph))?;
                add_input(&mut manifest, input)?;
                report.converted.push(ImportSuccess {
                    input: input_name,
                    output: name.clone(),
                    game_id: graph.game_id().to_string(),
                    nodes: graph.nodes().len(),
                    edges: graph.edges().len(),
                });
                outputs.push(name);
            }
            Err(error) => report.failed.push(ImportFailure { input: input_name, error }),
        }
    }
    write_file(&out.join("import_report.json"), to_pretty_json(&report))?;
    outputs.push("import_report.json".into());
    let _ = writeln!(stdout, "imported {} of {} files", report.converted.len(), inputs.len());
    for f in &report.failed {
        let _ = writeln!(stdout, "FAILED {}: {}", f.input, f.error);
    }
    manifest.summary = serde_json::json!({ "converted": report.converted.len(), "failed": report.failed.len() });
    let names: Vec<&str> = outputs.iter().map(String::as_str).collect();
    finish(&mut manifest, out, &names)?;
    if report.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{} of {} inputs failed to import", report.failed.len(), inputs.len())))
    }
}

/// Interchange graphs in `dir`, sorted by file name.
pub fn load_graph_dir(dir: &Path, manifest: &mut RunManifest) -> CliResult<Vec<GameGraph>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Input(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| !p.file_name().is_some_and(|n| RESERVED_FILES.iter().any(|r| n == *r)))
        .collect();
    paths.sort();
    let mut graphs = Vec::with_capacity(paths.len());
    for path in &paths {
        let doc = read_file(path)?;
        let graph = parse_graph(&doc, &file_stem(path)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        add_input(manifest, path)?;
        graphs.push(graph);
    }
    Ok(graphs)
}

fn cmd_build_dataset(
    graph_dir: &Path,
    out: &Path,
    min_sentences: Option<usize>,
    min_chars: Option<usize>,
    common: &Common,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let cfg = resolve_config(common, |c| {
        if let Some(v) = min_sentences {
            c.build.min_sentences = v;
        }
        if let Some(v) = min_chars {
            c.build.min_chars = v;
        }
    })?;
    let mut manifest = RunManifest::new("build-dataset", &cfg);
    let graphs = load_graph_dir(graph_dir, &mut manifest)?;
    let built = build_dataset(&graphs, &cfg.build).map_err(|e| CliError::Pipeline(e.to_string()))?;
    create_dir(out)?;
    write_dataset(&built.split, out).map_err(|e| CliError::Input(e.to_string()))?;
    let _ = write!(stdout, "{}", built.split.summary_table());
    manifest.summary = serde_json::json!({ "counts": built.split.counts(), "stats": built.stats });
    finish(&mut manifest, out, &["train.jsonl", "dev.jsonl", "test.jsonl"])
}

fn cmd_train(dataset_dir: &Path, out: &Path, cfg: RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mut manifest = RunManifest::new("train", &cfg);
    for split in ["train", "dev"] {
        add_input(&mut manifest, &dataset_dir.join(format!("{split}.jsonl")))?;
    }
    let split: DatasetSplit = read_dataset(dataset_dir).map_err(|e| CliError::Input(e.to_string()))?;
    let (model, report) = train_baseline(&split.train, &split.dev, &cfg.train).map_err(|e| CliError::Pipeline(e.to_string()))?;
    create_dir(out)?;
    model.save(&out.join("model.json")).map_err(|e| CliError::Input(e.to_string()))?;
    write_file(&out.join("train_report.json"), to_pretty_json(&report))?;
    let best = &report.epochs[report.best_epoch - 1];
    let _ = writeln!(
        stdout,
        "trained {} epochs; kept epoch {} (train accuracy {:.4}{})",
        report.epochs.len(),
        report.best_epoch,
        best.train_accuracy,
        best.dev_accuracy.map(|a| format!(", dev accuracy {a:.4}")).unwrap_or_default()
    );
    manifest.summary = serde_json::json!({ "best_epoch": report.best_epoch, "train_examples": split.train.len(), "dev_examples": split.dev.len() });
    finish(&mut manifest, out, &["model.json", "train_report.json"])
}

fn add_scorer_input(manifest: &mut RunManifest, args: &ScorerArgs) -> CliResult<()> {
    if let Some(path) = args.scorer.strip_prefix("baseline:") {
        add_input(manifest, Path::new(path))?;
    }
    Ok(())
}

fn cmd_eval(
    dataset: &Path,
    out: &Path,
    split: &str,
    scorer_args: &ScorerArgs,
    cfg: RunConfig,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let mut manifest = RunManifest::new("eval", &cfg);
    let examples = load_examples(dataset, split, &mut manifest)?;
    add_scorer_input(&mut manifest, scorer_args)?;
    let mut scorer = open_scorer(scorer_args, &cfg)?;
    let report = evaluate(&mut scorer, &examples, cfg.eval.threshold, cfg.eval.batch_size).map_err(scorer_failure)?;
    create_dir(out)?;
    write_file(&out.join("eval.json"), to_pretty_json(&report))?;
    write_file(&out.join("eval.csv"), report.to_csv())?;
    let m = &report.metrics;
    let _ = writeln!(
        stdout,
        "examples {}  accuracy {:.4}  balanced_accuracy {:.4}  f1 {:.4}  (tp {} fp {} tn {} fn {})",
        report.counts.examples, m.accuracy, m.balanced_accuracy, m.f1, report.matrix.tp, report.matrix.fp, report.matrix.tn, report.matrix.fn_
    );
    if m.flags.any() {
        let _ = writeln!(stdout, "warning: some metric terms had zero denominators and were set to 0: {:?}", m.flags);
    }
    manifest.summary = serde_json::json!({ "matrix": report.matrix, "metrics": report.metrics });
    finish(&mut manifest, out, &["eval.json", "eval.csv"])
}

#[derive(Serialize)]
struct GridReport<'a> {
    scorer: String,
    #[serde(flatten)]
    result: &'a crate::eval::GridSearchResult,
}

fn cmd_grid_search(
    dataset: &Path,
    out: &Path,
    split: &str,
    scorer_args: &ScorerArgs,
    cfg: RunConfig,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let mut manifest = RunManifest::new("grid-search", &cfg);
    let examples = load_examples(dataset, split, &mut manifest)?;
    add_scorer_input(&mut manifest, scorer_args)?;
    let mut scorer = open_scorer(scorer_args, &cfg)?;
    let result = grid_search_threshold(&mut scorer, &examples, &cfg.eval.grid, cfg.eval.batch_size).map_err(scorer_failure)?;
    create_dir(out)?;
    write_file(&out.join("grid_search.json"), to_pretty_json(&GridReport { scorer: scorer.name(), result: &result }))?;
    let _ = writeln!(
        stdout,
        "best threshold {} (accuracy {:.4} over {} examples)",
        result.best_threshold,
        result.best_metrics.accuracy,
        examples.len()
    );
    manifest.summary = serde_json::json!({ "best_threshold": result.best_threshold, "best_metrics": result.best_metrics });
    finish(&mut manifest, out, &["grid_search.json"])
}

fn cmd_segment(text: &Path, out: &Path, scorer_args: &ScorerArgs, cfg: RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mut manifest = RunManifest::new("segment", &cfg);
    let bytes = read_file(text)?;
    let content = String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is not UTF-8", text.display())))?;
    add_input(&mut manifest, text)?;
    add_scorer_input(&mut manifest, scorer_args)?;
    let mut scorer = open_scorer(scorer_args, &cfg)?;
    let sentences = split_sentences(&content);
    let report = segment_sentences(&sentences, &mut scorer, &cfg.segment).map_err(scorer_failure)?;
    create_dir(out)?;
    write_file(&out.join("segment.json"), to_pretty_json(&report))?;
    write_file(&out.join("segment.csv"), report.to_csv())?;
    write_file(&out.join("segment.svg"), report.to_svg())?;
    let mut seg_text = String::new();
    for (i, (range, body)) in report.segments.iter().zip(report.segment_texts(&sentences)).enumerate() {
        seg_text += &format!("## segment {} (sentences {}..{})\n{}\n\n", i + 1, range.start, range.end, body);
    }
    write_file(&out.join("segments.txt"), seg_text)?;
    let _ = writeln!(
        stdout,
        "{} sentences, {} scored boundaries, {} peaks, {} segments",
        report.sentences,
        report.raw.len(),
        report.peaks.len(),
        report.segments.len()
    );
    manifest.summary = serde_json::json!({
        "sentences": report.sentences,
        "peaks": report.peaks.iter().map(|p| p.boundary).collect::<Vec<_>>(),
    });
    finish(&mut manifest, out, &["segment.json", "segment.csv", "segment.svg", "segments.txt"])
}

fn cmd_adapt_tp(synopses: &Path, out: &Path, cfg: RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mut manifest = RunManifest::new("adapt-tp", &cfg);
    let file = fs::File::open(synopses).map_err(|e| CliError::Input(format!("cannot read {}: {e}", synopses.display())))?;
    let parsed = read_synopses(BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", synopses.display())))?;
    add_input(&mut manifest, synopses)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let examples = adapt_turning_points(&parsed, &cfg.adapt, &mut rng);
    create_dir(out)?;
    write_examples(&out.join("adapted.jsonl"), &examples).map_err(|e| CliError::Input(e.to_string()))?;
    let counts = SplitCounts::of(&examples);
    let _ = writeln!(
        stdout,
        "{} synopses -> {} positives, {} negatives",
        parsed.len(),
        counts.positive,
        counts.negatives()
    );
    manifest.summary = serde_json::json!({ "synopses": parsed.len(), "counts": counts });
    finish(&mut manifest, out, &["adapted.jsonl"])
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::ImportGraph { inputs, out, format, common } => cmd_import_graph(&inputs, &out, format, &common, stdout),
        Command::BuildDataset { graph_dir, out, min_sentences, min_chars, common } => {
            cmd_build_dataset(&graph_dir, &out, min_sentences, min_chars, &common, stdout)
        }
        Command::Train { dataset_dir, out, epochs, learning_rate, l2, common } => {
            let cfg = resolve_config(&common, |c| {
                if let Some(v) = epochs {
                    c.train.epochs = v;
                }
                if let Some(v) = learning_rate {
                    c.train.learning_rate = v;
                }
                if let Some(v) = l2 {
                    c.train.l2 = v;
                }
            })?;
            cmd_train(&dataset_dir, &out, cfg, stdout)
        }
        Command::Eval { dataset, out, split, threshold, scorer, common } => {
            let cfg = resolve_config(&common, |c| {
                if let Some(v) = threshold {
                    c.eval.threshold = v;
                }
                if let Some(v) = scorer.timeout {
                    c.scorer.timeout_secs = v;
                }
            })?;
            cmd_eval(&dataset, &out, &split, &scorer, cfg, stdout)
        }
        Command::GridSearch { dataset, out, split, grid, scorer, common } => {
            let cfg = resolve_config(&common, |c| {
                if let Some(v) = grid {
                    c.eval.grid = v;
                }
                if let Some(v) = scorer.timeout {
                    c.scorer.timeout_secs = v;
                }
            })?;
            cmd_grid_search(&dataset, &out, &split, &scorer, cfg, stdout)
        }
        Command::Segment { text, out, window, kernel_width, kernel, th1, th2, scorer, common } => {
            let cfg = resolve_config(&common, |c| {
                let s = &mut c.segment;
                s.window_sentences = window.unwrap_or(s.window_sentences);
                s.kernel_width = kernel_width.unwrap_or(s.kernel_width);
                s.kernel = kernel.unwrap_or(s.kernel);
                s.th1 = th1.unwrap_or(s.th1);
                s.th2 = th2.unwrap_or(s.th2);
                if let Some(v) = scorer.timeout {
                    c.scorer.timeout_secs = v;
                }
            })?;
            cmd_segment(&text, &out, &scorer, cfg, stdout)
        }
        Command::AdaptTp { synopses, out, min_context, max_context, common } => {
            let cfg = resolve_config(&common, |c| {
                c.adapt.min_context = min_context.unwrap_or(c.adapt.min_context);
                c.adapt.max_context = max_context.unwrap_or(c.adapt.max_context);
            })?;
            cmd_adapt_tp(&synopses, &out, cfg, stdout)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
