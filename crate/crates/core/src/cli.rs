//! Command-line front end.
//!
//! Every subcommand reads its flags from the command line and, optionally, from
//! a TOML file passed with `--config`. The file holds one table per subcommand
//! whose keys are long flag names; flags given on the command line win.
//!
//! ```toml
//! [pipeline]
//! seed = 7
//! sampling-mode = "seeded-random"
//! ```
//!
//! Exit status is 0 on success, 2 on usage errors and 1 on data errors, which
//! are reported on stderr as `{"error": ..., "stage": ...}`.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clock::{fuse_ocr_streams, locate_event_window, parse_clock, read_ocr_stream, Confidence, FusedTimeline};
use crate::dataset::{
    dataset_stats, extract_dataset, label_counts, split_dataset, CaptionSample, DatasetStats, ExtractOptions,
    SamplingMode, VerbLexicon,
};
use crate::ingest::{build_graph, read_roster, BuildOptions, BuildOutput};
use crate::io::{to_jsonl, write_atomic};
use crate::kgraph::KnowledgeGraph;
use crate::metrics::{evaluate_corpus, EvalOptions, RoleAveraging, RougeWeighting};
use crate::pbp::{parse_pbp_file, KeywordTable};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.801;

#[derive(Debug, Parser)]
#[command(
    name = "capbench",
    version,
    about = "Sports captioning dataset builder and caption metrics"
)]
pub struct Cli {
    /// TOML file with per-subcommand flag defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse play-by-play and build the knowledge graph.
    BuildKg(BuildKgArgs),
    /// Extract the captioning dataset from a knowledge graph.
    ExtractDataset(ExtractArgs),
    /// Dataset statistics from a dataset and its clip durations.
    Stats(StatsArgs),
    /// Fuse an OCR clock stream and locate event windows.
    AlignClock(AlignClockArgs),
    /// Score predicted captions against references.
    Evaluate(EvaluateArgs),
    /// build-kg, extract-dataset and stats in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphInputs {
    /// Play-by-play JSONL.
    #[arg(long)]
    pub pbp: PathBuf,
    /// Roster JSONL (name, team, image).
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// Directory of OCR clock streams named `<game_id>.jsonl`.
    #[arg(long)]
    pub ocr_dir: Option<PathBuf>,
    /// Keyword table replacing the bundled one.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    #[arg(long, default_value_t = crate::clock::DEFAULT_PRE_MARGIN)]
    pub pre_margin: u64,
    #[arg(long, default_value_t = crate::clock::DEFAULT_POST_MARGIN)]
    pub post_margin: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractFlags {
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SamplingArg::Midpoint)]
    pub sampling_mode: SamplingArg,
    /// Video frame rate, used for clip durations.
    #[arg(long, default_value_t = 25.0)]
    pub fps: f64,
    /// Verb lexicon (one word per line) replacing the bundled one.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct BuildKgArgs {
    #[command(flatten)]
    pub inputs: GraphInputs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ExtractArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub flags: ExtractFlags,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSONL of `{file_id, seconds}`.
    #[arg(long)]
    pub durations: PathBuf,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct AlignClockArgs {
    #[arg(long)]
    pub ocr: PathBuf,
    /// Writes the fused timeline as JSONL.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Event to locate, as `PERIOD/CLOCK` (e.g. `1/11:32`). Repeatable.
    #[arg(long = "event")]
    pub events: Vec<String>,
    #[arg(long, default_value_t = crate::clock::DEFAULT_PRE_MARGIN)]
    pub pre_margin: u64,
    #[arg(long, default_value_t = crate::clock::DEFAULT_POST_MARGIN)]
    pub post_margin: u64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    /// Predictions JSONL of `{file_id, caption}`.
    #[arg(long)]
    pub pred: PathBuf,
    /// References JSONL; repeated file ids add references.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Player names, one per line.
    #[arg(long)]
    pub roster: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value_t = RougeArg::Recall)]
    pub rouge: RougeArg,
    #[arg(long, value_enum, default_value_t = RoleAverageArg::Micro)]
    pub role_average: RoleAverageArg,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub inputs: GraphInputs,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub flags: ExtractFlags,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Midpoint,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RougeArg {
    Recall,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleAverageArg {
    Micro,
    Macro,
}

struct StageError {
    stage: &'static str,
    error: anyhow::Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            report(stderr, "config", &e);
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                2
            } else {
                let _ = write!(stdout, "{rendered}");
                0
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            report(stderr, e.stage, &e.error);
            1
        }
    }
}

fn report(stderr: &mut dyn Write, stage: &str, error: &anyhow::Error) {
    let msg = serde_json::json!({ "error": format!("{error:#}"), "stage": stage });
    let _ = writeln!(stderr, "{msg}");
}

/// Splices `--config` table entries in right after the subcommand name.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    rest.extend(it.next());
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("{} is not valid TOML", path.display()))?;

    let Some(pos) = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(rest);
    };
    let pos = pos + 1;
    let sub = rest[pos].to_string_lossy().into_owned();
    let Some(section) = table.get(&sub) else {
        return Ok(rest);
    };
    let section = section
        .as_table()
        .with_context(|| format!("[{sub}] in {} must be a table", path.display()))?;

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in section {
        let flag = format!("--{key}");
        let values = match value {
            toml::Value::Array(items) => items.iter().collect(),
            v => vec![v],
        };
        for v in values {
            match v {
                toml::Value::Boolean(true) => extra.push(flag.clone().into()),
                toml::Value::Boolean(false) => {}
                toml::Value::String(s) => extra.extend([flag.clone().into(), s.into()]),
                toml::Value::Integer(i) => extra.extend([flag.clone().into(), i.to_string().into()]),
                toml::Value::Float(f) => extra.extend([flag.clone().into(), f.to_string().into()]),
                other => bail!("{key} in [{sub}]: unsupported value {other}"),
            }
        }
    }
    rest.splice(pos + 1..pos + 1, extra);
    Ok(rest)
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), StageError> {
    match command {
        Command::BuildKg(a) => {
            let built = with_jobs(a.jobs, || build_stage(&a.inputs))
                .and_then(|r| r)
                .stage("build-kg")?;
            warn(stderr, &built.warnings);
            let bytes = built.graph.to_jsonl().into_bytes();
            write_outputs(&[(a.out.clone(), bytes)]).stage("build-kg")?;
            print_json(stdout, &graph_summary(&built.graph)).stage("build-kg")
        }
        Command::ExtractDataset(a) => {
            let graph = KnowledgeGraph::load(&a.graph)
                .with_context(|| format!("cannot load graph {}", a.graph.display()))
                .stage("extract-dataset")?;
            let ex = with_jobs(a.jobs, || extract_stage(&graph, &a.flags))
                .and_then(|r| r)
                .stage("extract-dataset")?;
            warn(stderr, &ex.warnings);
            write_outputs(&ex.files(&a.out_dir)).stage("extract-dataset")?;
            print_json(stdout, &ex.summary()).stage("extract-dataset")
        }
        Command::Stats(a) => {
            let stats = stats_from_files(&a).stage("stats")?;
            let text = pretty(&stats).stage("stats")?;
            if let Some(out) = &a.out {
                write_outputs(&[(out.clone(), text.clone().into_bytes())]).stage("stats")?;
            }
            stdout.write_all(text.as_bytes()).map_err(Into::into).stage("stats")
        }
        Command::AlignClock(a) => align_clock(&a, stdout).stage("align-clock"),
        Command::Evaluate(a) => {
            let opts = EvalOptions {
                rouge: match a.rouge {
                    RougeArg::Recall => RougeWeighting::Recall,
                    RougeArg::Balanced => RougeWeighting::Balanced,
                },
                role: match a.role_average {
                    RoleAverageArg::Micro => RoleAveraging::Micro,
                    RoleAverageArg::Macro => RoleAveraging::Macro,
                },
                ..EvalOptions::default()
            };
            let report = evaluate_corpus(&a.pred, &a.reference, &a.roster, opts)
                .map_err(anyhow::Error::from)
                .stage("evaluate")?;
            match a.format {
                FormatArg::Json => print_json(stdout, &report).stage("evaluate"),
                FormatArg::Table => stdout
                    .write_all(report.to_table().as_bytes())
                    .map_err(Into::into)
                    .stage("evaluate"),
            }
        }
        Command::Pipeline(a) => {
            let (built, ex) = with_jobs(a.jobs, || -> Result<(BuildOutput, Extracted), StageError> {
                let built = build_stage(&a.inputs).stage("build-kg")?;
                let ex = extract_stage(&built.graph, &a.flags).stage("extract-dataset")?;
                Ok((built, ex))
            })
            .stage("pipeline")??;
            warn(stderr, &built.warnings);
            warn(stderr, &ex.warnings);

            let mut warnings = built.warnings.clone();
            warnings.extend(ex.warnings.iter().cloned());
            let report = PipelineReport {
                graph: graph_summary(&built.graph),
                dataset: ex.summary(),
                warnings,
            };
            let mut files = vec![(a.out_dir.join("graph.kg.jsonl"), built.graph.to_jsonl().into_bytes())];
            files.extend(ex.files(&a.out_dir));
            files.push((
                a.out_dir.join("report.json"),
                pretty(&report).stage("pipeline")?.into_bytes(),
            ));
            write_outputs(&files).stage("pipeline")?;
            print_json(stdout, &report).stage("pipeline")
        }
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => bail!("--jobs must be at least 1"),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
    }
}

fn warn(stderr: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn print_json<T: Serialize>(stdout: &mut dyn Write, value: &T) -> Result<()> {
    stdout.write_all(pretty(value)?.as_bytes())?;
    Ok(())
}

/// Writes every file atomically; nothing is written unless all contents are
/// already computed.
fn write_outputs(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    for (path, _) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    for (path, bytes) in files {
        write_atomic(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("input {} does not exist or is not a file", path.display());
    }
    Ok(())
}

/// Parses the play-by-play, reads roster and clock streams and builds the graph.
pub fn build_stage(inputs: &GraphInputs) -> Result<BuildOutput> {
    require_file(&inputs.pbp)?;
    for p in inputs.roster.iter().chain(&inputs.keywords) {
        require_file(p)?;
    }
    if let Some(dir) = &inputs.ocr_dir {
        if !dir.is_dir() {
            bail!("OCR directory {} does not exist", dir.display());
        }
    }

    let table = match &inputs.keywords {
        Some(p) => KeywordTable::load(p)?,
        None => KeywordTable::default(),
    };
    let parsed = parse_pbp_file(&inputs.pbp, &table)?;
    let roster = match &inputs.roster {
        Some(p) => read_roster(p)?,
        None => Vec::new(),
    };
    let timelines = match &inputs.ocr_dir {
        Some(dir) => read_timelines(dir)?,
        None => HashMap::new(),
    };
    let opts = BuildOptions {
        pre_margin: inputs.pre_margin,
        post_margin: inputs.post_margin,
    };
    let mut out = build_graph(&parsed.events, &roster, &timelines, opts)?;
    let mut warnings: Vec<String> = parsed
        .errors
        .iter()
        .map(|e| format!("{} line {}: {}", inputs.pbp.display(), e.line, e.error))
        .collect();
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

/// Fused timelines keyed by game id, one `<game_id>.jsonl` stream per game.
pub fn read_timelines(dir: &Path) -> Result<HashMap<String, FusedTimeline>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    paths.sort();
    let mut out = HashMap::new();
    for p in paths {
        let game = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let readings = read_ocr_stream(&p)?;
        out.insert(game, fuse_ocr_streams(&readings));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub relations: usize,
    pub events_by_category: BTreeMap<String, usize>,
}

fn graph_summary(g: &KnowledgeGraph) -> GraphSummary {
    GraphSummary {
        nodes: g.node_count(),
        relations: g.relation_count(),
        events_by_category: g
            .event_category_counts()
            .into_iter()
            .map(|(c, n)| (c.as_str().to_string(), n))
            .collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub samples: usize,
    pub train: usize,
    pub test: usize,
    pub labels: BTreeMap<String, usize>,
    pub stats: DatasetStats,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub graph: GraphSummary,
    pub dataset: DatasetSummary,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DurationRecord {
    file_id: String,
    seconds: f64,
}

struct Extracted {
    samples: Vec<CaptionSample>,
    train: Vec<CaptionSample>,
    test: Vec<CaptionSample>,
    durations: Vec<DurationRecord>,
    stats: DatasetStats,
    warnings: Vec<String>,
}

impl Extracted {
    fn files(&self, dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let jsonl = |items: &[CaptionSample]| to_jsonl(items).expect("samples serialize").into_bytes();
        vec![
            (dir.join("dataset.jsonl"), jsonl(&self.samples)),
            (dir.join("train.jsonl"), jsonl(&self.train)),
            (dir.join("test.jsonl"), jsonl(&self.test)),
            (
                dir.join("durations.jsonl"),
                to_jsonl(&self.durations).expect("durations serialize").into_bytes(),
            ),
            (
                dir.join("stats.json"),
                pretty(&self.stats).expect("stats serialize").into_bytes(),
            ),
        ]
    }

    fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            samples: self.samples.len(),
            train: self.train.len(),
            test: self.test.len(),
            labels: label_counts(&self.samples)
                .into_iter()
                .map(|(l, n)| (l.as_str().to_string(), n))
                .collect(),
            stats: self.stats.clone(),
        }
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<VerbLexicon> {
    match path {
        Some(p) => VerbLexicon::load(p).with_context(|| format!("cannot read lexicon {}", p.display())),
        None => Ok(VerbLexicon::default()),
    }
}

fn extract_stage(graph: &KnowledgeGraph, flags: &ExtractFlags) -> Result<Extracted> {
    if let Some(p) = &flags.lexicon {
        require_file(p)?;
    }
    if flags.fps.is_nan() || flags.fps <= 0.0 {
        bail!("--fps must be positive");
    }
    let lexicon = load_lexicon(flags.lexicon.as_deref())?;
    let opts = ExtractOptions {
        sampling_mode: match flags.sampling_mode {
            SamplingArg::Midpoint => SamplingMode::Midpoint,
            SamplingArg::SeededRandom => SamplingMode::SeededRandom,
        },
        seed: flags.seed,
        fps: flags.fps,
    };
    let ex = extract_dataset(graph, opts)?;
    let (train, test) = split_dataset(&ex.samples, flags.train_fraction, flags.seed)?;
    let captions: Vec<&str> = ex.samples.iter().map(|s| s.caption.as_str()).collect();
    let stats = dataset_stats(&captions, &ex.durations_seconds, &lexicon)?;
    let durations = ex
        .samples
        .iter()
        .zip(&ex.durations_seconds)
        .map(|(s, d)| DurationRecord {
            file_id: s.file_id.clone(),
            seconds: *d,
        })
        .collect();
    Ok(Extracted {
        samples: ex.samples,
        train,
        test,
        durations,
        stats,
        warnings: ex.warnings,
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

#[derive(Deserialize)]
struct CaptionLine {
    file_id: String,
    caption: String,
}

fn stats_from_files(a: &StatsArgs) -> Result<DatasetStats> {
    require_file(&a.dataset)?;
    require_file(&a.durations)?;
    let lexicon = load_lexicon(a.lexicon.as_deref())?;
    let samples: Vec<CaptionLine> = read_jsonl(&a.dataset)?;
    let durations: Vec<DurationRecord> = read_jsonl(&a.durations)?;
    let by_id: HashMap<&str, f64> = durations.iter().map(|d| (d.file_id.as_str(), d.seconds)).collect();
    let seconds = samples
        .iter()
        .map(|s| {
            by_id
                .get(s.file_id.as_str())
                .copied()
                .with_context(|| format!("no duration for {}", s.file_id))
        })
        .collect::<Result<Vec<f64>>>()?;
    let captions: Vec<&str> = samples.iter().map(|s| s.caption.as_str()).collect();
    Ok(dataset_stats(&captions, &seconds, &lexicon)?)
}

#[derive(Serialize)]
struct WindowLine {
    period: u32,
    clock: String,
    start_frame: u64,
    end_frame: u64,
}

#[derive(Serialize)]
struct AlignSummary {
    entries: usize,
    agreed: usize,
    single: usize,
    conflict: usize,
    last_frame: u64,
    windows: Vec<WindowLine>,
}

fn align_clock(a: &AlignClockArgs, stdout: &mut dyn Write) -> Result<()> {
    require_file(&a.ocr)?;
    let events = a
        .events
        .iter()
        .map(|e| {
            let (p, c) = e
                .split_once('/')
                .with_context(|| format!("event {e:?} is not PERIOD/CLOCK"))?;
            let period: u32 = p.trim().parse().with_context(|| format!("bad period in {e:?}"))?;
            Ok((period, c.trim().to_string(), parse_clock(c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let timeline = fuse_ocr_streams(&read_ocr_stream(&a.ocr)?);
    let windows = events
        .into_iter()
        .map(|(period, clock, secs)| {
            let w = locate_event_window(period, secs, &timeline, a.pre_margin, a.post_margin)?;
            Ok(WindowLine {
                period,
                clock,
                start_frame: w.start_frame,
                end_frame: w.end_frame,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |c: Confidence| timeline.entries.iter().filter(|e| e.confidence == c).count();
    let summary = AlignSummary {
        entries: timeline.entries.len(),
        agreed: count(Confidence::Agreed),
        single: count(Confidence::Single),
        conflict: count(Confidence::Conflict),
        last_frame: timeline.last_frame,
        windows,
    };
    if let Some(out) = &a.out {
        write_outputs(&[(out.clone(), to_jsonl(&timeline.entries)?.into_bytes())])?;
    }
    print_json(stdout, &summary)
}
