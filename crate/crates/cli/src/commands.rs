use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use verity_core::calibration::{self, Binning, CalibrationArtifact, CalibrationConfig, ScoreRecord, TemperatureGrid};
use verity_core::evaluation::{self, EvaluationReport};
use verity_core::filter::{self, DEFAULT_THRESHOLD};
use verity_core::fixtures::{self, KindMix};
use verity_core::forge::{self, Adapter, AdapterOptions, FalsehoodConfig, TableSampler};
use verity_core::jsonl;
use verity_core::scorer::{self, VerifierModel};
use verity_core::trainer::{self, TrainConfig, TrainState};
use verity_core::{DatasetPartition, Stage};

use crate::error::{CliError, Context};
use crate::settings::{self, display, merge, resolve, stem, Overrides};
use crate::Common;

fn print_header(command: &str, body: &str) {
    print!("{}", settings::header(command, body));
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).or_kind("Io"),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    create_parent(path)?;
    std::fs::write(path, body).map_err(|e| CliError::runtime("Io", format!("{}: {e}", path.display())))
}

fn load_model_with(model: &Path, calibration: Option<&Path>) -> Result<(VerifierModel, Option<CalibrationArtifact>), CliError> {
    let mut m = scorer::load_model(model).map_err(|e| CliError::runtime("Checkpoint", format!("{}: {e}", model.display())))?;
    let artifact = match calibration {
        Some(path) => {
            let a = CalibrationArtifact::load(path)
                .map_err(|e| CliError::runtime("Calibration", format!("{}: {e}", path.display())))?;
            m.set_temperature(a.temperature).or_kind("Calibration")?;
            Some(a)
        }
        None => None,
    };
    Ok((m, artifact))
}

// ---------------------------------------------------------------- forge

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[command(flatten)]
    common: Common,
    /// One of: mc, boolean, kb, skd, com2sense, cycic, comve, i2d2.
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add low-probability sampled answers as extra incorrect statements.
    #[arg(long)]
    augment_falsehoods: bool,
    /// Answer sampler: `table:<path>` or a path to a sample table (JSONL).
    #[arg(long)]
    sampler: Option<String>,
    /// Samples drawn per question.
    #[arg(long)]
    n: Option<usize>,
    /// Falsehoods kept per question.
    #[arg(long)]
    k: Option<usize>,
    /// Probability ceiling for a sampled answer to count as a falsehood.
    #[arg(long)]
    pmax: Option<f64>,
    /// Perturbed statements per KB entry.
    #[arg(long)]
    kb_k: Option<usize>,
}

fn default_n() -> usize {
    FalsehoodConfig::default().n
}
fn default_k() -> usize {
    FalsehoodConfig::default().k
}
fn default_pmax() -> f64 {
    FalsehoodConfig::default().p_max
}
fn default_kb_k() -> usize {
    AdapterOptions::default().kb_k
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvertSettings {
    adapter: String,
    #[serde(rename = "in")]
    input: PathBuf,
    out: PathBuf,
    seed: u64,
    #[serde(default)]
    augment_falsehoods: bool,
    sampler: Option<String>,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_pmax")]
    pmax: f64,
    #[serde(default = "default_kb_k")]
    kb_k: usize,
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("adapter", args.adapter.clone())
        .set("in", args.input.as_deref().map(display))
        .set("out", args.out.as_deref().map(display))
        .flag("augment_falsehoods", args.augment_falsehoods)
        .set("sampler", args.sampler.clone())
        .set("n", args.n)
        .set("k", args.k)
        .set("pmax", args.pmax)
        .set("kb_k", args.kb_k);
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let s: ConvertSettings = resolve(table)?;
    let adapter: Adapter = s.adapter.parse().map_err(|_| {
        CliError::usage(format!(
            "unknown adapter {:?}; expected one of {}",
            s.adapter,
            forge::adapter_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    if s.augment_falsehoods && s.sampler.is_none() {
        return Err(CliError::usage("--augment-falsehoods needs --sampler"));
    }
    print_header("forge convert", &settings::to_toml(&s));

    let sampler = match (&s.sampler, s.augment_falsehoods) {
        (Some(spec), true) => {
            let path = spec.strip_prefix("table:").unwrap_or(spec);
            Some(TableSampler::from_jsonl(path).or_kind("Sampler")?)
        }
        _ => None,
    };
    let options = AdapterOptions {
        seed: s.seed,
        kb_k: s.kb_k,
        falsehoods: sampler.as_ref().map(|t| {
            (
                t as &dyn forge::AnswerSampler,
                FalsehoodConfig {
                    n: s.n,
                    k: s.k,
                    p_max: s.pmax,
                },
            )
        }),
        ..AdapterOptions::default()
    };
    let groups = forge::run_adapter(adapter, &s.input, &options).or_kind("ForgeError")?;
    create_parent(&s.out)?;
    jsonl::write_groups(&s.out, &groups).or_kind("Io")?;
    let statements: usize = groups.iter().map(|g| g.len()).sum();
    println!("wrote {} groups ({statements} statements) to {}", groups.len(), s.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// kb, multiple_choice, boolean or mixed.
    #[arg(long)]
    mix: Option<String>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthSettings {
    mix: KindMix,
    groups: usize,
    out: PathBuf,
    seed: u64,
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("mix", args.mix.clone())
        .set("groups", args.groups)
        .set("out", args.out.as_deref().map(display));
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let s: SynthSettings = resolve(table)?;
    print_header("forge synth", &settings::to_toml(&s));
    let corpus = fixtures::generate_synthetic_corpus(s.groups, s.mix, s.seed);
    create_parent(&s.out)?;
    jsonl::write_groups(&s.out, &corpus.groups).or_kind("Io")?;
    println!("wrote {} groups to {}", corpus.groups.len(), s.out.display());
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Stage-A statement groups (JSONL).
    #[arg(long)]
    stage_a: Option<PathBuf>,
    /// Stage-B statement groups (JSONL).
    #[arg(long)]
    stage_b: Option<PathBuf>,
    /// Final model checkpoint.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training state to continue from.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Loss log (JSONL: a header line, then one line per step, per stage).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Where periodic training states go (see `checkpoint_every`).
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Batch composition of every step (JSONL).
    #[arg(long)]
    dump_batches: Option<PathBuf>,
    #[arg(long)]
    steps_a: Option<u64>,
    #[arg(long)]
    steps_b: Option<u64>,
}

const TRAIN_PATH_KEYS: [&str; 7] = ["stage_a", "stage_b", "out", "resume", "log", "checkpoint_dir", "dump_batches"];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainPaths {
    stage_a: PathBuf,
    stage_b: PathBuf,
    out: PathBuf,
    resume: Option<PathBuf>,
    log: Option<PathBuf>,
    checkpoint_dir: Option<PathBuf>,
    dump_batches: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScheduleLine<'a> {
    stage: Stage,
    step: u64,
    #[serde(flatten)]
    audit: &'a verity_core::batcher::BatchAudit,
}

fn read_partition(path: &Path, stage: Stage) -> Result<DatasetPartition, CliError> {
    let groups = jsonl::read_groups(path).or_kind("Io")?;
    Ok(DatasetPartition::new(stem(path), stage, groups))
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("stage_a", args.stage_a.as_deref().map(display))
        .set("stage_b", args.stage_b.as_deref().map(display))
        .set("out", args.out.as_deref().map(display))
        .set("resume", args.resume.as_deref().map(display))
        .set("log", args.log.as_deref().map(display))
        .set("checkpoint_dir", args.checkpoint_dir.as_deref().map(display))
        .set("dump_batches", args.dump_batches.as_deref().map(display))
        .set("steps_a", args.steps_a)
        .set("steps_b", args.steps_b);
    let file = settings::load_table(args.common.config.as_deref())?;
    // Keys given explicitly, before the seed fallback fills anything in.
    let mut explicit = file.clone();
    explicit.extend(o.table().clone());
    let mut table = merge(file, o, args.common.seed)?;
    if args.common.seed.is_some() {
        explicit.insert("seed".into(), table["seed"].clone());
    }
    let paths: TrainPaths = resolve(settings::split_off(&mut table, &TRAIN_PATH_KEYS))?;
    settings::split_off(&mut explicit, &TRAIN_PATH_KEYS);

    let state = match &paths.resume {
        Some(path) => Some(TrainState::load(path).map_err(|e| CliError::runtime("Resume", format!("{}: {e}", path.display())))?),
        None => None,
    };
    let config: TrainConfig = match &state {
        Some(state) => {
            let saved = toml::Table::try_from(&state.config).expect("config serializes");
            for (k, v) in &explicit {
                if saved.get(k) != Some(v) {
                    return Err(CliError::runtime(
                        "Resume",
                        format!("{k} = {v} differs from the resumed state's {k}"),
                    ));
                }
            }
            state.config.clone()
        }
        None => resolve(table)?,
    };
    config.check().map_err(|e| CliError::usage(e.to_string()))?;
    print_header("train", &format!("{}{}", settings::to_toml(&paths), config.to_toml_string()));

    let a = read_partition(&paths.stage_a, Stage::StageA)?;
    let b = read_partition(&paths.stage_b, Stage::StageB)?;

    if let Some(path) = &paths.dump_batches {
        let mut out = String::new();
        for (stage, data) in [(Stage::StageA, &a), (Stage::StageB, &b)] {
            for (step, audit) in trainer::batch_schedule(data, stage, &config).or_kind("TrainError")?.iter().enumerate() {
                let line = ScheduleLine {
                    stage,
                    step: step as u64,
                    audit,
                };
                out.push_str(&serde_json::to_string(&line).expect("serializable"));
                out.push('\n');
            }
        }
        write_file(path, &out)?;
    }

    if let Some(dir) = &paths.checkpoint_dir {
        std::fs::create_dir_all(dir).or_kind("Io")?;
    }
    let checkpoint_dir = paths.checkpoint_dir.clone();
    let mut sink = |s: &TrainState| -> Result<(), trainer::TrainError> {
        if let Some(dir) = &checkpoint_dir {
            let path = dir.join(s.file_name());
            s.save(&path)?;
            println!("saved {}", path.display());
        }
        Ok(())
    };
    let output = match state {
        Some(state) => trainer::resume_pipeline(state, &a, &b, &mut sink),
        None => trainer::run_pipeline(&a, &b, &config, &mut sink),
    }
    .or_kind("TrainError")?;

    create_parent(&paths.out)?;
    scorer::save_model(&output.model, &paths.out).or_kind("Io")?;
    if let Some(path) = &paths.log {
        let body: String = output.logs.iter().map(|l| l.to_jsonl()).collect();
        write_file(path, &body)?;
    }
    for log in &output.logs {
        match log.records.last() {
            Some(r) => println!(
                "{}: {} steps, final L={:.6} (L_bin={:.6} L_mc={:.6} L_ctr={:.6})",
                log.header.stage,
                log.records.len(),
                r.total,
                r.l_bin,
                r.l_mc,
                r.l_ctr
            ),
            None => println!("{}: no steps run", log.header.stage),
        }
    }
    println!("wrote {}", paths.out.display());
    Ok(())
}

// ---------------------------------------------------------------- score

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Calibration artifact whose temperature scales the scores.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Statement groups (JSONL).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Score file (JSONL of source_id, logit, score, label).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreSettings {
    model: PathBuf,
    calibration: Option<PathBuf>,
    #[serde(rename = "in")]
    input: PathBuf,
    out: PathBuf,
    seed: u64,
}

pub fn score(args: &ScoreArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("model", args.model.as_deref().map(display))
        .set("calibration", args.calibration.as_deref().map(display))
        .set("in", args.input.as_deref().map(display))
        .set("out", args.out.as_deref().map(display));
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let s: ScoreSettings = resolve(table)?;
    print_header("score", &settings::to_toml(&s));
    let (model, _) = load_model_with(&s.model, s.calibration.as_deref())?;
    let groups = jsonl::read_groups(&s.input).or_kind("Io")?;
    let records: Vec<ScoreRecord> = groups
        .iter()
        .flat_map(|g| &g.statements)
        .map(|st| {
            let scored = model.score_statement(st);
            ScoreRecord {
                source_id: st.source_id.clone(),
                logit: scored.logit,
                score: scored.score,
                label: st.label,
            }
        })
        .collect();
    write_file(&s.out, &jsonl::to_string(&records))?;
    println!("wrote {} scores to {}", records.len(), s.out.display());
    Ok(())
}

// ---------------------------------------------------------------- calibrate

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Score file (JSONL of source_id, logit, score, label).
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// equal_mass or equal_width.
    #[arg(long)]
    binning: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
    /// Name recorded as the fitting set; defaults to the score file's stem.
    #[arg(long)]
    fitted_on: Option<String>,
}

fn default_bins() -> usize {
    CalibrationConfig::default().bins
}
fn default_grid() -> TemperatureGrid {
    TemperatureGrid::default()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrateSettings {
    scores: PathBuf,
    out: PathBuf,
    seed: u64,
    #[serde(default)]
    binning: Binning,
    #[serde(default = "default_bins")]
    bins: usize,
    fitted_on: Option<String>,
    #[serde(default = "default_grid")]
    grid: TemperatureGrid,
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("scores", args.scores.as_deref().map(display))
        .set("out", args.out.as_deref().map(display))
        .set("binning", args.binning.clone())
        .set("bins", args.bins)
        .set("fitted_on", args.fitted_on.clone());
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let mut s: CalibrateSettings = resolve(table)?;
    s.fitted_on.get_or_insert_with(|| stem(&s.scores));
    let config = CalibrationConfig {
        bins: s.bins,
        binning: s.binning,
        grid: s.grid,
    };
    config.check().map_err(CliError::usage)?;
    print_header("calibrate", &settings::to_toml(&s));

    let records: Vec<ScoreRecord> = jsonl::read(&s.scores).or_kind("Io")?;
    let logits: Vec<(f64, bool)> = records.iter().map(|r| (r.logit, r.label)).collect();
    let artifact = calibration::fit_temperature(&logits, &config, s.fitted_on.as_deref().unwrap_or_default())
        .or_kind("CalibrationError")?;
    create_parent(&s.out)?;
    artifact.save(&s.out).or_kind("Io")?;
    println!(
        "T={} ece_before={:.6} ece_after={:.6} ({} evaluations)",
        artifact.temperature, artifact.ece_before, artifact.ece_after, artifact.evaluations
    );
    println!("wrote {}", s.out.display());
    Ok(())
}

// ---------------------------------------------------------------- evaluate

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// JSON list of {name, path, kind, balanced}.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Calibration artifact; its temperature and binning are used.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Report (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for ROC, PR and reliability CSVs.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// ECE binning when no calibration artifact is given.
    #[arg(long)]
    binning: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateSettings {
    manifest: PathBuf,
    model: PathBuf,
    calibration: Option<PathBuf>,
    out: PathBuf,
    curves: Option<PathBuf>,
    seed: u64,
    #[serde(default)]
    binning: Binning,
    #[serde(default = "default_bins")]
    bins: usize,
    /// Filled in from the model and calibration; not read from config.
    #[serde(default, skip_deserializing)]
    temperature: f64,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("manifest", args.manifest.as_deref().map(display))
        .set("model", args.model.as_deref().map(display))
        .set("calibration", args.calibration.as_deref().map(display))
        .set("out", args.out.as_deref().map(display))
        .set("curves", args.curves.as_deref().map(display))
        .set("binning", args.binning.clone())
        .set("bins", args.bins);
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let mut s: EvaluateSettings = resolve(table)?;
    let (model, artifact) = load_model_with(&s.model, s.calibration.as_deref())?;
    let config = match &artifact {
        Some(a) => a.config(),
        None => CalibrationConfig {
            bins: s.bins,
            binning: s.binning,
            ..CalibrationConfig::default()
        },
    };
    config.check().map_err(CliError::usage)?;
    s.bins = config.bins;
    s.binning = config.binning;
    s.temperature = model.temperature();
    print_header("evaluate", &settings::to_toml(&s));

    let manifest = evaluation::read_manifest(&s.manifest).or_kind("EvalError")?;
    let (report, scored) = evaluation::evaluate_manifest(&model, &manifest, &config).or_kind("EvalError")?;
    write_file(&s.out, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
    if let Some(dir) = &s.curves {
        for (entry, groups) in manifest.iter().zip(&scored) {
            evaluation::write_curves(dir, &entry.name, groups, &config).or_kind("EvalError")?;
        }
    }
    print!("{}", report.to_table());
    println!("wrote {}", s.out.display());
    Ok(())
}

// ---------------------------------------------------------------- filter

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Plain text (one statement per line) or JSONL (strings or objects
    /// with a `text` field).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Keep statements whose score is strictly above this.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out_kept: Option<PathBuf>,
    #[arg(long)]
    out_dropped: Option<PathBuf>,
    /// Per-statement logits and scores (JSONL).
    #[arg(long)]
    scores: Option<PathBuf>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSettings {
    model: PathBuf,
    calibration: Option<PathBuf>,
    #[serde(rename = "in")]
    input: PathBuf,
    #[serde(default = "default_threshold")]
    threshold: f64,
    out_kept: PathBuf,
    out_dropped: PathBuf,
    scores: Option<PathBuf>,
    seed: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FilterLine {
    Text(String),
    Object { text: String },
}

/// Statements plus the raw line each came from, so outputs keep the input
/// format.
fn read_statements(path: &Path) -> Result<(Vec<String>, Vec<String>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::runtime("Io", format!("{}: {e}", path.display())))?;
    let is_jsonl = path.extension().is_some_and(|e| e == "jsonl");
    let mut statements = Vec::new();
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let statement = if is_jsonl {
            match serde_json::from_str::<FilterLine>(line) {
                Ok(FilterLine::Text(t) | FilterLine::Object { text: t }) => t,
                Err(e) => {
                    return Err(CliError::runtime(
                        "ParseError",
                        format!("{}:{}: {e}", path.display(), i + 1),
                    ))
                }
            }
        } else {
            line.trim().to_string()
        };
        statements.push(statement);
        raw.push(line.to_string());
    }
    Ok((statements, raw))
}

pub fn filter(args: &FilterArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("model", args.model.as_deref().map(display))
        .set("calibration", args.calibration.as_deref().map(display))
        .set("in", args.input.as_deref().map(display))
        .set("threshold", args.threshold)
        .set("out_kept", args.out_kept.as_deref().map(display))
        .set("out_dropped", args.out_dropped.as_deref().map(display))
        .set("scores", args.scores.as_deref().map(display));
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let s: FilterSettings = resolve(table)?;
    if !(0.0..=1.0).contains(&s.threshold) {
        return Err(CliError::usage(format!("threshold must lie in [0, 1], got {}", s.threshold)));
    }
    print_header("filter", &settings::to_toml(&s));
    let (model, _) = load_model_with(&s.model, s.calibration.as_deref())?;
    let (statements, raw) = read_statements(&s.input)?;
    let outcome = filter::filter_knowledge(&statements, &model, s.threshold);

    let (mut kept, mut dropped) = (String::new(), String::new());
    for (score, line) in outcome.scores.iter().zip(&raw) {
        let dest = if score.kept { &mut kept } else { &mut dropped };
        dest.push_str(line);
        dest.push('\n');
    }
    write_file(&s.out_kept, &kept)?;
    write_file(&s.out_dropped, &dropped)?;
    if let Some(path) = &s.scores {
        write_file(path, &jsonl::to_string(&outcome.scores))?;
    }
    println!(
        "kept {} of {} statements (threshold {}, T={})",
        outcome.kept.len(),
        statements.len(),
        s.threshold,
        model.temperature()
    );
    Ok(())
}

// ---------------------------------------------------------------- report

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Report written by `verity evaluate`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// table or json.
    #[arg(long)]
    format: Option<String>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ReportFormat {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportSettings {
    #[serde(rename = "in")]
    input: PathBuf,
    #[serde(default)]
    format: ReportFormat,
    out: Option<PathBuf>,
    seed: u64,
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let mut o = Overrides::default();
    o.set("in", args.input.as_deref().map(display))
        .set("format", args.format.clone())
        .set("out", args.out.as_deref().map(display));
    let table = merge(settings::load_table(args.common.config.as_deref())?, o, args.common.seed)?;
    let s: ReportSettings = resolve(table)?;
    print_header("report", &settings::to_toml(&s));
    let text = std::fs::read_to_string(&s.input).map_err(|e| CliError::runtime("Io", format!("{}: {e}", s.input.display())))?;
    let report: EvaluationReport = serde_json::from_str(&text).or_kind("ParseError")?;
    let body = match s.format {
        ReportFormat::Table => {
            let m = &report.metadata;
            format!(
                "T = {}  ECE: {} bins, {}\n{}",
                m.temperature,
                m.ece_bins,
                m.ece_binning,
                report.to_table()
            )
        }
        ReportFormat::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
    };
    match &s.out {
        Some(path) => {
            write_file(path, &body)?;
            println!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).or_kind("Io")?;
        }
    }
    Ok(())
}
