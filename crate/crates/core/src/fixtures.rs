//! Synthetic corpora and the bundled fixture set.
//!
//! Synthetic statements read `"<subject> <keyword> <predicate>."`. The
//! keyword alone decides the label, so the classes are separable for the
//! reference backbone while subjects and predicates are shared noise.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::forge::{run_adapter, Adapter, AdapterOptions, FalsehoodConfig, ForgeError, TableSampler};
use crate::seed;
use crate::types::{DatasetPartition, GroupKind, Origin, Stage, Statement, StatementGroup};

pub const TRUE_KEYWORDS: [&str; 4] = ["truly", "indeed", "surely", "verifiably"];
pub const FALSE_KEYWORDS: [&str; 4] = ["never", "falsely", "wrongly", "bogusly"];

const SUBJECTS: [&str; 24] = [
    "the otter", "a kettle", "the violin", "my neighbor", "the glacier", "a lantern", "the tortoise", "a sparrow",
    "the bakery", "a compass", "the orchard", "a pebble", "the chimney", "a river", "the librarian", "a candle",
    "the hammock", "a falcon", "the meadow", "a teapot", "the sailor", "a ladder", "the canyon", "a blanket",
];

const PREDICATES: [&str; 24] = [
    "hums at dawn", "holds warm water", "needs careful tuning", "waters the garden", "moves very slowly",
    "glows after sunset", "carries its shell", "builds small nests", "sells fresh bread", "points north",
    "grows ripe apples", "rests by the shore", "vents the smoke", "flows to the sea", "shelves old books",
    "melts when lit", "sways in the breeze", "hunts from above", "blooms in spring", "pours black tea",
    "knows the tides", "reaches the roof", "echoes loudly", "keeps people warm",
];

/// Which group kinds a synthetic corpus contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindMix {
    /// Knowledge-base style: one original plus three perturbed statements.
    Kb,
    /// Multiple-choice groups of 2 to 8 statements.
    MultipleChoice,
    /// Singleton boolean groups.
    Boolean,
    /// Roughly two thirds multiple-choice, one third boolean.
    Mixed,
}

fn sentence(subject: &str, keyword: &str, predicate: &str) -> String {
    let mut s = format!("{subject} {keyword} {predicate}.");
    if let Some(first) = s.get(0..1) {
        let upper = first.to_uppercase();
        s.replace_range(0..1, &upper);
    }
    s
}

fn keyword<R: Rng>(rng: &mut R, label: bool) -> &'static str {
    let set = if label { &TRUE_KEYWORDS } else { &FALSE_KEYWORDS };
    set[rng.gen_range(0..set.len())]
}

fn choice_group<R: Rng>(rng: &mut R, id: &str, size: usize, kb: bool) -> StatementGroup {
    let subject = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
    let predicates: Vec<&str> = PREDICATES.choose_multiple(rng, size).copied().collect();
    let gold = rng.gen_range(0..size);
    let statements = predicates
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let label = i == gold;
            let origin = match (kb, label) {
                (true, true) => Origin::KbOriginal,
                (true, false) => Origin::KbPerturbed,
                (false, _) => Origin::QuestionChoice,
            };
            Statement::new(sentence(subject, keyword(rng, label), p), label, origin, id)
        })
        .collect();
    StatementGroup::new(id, GroupKind::MultipleChoice, statements)
}

fn boolean_group<R: Rng>(rng: &mut R, id: &str) -> StatementGroup {
    let label = rng.gen_bool(0.5);
    let subject = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
    let predicate = PREDICATES[rng.gen_range(0..PREDICATES.len())];
    let s = Statement::new(sentence(subject, keyword(rng, label), predicate), label, Origin::Boolean, id);
    StatementGroup::new(id, GroupKind::Boolean, vec![s])
}

/// Deterministic separable corpus of `n_groups` groups. `Kb` corpora are
/// stage-A partitions; the rest are stage-B partitions.
pub fn generate_synthetic_corpus(n_groups: usize, mix: KindMix, seed: u64) -> DatasetPartition {
    let mut rng = seed::rng_for(seed, "fixtures:synthetic");
    let (prefix, stage) = match mix {
        KindMix::Kb => ("kb", Stage::StageA),
        KindMix::MultipleChoice => ("mc", Stage::StageB),
        KindMix::Boolean => ("bool", Stage::StageB),
        KindMix::Mixed => ("qa", Stage::StageB),
    };
    let groups = (0..n_groups)
        .map(|i| {
            let id = format!("{prefix}-{i:04}");
            match mix {
                KindMix::Kb => choice_group(&mut rng, &id, 4, true),
                KindMix::MultipleChoice => {
                    let size = rng.gen_range(2..=8);
                    choice_group(&mut rng, &id, size, false)
                }
                KindMix::Boolean => boolean_group(&mut rng, &id),
                KindMix::Mixed => {
                    if rng.gen_range(0..3) == 0 {
                        boolean_group(&mut rng, &id)
                    } else {
                        let size = rng.gen_range(2..=8);
                        choice_group(&mut rng, &id, size, false)
                    }
                }
            }
        })
        .collect();
    DatasetPartition::new(format!("synthetic-{prefix}"), stage, groups)
}

/// Directory of the bundled fixtures shipped with this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("v1")
}

/// Seed the bundled fixture set is generated with.
pub const BUNDLED_SEED: u64 = 20240601;

/// Derived files of the bundled set, in the order they are written.
pub const DERIVED_FILES: [&str; 7] = [
    "stage_a.jsonl",
    "stage_b.jsonl",
    "dev.jsonl",
    "eval_mc.jsonl",
    "eval_bool.jsonl",
    "manifest.json",
    "knowledge.txt",
];

/// The bundled datasets: adapter outputs over the hand-written raw files
/// mixed with synthetic groups.
#[derive(Debug, Clone, PartialEq)]
pub struct BundledSet {
    pub stage_a: DatasetPartition,
    pub stage_b: DatasetPartition,
    pub dev: DatasetPartition,
    pub eval_mc: DatasetPartition,
    pub eval_bool: DatasetPartition,
    pub knowledge: Vec<String>,
}

/// Generated-knowledge lines for the filter: half carry a true keyword.
fn knowledge_lines(seed: u64) -> Vec<String> {
    let mut rng = seed::rng_for(seed, "fixtures:knowledge");
    (0..12)
        .map(|i| {
            let subject = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
            let predicate = PREDICATES[rng.gen_range(0..PREDICATES.len())];
            sentence(subject, keyword(&mut rng, i % 2 == 0), predicate)
        })
        .collect()
}

fn relabel(mut p: DatasetPartition, name: &str, stage: Stage) -> DatasetPartition {
    p.name = name.into();
    p.stage = stage;
    p
}

/// Rebuilds the bundled set from the raw adapter inputs in `raw_dir`.
pub fn build_bundled(raw_dir: &Path, seed: u64) -> Result<BundledSet, ForgeError> {
    let options = AdapterOptions {
        seed: seed::derive(seed, "forge"),
        ..AdapterOptions::default()
    };
    let sampler = TableSampler::from_jsonl(raw_dir.join("samples.jsonl"))?;
    let lm_options = AdapterOptions {
        seed: options.seed,
        falsehoods: Some((&sampler, FalsehoodConfig { n: 4, ..FalsehoodConfig::default() })),
        ..AdapterOptions::default()
    };

    let mut stage_a = run_adapter(Adapter::Kb, &raw_dir.join("kb.csv"), &options)?;
    stage_a.extend(generate_synthetic_corpus(150, KindMix::Kb, seed::derive(seed, "stage_a")).groups);

    let mut stage_b = run_adapter(Adapter::MultipleChoice, &raw_dir.join("mc_lm.jsonl"), &lm_options)?;
    for (adapter, file) in [
        (Adapter::MultipleChoice, "mc.jsonl"),
        (Adapter::Boolean, "boolean.jsonl"),
        (Adapter::Skd, "skd.jsonl"),
        (Adapter::Com2Sense, "com2sense.jsonl"),
        (Adapter::CycIc, "cycic.jsonl"),
        (Adapter::ComVe, "comve.jsonl"),
        (Adapter::I2d2, "i2d2.jsonl"),
    ] {
        stage_b.extend(run_adapter(adapter, &raw_dir.join(file), &options)?);
    }
    stage_b.extend(generate_synthetic_corpus(80, KindMix::Mixed, seed::derive(seed, "stage_b")).groups);

    Ok(BundledSet {
        stage_a: DatasetPartition::new("stage_a", Stage::StageA, stage_a),
        stage_b: DatasetPartition::new("stage_b", Stage::StageB, stage_b),
        dev: relabel(
            generate_synthetic_corpus(60, KindMix::Mixed, seed::derive(seed, "dev")),
            "dev",
            Stage::EvalSeen,
        ),
        eval_mc: relabel(
            generate_synthetic_corpus(40, KindMix::MultipleChoice, seed::derive(seed, "eval_mc")),
            "eval_mc",
            Stage::EvalUnseen1,
        ),
        eval_bool: relabel(
            generate_synthetic_corpus(60, KindMix::Boolean, seed::derive(seed, "eval_bool")),
            "eval_bool",
            Stage::EvalUnseen2,
        ),
        knowledge: knowledge_lines(seed),
    })
}

/// Benchmark manifest listing the two evaluation files.
pub fn bundled_manifest() -> String {
    concat!(
        "[\n",
        "  {\"name\": \"eval_mc\", \"path\": \"eval_mc.jsonl\", \"kind\": \"multiple_choice\", \"balanced\": false},\n",
        "  {\"name\": \"eval_bool\", \"path\": \"eval_bool.jsonl\", \"kind\": \"boolean\", \"balanced\": true}\n",
        "]\n"
    )
    .to_string()
}

/// Contents of every derived file, keyed as in [`DERIVED_FILES`].
pub fn render_bundled(set: &BundledSet) -> Vec<(&'static str, String)> {
    let groups = |p: &DatasetPartition| crate::jsonl::to_string(&p.groups);
    let mut knowledge = set.knowledge.join("\n");
    knowledge.push('\n');
    vec![
        ("stage_a.jsonl", groups(&set.stage_a)),
        ("stage_b.jsonl", groups(&set.stage_b)),
        ("dev.jsonl", groups(&set.dev)),
        ("eval_mc.jsonl", groups(&set.eval_mc)),
        ("eval_bool.jsonl", groups(&set.eval_bool)),
        ("manifest.json", bundled_manifest()),
        ("knowledge.txt", knowledge),
    ]
}

/// Writes every derived file into `dir`, creating it if needed.
pub fn write_bundled(set: &BundledSet, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in render_bundled(set) {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Files covered by `CHECKSUMS.sha256`, relative to the fixture root.
pub fn checksummed_files(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut names: Vec<String> = DERIVED_FILES.iter().map(|s| s.to_string()).collect();
    names.push("train.toml".into());
    let mut raw: Vec<String> = std::fs::read_dir(dir.join("raw"))?
        .map(|e| e.map(|e| format!("raw/{}", e.file_name().to_string_lossy())))
        .collect::<Result<_, _>>()?;
    raw.sort();
    names.extend(raw);
    Ok(names)
}
