//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use verity_core::batcher::Batch;
use verity_core::calibration::{self, Binning, CalibrationConfig};
use verity_core::evaluation::{self, ScoredGroup};
use verity_core::filter::filter_knowledge;
use verity_core::fixtures::{self, generate_synthetic_corpus, KindMix};
use verity_core::forge::{
    convert_boolean, convert_multiple_choice, perturb_kb_entry, render_skd_triple, BooleanProblem, KbEntry,
    KnowledgeTriple, MultipleChoiceProblem, QuestionForm,
};
use verity_core::objectives::{self, LossWeights, Term};
use verity_core::scorer::{self, FeatureExtractor, ScorerError, VerifierModel};
use verity_core::tokenizer::{TokenId, Tokenizer};
use verity_core::trainer::{self, TrainConfig};
use verity_core::{seed, GroupKind, Origin, Stage, Statement, StatementGroup};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got:.17}, want {want:.17} (tol {tol:e})"))
    }
}

fn group(id: &str, labels: &[bool]) -> StatementGroup {
    let kind = if labels.len() == 1 { GroupKind::Boolean } else { GroupKind::MultipleChoice };
    let statements = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| Statement::new(format!("{id} statement {i}"), l, Origin::QuestionChoice, id))
        .collect();
    StatementGroup::new(id, kind, statements)
}

// ------------------------------------------------------------------ 1

fn closed_form_losses() -> Check {
    // One correct at 0.8, three incorrect at 0.2: -ln 0.8 + 3(-ln 0.8)/3.
    let batch = Batch::new(vec![group("g", &[true, false, false, false])]);
    let l_bin = objectives::binary_loss(&batch, &[0.8, 0.2, 0.2, 0.2]).map_err(|e| e.to_string())?;
    close(l_bin, 2.0 * 1.25f64.ln(), 1e-9, "L_bin balanced group")?;

    let boolean = Batch::new(vec![group("b", &[true])]);
    let l_bool = objectives::binary_loss(&boolean, &[0.5]).map_err(|e| e.to_string())?;
    close(l_bool, 2f64.ln(), 1e-12, "boolean L_bin")?;

    for c in [2usize, 3, 4, 5, 8] {
        let mut labels = vec![false; c];
        labels[c - 1] = true;
        let batch = Batch::new(vec![group("m", &labels)]);
        let term = objectives::multiclass_loss(&batch, &vec![-0.3; c]).map_err(|e| e.to_string())?;
        close(term.value, (c as f64).ln(), 1e-12, &format!("uniform L_mc, C={c}"))?;
    }

    // Identical representations, labels [T, T, F]: each true anchor has one
    // positive among two others, the false anchor has none and is skipped.
    let batch = Batch::new(vec![group("c", &[true, true, false])]);
    let reps = vec![vec![0.6, -1.2, 0.4]; 3];
    for tau in [0.05, 1.0] {
        let term = objectives::contrastive_loss(&batch, &reps, tau).map_err(|e| e.to_string())?;
        close(term.value, 2f64.ln(), 1e-9, &format!("equal-representation L_ctr, tau={tau}"))?;
    }
    Ok(format!("L_bin={l_bin:.12} L_bool={l_bool:.12} L_mc=ln C for C in 2,3,4,5,8; L_ctr=ln 2"))
}

// ------------------------------------------------------------------ 2

fn gradient_check() -> Check {
    let pool: Vec<StatementGroup> = generate_synthetic_corpus(12, KindMix::Mixed, 5)
        .groups
        .into_iter()
        .chain(generate_synthetic_corpus(6, KindMix::Kb, 6).groups)
        .collect();
    let texts: Vec<&str> = pool.iter().flat_map(|g| g.statements.iter().map(|s| s.text.as_str())).collect();
    let mut rng = seed::rng(2024);
    let weights = LossWeights::default();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut params_seen = 0;
    for b in 0..20u64 {
        let mut model = VerifierModel::reference(texts.iter().copied(), 4, 3, seed::derive(77, &format!("batch-{b}")));
        params_seen = model.param_count();
        ensure!(params_seen <= 1000, "reference backbone has {params_seen} parameters");
        model.head.weight = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
        model.head.bias = rng.gen_range(-0.5..0.5);
        let size = rng.gen_range(2..=5);
        let groups: Vec<StatementGroup> = pool.choose_multiple(&mut rng, size).cloned().collect();
        let batch = Batch::new(groups);

        let (_, grad) = trainer::loss_and_gradient(&model, &batch, &weights).map_err(|e| e.to_string())?;
        let params = model.flat_params();
        let mut loss_at = |p: &[f64]| -> Result<f64, String> {
            model.set_flat_params(p).map_err(|e| e.to_string())?;
            Ok(trainer::loss_and_gradient(&model, &batch, &weights).map_err(|e| e.to_string())?.0.total)
        };
        let mut p = params.clone();
        for i in 0..params.len() {
            p[i] = params[i] + h;
            let plus = loss_at(&p)?;
            p[i] = params[i] - h;
            let minus = loss_at(&p)?;
            p[i] = params[i];
            let numeric = (plus - minus) / (2.0 * h);
            let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    ensure!(worst < 1e-4, "max relative error {worst:e} over {checked} partials");
    Ok(format!("{checked} partials over 20 batches, {params_seen} parameters, max rel err {worst:.2e}"))
}

// ------------------------------------------------------------------ 3

/// Pairs counted one by one; a tie is worth one half.
fn auroc_oracle(xs: &[(f64, bool)]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for p in xs.iter().filter(|x| x.1) {
        for n in xs.iter().filter(|x| !x.1) {
            den += 1.0;
            if p.0 > n.0 {
                num += 1.0;
            } else if p.0 == n.0 {
                num += 0.5;
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Rank of `i` in descending order with ties broken by input position,
/// counted rather than sorted.
fn desc_rank(xs: &[(f64, bool)], i: usize) -> usize {
    (0..xs.len())
        .filter(|&j| xs[j].0 > xs[i].0 || (xs[j].0 == xs[i].0 && j < i))
        .count()
}

fn ap_oracle(xs: &[(f64, bool)]) -> Option<f64> {
    let positives: Vec<usize> = (0..xs.len()).filter(|&i| xs[i].1).collect();
    if positives.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for &i in &positives {
        let r = desc_rank(xs, i);
        let hits = positives.iter().filter(|&&j| desc_rank(xs, j) <= r).count();
        sum += hits as f64 / (r + 1) as f64;
    }
    Some(sum / positives.len() as f64)
}

fn ece_from_bins(xs: &[(f64, bool)], bin_of: impl Fn(usize) -> usize, m: usize) -> f64 {
    let n = xs.len() as f64;
    let mut total = 0.0;
    for b in 0..m {
        let members: Vec<&(f64, bool)> = (0..xs.len()).filter(|&i| bin_of(i) == b).map(|i| &xs[i]).collect();
        if members.is_empty() {
            continue;
        }
        let c = members.len() as f64;
        let conf = members.iter().map(|x| x.0).sum::<f64>() / c;
        let acc = members.iter().filter(|x| x.1).count() as f64 / c;
        total += c / n * (acc - conf).abs();
    }
    total
}

/// Bin b holds scores in [b/M, (b+1)/M); the last bin also holds 1.
fn ece_equal_width_oracle(xs: &[(f64, bool)], m: usize) -> f64 {
    let bin_of = |i: usize| {
        let s = xs[i].0;
        (0..m)
            .find(|&b| {
                let lo = b as f64 / m as f64;
                let hi = (b + 1) as f64 / m as f64;
                s >= lo && (s < hi || b == m - 1)
            })
            .expect("score in [0, 1]")
    };
    ece_from_bins(xs, bin_of, m)
}

/// Ascending order, ties by input position; the first n mod M bins get
/// one extra member.
fn ece_equal_mass_oracle(xs: &[(f64, bool)], m: usize) -> f64 {
    let n = xs.len();
    let asc_rank = |i: usize| {
        (0..n)
            .filter(|&j| xs[j].0 < xs[i].0 || (xs[j].0 == xs[i].0 && j < i))
            .count()
    };
    let mut bounds = vec![0];
    for b in 0..m {
        bounds.push(bounds[b] + n / m + usize::from(b < n % m));
    }
    let bin_of = |i: usize| {
        let r = asc_rank(i);
        (0..m).find(|&b| bounds[b] <= r && r < bounds[b + 1]).expect("rank below n")
    };
    ece_from_bins(xs, bin_of, m)
}

fn random_instance<R: Rng>(rng: &mut R) -> Vec<(f64, bool)> {
    let n = rng.gen_range(1..=200);
    let ties = rng.gen_bool(0.4);
    (0..n)
        .map(|_| {
            let s = if ties {
                f64::from(rng.gen_range(0..=8u8)) / 8.0
            } else {
                rng.gen::<f64>()
            };
            (s, rng.gen_bool(0.45))
        })
        .collect()
}

fn metric_oracles() -> Check {
    let mut rng = seed::rng(3);
    let mut degenerate = 0;
    for k in 0..1000 {
        let xs = random_instance(&mut rng);
        match (evaluation::auroc(&xs), auroc_oracle(&xs)) {
            (Ok(got), Some(want)) => close(got, want, 1e-12, &format!("auroc instance {k}"))?,
            (Err(_), None) => degenerate += 1,
            (got, want) => return Err(format!("auroc instance {k}: {got:?} vs oracle {want:?}")),
        }
    }
    for k in 0..1000 {
        let xs = random_instance(&mut rng);
        match (evaluation::average_precision(&xs), ap_oracle(&xs)) {
            (Ok(got), Some(want)) => close(got, want, 1e-12, &format!("AP instance {k}"))?,
            (Err(_), None) => degenerate += 1,
            (got, want) => return Err(format!("AP instance {k}: {got:?} vs oracle {want:?}")),
        }
    }
    for binning in [Binning::EqualWidth, Binning::EqualMass] {
        for k in 0..1000 {
            let xs = random_instance(&mut rng);
            let m = rng.gen_range(1..=20);
            let config = CalibrationConfig {
                bins: m,
                binning,
                ..CalibrationConfig::default()
            };
            let got = calibration::compute_ece(&xs, &config).map_err(|e| e.to_string())?;
            let want = match binning {
                Binning::EqualWidth => ece_equal_width_oracle(&xs, m),
                Binning::EqualMass => ece_equal_mass_oracle(&xs, m),
            };
            close(got, want, 1e-12, &format!("ECE {binning} instance {k}"))?;
        }
    }
    Ok(format!("4 x 1000 instances agree to 1e-12 ({degenerate} single-class instances rejected by both)"))
}

// ------------------------------------------------------------------ 4

fn small_trained_model() -> Result<VerifierModel, String> {
    let dir = fixtures::bundled_dir();
    let config_text = std::fs::read_to_string(dir.join("train.toml")).map_err(|e| e.to_string())?;
    let config = TrainConfig::from_toml_str(&config_text).map_err(|e| e.to_string())?;
    let a = read(&dir, "stage_a.jsonl", Stage::StageA)?;
    let b = read(&dir, "stage_b.jsonl", Stage::StageB)?;
    Ok(trainer::run_pipeline(&a, &b, &config, &mut |_| Ok(())).map_err(|e| e.to_string())?.model)
}

fn read(dir: &Path, name: &str, stage: Stage) -> Result<verity_core::DatasetPartition, String> {
    let groups = verity_core::jsonl::read_groups(dir.join(name)).map_err(|e| e.to_string())?;
    Ok(verity_core::DatasetPartition::new(name, stage, groups))
}

fn calibration_invariance() -> Check {
    let dir = fixtures::bundled_dir();
    let model = small_trained_model()?;
    let dev = verity_core::jsonl::read_groups(dir.join("dev.jsonl")).map_err(|e| e.to_string())?;
    let fit_set: Vec<(f64, bool)> = dev
        .iter()
        .flat_map(|g| g.statements.iter().map(|s| (model.logit_text(&s.text), s.label)))
        .collect();
    let config = CalibrationConfig::default();
    let artifact = calibration::fit_temperature(&fit_set, &config, "dev").map_err(|e| e.to_string())?;
    ensure!(
        artifact.ece_after <= artifact.ece_before,
        "ece_after {} > ece_before {}",
        artifact.ece_after,
        artifact.ece_before
    );
    ensure!(artifact.temperature != 1.0, "fit left T at 1, nothing to compare");
    let calibrated = model.clone().with_temperature(artifact.temperature).map_err(|e| e.to_string())?;

    let manifest = evaluation::read_manifest(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    for entry in &manifest {
        let groups = verity_core::jsonl::read_groups(&entry.path).map_err(|e| e.to_string())?;
        let before = evaluation::evaluate_benchmark(&model, entry, &groups, &config).map_err(|e| e.to_string())?;
        let after = evaluation::evaluate_benchmark(&calibrated, entry, &groups, &config).map_err(|e| e.to_string())?;
        let same = |a: Option<f64>, b: Option<f64>| a.map(f64::to_bits) == b.map(f64::to_bits);
        ensure!(same(before.acc_mc, after.acc_mc), "{}: acc_mc moved", entry.name);
        ensure!(same(before.acc_bool, after.acc_bool), "{}: acc_bool moved", entry.name);
        ensure!(before.auroc.to_bits() == after.auroc.to_bits(), "{}: AUROC moved", entry.name);
        ensure!(before.ap.to_bits() == after.ap.to_bits(), "{}: AP moved", entry.name);
    }
    Ok(format!(
        "T={:.4}, ece {:.4} -> {:.4}; acc/AUROC/AP bit-identical on {} benchmarks",
        artifact.temperature,
        artifact.ece_before,
        artifact.ece_after,
        manifest.len()
    ))
}

// ------------------------------------------------------------------ 5

fn overfit_sanity() -> Check {
    let a = generate_synthetic_corpus(200, KindMix::Kb, 51);
    let b = generate_synthetic_corpus(50, KindMix::Mixed, 52);
    let config = TrainConfig {
        seed: 5,
        steps_a: 2000,
        steps_b: 2000,
        ..TrainConfig::default()
    };
    let out = trainer::run_pipeline(&a, &b, &config, &mut |_| Ok(())).map_err(|e| e.to_string())?;
    let scored: Vec<ScoredGroup> = a
        .groups
        .iter()
        .chain(&b.groups)
        .map(|g| evaluation::score_group(&out.model, g))
        .collect();
    let mc: Vec<ScoredGroup> = scored.iter().filter(|g| g.kind == GroupKind::MultipleChoice).cloned().collect();
    let statements: Vec<_> = scored.iter().flat_map(|g| g.statements.iter().cloned()).collect();
    let acc_mc = evaluation::accuracy_mc(&mc).map_err(|e| e.to_string())?;
    let acc_bool = evaluation::accuracy_bool(&statements).map_err(|e| e.to_string())?;
    ensure!(acc_mc == 1.0, "training acc_mc {acc_mc}");
    ensure!(acc_bool >= 0.95, "training acc_bool {acc_bool}");
    Ok(format!(
        "acc_mc={acc_mc} over {} groups, acc_bool={acc_bool:.4} over {} statements",
        mc.len(),
        statements.len()
    ))
}

// ------------------------------------------------------------------ 6

fn texts(g: &StatementGroup) -> Vec<(&str, bool)> {
    g.statements.iter().map(|s| (s.text.as_str(), s.label)).collect()
}

fn conversion_fidelity() -> Check {
    let cannon = convert_multiple_choice(&MultipleChoiceProblem {
        id: "cannon".into(),
        question: "What would someone wear to protect themselves from a cannon?".into(),
        choices: ["ungulate", "bomber", "body armor", "tank", "hat"].map(String::from).to_vec(),
        answer_index: 2,
        question_form: QuestionForm::Interrogative,
    })
    .map_err(|e| e.to_string())?;
    let want = [
        ("Someone would wear an ungulate to protect themselves from a cannon.", false),
        ("Someone would wear a bomber to protect themselves from a cannon.", false),
        ("Someone would wear body armor to protect themselves from a cannon.", true),
        ("Someone would wear a tank to protect themselves from a cannon.", false),
        ("Someone would wear a hat to protect themselves from a cannon.", false),
    ];
    ensure!(texts(&cannon) == want, "cannon group: {:?}", texts(&cannon));

    let dog = convert_boolean(&BooleanProblem {
        id: "dog".into(),
        question: "Can an average dog follow an instruction manual?".into(),
        answer: false,
    })
    .map_err(|e| e.to_string())?;
    ensure!(
        texts(&dog) == [("An average dog can follow an instruction manual.", false)],
        "dog statement: {:?}",
        texts(&dog)
    );

    let entry = KbEntry {
        id: "stamps".into(),
        subject: "Rubber stamps".into(),
        full_text: "Rubber stamps provide a way to make messages stand out.".into(),
    };
    let pool = ["Arabic numbers", "Bandages", "Meat tenderizers"].map(String::from);
    let stamps = perturb_kb_entry(&entry, &pool, 3, &mut seed::rng(0)).map_err(|e| e.to_string())?;
    let want = [
        ("Rubber stamps provide a way to make messages stand out.", true),
        ("Arabic numbers provide a way to make messages stand out.", false),
        ("Bandages provide a way to make messages stand out.", false),
        ("Meat tenderizers provide a way to make messages stand out.", false),
    ];
    ensure!(texts(&stamps) == want, "rubber stamps group: {:?}", texts(&stamps));

    let triple = KnowledgeTriple {
        id: "wait".into(),
        head: "PersonX doesn't like to wait".into(),
        relation: "xIntent".into(),
        tail: "to get the job done".into(),
        valid: 1,
    };
    let arnold = render_skd_triple(&triple, &["Arnold".to_string()], &mut seed::rng(0)).map_err(|e| e.to_string())?;
    ensure!(
        arnold.text == "Arnold doesn't like to wait. Because Arnold wanted to get the job done." && arnold.label,
        "SKD rendering: {:?}",
        arnold.text
    );
    Ok("cannon, dog, rubber stamps and Arnold reproduced byte-exactly".into())
}

// ------------------------------------------------------------------ 7

/// forge, train, calibrate and evaluate into `dir`; returns every artifact.
fn full_pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let s = |e: &dyn std::fmt::Display| e.to_string();
    let set = fixtures::build_bundled(&fixtures::bundled_dir().join("raw"), 11).map_err(|e| s(&e))?;
    fixtures::write_bundled(&set, dir).map_err(|e| s(&e))?;

    let config = TrainConfig {
        seed: 11,
        steps_a: 300,
        steps_b: 300,
        learning_rate_a: 3e-3,
        learning_rate_b: 3e-3,
        groups_per_batch: 8,
        dim: 16,
        ffn_dim: 16,
        checkpoint_every: 150,
        ..TrainConfig::default()
    };
    let a = read(dir, "stage_a.jsonl", Stage::StageA)?;
    let b = read(dir, "stage_b.jsonl", Stage::StageB)?;
    let ckdir = dir.join("checkpoints");
    std::fs::create_dir_all(&ckdir).map_err(|e| s(&e))?;
    let out = trainer::run_pipeline(&a, &b, &config, &mut |state| state.save(ckdir.join(state.file_name())))
        .map_err(|e| s(&e))?;
    scorer::save_model(&out.model, dir.join("model.json")).map_err(|e| s(&e))?;
    let log: String = out.logs.iter().map(|l| l.to_jsonl()).collect();
    std::fs::write(dir.join("train.log.jsonl"), log).map_err(|e| s(&e))?;

    let model = scorer::load_model(dir.join("model.json")).map_err(|e| s(&e))?;
    let dev = verity_core::jsonl::read_groups(dir.join("dev.jsonl")).map_err(|e| s(&e))?;
    let logits: Vec<(f64, bool)> = dev
        .iter()
        .flat_map(|g| g.statements.iter().map(|st| (model.logit_text(&st.text), st.label)))
        .collect();
    let artifact = calibration::fit_temperature(&logits, &CalibrationConfig::default(), "dev").map_err(|e| s(&e))?;
    artifact.save(dir.join("calibration.json")).map_err(|e| s(&e))?;

    let model = model.with_temperature(artifact.temperature).map_err(|e| s(&e))?;
    let manifest = evaluation::read_manifest(dir.join("manifest.json")).map_err(|e| s(&e))?;
    let (report, _) = evaluation::evaluate_manifest(&model, &manifest, &artifact.config()).map_err(|e| s(&e))?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).map_err(|e| s(&e))?)
        .map_err(|e| s(&e))?;

    let mut files = Vec::new();
    let mut names: Vec<String> = ["model.json", "train.log.jsonl", "calibration.json", "report.json"]
        .map(String::from)
        .to_vec();
    let mut states: Vec<String> = std::fs::read_dir(&ckdir)
        .map_err(|e| s(&e))?
        .map(|e| e.map(|e| format!("checkpoints/{}", e.file_name().to_string_lossy())))
        .collect::<Result<_, _>>()
        .map_err(|e| s(&e))?;
    states.sort();
    names.extend(states);
    for name in names {
        files.push((name.clone(), std::fs::read(dir.join(&name)).map_err(|e| s(&e))?));
    }
    Ok(files)
}

fn determinism() -> Check {
    let one = tempfile::tempdir().map_err(|e| e.to_string())?;
    let two = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = full_pipeline(one.path())?;
    let second = full_pipeline(two.path())?;
    ensure!(first.len() == second.len(), "{} vs {} artifacts", first.len(), second.len());
    ensure!(first.len() > 4, "no training states were saved");
    for ((n1, b1), (n2, b2)) in first.iter().zip(&second) {
        ensure!(n1 == n2, "artifact {n1} vs {n2}");
        ensure!(b1 == b2, "{n1} differs between runs");
    }
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("bitwise-identical: {}", names.join(", ")))
}

// ------------------------------------------------------------------ 8

/// Reads a logit straight off the first token.
#[derive(Clone)]
struct TableExtractor {
    values: Vec<f64>,
}

impl FeatureExtractor for TableExtractor {
    type Tape = ();
    fn dim(&self) -> usize {
        1
    }
    fn params(&self) -> &[f64] {
        &[]
    }
    fn params_mut(&mut self) -> &mut [f64] {
        &mut []
    }
    fn forward(&self, tokens: &[TokenId]) -> Result<(Vec<f64>, ()), ScorerError> {
        Ok((vec![self.values[tokens[0] as usize]], ()))
    }
    fn backward(&self, _: &(), _: &[f64], _: &mut [f64]) {}
}

fn filter_contract() -> Check {
    let scores: [f64; 10] = [0.12, 0.5, 0.73, 0.4999999, 0.5000001, 0.95, 0.5, 0.31, 0.88, 0.6];
    let words: Vec<String> = (0..scores.len()).map(|i| format!("fact{i}")).collect();
    let tok = Tokenizer::build(words.iter().map(String::as_str));
    let mut values = vec![0.0; tok.vocab_size()];
    for (w, &s) in words.iter().zip(&scores) {
        values[tok.id(w) as usize] = if s == 0.5 { 0.0 } else { (s / (1.0 - s)).ln() };
    }
    let mut model = VerifierModel::new(tok, TableExtractor { values });
    model.head.weight = vec![1.0];
    // Input with a repeat, in scrambled order.
    let order = [3usize, 0, 5, 1, 9, 4, 2, 6, 8, 7, 5];
    let input: Vec<&str> = order.iter().map(|&i| words[i].as_str()).collect();
    let expected: Vec<&str> = order.iter().filter(|&&i| scores[i] > 0.5).map(|&i| words[i].as_str()).collect();
    for t in [1.0, 0.4, 3.0] {
        let m = model.clone().with_temperature(t).map_err(|e| e.to_string())?;
        let out = filter_knowledge(&input, &m, 0.5);
        ensure!(out.kept == expected, "T={t}: kept {:?}, want {expected:?}", out.kept);
        ensure!(out.kept.len() + out.dropped.len() == input.len(), "T={t}: outputs do not cover the input");
        let mut k = out.kept.iter();
        let mut d = out.dropped.iter();
        for (s, text) in out.scores.iter().zip(&input) {
            let next = if s.kept { k.next() } else { d.next() };
            ensure!(next.map(String::as_str) == Some(*text), "T={t}: order broken at {text}");
        }
    }
    Ok(format!("kept {} of {} at T in (1, 0.4, 3); partition and order exact", expected.len(), input.len()))
}

// ------------------------------------------------------------------ 9

fn exclusion_rules() -> Check {
    let bools = Batch::new(vec![group("a", &[true]), group("b", &[false]), group("c", &[true])]);
    let logits = [1.3, -0.2, 0.4];
    let reps = vec![vec![1.0, 0.5], vec![-0.3, 0.9], vec![0.2, -1.0]];
    let term = objectives::multiclass_loss(&bools, &logits).map_err(|e| e.to_string())?;
    ensure!(term == Term { value: 0.0, contributors: 0 }, "boolean-only L_mc term {term:?}");
    let w = LossWeights::default();
    let b = objectives::combined_loss(&bools, &logits, &reps, &w).map_err(|e| e.to_string())?;
    ensure!(b.l_mc == 0.0 && b.mc_groups == 0, "combined breakdown carries L_mc {}", b.l_mc);
    close(b.total, w.alpha * b.l_bin + w.gamma * b.l_ctr, 0.0, "total without the multi-class term")?;

    // Two opposite labels: both anchors lack positives.
    let pair = Batch::new(vec![group("p", &[true, false])]);
    let term = objectives::contrastive_loss(&pair, &[vec![1.0, 2.0], vec![0.5, -1.0]], 0.05).map_err(|e| e.to_string())?;
    ensure!(term == Term { value: 0.0, contributors: 0 }, "opposite pair L_ctr {term:?}");

    // [T, T, F]: the false anchor has no positive; the term is the mean of
    // the two true anchors computed directly.
    let mixed = Batch::new(vec![group("m", &[true, true, false])]);
    let h = [vec![1.0, 0.2], vec![0.3, 1.1], vec![-0.7, 0.4]];
    let tau = 0.5;
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let anchor = |i: usize, p: usize, n: usize| {
        let ep = (cos(&h[i], &h[p]) / tau).exp();
        let en = (cos(&h[i], &h[n]) / tau).exp();
        -(ep / (ep + en)).ln()
    };
    let want = (anchor(0, 1, 2) + anchor(1, 0, 2)) / 2.0;
    let term = objectives::contrastive_loss(&mixed, &h, tau).map_err(|e| e.to_string())?;
    ensure!(term.contributors == 2, "{} contributing anchors", term.contributors);
    close(term.value, want, 1e-12, "L_ctr with one skipped anchor")?;
    Ok("boolean-only batch: L_mc=0 over 0 groups; empty-P anchors skipped".into())
}

// ------------------------------------------------------------------ harness

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("closed-form losses", Duration::from_secs(1), closed_form_losses),
        ("gradient check", Duration::from_secs(30), gradient_check),
        ("metric oracles", Duration::from_secs(30), metric_oracles),
        ("calibration invariance", Duration::from_secs(5), calibration_invariance),
        ("overfit sanity", Duration::from_secs(300), overfit_sanity),
        ("conversion fidelity", Duration::from_secs(1), conversion_fidelity),
        ("determinism", Duration::from_secs(600), determinism),
        ("filter contract", Duration::from_secs(1), filter_contract),
        ("exclusion rules", Duration::from_secs(1), exclusion_rules),
    ];
    // Keep panics from individual checks out of the report lines.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; over the {budget:?} budget")),
            other => other,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if result.is_err() {
            failures += 1;
        }
        println!("{tag} {} {name} [{:.2}s / {}s]: {detail}", k + 1, elapsed.as_secs_f64(), budget.as_secs());
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
