//! Per-dataset readers. Every adapter reads one raw file and emits
//! statement groups in the common JSONL model.
//!
//! | name        | input                                                          |
//! |-------------|----------------------------------------------------------------|
//! | `mc`        | JSONL `{id, question, choices, answer_index, question_form}`   |
//! | `boolean`   | JSONL `{id, question, answer}`                                 |
//! | `kb`        | CSV with header `id,subject,text`                              |
//! | `skd`       | JSONL `{id, head, relation, tail, valid}`                      |
//! | `com2sense` | JSONL `{id, sent_1, sent_2, label_1, label_2}`; unpaired rows dropped |
//! | `cycic`     | JSONL `{id, question_type, question, answer_options, correct_answer}`; multiple-choice rows only |
//! | `comve`     | JSONL `{id, sent0, sent1, false_index}` (task A pairs)         |
//! | `i2d2`      | JSONL `{id, statement, label, iter}`; iterations 0 and 2 only  |

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{
    augment_falsehoods, convert_boolean, convert_multiple_choice, perturb_kb_entry, render_skd_triple, AnswerSampler,
    BooleanProblem, FalsehoodConfig, ForgeError, KbEntry, KnowledgeTriple, MultipleChoiceProblem, QuestionForm,
};
use crate::seed;
use crate::types::{GroupKind, Origin, Statement, StatementGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adapter {
    MultipleChoice,
    Boolean,
    Kb,
    Skd,
    Com2Sense,
    CycIc,
    ComVe,
    I2d2,
}

const ADAPTERS: &[(&str, Adapter)] = &[
    ("mc", Adapter::MultipleChoice),
    ("boolean", Adapter::Boolean),
    ("kb", Adapter::Kb),
    ("skd", Adapter::Skd),
    ("com2sense", Adapter::Com2Sense),
    ("cycic", Adapter::CycIc),
    ("comve", Adapter::ComVe),
    ("i2d2", Adapter::I2d2),
];

pub fn adapter_names() -> impl Iterator<Item = &'static str> {
    ADAPTERS.iter().map(|(n, _)| *n)
}

impl FromStr for Adapter {
    type Err = ForgeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ADAPTERS
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, a)| *a)
            .ok_or_else(|| ForgeError::UnknownAdapter(s.to_string()))
    }
}

impl fmt::Display for Adapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = ADAPTERS.iter().find(|(_, a)| a == self).map(|(n, _)| *n).unwrap_or("?");
        f.write_str(name)
    }
}

const DEFAULT_NAMES: &[&str] = &[
    "Arnold", "Beatrice", "Carlos", "Dana", "Elena", "Farid", "Grace", "Hiro", "Ines", "Jamal", "Keiko", "Liam",
    "Maya", "Nikolai", "Olga", "Priya", "Quentin", "Rosa", "Samir", "Tara", "Umar", "Vera", "Wen", "Yusuf", "Zoe",
];

pub struct AdapterOptions<'a> {
    pub seed: u64,
    /// Perturbed statements per KB entry.
    pub kb_k: usize,
    pub names: Vec<String>,
    pub falsehoods: Option<(&'a dyn AnswerSampler, FalsehoodConfig)>,
}

impl Default for AdapterOptions<'_> {
    fn default() -> Self {
        Self {
            seed: 0,
            kb_k: 3,
            names: DEFAULT_NAMES.iter().map(|s| s.to_string()).collect(),
            falsehoods: None,
        }
    }
}

fn input_err(path: &Path, line: usize, message: impl fmt::Display) -> ForgeError {
    ForgeError::Input {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, ForgeError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| input_err(path, i + 1, e))?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

fn with_falsehoods(
    problem: &MultipleChoiceProblem,
    options: &AdapterOptions<'_>,
) -> Result<StatementGroup, ForgeError> {
    let mut group = convert_multiple_choice(problem)?;
    if let Some((sampler, config)) = options.falsehoods {
        group.statements.extend(augment_falsehoods(problem, sampler, config)?);
    }
    Ok(group)
}

#[derive(Deserialize)]
struct Com2SenseRow {
    id: String,
    sent_1: String,
    sent_2: Option<String>,
    label_1: bool,
    label_2: Option<bool>,
}

#[derive(Deserialize)]
struct CycIcRow {
    id: String,
    question_type: String,
    question: String,
    answer_options: Vec<String>,
    correct_answer: usize,
    #[serde(default = "interrogative")]
    question_form: QuestionForm,
}

fn interrogative() -> QuestionForm {
    QuestionForm::Interrogative
}

#[derive(Deserialize)]
struct ComVeRow {
    id: String,
    sent0: String,
    sent1: String,
    false_index: usize,
}

#[derive(Deserialize)]
struct I2d2Row {
    id: String,
    statement: String,
    label: bool,
    iter: u32,
}

#[derive(Deserialize)]
struct KbRow {
    id: String,
    subject: String,
    text: String,
}

fn single(id: &str, statement: Statement) -> StatementGroup {
    StatementGroup::new(id, GroupKind::Boolean, vec![statement])
}

/// Reads `path` with `adapter` and returns the converted groups. Every
/// emitted group is validated; the first invalid one aborts with its line.
pub fn run_adapter(adapter: Adapter, path: &Path, options: &AdapterOptions<'_>) -> Result<Vec<StatementGroup>, ForgeError> {
    let mut out: Vec<(usize, StatementGroup)> = Vec::new();
    match adapter {
        Adapter::MultipleChoice => {
            for (line, p) in read_rows::<MultipleChoiceProblem>(path)? {
                out.push((line, with_falsehoods(&p, options)?));
            }
        }
        Adapter::Boolean => {
            for (line, p) in read_rows::<BooleanProblem>(path)? {
                out.push((line, convert_boolean(&p)?));
            }
        }
        Adapter::Kb => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| input_err(path, 0, e))?;
            let mut entries = Vec::new();
            for (i, row) in reader.deserialize::<KbRow>().enumerate() {
                let row = row.map_err(|e| input_err(path, i + 2, e))?;
                entries.push((
                    i + 2,
                    KbEntry {
                        id: row.id,
                        subject: row.subject,
                        full_text: row.text,
                    },
                ));
            }
            let pool: Vec<String> = entries.iter().map(|(_, e)| e.subject.clone()).collect();
            for (line, e) in &entries {
                let mut rng = seed::rng_for(options.seed, &format!("forge:kb:{}", e.id));
                let g = perturb_kb_entry(e, &pool, options.kb_k, &mut rng).map_err(|err| input_err(path, *line, err))?;
                out.push((*line, g));
            }
        }
        Adapter::Skd => {
            for (line, t) in read_rows::<KnowledgeTriple>(path)? {
                let mut rng = seed::rng_for(options.seed, &format!("forge:skd:{}", t.id));
                let s = render_skd_triple(&t, &options.names, &mut rng).map_err(|e| input_err(path, line, e))?;
                out.push((line, single(&t.id, s)));
            }
        }
        Adapter::Com2Sense => {
            for (line, r) in read_rows::<Com2SenseRow>(path)? {
                let (Some(sent_2), Some(label_2)) = (r.sent_2, r.label_2) else {
                    continue;
                };
                if r.label_1 == label_2 {
                    continue;
                }
                let statements = vec![
                    Statement::new(r.sent_1, r.label_1, Origin::QuestionChoice, &r.id),
                    Statement::new(sent_2, label_2, Origin::QuestionChoice, &r.id),
                ];
                out.push((line, StatementGroup::new(&r.id, GroupKind::MultipleChoice, statements)));
            }
        }
        Adapter::CycIc => {
            for (line, r) in read_rows::<CycIcRow>(path)? {
                if r.question_type != "multiple choice" {
                    continue;
                }
                let p = MultipleChoiceProblem {
                    id: r.id,
                    question: r.question,
                    choices: r.answer_options,
                    answer_index: r.correct_answer,
                    question_form: r.question_form,
                };
                out.push((line, with_falsehoods(&p, options)?));
            }
        }
        Adapter::ComVe => {
            for (line, r) in read_rows::<ComVeRow>(path)? {
                if r.false_index > 1 {
                    return Err(input_err(path, line, "false_index must be 0 or 1"));
                }
                let statements = [r.sent0, r.sent1]
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| Statement::new(t, i != r.false_index, Origin::QuestionChoice, &r.id))
                    .collect();
                out.push((line, StatementGroup::new(&r.id, GroupKind::MultipleChoice, statements)));
            }
        }
        Adapter::I2d2 => {
            for (line, r) in read_rows::<I2d2Row>(path)? {
                if r.iter == 0 || r.iter == 2 {
                    let s = Statement::new(r.statement, r.label, Origin::Boolean, &r.id);
                    out.push((line, single(&r.id, s)));
                }
            }
        }
    }
    out.into_iter()
        .map(|(line, g)| match g.validate() {
            Ok(()) => Ok(g),
            Err(v) => Err(input_err(
                path,
                line,
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            )),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;
    use std::io::Write as _;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn names_round_trip() {
        for name in adapter_names() {
            assert_eq!(name.parse::<Adapter>().unwrap().to_string(), name);
        }
        assert!(matches!("nope".parse::<Adapter>(), Err(ForgeError::UnknownAdapter(_))));
    }

    #[test]
    fn com2sense_pairs_and_drops_unpaired() {
        let f = file(concat!(
            r#"{"id":"c1","sent_1":"Ice is cold.","sent_2":"Ice is hot.","label_1":true,"label_2":false}"#,
            "\n",
            r#"{"id":"c2","sent_1":"Alone.","sent_2":null,"label_1":true,"label_2":null}"#,
            "\n"
        ));
        let groups = run_adapter(Adapter::Com2Sense, f.path(), &AdapterOptions::default()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].kind, GroupKind::MultipleChoice);
        assert_eq!(groups[0].correct_index(), Some(0));
    }

    #[test]
    fn cycic_keeps_multiple_choice_only() {
        let f = file(concat!(
            r#"{"id":"y1","question_type":"multiple choice","question":"A cube has ___ faces.","answer_options":["six","four"],"correct_answer":0,"question_form":"cloze"}"#,
            "\n",
            r#"{"id":"y2","question_type":"true/false","question":"Is ice cold?","answer_options":["true","false"],"correct_answer":0}"#,
            "\n"
        ));
        let groups = run_adapter(Adapter::CycIc, f.path(), &AdapterOptions::default()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].statements[0].text, "A cube has six faces.");
    }

    #[test]
    fn comve_marks_false_sentence() {
        let f = file(r#"{"id":"v1","sent0":"He put an elephant in the fridge.","sent1":"He put a turkey in the fridge.","false_index":0}"#);
        let g = &run_adapter(Adapter::ComVe, f.path(), &AdapterOptions::default()).unwrap()[0];
        assert_eq!(g.correct_index(), Some(1));
    }

    #[test]
    fn i2d2_skips_iteration_one() {
        let f = file(concat!(
            r#"{"id":"i0","statement":"Birds can fly.","label":true,"iter":0}"#,
            "\n",
            r#"{"id":"i1","statement":"Fish can walk.","label":false,"iter":1}"#,
            "\n",
            r#"{"id":"i2","statement":"Rocks can sing.","label":false,"iter":2}"#,
            "\n"
        ));
        let ids: Vec<String> = run_adapter(Adapter::I2d2, f.path(), &AdapterOptions::default())
            .unwrap()
            .into_iter()
            .map(|g| g.group_id)
            .collect();
        assert_eq!(ids, ["i0", "i2"]);
    }

    #[test]
    fn kb_csv_uses_file_subjects_as_pool() {
        let mut csv = String::from("id,subject,text\n");
        for (i, s) in ["Rubber stamps", "Arabic numbers", "Bandages", "Meat tenderizers"].iter().enumerate() {
            writeln!(csv, "k{i},{s},\"{s} provide a way, somehow.\"").unwrap();
        }
        let f = file(&csv);
        let groups = run_adapter(Adapter::Kb, f.path(), &AdapterOptions::default()).unwrap();
        assert_eq!(groups.len(), 4);
        assert!(groups.iter().all(|g| g.len() == 4 && g.correct_index() == Some(0)));
        assert_eq!(groups[0].statements[1].text, "Arabic numbers provide a way, somehow.");
    }

    #[test]
    fn invalid_group_reports_line() {
        let f = file(r#"{"id":"m","question":"Pick.","choices":["same","same"],"answer_index":0,"question_form":"choices_only"}"#);
        let err = run_adapter(Adapter::MultipleChoice, f.path(), &AdapterOptions::default()).unwrap_err();
        assert!(matches!(err, ForgeError::Input { line: 1, .. }));
    }
}
