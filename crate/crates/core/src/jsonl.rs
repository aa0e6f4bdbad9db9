//! Line-delimited JSON reading and writing, used for statement groups,
//! score files and training logs.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::types::StatementGroup;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Parses JSONL from any reader. Blank lines are skipped; `origin` names the
/// input in error messages.
pub fn read_from<T: DeserializeOwned>(reader: impl BufRead, origin: &Path) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io {
            path: origin.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_from(BufReader::new(file), path)
}

/// Serializes each item on its own LF-terminated line.
pub fn to_string<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable value"));
        out.push('\n');
    }
    out
}

pub fn write<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<(), JsonlError> {
    let path = path.as_ref();
    let io_err = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(to_string(items).as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn read_groups(path: impl AsRef<Path>) -> Result<Vec<StatementGroup>, JsonlError> {
    read(path)
}

pub fn write_groups(path: impl AsRef<Path>, groups: &[StatementGroup]) -> Result<(), JsonlError> {
    write(path, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{GroupKind, Origin, Statement};
    use proptest::prelude::*;

    fn origin_strategy() -> impl Strategy<Value = Origin> {
        prop_oneof![
            Just(Origin::QuestionChoice),
            Just(Origin::Boolean),
            Just(Origin::KbOriginal),
            Just(Origin::KbPerturbed),
            Just(Origin::LmFalsehood),
        ]
    }

    fn group_strategy() -> impl Strategy<Value = StatementGroup> {
        (
            "[a-z0-9:-]{1,12}",
            prop::collection::vec(("\\PC{1,40}", origin_strategy(), "[a-z]{0,6}"), 2..6),
            any::<prop::sample::Index>(),
        )
            .prop_map(|(id, rows, gold)| {
                let gold = gold.index(rows.len());
                let statements = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (text, origin, src))| Statement::new(format!("{i} {text}"), i == gold, origin, src))
                    .collect();
                StatementGroup::new(id, GroupKind::MultipleChoice, statements)
            })
    }

    proptest! {
        #[test]
        fn groups_round_trip(groups in prop::collection::vec(group_strategy(), 0..5)) {
            let text = to_string(&groups);
            let back: Vec<StatementGroup> = read_from(text.as_bytes(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, groups);
        }
    }

    #[test]
    fn wire_format_keys() {
        let g = StatementGroup::new(
            "q1",
            GroupKind::Boolean,
            vec![Statement::new("A dog barks.", true, Origin::Boolean, "src")],
        );
        let line = serde_json::to_string(&g).unwrap();
        assert_eq!(
            line,
            r#"{"group_id":"q1","kind":"boolean","statements":[{"text":"A dog barks.","label":true,"origin":"boolean","source_id":"src"}]}"#
        );
    }

    #[test]
    fn parse_error_reports_line() {
        let err = read_from::<StatementGroup>("\n{oops}\n".as_bytes(), Path::new("f.jsonl")).unwrap_err();
        assert!(matches!(err, JsonlError::Parse { line: 2, .. }));
    }
}
