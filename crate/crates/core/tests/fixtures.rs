use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use verity_core::evaluation::read_manifest;
use verity_core::fixtures::{
    build_bundled, bundled_dir, checksummed_files, render_bundled, BUNDLED_SEED, FALSE_KEYWORDS, TRUE_KEYWORDS,
};
use verity_core::jsonl::read_groups;
use verity_core::trainer::TrainConfig;
use verity_core::{DatasetPartition, GroupKind, Origin, Stage};

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn derived_files_regenerate_byte_identically() {
    let dir = bundled_dir();
    let set = build_bundled(&dir.join("raw"), BUNDLED_SEED).unwrap();
    for (name, body) in render_bundled(&set) {
        let on_disk = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(on_disk == body, "{name} is stale; run the regenerate_fixtures example");
    }
}

#[test]
fn checksums_match() {
    let dir = bundled_dir();
    let listed: BTreeMap<String, String> = std::fs::read_to_string(dir.join("CHECKSUMS.sha256"))
        .unwrap()
        .lines()
        .map(|l| {
            let (hash, name) = l.split_once("  ").unwrap();
            (name.to_string(), hash.to_string())
        })
        .collect();
    let files = checksummed_files(&dir).unwrap();
    assert_eq!(listed.len(), files.len());
    for name in files {
        let actual = sha256_hex(&std::fs::read(dir.join(&name)).unwrap());
        assert_eq!(listed.get(&name), Some(&actual), "{name}");
    }
}

#[test]
fn every_partition_validates() {
    let dir = bundled_dir();
    for (file, stage) in [
        ("stage_a.jsonl", Stage::StageA),
        ("stage_b.jsonl", Stage::StageB),
        ("dev.jsonl", Stage::EvalSeen),
        ("eval_mc.jsonl", Stage::EvalUnseen1),
        ("eval_bool.jsonl", Stage::EvalUnseen2),
    ] {
        let groups = read_groups(dir.join(file)).unwrap();
        assert!(!groups.is_empty(), "{file}");
        let p = DatasetPartition::new(file, stage, groups);
        assert!(p.validate().is_ok(), "{file}: {:?}", p.validate());
    }
}

#[test]
fn stage_b_mixes_every_adapter_and_falsehoods() {
    let groups = read_groups(bundled_dir().join("stage_b.jsonl")).unwrap();
    let prefixes = ["mc-", "bq-", "skd-", "c2s-", "cy-", "cv-", "i2-", "qa-"];
    for p in prefixes {
        assert!(groups.iter().any(|g| g.group_id.starts_with(p)), "{p}");
    }
    let lm = groups
        .iter()
        .flat_map(|g| &g.statements)
        .filter(|s| s.origin == Origin::LmFalsehood)
        .count();
    assert!(lm > 0);
    assert!(groups.iter().any(|g| g.kind == GroupKind::Boolean));
}

#[test]
fn manifest_and_config_load() {
    let dir = bundled_dir();
    let entries = read_manifest(dir.join("manifest.json")).unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e.path.exists()));
    let config = TrainConfig::from_toml_str(&std::fs::read_to_string(dir.join("train.toml")).unwrap()).unwrap();
    config.check().unwrap();
}

#[test]
fn knowledge_lines_carry_one_keyword_each() {
    let text = std::fs::read_to_string(bundled_dir().join("knowledge.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 10);
    for line in lines {
        let words: Vec<&str> = line.trim_end_matches('.').split_whitespace().collect();
        let hits = TRUE_KEYWORDS.iter().chain(&FALSE_KEYWORDS).filter(|k| words.contains(k)).count();
        assert_eq!(hits, 1, "{line}");
    }
}
