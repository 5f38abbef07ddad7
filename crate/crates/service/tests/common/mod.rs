#![allow(dead_code)]

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cartograph::synthetic::{planted_corpus, Planting};

pub const EMBEDDER: &str = "hash://32?seed=3";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartograph"))
}

pub fn run_bin(args: &[&str]) -> Output {
    let output = bin().args(args).env("RUST_LOG", "warn").output().expect("binary runs");
    output
}

pub fn args(v: &[&str]) -> Vec<OsString> {
    std::iter::once("cartograph").chain(v.iter().copied()).map(OsString::from).collect()
}

/// Writes a planted-vocabulary corpus as `{"text": ...}` lines and returns
/// its path and group labels.
pub fn write_planted(dir: &Path, groups: usize, per_group: usize, seed: u64) -> (PathBuf, Vec<usize>) {
    let (texts, labels) = planted_corpus(groups, per_group, &Planting::default(), seed);
    let path = dir.join("corpus.jsonl");
    let body: String = texts
        .iter()
        .map(|t| format!("{}\n", serde_json::json!({ "text": t })))
        .collect();
    std::fs::write(&path, body).unwrap();
    (path, labels)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
