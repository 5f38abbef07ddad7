//! `--config` files: TOML `key = value` pairs that fill in flags the command
//! line left unset.
//!
//! Top-level keys apply to every subcommand; a table named after a
//! subcommand (`[map]`, `[dpo-filter]`, ...) overrides them for that
//! subcommand only. Keys use flag names, with `_` accepted for `-`. Keys the
//! chosen subcommand does not know are skipped with a warning.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};
use clap::{ArgAction, Command};

/// Locates `--config <path>` (or `--config=<path>`) in raw arguments.
fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// The first bare word, which clap will read as the subcommand.
fn find_subcommand(args: &[OsString]) -> Option<String> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            iter.next();
            continue;
        }
        if !s.starts_with('-') {
            return Some(s.into_owned());
        }
    }
    None
}

fn provided(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

fn scalar(value: &toml::Value) -> anyhow::Result<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => bail!("unsupported config value {other}"),
    })
}

pub fn load_table(path: &Path) -> anyhow::Result<toml::Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    text.parse::<toml::Table>()
        .with_context(|| format!("parsing config {}", path.display()))
}

/// Returns `args` with the config file's values appended for every flag the
/// command line did not already set. Without `--config` the arguments come
/// back unchanged.
pub fn merge_config(args: Vec<OsString>, command: &Command) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let table = load_table(Path::new(&path))?;
    let Some(name) = find_subcommand(&args) else {
        return Ok(args);
    };
    let Some(sub) = command.find_subcommand(&name) else {
        return Ok(args);
    };

    let mut entries: Vec<(String, toml::Value)> = Vec::new();
    for (key, value) in &table {
        if !value.is_table() {
            entries.push((key.replace('_', "-"), value.clone()));
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(&name).or_else(|| table.get(&name.replace('-', "_"))) {
        for (key, value) in section {
            let key = key.replace('_', "-");
            entries.retain(|(k, _)| *k != key);
            entries.push((key, value.clone()));
        }
    }

    let mut merged = args.clone();
    for (key, value) in entries {
        if key == "config" || provided(&args, &key) {
            continue;
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            log::warn!("config key `{key}` does not apply to `{name}`; ignored");
            continue;
        };
        let flag = OsString::from(format!("--{key}"));
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                toml::Value::Boolean(true) => merged.push(flag),
                toml::Value::Boolean(false) => {}
                other => bail!("config key `{key}` expects a boolean, got {other}"),
            },
            _ => match value {
                toml::Value::Array(items) => {
                    for item in &items {
                        merged.push(flag.clone());
                        merged.push(scalar(item)?.into());
                    }
                }
                other => {
                    merged.push(flag);
                    merged.push(scalar(&other)?.into());
                }
            },
        }
    }
    Ok(merged)
}
