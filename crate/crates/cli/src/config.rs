//! Plain-text `key = value` config files.
//!
//! Each entry is spliced into the argument list as `--key value` right after
//! the subcommand, ahead of the user's own flags. Every flag overrides
//! earlier occurrences of itself, so explicit flags beat the file and the
//! file beats the built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Flags that take no value; `key = true` enables them, `key = false` is a no-op.
const SWITCHES: [&str; 1] = ["plate-carree"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", k + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key {key:?}", k + 1);
        }
        let value = value.trim().trim_matches('"').to_string();
        out.push((key, value));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it
                .next()
                .cloned()
                .map(Some)
                .context("--config needs a path");
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(p.into()));
        }
    }
    Ok(None)
}

/// `args` with the config file's entries inserted after the subcommand.
pub fn expand_args(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let mut injected = Vec::new();
    for (key, value) in parse_config(&text)? {
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" => injected.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => bail!("config key {key} expects true or false"),
            }
        } else {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        }
    }
    let at = args
        .iter()
        .position(|a| subcommands.iter().any(|s| a == s))
        .map_or(args.len(), |i| i + 1);
    let mut out = args;
    out.splice(at..at, injected);
    Ok(out)
}
