//! `key = value` configuration files, spliced in front of command-line flags.
//!
//! Keys are flag names without the leading dashes. A value of `true` turns
//! the key into a bare switch and `false` drops it. Flags given on the
//! command line come later and therefore win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<OsString>, CliError> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::parse(format!(
                "{}:{}: expected `key = value`",
                origin.display(),
                i + 1
            )));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(CliError::parse(format!("{}:{}: bad key `{key}`", origin.display(), i + 1)));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Finds `--config PATH` (or `--config=PATH`) anywhere in `args`.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts `extra` right after the subcommand token so that it precedes
/// every flag the user typed.
pub fn splice(args: Vec<OsString>, extra: Vec<OsString>, subcommands: &[&str]) -> Vec<OsString> {
    let Some(pos) = args
        .iter()
        .skip(1)
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
    else {
        return args;
    };
    let at = pos + 2;
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    out
}
