//! INI-style `key = value` files, spliced into the argument list so that
//! explicit flags given later on the command line win.

use std::ffi::OsString;
use std::path::Path;

use crate::CliError;

/// Global flags taking a value, which may precede the subcommand path.
const VALUE_FLAGS: [&str; 5] = ["--threads", "--seed", "--out", "--format", "--config"];
const GROUPS_WITH_LEAF: [&str; 3] = ["count", "trans", "osc"];

/// Turns `key = value` lines into `--key value` tokens. Section headers,
/// blank lines and `#`/`;` comments are skipped; `true` yields a bare flag and
/// `false` drops the key.
pub fn config_tokens(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", idx + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key", idx + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Position just after the subcommand path (`count exact`, `fit`, ...), or
/// `None` when the path is incomplete.
fn path_end(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    let mut group: Option<String> = None;
    while i < args.len() {
        let tok = args[i].to_string_lossy();
        if tok.starts_with("--") {
            let takes_value = VALUE_FLAGS.contains(&tok.as_ref()) && !tok.contains('=');
            i += if takes_value { 2 } else { 1 };
            continue;
        }
        match &group {
            None => {
                if !GROUPS_WITH_LEAF.contains(&tok.as_ref()) {
                    return Some(i + 1);
                }
                group = Some(tok.into_owned());
            }
            Some(_) => return Some(i + 1),
        }
        i += 1;
    }
    None
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    let mut found = None;
    while let Some(tok) = it.next() {
        let s = tok.to_string_lossy();
        if s == "--config" {
            found = it.next().cloned();
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(v.into());
        }
    }
    found
}

/// Splices the `--config` file's tokens after the subcommand path.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let tokens = config_tokens(&text)?;
    let Some(at) = path_end(&args) else {
        return Ok(args);
    };
    let mut out = args[..at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
