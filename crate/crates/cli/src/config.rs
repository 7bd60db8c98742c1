// SPDX-License-Identifier: MIT OR Apache-2.0

//! Flat `key = value` config files.
//!
//! Keys are long flag names without the dashes. Blank lines and lines
//! starting with `#` are ignored. Boolean flags take `true` or `false`.
//! Settings are spliced into the argument list only for flags absent from
//! the command line, so explicit flags always win.

use std::ffi::OsString;
use std::path::Path;

use scalecp_core::{Error, Result};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i as u64 + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let key = k.trim().trim_start_matches("--");
        if key.is_empty() || key == "config" {
            return Err(Error::Parse { line: i as u64 + 1, message: format!("invalid key '{}'", k.trim()) });
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<(usize, usize, OsString)> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return args.get(i + 1).map(|v| (i, 2, v.clone()));
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some((i, 1, v.into()));
        }
    }
    None
}

fn has_flag(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let prefixed = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == long || s.starts_with(&prefixed)
    })
}

/// Replaces `--config FILE` with the file's settings that the command line
/// does not already set.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some((at, width, path)) = find_config(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::from(e),
    })?;
    let settings = parse(&text)?;
    args.drain(at..at + width);
    for (key, value) in settings {
        if has_flag(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => args.push(format!("--{key}={value}").into()),
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_flat_pairs() {
        let kv = parse("# comment\nmethod = ols\n\n--qcv-a=0.2\nexact-naive = true\n").unwrap();
        assert_eq!(
            kv,
            vec![
                ("method".into(), "ols".into()),
                ("qcv-a".into(), "0.2".into()),
                ("exact-naive".into(), "true".into())
            ]
        );
        assert!(matches!(parse("method ols"), Err(Error::Parse { line: 1, .. })));
        assert!(parse("config = x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "method = ols\nestimator = qcv\nexact-naive = true\n").unwrap();
        let args = os(&["scalecp", "detect", "--config", p.to_str().unwrap(), "--method", "icss"]);
        let out = expand_args(args).unwrap();
        assert_eq!(out, os(&["scalecp", "detect", "--method", "icss", "--estimator=qcv", "--exact-naive"]));
        let missing = os(&["scalecp", "detect", "--config=/no/such/file"]);
        assert!(matches!(expand_args(missing), Err(Error::FileNotFound(_))));
    }
}
