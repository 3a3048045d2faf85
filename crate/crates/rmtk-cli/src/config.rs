//! Merges a JSON config file (or a run manifest) into the argument list.
//! Keys mirror the long flag names; values from the file are appended only
//! for flags absent from the command line.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use serde_json::Value;

use crate::error::CliError;

/// Keys that are positional or otherwise not replayable as flags.
const SKIP: [&str; 2] = ["id", "config"];

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_eq)
    })
}

fn render(key: &str, v: &Value) -> Result<Option<String>, CliError> {
    Ok(match v {
        Value::Null => None,
        Value::Bool(true) => Some(format!("--{key}")),
        Value::Bool(false) => None,
        Value::Number(n) => Some(format!("--{key}={n}")),
        Value::String(s) => Some(format!("--{key}={s}")),
        Value::Array(items) if items.is_empty() => None,
        Value::Array(items) => {
            let parts = items
                .iter()
                .map(|i| match i {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(CliError::Usage(format!("config key {key:?} holds an unsupported list"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(format!("--{key}={}", parts.join(",")))
        }
        Value::Object(_) => return Err(CliError::Usage(format!("config key {key:?} holds an object"))),
    })
}

pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let root: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let Value::Object(mut map) = root else {
        return Err(CliError::Usage(format!("{}: expected a JSON object", path.display())));
    };
    // a run manifest: replay its parameters
    if let (Some(Value::String(cmd)), Some(Value::Object(params))) = (map.get("command").cloned(), map.get("params").cloned()) {
        if !args.iter().any(|a| a.to_string_lossy() == cmd.as_str()) {
            return Err(CliError::Usage(format!("the manifest was written by `{cmd}`")));
        }
        map = params;
    }
    let mut out = args.clone();
    for (key, v) in &map {
        if SKIP.contains(&key.as_str()) || given(&args, key) {
            continue;
        }
        if let Some(flag) = render(key, v)? {
            out.push(OsString::from(flag));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn renders_values() {
        assert_eq!(render("c", &serde_json::json!([0.5, 1])).unwrap().unwrap(), "--c=0.5,1");
        assert_eq!(render("raw", &serde_json::json!(true)).unwrap().unwrap(), "--raw");
        assert_eq!(render("raw", &serde_json::json!(false)).unwrap(), None);
        assert!(render("x", &serde_json::json!({"a": 1})).is_err());
    }

    #[test]
    fn flags_take_precedence() {
        let args = os(&["rmtk", "law-pdf", "--c=0.3", "--config", "x.json"]);
        assert!(given(&args, "c"));
        assert!(!given(&args, "sigma"));
        assert_eq!(config_path(&args), Some(PathBuf::from("x.json")));
    }
}
