//! `--config FILE`: a JSON object whose keys become flags of the subcommand.
//!
//! `{"beta_list": [2, 3], "gamma": 0.8, "timestamp": true}` expands to
//! `--beta-list 2,3 --gamma 0.8 --timestamp`. Flags given on the command
//! line win over the file.

use anyhow::{bail, Context, Result};
use serde_json::Value;

const SUBCOMMANDS: [&str; 5] = ["solve", "eval", "sweep", "oneshot", "validate"];

pub fn merge_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a file");
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let obj: serde_json::Map<String, Value> =
        serde_json::from_str(&text).with_context(|| format!("config {path} is not a JSON object"))?;
    let Some(at) = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        bail!("--config needs a subcommand");
    };

    let mut extra = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        match value {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                extra.push(flag);
                extra.push(parts.join(","));
            }
            v => {
                extra.push(flag);
                extra.push(scalar(&v)?);
            }
        }
    }
    args.splice(at + 1..at + 1, extra);
    Ok(args)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => bail!("config values must be strings, numbers, booleans or lists of those, got {other}"),
    }
}
