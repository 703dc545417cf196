//! Parameter maps: defaults, config files and manifests.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Effective parameters of one run, keyed by flag name.
pub type Params = BTreeMap<String, String>;

/// Config keys may use `_` where flags use `-`.
pub fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('_', "-")
}

fn value_to_string(v: &Value, line: usize) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => items.iter().map(|x| value_to_string(x, line)).collect::<Result<Vec<_>>>()?.join(","),
        Value::Null => String::new(),
        Value::Object(_) => return Err(Error::Parse { line, msg: "nested objects are not parameters".into() }),
    })
}

/// Parsed config file: parameters plus the subcommand a manifest was written for.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub subcommand: Option<String>,
    pub params: Params,
}

/// Parse `key = value` lines (`#` comments) or a JSON object. A JSON object
/// with a `params` member, such as a run manifest, contributes that member.
pub fn parse_config(text: &str) -> Result<Config> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        let obj = doc.as_object().ok_or(Error::Parse { line: 1, msg: "expected a JSON object".into() })?;
        let subcommand = obj.get("subcommand").and_then(Value::as_str).map(str::to_string);
        let source = match obj.get("params") {
            Some(Value::Object(p)) => p,
            Some(_) => return Err(Error::Parse { line: 1, msg: "'params' must be an object".into() }),
            None => obj,
        };
        let mut params = Params::new();
        for (k, v) in source {
            if obj.contains_key("params") || k != "subcommand" {
                params.insert(normalize_key(k), value_to_string(v, 1)?);
            }
        }
        return Ok(Config { subcommand, params });
    }
    let mut params = Params::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected 'key = value', got '{line}'") })?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
        }
        params.insert(key, v.trim().to_string());
    }
    Ok(Config { subcommand: None, params })
}

pub fn load_config(path: &Path) -> Result<Config> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub subcommand: String,
    pub params: Params,
    pub master_seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// File name → SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentManifest {
    pub fn new(subcommand: &str, params: &Params, master_seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            params: params.clone(),
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, path: &Path, bytes: &[u8]) {
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        self.outputs.insert(name, sha256_hex(bytes));
    }

    pub fn path_for(out: &Path) -> std::path::PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        s.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_files() {
        let c = parse_config("# comment\nseed = 7\n\nn_grid = 100,1000 # trailing\npredicate = x1<=0.5\n").unwrap();
        assert_eq!(c.params["seed"], "7");
        assert_eq!(c.params["n-grid"], "100,1000");
        assert_eq!(c.params["predicate"], "x1<=0.5");
        assert!(parse_config("").unwrap().params.is_empty());
    }

    #[test]
    fn malformed_line_is_located() {
        match parse_config("seed = 1\noops\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_and_manifest_forms() {
        let c = parse_config(r#"{"seed": 7, "n-grid": [100, 1000], "map": "tent"}"#).unwrap();
        assert_eq!(c.params["seed"], "7");
        assert_eq!(c.params["n-grid"], "100,1000");
        let mut p = Params::new();
        p.insert("seed".into(), "3".into());
        let m = ExperimentManifest::new("simulate", &p, 3);
        let c = parse_config(&serde_json::to_string_pretty(&m).unwrap()).unwrap();
        assert_eq!(c.subcommand.as_deref(), Some("simulate"));
        assert_eq!(c.params, p);
        assert!(matches!(parse_config("{\"seed\": "), Err(Error::Parse { .. })));
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
