use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write(path, &self.text)
    }
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Run record written next to every output: what was run, on which inputs,
/// and with which error bars. Holds no timestamps so reruns are identical.
pub struct Manifest {
    command: String,
    hasher: Sha256,
    inputs: Map<String, Value>,
    quantities: Map<String, Value>,
    warnings: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            hasher: Sha256::new(),
            inputs: Map::new(),
            quantities: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.hasher.update(key.as_bytes());
        self.hasher.update(v.to_string().as_bytes());
        self.inputs.insert(key.to_string(), v);
    }

    pub fn config_text(&mut self, key: &str, text: &str) {
        self.hasher.update(key.as_bytes());
        self.hasher.update(text.as_bytes());
    }

    pub fn quantity(&mut self, key: &str, value: f64, err: f64) {
        self.quantities.insert(key.to_string(), json!({ "value": value, "err": err }));
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.quantities.insert(key.to_string(), v);
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn write(self, path: &Path) -> Result<()> {
        let digest = self.hasher.finalize();
        let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let doc = json!({
            "tool": "lyapspec",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": hash,
            "inputs": self.inputs,
            "quantities": self.quantities,
            "warnings": self.warnings,
        });
        write(path, &(serde_json::to_string_pretty(&doc)? + "\n"))
    }
}
