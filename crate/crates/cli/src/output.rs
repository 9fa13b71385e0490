//! Artifacts are built in memory and written once, in name order, by
//! [`Artifacts::write_all`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Shortest round-trip text for a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_bytes(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        let name = name.into();
        assert!(!self.files.contains_key(&name), "artifact {name} emitted twice");
        self.files.insert(name, bytes);
    }

    pub fn add_text(&mut self, name: impl Into<String>, text: String) {
        self.add_bytes(name, text.into_bytes());
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.add_text(name, text);
    }

    /// `header` cells should carry their unit in brackets.
    pub fn add_csv(&mut self, name: impl Into<String>, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let runtime = |e: csv::Error| CliError::Runtime(format!("csv encoding failed: {e}"));
        w.write_record(header).map_err(runtime)?;
        for r in rows {
            w.write_record(r).map_err(runtime)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Runtime(format!("csv encoding failed: {e}")))?;
        self.add_bytes(name, bytes);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        self.files.iter().map(|(n, b)| ManifestEntry { name: n.clone(), bytes: b.len() }).collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
