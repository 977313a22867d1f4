//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::commands::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    subcommand: &'a str,
    version: &'a str,
    seed: u64,
    workers: u64,
    config: &'a C,
    duration_seconds: f64,
    outputs: &'a [String],
}

/// Files written by one run, in creation order.
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl OutDir {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("cannot create `{}`: {e}", dir.display())))?;
        Ok(Self {
            dir,
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Data(format!("cannot write `{}`: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish<C: Serialize>(self, subcommand: &str, config: &C, seed: u64, workers: u64) -> Result<(), CliError> {
        let manifest = Manifest {
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            workers,
            config,
            duration_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::Data(format!("cannot write `{}`: {e}", path.display())))
    }
}

/// Comma-separated text with a header row.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Self { text: String::new() };
        t.row(header);
        t
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<String> = fields.iter().map(|f| quote(f.as_ref())).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
