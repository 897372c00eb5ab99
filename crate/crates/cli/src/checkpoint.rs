//! Per-size trace checkpoints stored as JSON lines, one file per search.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use testroll::search::{SearchObserver, TraceEntry};

use crate::CliError;

/// Records trace entries to an optional checkpoint file and reports progress
/// on standard error.
pub struct Progress {
    label: String,
    file: Option<File>,
    quiet: bool,
    started: Instant,
    last_report: Instant,
}

impl Progress {
    pub fn new(label: String, file: Option<File>, quiet: bool) -> Self {
        let now = Instant::now();
        Self {
            label,
            file,
            quiet,
            started: now,
            last_report: now,
        }
    }

    pub fn finish(&self, summary: &str) {
        if !self.quiet {
            eprintln!(
                "{}: {summary} ({:.1}s)",
                self.label,
                self.started.elapsed().as_secs_f64()
            );
        }
    }
}

impl SearchObserver for Progress {
    fn on_entry(&mut self, entry: &TraceEntry) {
        if let Some(f) = &mut self.file {
            let line = serde_json::to_string(entry).expect("trace entry serializes");
            // a failed checkpoint write only costs the ability to resume
            if writeln!(f, "{line}").and_then(|_| f.flush()).is_err() {
                self.file = None;
            }
        }
        if !self.quiet && self.last_report.elapsed().as_secs_f64() >= 2.0 {
            eprintln!(
                "{}: m={} worst={:.6}",
                self.label, entry.m, entry.worst_value
            );
            self.last_report = Instant::now();
        }
    }
}

/// Checkpoint file for a search identified by `key` inside `dir`.
pub fn path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.jsonl"))
}

/// Entries saved so far; an unreadable trailing line (from an interrupted
/// write) ends the prefix.
pub fn load(path: &Path) -> Result<Vec<TraceEntry>, CliError> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CliError::Io(format!("{}: {e}", path.display()))),
    };
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        match serde_json::from_str::<TraceEntry>(&line) {
            Ok(e) if e.m == 2 * out.len() as u64 => out.push(e),
            _ => break,
        }
    }
    Ok(out)
}

/// Opens the checkpoint for appending after rewriting it to hold exactly
/// `resume`.
pub fn open(path: &Path, resume: &[TraceEntry]) -> Result<File, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut text = String::new();
    for e in resume {
        text.push_str(&serde_json::to_string(e).expect("trace entry serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io)?;
    OpenOptions::new().append(true).open(path).map_err(io)
}
