//! Report rows, CSV emission and the JSON summary.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Fixed CSV header of every command report.
pub const CSV_HEADER: [&str; 6] = [
    "scenario",
    "theorem_tag",
    "quantity",
    "value",
    "bound",
    "pass",
];

/// Tag for rows that check plumbing rather than a stated result.
pub const PLUMBING: &str = "plumbing";

/// One checked quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub theorem_tag: String,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    /// Passed only thanks to a numerical tolerance; fails under `--strict`.
    pub warn: bool,
}

impl Row {
    /// `value ≤ bound`, warning when only `tol` slack makes it pass.
    pub fn at_most(
        tag: &str,
        quantity: impl Into<String>,
        value: f64,
        bound: f64,
        tol: f64,
    ) -> Self {
        Self {
            theorem_tag: tag.into(),
            quantity: quantity.into(),
            value,
            bound,
            pass: value <= bound + tol,
            warn: value > bound && value <= bound + tol,
        }
    }

    /// `value ≥ bound`, with the same tolerance convention.
    pub fn at_least(
        tag: &str,
        quantity: impl Into<String>,
        value: f64,
        bound: f64,
        tol: f64,
    ) -> Self {
        Self {
            theorem_tag: tag.into(),
            quantity: quantity.into(),
            value,
            bound,
            pass: value + tol >= bound,
            warn: value < bound && value + tol >= bound,
        }
    }

    /// `value == bound` bit for bit.
    pub fn exact(tag: &str, quantity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            theorem_tag: tag.into(),
            quantity: quantity.into(),
            value,
            bound,
            pass: value == bound,
            warn: false,
        }
    }

    /// `|value − bound| ≤ tol`; never a warning since the tolerance is the
    /// criterion itself.
    pub fn within(
        tag: &str,
        quantity: impl Into<String>,
        value: f64,
        bound: f64,
        tol: f64,
    ) -> Self {
        Self {
            theorem_tag: tag.into(),
            quantity: quantity.into(),
            value,
            bound,
            pass: (value - bound).abs() <= tol,
            warn: false,
        }
    }

    pub fn flag(tag: &str, quantity: impl Into<String>, ok: bool) -> Self {
        Self {
            theorem_tag: tag.into(),
            quantity: quantity.into(),
            value: ok as u8 as f64,
            bound: 1.0,
            pass: ok,
            warn: false,
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self {
            theorem_tag: PLUMBING.into(),
            quantity: format!("error: {}", message.into()),
            value: f64::NAN,
            bound: f64::NAN,
            pass: false,
            warn: false,
        }
    }

    pub fn passes(&self, strict: bool) -> bool {
        self.pass && !(strict && self.warn)
    }
}

/// The rows of one command on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub command: String,
    pub rows: Vec<Row>,
    /// Auxiliary CSV files, as `(file name, contents)`.
    pub extra: Vec<(String, String)>,
}

impl Report {
    pub fn new(scenario: &str, command: &str) -> Self {
        Self {
            scenario: scenario.into(),
            command: command.into(),
            rows: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn passed(&self, strict: bool) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.passes(strict))
    }

    pub fn failures(&self, strict: bool) -> usize {
        self.rows.iter().filter(|r| !r.passes(strict)).count()
    }

    pub fn to_csv(&self, strict: bool) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                self.scenario.clone(),
                r.theorem_tag.clone(),
                r.quantity.clone(),
                r.value.to_string(),
                r.bound.to_string(),
                r.passes(strict).to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommandSummary {
    pub scenario: String,
    pub command: String,
    /// Seed the command actually ran with.
    pub seed: u64,
    pub rows: usize,
    pub failures: usize,
    pub warnings: usize,
    pub passed: bool,
    pub files: Vec<String>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: String,
    /// Command-line override, if any.
    pub seed: Option<u64>,
    pub strict: bool,
    pub passed: bool,
    pub commands: Vec<CommandSummary>,
}

/// Writes `contents` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    );
    tmp.set_file_name(name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
