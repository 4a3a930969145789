//! Report JSON and CSV tables.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::LabError;
use crate::scenario::{Job, Scenario, SCHEMA_ID};

/// How a job ended; fixes the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Job completed: certificates pass, objects were constructed.
    Completed,
    /// A witness against the inequality was found, or no modulus exists.
    Falsified,
    /// Verification or search could not decide within the budget.
    Inconclusive,
    /// The job stopped on a numerical error.
    Error,
}

impl Status {
    /// Process exit status: 0, 2, 3 and 1 respectively.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Completed => 0,
            Status::Error => 1,
            Status::Falsified => 2,
            Status::Inconclusive => 3,
        }
    }

    /// The more severe of two statuses (error > falsified > inconclusive).
    pub fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Completed => 0,
            Status::Inconclusive => 1,
            Status::Falsified => 2,
            Status::Error => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

/// Producer of the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// Package name.
    pub name: &'static str,
    /// Package version.
    pub version: &'static str,
    /// Accepted scenario format.
    pub schema: &'static str,
}

impl Artifact {
    /// This build.
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA_ID,
        }
    }
}

/// Seeds in effect; always echoed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Seeds {
    /// Verification points.
    pub sampler: u64,
    /// Optimizer starts.
    pub optimizer: u64,
    /// Random probe functionals.
    pub probes: u64,
}

/// Run metadata that is not part of the result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Seeds in effect.
    pub seeds: Seeds,
    /// Job requested on the command line instead of the scenario's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub job_override: Option<Job>,
    /// Remarks raised by the job.
    pub notes: Vec<String>,
}

/// Report body. Contains no timestamps or paths, so equal scenarios give
/// byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// Producer.
    pub artifact: Artifact,
    /// Scenario as run, defaults filled in.
    pub scenario: Scenario,
    /// Outcome class.
    pub status: Status,
    /// Exit status of the command line.
    pub exit_code: i32,
    /// Job-specific result.
    pub result: Value,
    /// Run metadata.
    pub diagnostics: Diagnostics,
}

impl Report {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// A CSV table: header row then data rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    /// File name suffix.
    pub name: &'static str,
    /// Column names.
    pub header: Vec<&'static str>,
    /// Rows, already formatted.
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Empty table.
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Appends a row.
    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// RFC 4180 text (CRLF line ends, quoting where needed).
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("fields are UTF-8"))
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return String::from("NaN");
    }
    if x.is_infinite() {
        return String::from(if x > 0.0 { "inf" } else { "-inf" });
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes `<stem>.report.json` and, if asked, `<stem>.<table>.csv` into
/// `dir` (created if missing). Returns the paths written.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    report: &Report,
    tables: &[Table],
    with_tables: bool,
) -> Result<Vec<PathBuf>, LabError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| LabError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    let path = dir.join(format!("{stem}.report.json"));
    std::fs::write(&path, report.to_json()).map_err(io(&path))?;
    written.push(path);
    if with_tables {
        for t in tables {
            let path = dir.join(format!("{stem}.{}.csv", t.name));
            let text = t.to_csv().map_err(|source| LabError::Csv {
                path: path.clone(),
                source,
            })?;
            std::fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
