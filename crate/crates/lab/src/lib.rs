//! Scenario runner for the `ehrling-core` laboratory.
//!
//! A scenario is a JSON file naming one job and its inputs. Running it
//! yields a [`Report`] (written as `<stem>.report.json`) and a few CSV
//! tables. Reports carry no timestamps or absolute paths: equal scenarios
//! produce byte-identical output.
//!
//! ```no_run
//! let outcome = ehrling_lab::run_file("scenarios/certify.json".as_ref(), None)?;
//! println!("{}", outcome.report.to_json());
//! # Ok::<(), ehrling_lab::LabError>(())
//! ```

pub mod build;
pub mod error;
pub mod jobs;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};

pub use error::LabError;
pub use report::{Report, Status, Table};
pub use scenario::{Job, Scenario};

use report::{Artifact, Diagnostics, Seeds};

/// Report and tables of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// The report.
    pub report: Report,
    /// CSV tables.
    pub tables: Vec<Table>,
}

impl Outcome {
    /// Exit status of the command line.
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    /// Writes the report and (if enabled by the scenario) the tables into
    /// `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
        let sc = &self.report.scenario;
        report::write_outputs(dir, sc.stem(), &self.report, &self.tables, sc.output.tables)
    }
}

/// Runs a parsed scenario. Relative file references inside it resolve
/// against `base_dir`.
pub fn run(sc: &Scenario, base_dir: &Path) -> Result<Outcome, LabError> {
    run_with_override(sc.clone(), base_dir, None)
}

/// Reads, parses and runs a scenario file, optionally replacing its job.
pub fn run_file(path: &Path, job: Option<Job>) -> Result<Outcome, LabError> {
    let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let sc = Scenario::from_json(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    run_with_override(sc, base, job)
}

fn run_with_override(mut sc: Scenario, base_dir: &Path, job: Option<Job>) -> Result<Outcome, LabError> {
    let job_override = job.filter(|j| *j != sc.job);
    if let Some(j) = job_override {
        sc.job = j;
    }
    let out = jobs::run_job(&sc, base_dir)?;
    let diagnostics = Diagnostics {
        seeds: Seeds {
            sampler: sc.sampler.seed,
            optimizer: sc.optimizer.seed,
            probes: sc.params.probes.seed,
        },
        job_override,
        notes: out.notes,
    };
    let report = Report {
        artifact: Artifact::current(),
        exit_code: out.status.exit_code(),
        status: out.status,
        scenario: sc,
        result: out.result,
        diagnostics,
    };
    Ok(Outcome {
        report,
        tables: out.tables,
    })
}
