use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ehrling_lab::{run_file, scenario, Job, LabError, Scenario};

/// Run ehrling-core scenarios.
#[derive(Debug, Parser)]
#[command(name = "ehrling", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its report and tables.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Run this job instead of the scenario's.
        #[arg(long, value_enum)]
        job: Option<Job>,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Write the report only.
        #[arg(long)]
        no_tables: bool,
    },
    /// Print the JSON schema of scenario files.
    Schema,
    /// Check a scenario file without running it.
    Validate {
        /// Scenario JSON file.
        scenario: PathBuf,
    },
}

fn read(path: &PathBuf) -> Result<String, LabError> {
    std::fs::read_to_string(path).map_err(|source| LabError::Io {
        path: path.clone(),
        source,
    })
}

fn execute(cmd: Command) -> Result<i32, LabError> {
    match cmd {
        Command::Run {
            scenario,
            job,
            output_dir,
            no_tables,
        } => {
            let mut outcome = run_file(&scenario, job)?;
            if no_tables {
                outcome.tables.clear();
            }
            let dir = output_dir.unwrap_or_else(|| PathBuf::from(&outcome.report.scenario.output.dir));
            for p in outcome.write(&dir)? {
                println!("{}", p.display());
            }
            let r = &outcome.report;
            eprintln!("{}: {:?} (exit {})", r.scenario.stem(), r.status, r.exit_code);
            Ok(outcome.exit_code())
        }
        Command::Schema => {
            print!("{}", scenario::json_schema());
            Ok(0)
        }
        Command::Validate { scenario } => {
            let sc = Scenario::from_json(&read(&scenario)?)?;
            println!("ok: {} ({})", sc.stem(), sc.job.name());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
