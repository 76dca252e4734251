//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{bounds_csv, bounds_json, grid_bounds};
use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::experiment::{run_experiment, with_threads, RunOptions};
use crate::report::{ExperimentReport, REPORT_FILE};
use crate::summary::summarize;
use crate::verify::run_checks;

const DEFAULT_OUT: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rspg-bench",
    version,
    about = "Seeded experiment grids for randomized stochastic projected gradient methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a grid and write report.json, results.csv, series.csv and a summary table.
    Run {
        #[command(flatten)]
        grid: GridArgs,
        /// Output directory [default: the config's `out`, else ./results].
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Record wall-clock times; output is then no longer reproducible.
        #[arg(long)]
        timing: bool,
    },
    /// Print the mean/variance table of a saved report.
    Summarize {
        /// report.json, or a directory containing it.
        #[arg(long, value_name = "PATH")]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also write the table into this directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the built-in conformance checks.
    Verify {
        #[arg(long, value_name = "U64", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
    /// Print the theoretical bounds for every cell of a grid.
    Bounds {
        #[command(flatten)]
        grid: GridArgs,
        /// Also write the bounds into this directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn load_grid(grid: &GridArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&grid.config)?;
    if let Some(seed) = grid.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| BenchError::io(&path, e))
}

fn summary_text(report: &ExperimentReport, format: Format) -> Result<String> {
    let table = summarize(report)?;
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| BenchError::io("<stdout>", e))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Run {
            grid,
            out: dir,
            timing,
        } => {
            let config = load_grid(&grid)?;
            let dir = dir
                .or_else(|| config.out.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let report = with_threads(grid.threads, || {
                run_experiment(&config, RunOptions { timing })
            })?;
            report.save(&dir)?;
            let text = if report.rows.is_empty() {
                String::new()
            } else {
                summary_text(&report, grid.format)?
            };
            write_file(&dir, &format!("summary.{}", grid.format.extension()), &text)?;
            emit(out, &text)?;
            for s in &report.skipped {
                let rep = s.replication.map_or("all".to_string(), |r| r.to_string());
                eprintln!(
                    "skipped {} {} NS={} replication={rep}: {}",
                    s.scenario, s.algorithm, s.ns, s.reason
                );
            }
            Ok(0)
        }
        Command::Summarize {
            report,
            format,
            out: dir,
        } => {
            let path = if report.is_dir() {
                report.join(REPORT_FILE)
            } else {
                report
            };
            let report = ExperimentReport::load(&path)?;
            let text = summary_text(&report, format)?;
            if let Some(dir) = dir {
                write_file(&dir, &format!("summary.{}", format.extension()), &text)?;
            }
            emit(out, &text)?;
            Ok(0)
        }
        Command::Verify { seed, threads } => {
            let outcomes = with_threads(threads, || Ok(run_checks(seed)))?;
            let mut failed = 0;
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                emit(out, &format!("{tag} {}: {}\n", o.name, o.detail))?;
                failed += usize::from(!o.passed);
            }
            emit(
                out,
                &format!(
                    "{} of {} checks passed\n",
                    outcomes.len() - failed,
                    outcomes.len()
                ),
            )?;
            Ok(if failed == 0 { 0 } else { 2 })
        }
        Command::Bounds { grid, out: dir } => {
            let config = load_grid(&grid)?;
            let records = with_threads(grid.threads, || grid_bounds(&config))?;
            let text = match grid.format {
                Format::Csv => bounds_csv(&records)?,
                Format::Json => bounds_json(&records)?,
            };
            if let Some(dir) = dir {
                write_file(&dir, &format!("bounds.{}", grid.format.extension()), &text)?;
            }
            emit(out, &text)?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the command, returning the
/// process exit code: 0 on success, 1 on usage or config errors, 2 on runtime failures.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if informational {
                let _ = out.write_all(text.as_bytes());
                return 0;
            }
            let _ = err.write_all(text.as_bytes());
            return 1;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["rspg-bench"];
        argv.extend_from_slice(args);
        let code = cli_main(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run(&["--help"]).0, 0);
        assert_eq!(run(&["--version"]).0, 0);
        assert_eq!(run(&["run", "--help"]).0, 0);
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let (code, _, err) = run(&["run", "--config", "x.toml", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("--bogus"), "{err}");
        assert_eq!(run(&["frobnicate"]).0, 1);
        assert_eq!(run(&[]).0, 1);
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let (code, _, err) = run(&["run", "--config", "/nonexistent/grid.toml"]);
        assert_eq!(code, 1);
        assert!(err.contains("grid.toml"));
    }

    #[test]
    fn zero_threads_is_a_config_error() {
        assert_eq!(run(&["verify", "--threads", "0"]).0, 1);
    }
}
