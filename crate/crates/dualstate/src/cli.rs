use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use dualstate_core::experiments::EXPERIMENTS;

use crate::output::ReportFormat;
use crate::run::{run, RunConfig};

/// Run a gedanken experiment on a measurement scenario and report its claims.
///
/// Exit status: 0 when every claim passes, 2 when a claim fails, 1 on bad input.
#[derive(Debug, Parser)]
#[command(name = "dualstate", version)]
pub struct Cli {
    /// Scenario file (TOML)
    pub scenario: PathBuf,

    /// Experiment to run
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENTS))]
    pub experiment: String,

    /// Number of events
    #[arg(short = 'n', long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub events: u64,

    /// Master seed; each event draws from its own substream
    #[arg(long, env = "DUALSTATE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output directory for the report and event log
    #[arg(long, env = "DUALSTATE_OUT", default_value = "dualstate-out")]
    pub out: PathBuf,

    /// Also write one JSON line per event
    #[arg(long)]
    pub emit_events: bool,

    /// Report format
    #[arg(long, value_enum, default_value_t = ReportFormat::Toml)]
    pub format: ReportFormat,
}

impl Cli {
    pub fn config(&self) -> RunConfig {
        RunConfig {
            scenario_path: self.scenario.clone(),
            experiment: self.experiment.clone(),
            events: self.events,
            master_seed: self.seed,
            out_dir: self.out.clone(),
            emit_events: self.emit_events,
            format: self.format,
        }
    }
}

/// Parses `args`, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    if !text.contains("Usage:") {
                        let _ = writeln!(stderr, "\n{}", Cli::command().render_usage());
                    }
                    1
                }
            };
        }
    };
    match run(&cli.config()) {
        Ok(out) => {
            for v in &out.report.verdicts {
                let status = if v.pass { "PASS" } else { "FAIL" };
                let _ = writeln!(stdout, "{status} {} measured={} claimed={} tol={}", v.claim, v.measured, v.claimed, v.tolerance);
            }
            let _ = writeln!(stdout, "report: {}", out.report_path.display());
            if let Some(p) = &out.events_path {
                let _ = writeln!(stdout, "events: {}", p.display());
            }
            out.exit_code()
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            let _ = writeln!(stderr, "{}", Cli::command().render_usage());
            1
        }
    }
}
