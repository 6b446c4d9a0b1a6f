use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dualstate_core::dual::EventRecord;
use dualstate_core::experiments::{run_experiment, ExperimentReport, EXPERIMENTS};

use crate::output::{render_report, EventLog, RenderError, ReportFormat};
use crate::scenario::{parse_scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub experiment: String,
    pub events: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub emit_events: bool,
    pub format: ReportFormat,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Experiment(#[from] dualstate_core::Error),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub report_path: PathBuf,
    pub events_path: Option<PathBuf>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() { 0 } else { 2 }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

pub fn report_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join(format!("{}.report.{}", config.experiment, config.format.extension()))
}

pub fn events_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join(format!("{}.events.jsonl", config.experiment))
}

/// Parses the scenario, runs the experiment and writes the report and, if
/// asked, the event log.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    if !EXPERIMENTS.contains(&config.experiment.as_str()) {
        return Err(RunError::Config(format!(
            "unknown experiment `{}` (expected one of: {})",
            config.experiment,
            EXPERIMENTS.join(", ")
        )));
    }
    if config.events == 0 {
        return Err(RunError::Config("event count must be at least 1".into()));
    }
    let path = &config.scenario_path;
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let scenario =
        parse_scenario(&text).map_err(|source| RunError::Scenario { path: path.clone(), source })?;

    fs::create_dir_all(&config.out_dir).map_err(io_error(&config.out_dir))?;
    let (report, events_path) = if config.emit_events {
        let ep = events_path(config);
        let file = File::create(&ep).map_err(io_error(&ep))?;
        let mut log = EventLog::new(BufWriter::new(file));
        let report = run_experiment(&config.experiment, &scenario, config.events, config.master_seed, &mut |e: &EventRecord| {
            log.push(e)
        })?;
        log.finish().map_err(io_error(&ep))?;
        (report, Some(ep))
    } else {
        let report = run_experiment(
            &config.experiment,
            &scenario,
            config.events,
            config.master_seed,
            &mut dualstate_core::experiments::Discard,
        )?;
        (report, None)
    };

    let rp = report_path(config);
    fs::write(&rp, render_report(&report, config.format)?).map_err(io_error(&rp))?;
    Ok(RunOutput { report, report_path: rp, events_path })
}
