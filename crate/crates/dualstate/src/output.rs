//! Report files and JSON Lines event logs.

use std::io::{self, Write};

use clap::ValueEnum;
use dualstate_core::dual::EventRecord;
use dualstate_core::experiments::ExperimentReport;
use serde::Serialize;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Toml,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Toml => "toml",
            ReportFormat::Json => "json",
        }
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    schema: u32,
    passed: bool,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    Toml(#[from] toml::ser::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String, RenderError> {
    let file = ReportFile { schema: REPORT_SCHEMA_VERSION, passed: report.passed(), report };
    Ok(match format {
        ReportFormat::Toml => toml::to_string(&file)?,
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&file)?;
            s.push('\n');
            s
        }
    })
}

/// Writes one JSON object per event and line. The first I/O failure is kept
/// and later events are dropped.
pub struct EventLog<W: Write> {
    out: W,
    lines: u64,
    error: Option<io::Error>,
}

impl<W: Write> EventLog<W> {
    pub fn new(out: W) -> Self {
        Self { out, lines: 0, error: None }
    }

    pub fn push(&mut self, event: &EventRecord) {
        if self.error.is_some() {
            return;
        }
        let res = serde_json::to_writer(&mut self.out, event)
            .map_err(io::Error::from)
            .and_then(|()| self.out.write_all(b"\n"));
        match res {
            Ok(()) => self.lines += 1,
            Err(e) => self.error = Some(e),
        }
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    /// Flushes and hands back the writer, or the first error seen.
    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}
