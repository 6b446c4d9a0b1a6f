//! Scenario files, reports, event logs and the `dualstate` command line
//! front end for [`dualstate_core`].

pub mod cli;
pub mod output;
pub mod run;
pub mod scenario;

pub use output::{render_report, EventLog, ReportFormat};
pub use run::{run, RunConfig, RunError, RunOutput};
pub use scenario::{parse_scenario, serialize_scenario, ErrorCode, ScenarioError};
