//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! schema = 1
//! name = "collapse"
//! amplitudes = [0.6, 0.8]          # reals or [re, im] pairs
//! input = "pure"                   # or "mixed"
//!
//! [[observer]]
//! label = "O"
//!
//! [[step]]
//! kind = "interact"
//! observer = "O"
//! start = 0.0
//! end = 1.0
//! ```
//!
//! Optional keys: `system` (label of the measured factor, default `"S"`),
//! `pointer_cells`, `max_dimension`, `s_final` (rows of a unitary on S),
//! `[free_hamiltonian]` and, per observer, `eigenvalues`, `source` (the
//! system label or another observer) and `[observer.interaction]` with `dt`.
//! Hamiltonians are lists of `[[...term]]` tables, each with a square
//! `matrix` and an optional `factor` to embed it on.

use std::fmt;
use std::ops::Range;

use dualstate_core::hilbert::{CMatrix, C64};
use dualstate_core::model::{
    HamiltonianSpec, HamiltonianTerm, InputKind, InteractionHamiltonian, InteractionSchedule,
    MeasurementScenario, MeasurementSource, ObserverSpec, ScheduleStep, StepKind, DEFAULT_MAX_DIMENSION,
};
use dualstate_core::Error;
use serde::{Deserialize, Serialize};
use toml::Spanned;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    /// Not well-formed TOML.
    Parse,
    /// Well-formed, but keys, types or shapes do not match the schema.
    Schema,
    /// Amplitudes off unit norm by more than the tolerance.
    Norm,
    /// Overlapping, reversed or dangling schedule steps.
    Sched,
    /// Composite dimension above the cap.
    Capacity,
    /// Any other inconsistency in the scenario.
    Scenario,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Parse => "E_PARSE",
            ErrorCode::Schema => "E_SCHEMA",
            ErrorCode::Norm => "E_NORM",
            ErrorCode::Sched => "E_SCHED",
            ErrorCode::Capacity => "E_CAPACITY",
            ErrorCode::Scenario => "E_SCENARIO",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub code: ErrorCode,
    /// 1-based line the diagnostic points at, when known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} at line {line}: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
enum RawComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl From<RawComplex> for C64 {
    fn from(z: RawComplex) -> Self {
        match z {
            RawComplex::Real(re) => C64::new(re, 0.0),
            RawComplex::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for RawComplex {
    fn from(z: C64) -> Self {
        RawComplex::Pair([z.re, z.im])
    }
}

type RawMatrix = Vec<Vec<RawComplex>>;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<String>,
    matrix: Spanned<RawMatrix>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    #[serde(default)]
    term: Vec<RawTerm>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawInteraction {
    dt: f64,
    #[serde(default)]
    term: Vec<RawTerm>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawObserver {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interaction: Option<RawInteraction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum RawStepKind {
    Interact,
    Reverse,
    Free,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    kind: RawStepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    observer: Option<String>,
    start: f64,
    end: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: Spanned<u32>,
    #[serde(default = "default_name")]
    name: String,
    #[serde(default = "default_system")]
    system: String,
    amplitudes: Spanned<Vec<RawComplex>>,
    #[serde(default)]
    input: InputKind,
    #[serde(default = "default_cells")]
    pointer_cells: Spanned<usize>,
    #[serde(default = "default_cap")]
    max_dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_final: Option<Spanned<RawMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    free_hamiltonian: Option<RawHamiltonian>,
    #[serde(rename = "observer")]
    observers: Vec<Spanned<RawObserver>>,
    #[serde(rename = "step", default)]
    steps: Vec<Spanned<RawStep>>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_system() -> String {
    "S".into()
}

fn default_cells() -> Spanned<usize> {
    Spanned::new(0..0, 1)
}

fn default_cap() -> usize {
    DEFAULT_MAX_DIMENSION
}

/// Maps byte offsets to 1-based lines.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> Option<usize> {
        if span.start == 0 && span.end == 0 {
            return None;
        }
        let end = span.start.min(self.0.len());
        Some(self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1)
    }

    fn error(&self, code: ErrorCode, span: Option<Range<usize>>, message: impl Into<String>) -> ScenarioError {
        ScenarioError { code, line: span.and_then(|s| self.of(s)), message: message.into() }
    }
}

fn matrix(lines: &Lines<'_>, raw: Spanned<RawMatrix>) -> Result<CMatrix, ScenarioError> {
    let span = raw.span();
    let rows = raw.into_inner();
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(lines.error(ErrorCode::Schema, Some(span), "matrix must be square and nonempty"));
    }
    let flat: Vec<C64> = rows.into_iter().flatten().map(C64::from).collect();
    Ok(CMatrix::from_rows(flat).expect("square by construction"))
}

fn hamiltonian(lines: &Lines<'_>, terms: Vec<RawTerm>) -> Result<HamiltonianSpec, ScenarioError> {
    let terms = terms
        .into_iter()
        .map(|t| Ok(HamiltonianTerm { factor: t.factor, matrix: matrix(lines, t.matrix)? }))
        .collect::<Result<_, ScenarioError>>()?;
    Ok(HamiltonianSpec { terms })
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<MeasurementScenario, ScenarioError> {
    let lines = Lines(text);
    if let Err(e) = toml::from_str::<toml::Table>(text) {
        return Err(lines.error(ErrorCode::Parse, e.span(), e.message().trim()));
    }
    let raw: RawScenario =
        toml::from_str(text).map_err(|e| lines.error(ErrorCode::Schema, e.span(), e.message().trim()))?;

    if *raw.schema.get_ref() != SCHEMA_VERSION {
        return Err(lines.error(
            ErrorCode::Schema,
            Some(raw.schema.span()),
            format!("unsupported schema version {}, expected {SCHEMA_VERSION}", raw.schema.get_ref()),
        ));
    }
    let amplitudes_span = raw.amplitudes.span();
    let cells_span = raw.pointer_cells.span();
    let system = raw.system;

    let mut observers = Vec::with_capacity(raw.observers.len());
    for o in raw.observers {
        let o = o.into_inner();
        let source = match o.source {
            None => MeasurementSource::System,
            Some(s) if s == system => MeasurementSource::System,
            Some(s) => MeasurementSource::Observer(s),
        };
        let interaction = o
            .interaction
            .map(|ih| Ok::<_, ScenarioError>(InteractionHamiltonian { hamiltonian: hamiltonian(&lines, ih.term)?, dt: ih.dt }))
            .transpose()?;
        observers.push(ObserverSpec { label: o.label, eigenvalues: o.eigenvalues, source, interaction });
    }

    let mut steps = Vec::with_capacity(raw.steps.len());
    let mut step_spans = Vec::with_capacity(raw.steps.len());
    for s in raw.steps {
        let span = s.span();
        let s = s.into_inner();
        let kind = match (s.kind, s.observer) {
            (RawStepKind::Interact, Some(o)) => StepKind::Interact(o),
            (RawStepKind::Reverse, Some(o)) => StepKind::Reverse(o),
            (RawStepKind::Free, None) => StepKind::Free,
            (RawStepKind::Free, Some(_)) => {
                return Err(lines.error(ErrorCode::Schema, Some(span), "free steps take no observer"));
            }
            (_, None) => {
                return Err(lines.error(ErrorCode::Schema, Some(span), "interact and reverse steps need an observer"));
            }
        };
        steps.push(ScheduleStep { kind, t_start: s.start, t_end: s.end });
        step_spans.push(span);
    }

    let scenario = MeasurementScenario {
        name: raw.name,
        system_label: system,
        amplitudes: raw.amplitudes.into_inner().into_iter().map(C64::from).collect(),
        observers,
        schedule: InteractionSchedule::new(steps),
        s_final_map: raw.s_final.map(|m| matrix(&lines, m)).transpose()?,
        pointer_df_count: raw.pointer_cells.into_inner(),
        input_kind: raw.input,
        free_hamiltonian: raw.free_hamiltonian.map(|h| hamiltonian(&lines, h.term)).transpose()?,
        max_dimension: raw.max_dimension,
    };

    scenario.validate().map_err(|e| match e {
        Error::Normalization(_) => lines.error(ErrorCode::Norm, Some(amplitudes_span), e.to_string()),
        Error::Schedule { step, .. } => lines.error(ErrorCode::Sched, step_spans.get(step).cloned(), e.to_string()),
        Error::Capacity { .. } => lines.error(ErrorCode::Capacity, Some(cells_span), e.to_string()),
        other => ScenarioError { code: ErrorCode::Scenario, line: None, message: other.to_string() },
    })?;
    Ok(scenario)
}

fn raw_matrix(m: &CMatrix) -> Spanned<RawMatrix> {
    let rows = (0..m.dim()).map(|r| m.row(r).iter().copied().map(RawComplex::from).collect()).collect();
    Spanned::new(0..0, rows)
}

fn raw_terms(h: &HamiltonianSpec) -> Vec<RawTerm> {
    h.terms.iter().map(|t| RawTerm { factor: t.factor.clone(), matrix: raw_matrix(&t.matrix) }).collect()
}

/// Writes a scenario in the schema read by [`parse_scenario`].
pub fn serialize_scenario(scenario: &MeasurementScenario) -> Result<String, toml::ser::Error> {
    let raw = RawScenario {
        schema: Spanned::new(0..0, SCHEMA_VERSION),
        name: scenario.name.clone(),
        system: scenario.system_label.clone(),
        amplitudes: Spanned::new(0..0, scenario.amplitudes.iter().copied().map(RawComplex::from).collect()),
        input: scenario.input_kind,
        pointer_cells: Spanned::new(0..0, scenario.pointer_df_count),
        max_dimension: scenario.max_dimension,
        s_final: scenario.s_final_map.as_ref().map(raw_matrix),
        free_hamiltonian: scenario.free_hamiltonian.as_ref().map(|h| RawHamiltonian { term: raw_terms(h) }),
        observers: scenario
            .observers
            .iter()
            .map(|o| {
                Spanned::new(
                    0..0,
                    RawObserver {
                        label: o.label.clone(),
                        eigenvalues: o.eigenvalues.clone(),
                        source: match &o.source {
                            MeasurementSource::System => None,
                            MeasurementSource::Observer(s) => Some(s.clone()),
                        },
                        interaction: o
                            .interaction
                            .as_ref()
                            .map(|ih| RawInteraction { dt: ih.dt, term: raw_terms(&ih.hamiltonian) }),
                    },
                )
            })
            .collect(),
        steps: scenario
            .schedule
            .steps
            .iter()
            .map(|s| {
                let (kind, observer) = match &s.kind {
                    StepKind::Interact(o) => (RawStepKind::Interact, Some(o.clone())),
                    StepKind::Reverse(o) => (RawStepKind::Reverse, Some(o.clone())),
                    StepKind::Free => (RawStepKind::Free, None),
                };
                Spanned::new(0..0, RawStep { kind, observer, start: s.t_start, end: s.t_end })
            })
            .collect(),
    };
    toml::to_string(&raw)
}
