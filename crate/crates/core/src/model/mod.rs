//! Measurement scenarios and the operators built from them.
//!
//! A scenario is a measured system `S` with amplitudes `a_i` over its basis,
//! followed by one or more observers. Each observer carries a pointer with a
//! ready state at index 0 and one pointer state per outcome of `S`
//! (`pointer dimension = dim S + 1`). Interactions are whole unitaries
//! applied at schedule steps; an observer can alternatively supply its own
//! interaction Hamiltonian.

mod builders;
mod pointer;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use builders::{
    build_initial_state, build_interference_observable, build_premeasurement_unitary,
    build_reversal_unitary, build_two_observer_chain, expand_pointer_dfs, expected_branch_state,
    pointer_observable,
};
pub use pointer::ObserverPointer;

use crate::hilbert::{embed, CMatrix, Operator, OperatorKind, SubsystemLayout, C64};
use crate::{Error, Result, EPS_NORM};

/// Total composite dimension allowed unless a scenario overrides it.
pub const DEFAULT_MAX_DIMENSION: usize = 512;

/// Amplitude normalization tolerance applied when validating scenarios.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    Pure,
    Mixed,
}

/// What an observer's premeasurement reads.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSource {
    /// The measured system `S`, in its computational basis.
    #[default]
    System,
    /// Another observer's pointer, in its pointer basis.
    Observer(String),
}

/// One local or full-layout Hermitian term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    /// Factor the term acts on; `None` means the matrix spans the whole layout.
    pub factor: Option<String>,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub terms: Vec<HamiltonianTerm>,
}

impl HamiltonianSpec {
    pub fn on_factor(factor: impl Into<String>, matrix: CMatrix) -> Self {
        Self {
            terms: vec![HamiltonianTerm { factor: Some(factor.into()), matrix }],
        }
    }

    /// Sum of all terms embedded in `layout`, checked Hermitian.
    pub fn build(&self, layout: &SubsystemLayout) -> Result<Operator> {
        let n = layout.total_dimension();
        let mut acc = CMatrix::zeros(n);
        for term in &self.terms {
            let full = match &term.factor {
                Some(label) => embed(layout, label, &term.matrix)?,
                None => {
                    if term.matrix.dim() != n {
                        return Err(Error::Scenario(format!(
                            "full-layout Hamiltonian term is {0}x{0}, layout dimension is {n}",
                            term.matrix.dim()
                        )));
                    }
                    term.matrix.clone()
                }
            };
            acc = &acc + &full;
        }
        Operator::new(layout.clone(), acc, OperatorKind::Hermitian)
            .map_err(|_| Error::Scenario("Hamiltonian is not Hermitian".into()))
    }
}

/// Continuous-time alternative to the whole-unitary premeasurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionHamiltonian {
    pub hamiltonian: HamiltonianSpec,
    /// Propagation increment; an interact step of duration `T` applies
    /// `ceil(T / dt)` equal substeps.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverSpec {
    pub label: String,
    /// Pointer-observable eigenvalues `q^O_j` for outcomes `j = 1..=dim S`.
    /// Defaults to `q_j = j`.
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub source: MeasurementSource,
    pub interaction: Option<InteractionHamiltonian>,
}

impl ObserverSpec {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            eigenvalues: None,
            source: MeasurementSource::System,
            interaction: None,
        }
    }

    pub fn reading(mut self, source: MeasurementSource) -> Self {
        self.source = source;
        self
    }

    /// `q^O_j` for `j = 0..=outcomes`; the ready state carries 0.
    pub fn eigenvalues_with_ready(&self, outcomes: usize) -> Vec<f64> {
        let mut q = vec![0.0];
        match &self.eigenvalues {
            Some(v) => q.extend_from_slice(v),
            None => q.extend((1..=outcomes).map(|j| j as f64)),
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "observer", rename_all = "snake_case")]
pub enum StepKind {
    Interact(String),
    Reverse(String),
    Free,
}

impl StepKind {
    pub fn observer(&self) -> Option<&str> {
        match self {
            StepKind::Interact(o) | StepKind::Reverse(o) => Some(o),
            StepKind::Free => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub kind: StepKind,
    pub t_start: f64,
    pub t_end: f64,
}

impl ScheduleStep {
    pub fn interact(observer: &str, t_start: f64, t_end: f64) -> Self {
        Self { kind: StepKind::Interact(observer.to_string()), t_start, t_end }
    }

    pub fn reverse(observer: &str, t_start: f64, t_end: f64) -> Self {
        Self { kind: StepKind::Reverse(observer.to_string()), t_start, t_end }
    }

    pub fn free(t_start: f64, t_end: f64) -> Self {
        Self { kind: StepKind::Free, t_start, t_end }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Time-ordered, non-overlapping steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InteractionSchedule {
    pub steps: Vec<ScheduleStep>,
}

impl InteractionSchedule {
    pub fn new(steps: Vec<ScheduleStep>) -> Self {
        Self { steps }
    }

    pub fn validate(&self, observers: &[ObserverSpec]) -> Result<()> {
        let mut prev_end = f64::NEG_INFINITY;
        for (i, step) in self.steps.iter().enumerate() {
            let bad = |reason: String| Error::Schedule { step: i, reason };
            if !step.t_start.is_finite() || !step.t_end.is_finite() {
                return Err(bad("step times must be finite".into()));
            }
            match &step.kind {
                StepKind::Interact(o) | StepKind::Reverse(o) => {
                    if !observers.iter().any(|s| &s.label == o) {
                        return Err(bad(format!("unknown observer `{o}`")));
                    }
                    if step.t_end <= step.t_start {
                        return Err(bad("coupling steps need t_end > t_start".into()));
                    }
                }
                StepKind::Free => {
                    if step.t_end < step.t_start {
                        return Err(bad("free step ends before it starts".into()));
                    }
                }
            }
            if step.t_start < prev_end {
                return Err(bad(format!(
                    "starts at {} before the previous step ends at {prev_end}",
                    step.t_start
                )));
            }
            prev_end = step.t_end;
        }
        Ok(())
    }

    fn coupling_steps(&self) -> impl Iterator<Item = &ScheduleStep> {
        self.steps.iter().filter(|s| s.kind != StepKind::Free)
    }

    /// Start of the first interaction.
    pub fn t0(&self) -> Option<f64> {
        self.steps
            .iter()
            .find(|s| matches!(s.kind, StepKind::Interact(_)))
            .map(|s| s.t_start)
    }

    /// End of the first interaction.
    pub fn t1(&self) -> Option<f64> {
        self.steps
            .iter()
            .find(|s| matches!(s.kind, StepKind::Interact(_)))
            .map(|s| s.t_end)
    }

    /// Start of the coupling step that follows the first interaction.
    pub fn t2(&self) -> Option<f64> {
        self.coupling_steps().nth(1).map(|s| s.t_start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScenario {
    pub name: String,
    pub system_label: String,
    pub amplitudes: Vec<C64>,
    pub observers: Vec<ObserverSpec>,
    pub schedule: InteractionSchedule,
    /// Unitary on `S` mapping `|s_i⟩` to `|s_i^f⟩`; identity when absent.
    pub s_final_map: Option<CMatrix>,
    /// Number of two-level cells per observer pointer; 1 means a single
    /// `(dim S + 1)`-level pointer.
    pub pointer_df_count: usize,
    pub input_kind: InputKind,
    /// Generator for free steps; zero when absent.
    pub free_hamiltonian: Option<HamiltonianSpec>,
    pub max_dimension: usize,
}

impl MeasurementScenario {
    /// One observer `O` measuring `S`, with a single interaction on `[0, 1]`.
    pub fn single_observer(amplitudes: Vec<C64>) -> Self {
        Self {
            name: "single-observer".into(),
            system_label: "S".into(),
            amplitudes,
            observers: vec![ObserverSpec::new("O")],
            schedule: InteractionSchedule::new(vec![ScheduleStep::interact("O", 0.0, 1.0)]),
            s_final_map: None,
            pointer_df_count: 1,
            input_kind: InputKind::Pure,
            free_hamiltonian: None,
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }

    /// Measure, undo, measure again.
    pub fn undoing(amplitudes: Vec<C64>) -> Self {
        let mut s = Self::single_observer(amplitudes);
        s.name = "undoing".into();
        s.schedule = InteractionSchedule::new(vec![
            ScheduleStep::interact("O", 0.0, 1.0),
            ScheduleStep::reverse("O", 2.0, 3.0),
            ScheduleStep::interact("O", 4.0, 5.0),
        ]);
        s
    }

    /// `O` measures `S` on `[0, 1]`; `O'` measures `S` on `[2, 3]`.
    pub fn two_observer(amplitudes: Vec<C64>) -> Self {
        let mut s = Self::single_observer(amplitudes);
        s.name = "two-observer".into();
        s.observers.push(ObserverSpec::new("O'"));
        s.schedule = InteractionSchedule::new(vec![
            ScheduleStep::interact("O", 0.0, 1.0),
            ScheduleStep::free(1.0, 2.0),
            ScheduleStep::interact("O'", 2.0, 3.0),
        ]);
        s
    }

    pub fn outcome_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn observer(&self, label: &str) -> Result<&ObserverSpec> {
        self.observers
            .iter()
            .find(|o| o.label == label)
            .ok_or_else(|| Error::arg(format!("scenario has no observer `{label}`")))
    }

    /// Layout labels occupied by an observer's pointer.
    pub fn observer_factor_labels(&self, label: &str) -> Vec<String> {
        if self.pointer_df_count <= 1 {
            vec![label.to_string()]
        } else {
            (1..=self.pointer_df_count).map(|k| format!("{label}[{k}]")).collect()
        }
    }

    /// `S` followed by each observer's pointer factors, in observer order.
    pub fn layout(&self) -> Result<SubsystemLayout> {
        let n = self.outcome_count();
        let mut factors: Vec<(String, usize)> = vec![(self.system_label.clone(), n)];
        for o in &self.observers {
            let d = if self.pointer_df_count <= 1 { n + 1 } else { 2 };
            factors.extend(self.observer_factor_labels(&o.label).into_iter().map(|l| (l, d)));
        }
        SubsystemLayout::new(factors)
    }

    /// Dimension the layout would have, computed without allocating it.
    pub fn total_dimension(&self) -> Option<usize> {
        let n = self.outcome_count();
        let per_observer = if self.pointer_df_count <= 1 {
            n.checked_add(1)?
        } else {
            1usize.checked_shl(u32::try_from(self.pointer_df_count).ok()?)?
        };
        self.observers
            .iter()
            .try_fold(n, |acc, _| acc.checked_mul(per_observer))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.outcome_count();
        if n < 2 {
            return Err(Error::Scenario("S needs at least two basis states".into()));
        }
        let norm: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || Float::abs(norm - 1.0) > AMPLITUDE_TOLERANCE {
            return Err(Error::Normalization(norm));
        }
        if self.observers.is_empty() {
            return Err(Error::Scenario("scenario needs at least one observer".into()));
        }
        if self.pointer_df_count == 0 {
            return Err(Error::Scenario("pointer_df_count must be at least 1".into()));
        }
        for (i, o) in self.observers.iter().enumerate() {
            if o.label.is_empty() || o.label == self.system_label {
                return Err(Error::Scenario(format!("observer label `{}` is not usable", o.label)));
            }
            if self.observers[..i].iter().any(|p| p.label == o.label) {
                return Err(Error::Scenario(format!("duplicate observer `{}`", o.label)));
            }
            if let Some(q) = &o.eigenvalues {
                if q.len() != n {
                    return Err(Error::Scenario(format!(
                        "observer `{}` lists {} eigenvalues for {n} outcomes",
                        o.label,
                        q.len()
                    )));
                }
            }
            if let MeasurementSource::Observer(src) = &o.source {
                if src == &o.label || !self.observers.iter().any(|p| &p.label == src) {
                    return Err(Error::Scenario(format!(
                        "observer `{}` reads unknown observer `{src}`",
                        o.label
                    )));
                }
                if self.pointer_df_count > 1 {
                    return Err(Error::UnsupportedScenario(
                        "many-cell pointers only support observers reading S".into(),
                    ));
                }
            }
            if let Some(ih) = &o.interaction {
                if !(ih.dt.is_finite() && ih.dt > 0.0) {
                    return Err(Error::Scenario(format!(
                        "observer `{}` interaction dt must be positive",
                        o.label
                    )));
                }
            }
        }
        if self.pointer_df_count > 1 && n != 2 {
            return Err(Error::UnsupportedScenario(
                "many-cell pointers need a binary S".into(),
            ));
        }
        let dim = self.total_dimension().unwrap_or(usize::MAX);
        if dim > self.max_dimension {
            return Err(Error::Capacity { dimension: dim, cap: self.max_dimension });
        }
        let layout = self.layout()?;
        if let Some(v) = &self.s_final_map {
            if v.dim() != n || !v.is_unitary(EPS_NORM) {
                return Err(Error::Scenario("s_final_map must be a unitary on S".into()));
            }
        }
        if let Some(h) = &self.free_hamiltonian {
            h.build(&layout)?;
        }
        for o in &self.observers {
            if let Some(ih) = &o.interaction {
                ih.hamiltonian.build(&layout)?;
            }
        }
        self.schedule.validate(&self.observers)
    }

    pub fn pointer(&self, label: &str) -> Result<ObserverPointer> {
        self.observer(label)?;
        ObserverPointer::new(self, label)
    }

    pub fn free_generator(&self, layout: &SubsystemLayout) -> Result<Operator> {
        match &self.free_hamiltonian {
            Some(h) => h.build(layout),
            None => Ok(Operator::zero(layout.clone())),
        }
    }

    /// Hex SHA-256 prefix of a canonical encoding of every field.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        fn put_str(h: &mut Sha256, s: &str) {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        }
        fn put_f(h: &mut Sha256, x: f64) {
            h.update(x.to_bits().to_le_bytes());
        }
        fn put_m(h: &mut Sha256, m: &CMatrix) {
            h.update((m.dim() as u64).to_le_bytes());
            for z in m.as_slice() {
                put_f(h, z.re);
                put_f(h, z.im);
            }
        }
        fn put_ham(h: &mut Sha256, spec: &HamiltonianSpec) {
            h.update((spec.terms.len() as u64).to_le_bytes());
            for t in &spec.terms {
                match &t.factor {
                    Some(f) => {
                        h.update([1u8]);
                        h.update((f.len() as u64).to_le_bytes());
                        h.update(f.as_bytes());
                    }
                    None => h.update([0u8]),
                }
                put_m(h, &t.matrix);
            }
        }
        put_str(&mut h, "dualstate-scenario/1");
        put_str(&mut h, &self.name);
        put_str(&mut h, &self.system_label);
        h.update((self.amplitudes.len() as u64).to_le_bytes());
        for a in &self.amplitudes {
            put_f(&mut h, a.re);
            put_f(&mut h, a.im);
        }
        h.update((self.observers.len() as u64).to_le_bytes());
        for o in &self.observers {
            put_str(&mut h, &o.label);
            match &o.eigenvalues {
                Some(q) => {
                    h.update([1u8]);
                    h.update((q.len() as u64).to_le_bytes());
                    q.iter().for_each(|&x| put_f(&mut h, x));
                }
                None => h.update([0u8]),
            }
            match &o.source {
                MeasurementSource::System => h.update([0u8]),
                MeasurementSource::Observer(s) => {
                    h.update([1u8]);
                    put_str(&mut h, s);
                }
            }
            match &o.interaction {
                Some(ih) => {
                    h.update([1u8]);
                    put_f(&mut h, ih.dt);
                    put_ham(&mut h, &ih.hamiltonian);
                }
                None => h.update([0u8]),
            }
        }
        h.update((self.schedule.steps.len() as u64).to_le_bytes());
        for s in &self.schedule.steps {
            match &s.kind {
                StepKind::Interact(o) => {
                    h.update([0u8]);
                    put_str(&mut h, o);
                }
                StepKind::Reverse(o) => {
                    h.update([1u8]);
                    put_str(&mut h, o);
                }
                StepKind::Free => h.update([2u8]),
            }
            put_f(&mut h, s.t_start);
            put_f(&mut h, s.t_end);
        }
        match &self.s_final_map {
            Some(m) => {
                h.update([1u8]);
                put_m(&mut h, m);
            }
            None => h.update([0u8]),
        }
        h.update((self.pointer_df_count as u64).to_le_bytes());
        h.update([match self.input_kind {
            InputKind::Pure => 0u8,
            InputKind::Mixed => 1u8,
        }]);
        match &self.free_hamiltonian {
            Some(spec) => {
                h.update([1u8]);
                put_ham(&mut h, spec);
            }
            None => h.update([0u8]),
        }
        h.update((self.max_dimension as u64).to_le_bytes());
        let out = h.finalize();
        out.iter().take(16).map(|b| format!("{b:02x}")).collect()
    }
}
