//! Gedanken-experiment harness. Each run drives the dual engine over `N`
//! seeded events and compares what it measured with analytic predictions,
//! producing one [`Verdict`] per claim.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dual::{
    pointer_distribution, restricted_state_event, restricted_state_statistical, DualEngine, DualState,
    EventRecord, PointerRecord,
};
use crate::hilbert::{expectation, fidelity, spectral_norm, trace_distance, Dynamical};
use crate::model::{
    build_interference_observable, expected_branch_state, pointer_observable, InputKind, MeasurementScenario,
    StepKind,
};
use crate::{Error, Result, EPS_NORM};


/// Monte Carlo verdicts pass within this many standard errors.
pub const SIGMA_BOUND: f64 = 4.0;

/// Tolerance for analytic verdicts computed through the dynamical trajectory.
pub const ANALYTIC_TOLERANCE: f64 = 1e-10;

/// Tolerance for analytic verdicts that are exact up to rounding.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Registered experiment names.
pub const EXPERIMENTS: [&str; 5] = ["collapse", "interference", "undoing", "two-observer", "breuer"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − claimed| ≤ tolerance`
    Within,
    /// `measured ≥ claimed − tolerance`
    AtLeast,
    /// `measured ≤ claimed + tolerance`
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub claimed: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub relation: Relation,
    /// Standard error behind a Monte Carlo tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub pass: bool,
}

impl Verdict {
    pub fn new(claim: impl Into<String>, relation: Relation, claimed: f64, measured: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Within => (measured - claimed).abs() <= tolerance,
            Relation::AtLeast => measured >= claimed - tolerance,
            Relation::AtMost => measured <= claimed + tolerance,
        };
        Self { claim: claim.into(), claimed, measured, tolerance, relation, sigma: None, pass }
    }

    pub fn within(claim: impl Into<String>, claimed: f64, measured: f64, tolerance: f64) -> Self {
        Self::new(claim, Relation::Within, claimed, measured, tolerance)
    }

    /// Binomial frequency check at [`SIGMA_BOUND`] standard errors.
    pub fn frequency(claim: impl Into<String>, p: f64, measured: f64, events: u64) -> Self {
        let sigma = binomial_sigma(p, events);
        let mut v = Self::within(claim, p, measured, SIGMA_BOUND * sigma);
        v.sigma = Some(sigma);
        v
    }
}

fn binomial_sigma(p: f64, events: u64) -> f64 {
    Float::sqrt((p * (1.0 - p)).max(0.0) / events as f64)
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 { 0.0 } else { self.sum / self.n as f64 }
    }

    fn summary(&self, name: impl Into<String>) -> Summary {
        let mean = self.mean();
        let std_error = if self.n < 2 {
            0.0
        } else {
            let var = (self.sum_sq - self.n as f64 * mean * mean).max(0.0) / (self.n - 1) as f64;
            Float::sqrt(var / self.n as f64)
        };
        Summary { name: name.into(), mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub scenario_digest: String,
    pub master_seed: u64,
    pub events: u64,
    pub summaries: Vec<Summary>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    fn new(experiment: &str, scenario: &MeasurementScenario, master_seed: u64, events: u64) -> Self {
        Self {
            experiment: experiment.into(),
            scenario_digest: scenario.digest(),
            master_seed,
            events,
            summaries: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, claim: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.claim == claim)
    }

    pub fn summary(&self, name: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.name == name)
    }
}

/// Receives every event an experiment runs, in event order.
pub trait EventSink {
    fn accept(&mut self, event: &EventRecord);
}

impl<F: FnMut(&EventRecord)> EventSink for F {
    fn accept(&mut self, event: &EventRecord) {
        self(event)
    }
}

/// Sink that drops every event.
#[derive(Debug, Clone, Copy, Default)]
pub struct Discard;

impl EventSink for Discard {
    fn accept(&mut self, _: &EventRecord) {}
}

/// Runs experiment `name` (one of [`EXPERIMENTS`]).
pub fn run_experiment(
    name: &str,
    scenario: &MeasurementScenario,
    events: u64,
    master_seed: u64,
    sink: &mut dyn EventSink,
) -> Result<ExperimentReport> {
    match name {
        "collapse" => run_collapse_statistics(scenario, events, master_seed, sink),
        "interference" => run_interference_test(scenario),
        "undoing" => run_undoing(scenario, events, master_seed, sink),
        "two-observer" => run_two_observer(scenario, events, master_seed, sink),
        "breuer" => run_breuer_check(scenario, events, master_seed, sink),
        other => Err(Error::arg(format!("unknown experiment `{other}`"))),
    }
}

fn require_events(events: u64) -> Result<()> {
    if events == 0 {
        Err(Error::arg("experiment needs at least one event"))
    } else {
        Ok(())
    }
}

fn require_observers(scenario: &MeasurementScenario, count: usize, experiment: &str) -> Result<()> {
    if scenario.observers.len() == count {
        Ok(())
    } else {
        Err(Error::UnsupportedScenario(format!(
            "{experiment} needs exactly {count} observer(s), scenario has {}",
            scenario.observers.len()
        )))
    }
}

/// Index of the first interact step of `observer`.
fn first_interaction(scenario: &MeasurementScenario, observer: &str) -> Result<usize> {
    scenario
        .schedule
        .steps
        .iter()
        .position(|s| s.kind == StepKind::Interact(observer.into()))
        .ok_or_else(|| Error::UnsupportedScenario(format!("observer `{observer}` never interacts")))
}

/// `|a_j|²` normalized, indexed by pointer index (ready = 0).
fn born_weights(scenario: &MeasurementScenario) -> Vec<f64> {
    let total: f64 = scenario.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let mut w = vec![0.0];
    w.extend(scenario.amplitudes.iter().map(|a| a.norm_sqr() / total));
    w
}

fn with_input(scenario: &MeasurementScenario, kind: InputKind) -> MeasurementScenario {
    let mut s = scenario.clone();
    s.input_kind = kind;
    s
}

fn interference_claim(scenario: &MeasurementScenario) -> f64 {
    let a = &scenario.amplitudes;
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    2.0 * (a[0].conj() * a[1]).re / total
}

/// Outcome frequencies and the mean pointer value against the Born weights.
pub fn run_collapse_statistics(
    scenario: &MeasurementScenario,
    events: u64,
    master_seed: u64,
    sink: &mut dyn EventSink,
) -> Result<ExperimentReport> {
    require_events(events)?;
    require_observers(scenario, 1, "collapse statistics")?;
    let engine = DualEngine::new(scenario)?;
    let label = scenario.observers[0].label.clone();
    let pointer = engine.pointer(&label)?;
    let final_state = engine.run_statistical()?.dynamical;
    let dist = pointer_distribution(&final_state, pointer);
    let born = born_weights(scenario);
    let q = scenario.observers[0].eigenvalues_with_ready(scenario.outcome_count());

    let mut counts = vec![0u64; pointer.index_count()];
    let mut q_stats = Moments::default();
    for e in 0..events {
        let rec = engine.run_event(master_seed, e)?;
        let l = rec.final_records[&label];
        counts[l] += 1;
        q_stats.push(q[l]);
        sink.accept(&rec);
    }

    let mut report = ExperimentReport::new("collapse", scenario, master_seed, events);
    for j in 1..pointer.index_count() {
        let freq = counts[j] as f64 / events as f64;
        report.verdicts.push(Verdict::within(format!("collapse.weight[{j}]"), born[j], dist.get(j), EXACT_TOLERANCE));
        report.verdicts.push(Verdict::frequency(format!("collapse.frequency[{j}]"), dist.get(j), freq, events));
        report.summaries.push(Summary {
            name: format!("frequency[{j}]"),
            mean: freq,
            std_error: binomial_sigma(freq, events),
        });
    }

    let q_mean = expectation(&final_state, &pointer_observable(scenario, &label)?)?;
    let q_var: f64 = dist.weights().iter().zip(&q).map(|(p, v)| p * (v - q_mean) * (v - q_mean)).sum();
    let sigma = Float::sqrt(q_var / events as f64);
    let mut v = Verdict::within("collapse.mean_pointer", q_mean, q_stats.mean(), (SIGMA_BOUND * sigma).max(EXACT_TOLERANCE));
    v.sigma = Some(sigma);
    report.verdicts.push(v);
    report.summaries.push(q_stats.summary(format!("q[{label}]")));
    Ok(report)
}

/// `⟨B⟩` on the pure branch state and on the branch mixture, plus the
/// commutator of `B` with the pointer observable. Runs no events.
pub fn run_interference_test(scenario: &MeasurementScenario) -> Result<ExperimentReport> {
    if scenario.outcome_count() != 2 {
        return Err(Error::UnsupportedScenario("interference test needs a binary S".into()));
    }
    let label = scenario.observers[0].label.clone();
    let at = first_interaction(scenario, &label)?;
    let b = build_interference_observable(scenario)?;
    let state_of = |kind| -> Result<Dynamical> {
        let engine = DualEngine::new(&with_input(scenario, kind))?;
        Ok(engine.state_after(at).cloned().expect("step index comes from the schedule"))
    };
    let pure = expectation(&state_of(InputKind::Pure)?, &b)?;
    let mixed = expectation(&state_of(InputKind::Mixed)?, &b)?;
    let q = pointer_observable(scenario, &label)?;
    let comm = spectral_norm(&q.commutator(&b)?)?;

    let mut report = ExperimentReport::new("interference", scenario, 0, 0);
    report.verdicts.push(Verdict::within("interference.pure", interference_claim(scenario), pure, ANALYTIC_TOLERANCE));
    report.verdicts.push(Verdict::within("interference.mixed", 0.0, mixed, EXACT_TOLERANCE));
    report.verdicts.push(Verdict::new("interference.commutator", Relation::AtLeast, 0.1, comm, 0.0));
    report.summaries.push(Summary { name: "B[pure]".into(), mean: pure, std_error: 0.0 });
    report.summaries.push(Summary { name: "B[mixed]".into(), mean: mixed, std_error: 0.0 });
    Ok(report)
}

/// Measure, reverse, measure again: the reversal restores the initial state
/// and the ready record, and the second outcome is independent of the first.
pub fn run_undoing(
    scenario: &MeasurementScenario,
    events: u64,
    master_seed: u64,
    sink: &mut dyn EventSink,
) -> Result<ExperimentReport> {
    require_events(events)?;
    require_observers(scenario, 1, "undoing")?;
    let label = scenario.observers[0].label.clone();
    let coupling: Vec<(usize, &StepKind)> = scenario
        .schedule
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind != StepKind::Free)
        .map(|(i, s)| (i, &s.kind))
        .collect();
    let [(first, StepKind::Interact(_)), (reverse, StepKind::Reverse(_)), (second, StepKind::Interact(_))] =
        coupling.as_slice()
    else {
        return Err(Error::UnsupportedScenario("undoing needs the schedule interact, reverse, interact".into()));
    };
    let (first, reverse, second) = (*first, *reverse, *second);

    let engine = DualEngine::new(scenario)?;
    let pointer = engine.pointer(&label)?;
    let k = pointer.index_count();
    let p1 = pointer_distribution(engine.state_after(first).expect("scheduled"), pointer);
    let p2 = pointer_distribution(engine.state_after(second).expect("scheduled"), pointer);
    let restored = fidelity(engine.state_after(reverse).expect("scheduled"), engine.initial_state())?;

    let mut joint = vec![vec![0u64; k]; k];
    let mut ready = 0u64;
    for e in 0..events {
        let (mut l1, mut r, mut l2) = (0, 0, 0);
        let rec = engine.run_event_with(master_seed, e, |i, _, records| {
            let l = records[0].outcome_index;
            if i == first {
                l1 = l;
            } else if i == reverse {
                r = l;
            } else if i == second {
                l2 = l;
            }
        })?;
        joint[l1][l2] += 1;
        ready += u64::from(r == 0);
        sink.accept(&rec);
    }

    let mut report = ExperimentReport::new("undoing", scenario, master_seed, events);
    report.verdicts.push(Verdict::within("undoing.fidelity", 1.0, restored, ANALYTIC_TOLERANCE));
    report.verdicts.push(Verdict::within("undoing.ready_fraction", 1.0, ready as f64 / events as f64, 0.0));
    for i in 1..k {
        for j in 1..k {
            let freq = joint[i][j] as f64 / events as f64;
            report.verdicts.push(Verdict::frequency(
                format!("undoing.independence[{i},{j}]"),
                p1.get(i) * p2.get(j),
                freq,
                events,
            ));
        }
    }
    report.summaries.push(Summary { name: "fidelity".into(), mean: restored, std_error: 0.0 });
    Ok(report)
}

/// Two observers measuring in sequence: the second stays at ready and sees an
/// uncollapsed state until it interacts, then agrees with the first in every event.
pub fn run_two_observer(
    scenario: &MeasurementScenario,
    events: u64,
    master_seed: u64,
    sink: &mut dyn EventSink,
) -> Result<ExperimentReport> {
    require_events(events)?;
    require_observers(scenario, 2, "two-observer")?;
    let (a, b) = (scenario.observers[0].label.clone(), scenario.observers[1].label.clone());
    let t1 = first_interaction(scenario, &a)?;
    let t2 = first_interaction(scenario, &b)?;
    if t2 <= t1 {
        return Err(Error::UnsupportedScenario(format!("`{a}` must interact before `{b}`")));
    }
    let engine = DualEngine::new(scenario)?;
    let (pa, pb) = (engine.pointer(&a)?.clone(), engine.pointer(&b)?.clone());
    let k = pa.index_count();

    // analytic joint distribution on the final state
    let pops = engine.run_statistical()?.dynamical.populations();
    let mut analytic = vec![vec![0.0; k]; k];
    for (idx, p) in pops.iter().enumerate() {
        if let (Some(i), Some(j)) = (pa.display(idx), pb.display(idx)) {
            analytic[i][j] += p;
        }
    }
    let off_diagonal = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| analytic[i][j].abs())
        .fold(0.0, f64::max);
    let agreement_p: f64 = (1..k).map(|i| analytic[i][i]).sum();

    let mid = engine.state_after(t1).expect("scheduled");
    let mid_fidelity = fidelity(mid, &expected_branch_state(scenario, &[a.as_str()])?)?;
    let pre_second = engine.state_after(t2 - 1).expect("scheduled");

    let mut joint = vec![vec![0u64; k]; k];
    let mut mid_ok = 0u64;
    for e in 0..events {
        let mut ok = false;
        let rec = engine.run_event_with(master_seed, e, |i, _, records: &[PointerRecord]| {
            if i == t1 {
                ok = records[0].outcome_index != 0 && records[1].outcome_index == 0;
            }
        })?;
        mid_ok += u64::from(ok);
        joint[rec.final_records[&a]][rec.final_records[&b]] += 1;
        sink.accept(&rec);
    }
    let agree: u64 = (0..k).map(|i| joint[i][i]).sum();
    let born = born_weights(scenario);

    let mut report = ExperimentReport::new("two-observer", scenario, master_seed, events);
    report.verdicts.push(Verdict::within("two_observer.mid_records", 1.0, mid_ok as f64 / events as f64, 0.0));
    report.verdicts.push(Verdict::within("two_observer.mid_state", 1.0, mid_fidelity, ANALYTIC_TOLERANCE));
    let rate = agree as f64 / events as f64;
    let sigma = binomial_sigma(agreement_p, events);
    let mut v = Verdict::within("two_observer.agreement", agreement_p, rate, (SIGMA_BOUND * sigma).max(EXACT_TOLERANCE));
    v.sigma = Some(sigma);
    report.verdicts.push(v);
    for i in 1..k {
        let freq = joint[i][i] as f64 / events as f64;
        report.verdicts.push(Verdict::frequency(format!("two_observer.joint_frequency[{i}]"), analytic[i][i], freq, events));
        report.verdicts.push(Verdict::within(
            format!("two_observer.analytic_diagonal[{i}]"),
            born[i],
            analytic[i][i],
            EXACT_TOLERANCE,
        ));
    }
    report.verdicts.push(Verdict::within("two_observer.analytic_off_diagonal", 0.0, off_diagonal, EXACT_TOLERANCE));
    if scenario.outcome_count() == 2 {
        let bop = build_interference_observable(scenario)?;
        let bval = expectation(pre_second, &bop)?;
        report.verdicts.push(Verdict::within(
            "two_observer.pre_second_interference",
            interference_claim(scenario),
            bval,
            ANALYTIC_TOLERANCE,
        ));
        report.summaries.push(Summary { name: "B[pre-second]".into(), mean: bval, std_error: 0.0 });
    }
    report.summaries.push(Summary { name: "agreement".into(), mean: rate, std_error: binomial_sigma(rate, events) });
    Ok(report)
}

/// Statistical restricted states of the pure and mixed inputs coincide, while
/// every event's restricted state differs from them by `1 − |a_l|²`.
pub fn run_breuer_check(
    scenario: &MeasurementScenario,
    events: u64,
    master_seed: u64,
    sink: &mut dyn EventSink,
) -> Result<ExperimentReport> {
    require_events(events)?;
    require_observers(scenario, 1, "Breuer check")?;
    let born = born_weights(scenario);
    if born.iter().filter(|&&p| p > EPS_NORM).count() < 2 {
        return Err(Error::UnsupportedScenario("Breuer check needs at least two nonzero amplitudes".into()));
    }
    let label = scenario.observers[0].label.clone();
    let at = first_interaction(scenario, &label)?;
    let engine = DualEngine::new(scenario)?;
    let pointer = engine.pointer(&label)?.clone();
    let restricted = |s: &MeasurementScenario| -> Result<_> {
        let e = DualEngine::new(s)?;
        restricted_state_statistical(e.state_after(at).expect("scheduled"), &pointer)
    };
    let r_pure = restricted(&with_input(scenario, InputKind::Pure))?;
    let r_mixed = restricted(&with_input(scenario, InputKind::Mixed))?;
    let statistical_gap = trace_distance(&r_pure, &r_mixed)?;
    let r_o = restricted_state_statistical(engine.state_after(at).expect("scheduled"), &pointer)?;

    // R^V depends on the record only, so distances are cached per outcome
    let mut cache: Vec<Option<f64>> = vec![None; pointer.index_count()];
    let mut distance_of = |l: usize| -> Result<f64> {
        if let Some(d) = cache[l] {
            return Ok(d);
        }
        let dual = DualState {
            dynamical: engine.initial_state().clone(),
            records: vec![PointerRecord { observer_label: label.clone(), outcome_index: l }],
        };
        let d = trace_distance(&restricted_state_event(&dual, &pointer)?, &r_o)?;
        cache[l] = Some(d);
        Ok(d)
    };

    let mut worst = 0.0f64;
    let mut distinct = 0u64;
    let mut dist_stats = Moments::default();
    for e in 0..events {
        let mut l = 0;
        let rec = engine.run_event_with(master_seed, e, |i, _, records| {
            if i == at {
                l = records[0].outcome_index;
            }
        })?;
        let d = distance_of(l)?;
        worst = worst.max((d - (1.0 - born[l])).abs());
        distinct += u64::from(d > EPS_NORM);
        dist_stats.push(d);
        sink.accept(&rec);
    }

    let mut report = ExperimentReport::new("breuer", scenario, master_seed, events);
    report.verdicts.push(Verdict::within("breuer.statistical_distance", 0.0, statistical_gap, EXACT_TOLERANCE));
    report.verdicts.push(Verdict::within("breuer.event_distance", 0.0, worst, ANALYTIC_TOLERANCE));
    report.verdicts.push(Verdict::within("breuer.distinct_fraction", 1.0, distinct as f64 / events as f64, 0.0));
    report.summaries.push(dist_stats.summary("event_distance"));
    Ok(report)
}
