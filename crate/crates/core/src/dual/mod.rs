//! The dual event-state engine.
//!
//! Every event carries a [`DualState`]: the dynamical component, propagated
//! unitarily through the schedule no matter what was recorded, and one
//! [`PointerRecord`] per observer. A record is resampled from the pointer
//! distribution when a step that couples the observer's pointer branches
//! ends, and left alone otherwise.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hilbert::{
    apply_unitary, block_spectral_norm, partial_trace, propagator_for, CMatrix, DensityMatrix, Dynamical,
    Operator, OperatorKind, StateVector, C64,
};
use crate::model::{
    build_initial_state, build_premeasurement_unitary, build_reversal_unitary, MeasurementScenario,
    ObserverPointer, ScheduleStep, StepKind,
};
use crate::{Error, Result, EPS_BRANCH, EPS_NORM};


/// An observer's outcome record: 0 is ready, `j ≥ 1` is outcome `q_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerRecord {
    pub observer_label: String,
    pub outcome_index: usize,
}

/// Dynamical component plus one record per observer, in observer order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub dynamical: Dynamical,
    pub records: Vec<PointerRecord>,
}

impl DualState {
    pub fn record(&self, observer: &str) -> Option<usize> {
        self.records.iter().find(|r| r.observer_label == observer).map(|r| r.outcome_index)
    }
}

/// Weights `P_j` over all pointer indices, ready included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    weights: Vec<f64>,
}

impl OutcomeDistribution {
    /// Clamps weights within `EPS_NORM` of `[0, 1]` and checks they sum to 1.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let mut w = weights;
        for p in w.iter_mut() {
            if !(p.is_finite() && *p >= -EPS_NORM && *p <= 1.0 + EPS_NORM) {
                return Err(Error::Numerical(format!("outcome weight {p} outside [0, 1]")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        let total: f64 = w.iter().sum();
        if num_traits::Float::abs(total - 1.0) > EPS_NORM {
            return Err(Error::Numerical(format!("outcome weights sum to {total}")));
        }
        Ok(Self { weights: w })
    }

    /// Clamps negatives to zero and rescales to unit sum. An all-zero input
    /// stays all-zero and fails at sampling.
    fn normalized(mut weights: Vec<f64>) -> Self {
        weights.iter_mut().for_each(|p| *p = p.max(0.0));
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter_mut().for_each(|p| *p = (*p / total).min(1.0));
        }
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, j: usize) -> f64 {
        self.weights.get(j).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Dynamical component paired with each observer's outcome distribution
/// instead of a sampled record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticalDualState {
    pub dynamical: Dynamical,
    pub distributions: BTreeMap<String, OutcomeDistribution>,
}

/// One resampling: which step, which observer, which index was drawn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step: usize,
    pub observer: String,
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_index: u64,
    pub rng_seed: u64,
    pub outcomes: Vec<StepOutcome>,
    pub final_records: BTreeMap<String, usize>,
    pub scalars: BTreeMap<String, f64>,
}

/// `P_j = Tr(P̂^O_j ρ)` over every pointer index of `pointer`.
pub fn pointer_distribution(dynamical: &Dynamical, pointer: &ObserverPointer) -> OutcomeDistribution {
    OutcomeDistribution::normalized(pointer.weights(dynamical))
}

/// Inverse-CDF draw: `j` is returned when `u ∈ [c_{j-1}, c_j)`.
pub fn sample_outcome<R: Rng + ?Sized>(dist: &OutcomeDistribution, rng: &mut R) -> Result<usize> {
    let total: f64 = dist.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let u = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (j, &p) in dist.weights.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return Ok(j);
        }
    }
    // u landed on the rounding gap at the top; the last nonzero weight owns it
    Ok(dist.weights.iter().rposition(|&p| p > 0.0).unwrap_or(0))
}

/// True when `h` has no block of norm `EPS_BRANCH` or more between two
/// distinct pointer branches of `pointer`, so its record must be conserved.
/// Configurations that display no outcome count as a branch of their own.
pub fn identity_guard(h: &Operator, pointer: &ObserverPointer) -> Result<bool> {
    if h.layout() != pointer.layout() {
        return Err(Error::arg("operator and pointer live on different layouts"));
    }
    let m = h.matrix();
    let groups: Vec<Vec<usize>> = pointer.branches().into_iter().filter(|g| !g.is_empty()).collect();
    for (i, rows) in groups.iter().enumerate() {
        for (j, cols) in groups.iter().enumerate() {
            if i == j {
                continue;
            }
            if rows.iter().all(|&r| cols.iter().all(|&c| m[(r, c)] == C64::new(0.0, 0.0))) {
                continue;
            }
            let block: Vec<Vec<C64>> = rows.iter().map(|&r| cols.iter().map(|&c| m[(r, c)]).collect()).collect();
            if block_spectral_norm(&block)? >= EPS_BRANCH {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `R_O = Tr_{¬O} ρ`.
pub fn restricted_state_statistical(dynamical: &Dynamical, pointer: &ObserverPointer) -> Result<DensityMatrix> {
    partial_trace(&dynamical.to_density(), &pointer.factor_labels())
}

/// `R^V = |O_l⟩⟨O_l|` for the observer's current record `l`.
pub fn restricted_state_event(dual: &DualState, pointer: &ObserverPointer) -> Result<DensityMatrix> {
    let l = dual
        .record(pointer.label())
        .ok_or_else(|| Error::arg(format!("no record for observer `{}`", pointer.label())))?;
    if l >= pointer.index_count() {
        return Err(Error::arg(format!("record {l} outside the pointer of `{}`", pointer.label())));
    }
    let layout = pointer.layout().restrict(pointer.positions())?;
    let mut e = vec![C64::new(0.0, 0.0); layout.total_dimension()];
    e[pointer.reduced_index(l)] = C64::new(1.0, 0.0);
    Ok(DensityMatrix::new_unchecked(layout, CMatrix::outer(&e, &e)))
}

/// `|⟨target|U|initial⟩|²`.
pub fn transition_probability(u: &Operator, initial: &StateVector, target: &StateVector) -> Result<f64> {
    let evolved = apply_unitary(initial, u)?;
    if target.layout() != evolved.layout() {
        return Err(Error::arg("target branch lives on a different layout"));
    }
    Ok(target.inner(&evolved).norm_sqr())
}

/// Per-event generator: stream `event_index` of the ChaCha8 keyed by `master_seed`.
pub fn event_rng(master_seed: u64, event_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(event_index);
    rng
}

#[derive(Debug, Clone)]
struct CompiledStep {
    spec: ScheduleStep,
    unitary: Operator,
    /// Per observer: must the record be redrawn when this step ends?
    resample: Vec<bool>,
}

/// Compiled scenario: step unitaries, identity-condition decisions and the
/// record-independent dynamical trajectory.
#[derive(Debug, Clone)]
pub struct DualEngine {
    scenario: MeasurementScenario,
    pointers: Vec<ObserverPointer>,
    steps: Vec<CompiledStep>,
    initial: Dynamical,
    /// State after each step.
    trajectory: Vec<Dynamical>,
    populations: Vec<Vec<f64>>,
}

fn ceil_steps(duration: f64, dt: f64) -> Result<u32> {
    let k = num_traits::Float::ceil(duration / dt - 1e-12).max(1.0);
    if k > f64::from(u32::MAX) {
        return Err(Error::arg("interaction needs too many substeps"));
    }
    Ok(k as u32)
}

impl DualEngine {
    pub fn new(scenario: &MeasurementScenario) -> Result<Self> {
        scenario.validate()?;
        let layout = scenario.layout()?;
        let pointers = scenario
            .observers
            .iter()
            .map(|o| scenario.pointer(&o.label))
            .collect::<Result<Vec<_>>>()?;

        let mut steps = Vec::with_capacity(scenario.schedule.steps.len());
        for spec in &scenario.schedule.steps {
            let (unitary, generator) = match &spec.kind {
                StepKind::Interact(o) | StepKind::Reverse(o) => {
                    let forward = matches!(spec.kind, StepKind::Interact(_));
                    match &scenario.observer(o)?.interaction {
                        Some(ih) => {
                            let h = ih.hamiltonian.build(&layout)?;
                            let k = ceil_steps(spec.duration(), ih.dt)?;
                            let sign = if forward { 1.0 } else { -1.0 };
                            let sub = propagator_for(&h, sign * spec.duration() / f64::from(k))?;
                            let u = Operator::new_unchecked(layout.clone(), sub.matrix().pow(k), OperatorKind::Unitary);
                            (u, h)
                        }
                        None => {
                            let u = build_premeasurement_unitary(scenario, o)?;
                            let u = if forward { u } else { build_reversal_unitary(&u)? };
                            let g = u.clone();
                            (u, g)
                        }
                    }
                }
                StepKind::Free => {
                    let h = scenario.free_generator(&layout)?;
                    (propagator_for(&h, spec.duration())?, h)
                }
            };
            let resample = pointers
                .iter()
                .map(|p| {
                    if spec.kind.observer() == Some(p.label()) {
                        Ok(true)
                    } else {
                        identity_guard(&generator, p).map(|keep| !keep)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            steps.push(CompiledStep { spec: spec.clone(), unitary, resample });
        }

        let initial = build_initial_state(scenario)?;
        let mut trajectory = Vec::with_capacity(steps.len());
        let mut current = initial.clone();
        for s in &steps {
            current = apply_unitary(&current, &s.unitary)?;
            trajectory.push(current.clone());
        }
        let populations = trajectory.iter().map(Dynamical::populations).collect();
        Ok(Self {
            scenario: scenario.clone(),
            pointers,
            steps,
            initial,
            trajectory,
            populations,
        })
    }

    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn pointers(&self) -> &[ObserverPointer] {
        &self.pointers
    }

    pub fn pointer(&self, observer: &str) -> Result<&ObserverPointer> {
        self.pointers
            .iter()
            .find(|p| p.label() == observer)
            .ok_or_else(|| Error::arg(format!("scenario has no observer `{observer}`")))
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn step_spec(&self, index: usize) -> Option<&ScheduleStep> {
        self.steps.get(index).map(|s| &s.spec)
    }

    /// Unitary applied by step `index`.
    pub fn step_unitary(&self, index: usize) -> Option<&Operator> {
        self.steps.get(index).map(|s| &s.unitary)
    }

    /// Whether step `index` redraws the record of `observer`.
    pub fn resamples(&self, index: usize, observer: &str) -> bool {
        let Some(pos) = self.pointers.iter().position(|p| p.label() == observer) else {
            return false;
        };
        self.steps.get(index).is_some_and(|s| s.resample[pos])
    }

    pub fn initial_state(&self) -> &Dynamical {
        &self.initial
    }

    /// Dynamical component after step `index`.
    pub fn state_after(&self, index: usize) -> Option<&Dynamical> {
        self.trajectory.get(index)
    }

    /// Initial dynamical state with every record at ready.
    pub fn initial_dual(&self) -> DualState {
        DualState {
            dynamical: self.initial.clone(),
            records: self
                .pointers
                .iter()
                .map(|p| PointerRecord { observer_label: p.label().into(), outcome_index: 0 })
                .collect(),
        }
    }

    fn check_dual(&self, dual: &DualState) -> Result<()> {
        if dual.dynamical.layout() != self.initial.layout() {
            return Err(Error::arg("dual state lives on a different layout"));
        }
        let ok = dual.records.len() == self.pointers.len()
            && dual
                .records
                .iter()
                .zip(&self.pointers)
                .all(|(r, p)| r.observer_label == p.label() && r.outcome_index < p.index_count());
        if ok {
            Ok(())
        } else {
            Err(Error::arg("dual state records do not match the scenario observers"))
        }
    }

    /// Propagates the dynamical component only.
    pub fn propagate(&self, dynamical: &Dynamical, index: usize) -> Result<Dynamical> {
        let step = self.steps.get(index).ok_or_else(|| Error::arg(format!("no step {index}")))?;
        apply_unitary(dynamical, &step.unitary)
    }

    /// Applies step `index` to `dual`: unitary propagation, then a fresh draw
    /// for every observer whose branches the step couples.
    pub fn step<R: Rng + ?Sized>(
        &self,
        dual: &DualState,
        index: usize,
        rng: &mut R,
    ) -> Result<(DualState, Vec<StepOutcome>)> {
        self.check_dual(dual)?;
        let dynamical = self.propagate(&dual.dynamical, index)?;
        let mut records = dual.records.clone();
        let mut outcomes = Vec::new();
        self.resample(index, &dynamical.populations(), &mut records, rng, &mut outcomes)?;
        Ok((DualState { dynamical, records }, outcomes))
    }

    fn resample<R: Rng + ?Sized>(
        &self,
        index: usize,
        pops: &[f64],
        records: &mut [PointerRecord],
        rng: &mut R,
        outcomes: &mut Vec<StepOutcome>,
    ) -> Result<()> {
        for x in 0..self.pointers.len() {
            if !self.steps[index].resample[x] {
                continue;
            }
            let dist = conditioned_distribution(&self.pointers, pops, records, x);
            let l = sample_outcome(&dist, rng)?;
            records[x].outcome_index = l;
            outcomes.push(StepOutcome { step: index, observer: records[x].observer_label.clone(), outcome: l });
        }
        Ok(())
    }

    /// Runs one event over the whole schedule.
    pub fn run_event(&self, master_seed: u64, event_index: u64) -> Result<EventRecord> {
        self.run_event_with(master_seed, event_index, |_, _, _| {})
    }

    /// Like [`run_event`](Self::run_event), calling `inspect(step, state, records)`
    /// after every step.
    pub fn run_event_with(
        &self,
        master_seed: u64,
        event_index: u64,
        mut inspect: impl FnMut(usize, &Dynamical, &[PointerRecord]),
    ) -> Result<EventRecord> {
        let mut rng = event_rng(master_seed, event_index);
        let mut records = self.initial_dual().records;
        let mut outcomes = Vec::new();
        for index in 0..self.steps.len() {
            self.resample(index, &self.populations[index], &mut records, &mut rng, &mut outcomes)?;
            inspect(index, &self.trajectory[index], &records);
        }
        let mut scalars = BTreeMap::new();
        for (r, o) in records.iter().zip(&self.scenario.observers) {
            let q = o.eigenvalues_with_ready(self.scenario.outcome_count());
            scalars.insert(format!("q[{}]", r.observer_label), q[r.outcome_index]);
        }
        Ok(EventRecord {
            event_index,
            rng_seed: master_seed,
            outcomes,
            final_records: records.into_iter().map(|r| (r.observer_label, r.outcome_index)).collect(),
            scalars,
        })
    }

    /// The dynamical component after the full schedule, computed with no
    /// record bookkeeping at all.
    pub fn run_dynamics(&self) -> Result<Dynamical> {
        let mut state = self.initial.clone();
        for index in 0..self.steps.len() {
            state = self.propagate(&state, index)?;
        }
        Ok(state)
    }

    /// Statistical dual state after step `index`, or before any step when `None`.
    pub fn statistical(&self, after: Option<usize>) -> Result<StatisticalDualState> {
        let dynamical = match after {
            None => self.initial.clone(),
            Some(i) => self.trajectory.get(i).cloned().ok_or_else(|| Error::arg(format!("no step {i}")))?,
        };
        let distributions = self
            .pointers
            .iter()
            .map(|p| (String::from(p.label()), pointer_distribution(&dynamical, p)))
            .collect();
        Ok(StatisticalDualState { dynamical, distributions })
    }

    /// Statistical dual state after the whole schedule.
    pub fn run_statistical(&self) -> Result<StatisticalDualState> {
        match self.steps.len() {
            0 => self.statistical(None),
            n => self.statistical(Some(n - 1)),
        }
    }
}

/// Observer `x`'s distribution restricted to configurations in which every
/// other observer displays its current record. An observer whose record has
/// no weight in the state is not conditioned on; if the restriction empties
/// the distribution the unconditioned one is used.
fn conditioned_distribution(
    pointers: &[ObserverPointer],
    pops: &[f64],
    records: &[PointerRecord],
    x: usize,
) -> OutcomeDistribution {
    let constraints: Vec<(usize, usize)> = pointers
        .iter()
        .enumerate()
        .filter(|&(y, _)| y != x)
        .map(|(y, _)| (y, records[y].outcome_index))
        .filter(|&(y, r)| pointers[y].weights_from_populations(pops, |_| true)[r] > EPS_NORM)
        .collect();
    let target = &pointers[x];
    if !constraints.is_empty() {
        let w = target.weights_from_populations(pops, |b| {
            constraints.iter().all(|&(y, r)| pointers[y].display(b) == Some(r))
        });
        if w.iter().sum::<f64>() > EPS_NORM {
            return OutcomeDistribution::normalized(w);
        }
    }
    OutcomeDistribution::normalized(target.weights_from_populations(pops, |_| true))
}
