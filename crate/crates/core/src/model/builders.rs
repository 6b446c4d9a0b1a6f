use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{InputKind, MeasurementScenario, MeasurementSource, ObserverPointer};
use crate::hilbert::{
    embed, CMatrix, DensityMatrix, Dynamical, Operator, OperatorKind, StateVector, SubsystemLayout, C64,
};
use crate::{Error, Result, EPS_NORM};

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn s_final(scenario: &MeasurementScenario) -> CMatrix {
    scenario
        .s_final_map
        .clone()
        .unwrap_or_else(|| CMatrix::identity(scenario.outcome_count()))
}

/// Composite index of `|s_i⟩` with every pointer at ready.
fn ready_index(layout: &SubsystemLayout, s: usize) -> usize {
    s * layout.stride(0)
}

/// `(Σ a_i|s_i⟩) ⊗ |O₀⟩ ⊗ ...` or, for mixed input, `Σ|a_i|²|s_i⟩⟨s_i| ⊗ |O₀⟩⟨O₀| ⊗ ...`.
pub fn build_initial_state(scenario: &MeasurementScenario) -> Result<Dynamical> {
    scenario.validate()?;
    let layout = scenario.layout()?;
    let n = layout.total_dimension();
    match scenario.input_kind {
        InputKind::Pure => {
            let mut amps = vec![C64::new(0.0, 0.0); n];
            for (i, &a) in scenario.amplitudes.iter().enumerate() {
                amps[ready_index(&layout, i)] = a;
            }
            Ok(StateVector::new(layout, normalized(amps))?.into())
        }
        InputKind::Mixed => {
            let mut diag = vec![C64::new(0.0, 0.0); n];
            let total: f64 = scenario.amplitudes.iter().map(|a| a.norm_sqr()).sum();
            for (i, a) in scenario.amplitudes.iter().enumerate() {
                diag[ready_index(&layout, i)] = C64::new(a.norm_sqr() / total, 0.0);
            }
            Ok(DensityMatrix::new_unchecked(layout, CMatrix::diagonal(&diag)).into())
        }
    }
}

/// Rescales amplitudes accepted within the scenario tolerance to unit norm.
fn normalized(mut amps: Vec<C64>) -> Vec<C64> {
    let norm = num_traits::Float::sqrt(amps.iter().map(|a| a.norm_sqr()).sum::<f64>());
    if num_traits::Float::abs(norm - 1.0) > f64::EPSILON {
        amps.iter_mut().for_each(|a| *a /= norm);
    }
    amps
}

fn permutation(layout: &SubsystemLayout, map: impl Fn(usize) -> usize) -> CMatrix {
    let n = layout.total_dimension();
    let mut m = CMatrix::zeros(n);
    for b in 0..n {
        m[(map(b), b)] = one();
    }
    m
}

/// Von Neumann premeasurement `|s_i⟩|O₀⟩ → |s_i^f⟩|O_i⟩` for `observer`,
/// identity on every other observer.
///
/// Off the physical subspace it acts as a cyclic pointer shift by `i + 1`
/// conditioned on `s_i`, which keeps it unitary. Many-cell pointers flip all
/// cells conditioned on `s₂`. An observer reading another observer's pointer
/// shifts its own pointer by the source's pointer index instead, so a source
/// still at ready leaves it at ready.
pub fn build_premeasurement_unitary(scenario: &MeasurementScenario, observer: &str) -> Result<Operator> {
    scenario.validate()?;
    let spec = scenario.observer(observer)?;
    let layout = scenario.layout()?;
    let pointer = ObserverPointer::new(scenario, observer)?;
    let positions = pointer.positions().to_vec();
    let modulus = scenario.outcome_count() + 1;

    let perm = match &spec.source {
        MeasurementSource::System => {
            if pointer.is_cells() {
                permutation(&layout, |b| {
                    if layout.digit(b, 0) != 1 {
                        return b;
                    }
                    positions.iter().fold(b, |acc, &p| {
                        let d = layout.digit(acc, p);
                        acc - d * layout.stride(p) + (1 - d) * layout.stride(p)
                    })
                })
            } else {
                let p = positions[0];
                permutation(&layout, |b| {
                    let s = layout.digit(b, 0);
                    let k = layout.digit(b, p);
                    let k2 = (k + s + 1) % modulus;
                    b - k * layout.stride(p) + k2 * layout.stride(p)
                })
            }
        }
        MeasurementSource::Observer(src) => {
            let sp = layout.require(src)?;
            let p = positions[0];
            permutation(&layout, |b| {
                let m = layout.digit(b, sp);
                let k = layout.digit(b, p);
                let k2 = (k + m) % modulus;
                b - k * layout.stride(p) + k2 * layout.stride(p)
            })
        }
    };

    let u = match (&spec.source, &scenario.s_final_map) {
        (MeasurementSource::System, Some(v)) => {
            let v_full = embed(&layout, &scenario.system_label, v)?;
            &v_full * &perm
        }
        _ => perm,
    };
    Ok(Operator::new_unchecked(layout, u, OperatorKind::Unitary))
}

/// `U†`, after checking `U` is unitary.
pub fn build_reversal_unitary(u: &Operator) -> Result<Operator> {
    if !u.matrix().is_unitary(EPS_NORM) {
        return Err(Error::arg("reversal needs a unitary operator"));
    }
    Ok(Operator::new_unchecked(u.layout().clone(), u.matrix().adjoint(), OperatorKind::Unitary))
}

/// Cross-branch observable `|s₁^f⟩⟨s₂^f| ⊗ |O₁⟩⟨O₂| + h.c.` for the first
/// observer, identity on the others. With no final map `s^f = s`.
pub fn build_interference_observable(scenario: &MeasurementScenario) -> Result<Operator> {
    scenario.validate()?;
    if scenario.outcome_count() != 2 {
        return Err(Error::UnsupportedScenario(
            "interference observable is defined for a binary S".into(),
        ));
    }
    let layout = scenario.layout()?;
    let pointer = ObserverPointer::new(scenario, &scenario.observers[0].label)?;
    let v = s_final(scenario);
    // X = |s₁^f⟩⟨s₂^f| on S
    let x = CMatrix::from_fn(2, |r, c| v[(r, 0)] * v[(c, 1)].conj());
    let o1 = pointer.reduced_index(1);
    let o2 = pointer.reduced_index(2);

    let n = layout.total_dimension();
    let mut zeroed = pointer.positions().to_vec();
    zeroed.push(0);
    let rest = |b: usize| -> usize {
        zeroed.iter().fold(b, |acc, &p| acc - layout.digit(acc, p) * layout.stride(p))
    };
    let mut half = CMatrix::zeros(n);
    for r in 0..n {
        if pointer.reduced_of(r) != o1 {
            continue;
        }
        for c in 0..n {
            if pointer.reduced_of(c) == o2 && rest(r) == rest(c) {
                half[(r, c)] = x[(layout.digit(r, 0), layout.digit(c, 0))];
            }
        }
    }
    let b = &half + &half.adjoint();
    Operator::new(layout, b, OperatorKind::Hermitian)
}

/// Pointer observable `Q_O = Σ_j q^O_j P̂^O_j`, with the ready state at 0.
pub fn pointer_observable(scenario: &MeasurementScenario, observer: &str) -> Result<Operator> {
    let spec = scenario.observer(observer)?;
    let pointer = ObserverPointer::new(scenario, observer)?;
    let q = spec.eigenvalues_with_ready(scenario.outcome_count());
    let diag: Vec<C64> = (0..pointer.layout().total_dimension())
        .map(|b| C64::new(pointer.display(b).map_or(0.0, |j| q[j]), 0.0))
        .collect();
    Ok(Operator::new_unchecked(pointer.layout().clone(), CMatrix::diagonal(&diag), OperatorKind::Hermitian))
}

/// Premeasurement unitaries of the two observers, in observer order.
pub fn build_two_observer_chain(scenario: &MeasurementScenario) -> Result<(Operator, Operator)> {
    if scenario.observers.len() != 2 {
        return Err(Error::UnsupportedScenario(format!(
            "two-observer chain needs exactly two observers, scenario has {}",
            scenario.observers.len()
        )));
    }
    let first = build_premeasurement_unitary(scenario, &scenario.observers[0].label)?;
    let second = build_premeasurement_unitary(scenario, &scenario.observers[1].label)?;
    Ok((first, second))
}

/// Replaces every pointer by `cells` two-level cells (Coleman–Hepp style).
/// `cells = 1` leaves the scenario as it is.
pub fn expand_pointer_dfs(scenario: &MeasurementScenario, cells: usize) -> Result<MeasurementScenario> {
    if cells == 0 {
        return Err(Error::arg("pointer expansion needs at least one cell"));
    }
    let mut out = scenario.clone();
    out.pointer_df_count = cells;
    out.validate()?;
    Ok(out)
}

/// The analytic branch state `Σ a_i |s_i^f⟩ ⊗ |O_i⟩...` after the observers in
/// `measured` have each completed one premeasurement, others at ready.
/// Mixed input yields the corresponding branch mixture.
pub fn expected_branch_state(scenario: &MeasurementScenario, measured: &[&str]) -> Result<Dynamical> {
    scenario.validate()?;
    let layout = scenario.layout()?;
    let n = layout.total_dimension();
    let outcomes = scenario.outcome_count();
    let reads_s = measured
        .iter()
        .filter(|l| scenario.observer(l).map(|o| o.source == MeasurementSource::System).unwrap_or(false))
        .count();
    let v = s_final(scenario).pow(reads_s as u32);

    // pointer digits per observer for branch i
    let branch_digits = |i: usize| -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for o in &scenario.observers {
            let pointer = ObserverPointer::new(scenario, &o.label)?;
            let index = if !measured.contains(&o.label.as_str()) {
                0
            } else {
                match &o.source {
                    MeasurementSource::System => i + 1,
                    MeasurementSource::Observer(src) if measured.contains(&src.as_str()) => i + 1,
                    MeasurementSource::Observer(_) => 0,
                }
            };
            let fill = if pointer.is_cells() && index == 2 { 1 } else { 0 };
            for &p in pointer.positions() {
                let d = if pointer.is_cells() { fill } else { index };
                out.push((p, d));
            }
        }
        Ok(out)
    };

    let mut branches: Vec<Vec<C64>> = Vec::with_capacity(outcomes);
    for i in 0..outcomes {
        let digits = branch_digits(i)?;
        let offset: usize = digits.iter().map(|&(p, d)| d * layout.stride(p)).sum();
        let mut ket = vec![C64::new(0.0, 0.0); n];
        for r in 0..outcomes {
            ket[r * layout.stride(0) + offset] = v[(r, i)];
        }
        branches.push(ket);
    }

    match scenario.input_kind {
        InputKind::Pure => {
            let mut amps = vec![C64::new(0.0, 0.0); n];
            for (a, ket) in normalized(scenario.amplitudes.clone()).iter().zip(&branches) {
                for (x, y) in amps.iter_mut().zip(ket) {
                    *x += a * y;
                }
            }
            Ok(StateVector::new(layout, amps)?.into())
        }
        InputKind::Mixed => {
            let total: f64 = scenario.amplitudes.iter().map(|a| a.norm_sqr()).sum();
            let mut acc = CMatrix::zeros(n);
            for (a, ket) in scenario.amplitudes.iter().zip(&branches) {
                acc = &acc + &CMatrix::outer(ket, ket).scale(C64::new(a.norm_sqr() / total, 0.0));
            }
            Ok(DensityMatrix::new_unchecked(layout, acc).into())
        }
    }
}
