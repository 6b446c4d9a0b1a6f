use alloc::string::String;
use alloc::vec::Vec;

use super::MeasurementScenario;
use crate::hilbert::{CMatrix, Dynamical, Operator, OperatorKind, SubsystemLayout, C64};
use crate::Result;

/// How an observer's pointer sits inside the composite layout.
///
/// Maps every composite basis index to the pointer index it displays, or to
/// `None` for configurations that display no outcome (disagreeing cells of a
/// many-cell pointer). Pointer projectors are diagonal in the composite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverPointer {
    label: String,
    factor_labels: Vec<String>,
    positions: Vec<usize>,
    /// Number of pointer indices including ready.
    indices: usize,
    display: Vec<Option<usize>>,
    /// Pointer index → basis index inside the observer's reduced layout.
    reduced_index: Vec<usize>,
    reduced_dim: usize,
    layout: SubsystemLayout,
}

impl ObserverPointer {
    pub(crate) fn new(scenario: &MeasurementScenario, label: &str) -> Result<Self> {
        let layout = scenario.layout()?;
        let factor_labels = scenario.observer_factor_labels(label);
        let positions: Vec<usize> = factor_labels
            .iter()
            .map(|l| layout.require(l))
            .collect::<Result<_>>()?;
        let outcomes = scenario.outcome_count();
        let indices = outcomes + 1;
        let cells = positions.len() > 1;
        let total = layout.total_dimension();

        let display = (0..total)
            .map(|b| {
                if !cells {
                    return Some(layout.digit(b, positions[0]));
                }
                let ones = positions.iter().filter(|&&p| layout.digit(b, p) == 1).count();
                if ones == 0 {
                    Some(1)
                } else if ones == positions.len() {
                    Some(2)
                } else {
                    None
                }
            })
            .collect();

        let (reduced_index, reduced_dim) = if cells {
            let all_ones = (1usize << positions.len()) - 1;
            // ready shares the all-unexcited configuration with outcome 1
            (alloc::vec![0, 0, all_ones], 1usize << positions.len())
        } else {
            ((0..indices).collect(), indices)
        };

        Ok(Self {
            label: label.into(),
            factor_labels,
            positions,
            indices,
            display,
            reduced_index,
            reduced_dim,
            layout,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factor_labels(&self) -> Vec<&str> {
        self.factor_labels.iter().map(String::as_str).collect()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Pointer indices including ready (`dim S + 1`).
    pub fn index_count(&self) -> usize {
        self.indices
    }

    pub fn is_cells(&self) -> bool {
        self.positions.len() > 1
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    /// Pointer index displayed by composite basis state `b`.
    #[inline]
    pub fn display(&self, b: usize) -> Option<usize> {
        self.display[b]
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }

    /// Index of composite basis state `b` inside the observer's reduced layout.
    pub fn reduced_of(&self, b: usize) -> usize {
        self.positions.iter().fold(0, |acc, &p| {
            acc * self.layout.factors()[p].dim + self.layout.digit(b, p)
        })
    }

    /// Basis index, inside the observer's reduced layout, of the pointer state `j`.
    pub fn reduced_index(&self, j: usize) -> usize {
        self.reduced_index[j]
    }

    /// `P̂^O_j` on the full layout. For many-cell pointers the ready
    /// projector is zero: the unexcited configuration reads as outcome 1.
    pub fn projector(&self, j: usize) -> Operator {
        let diag: Vec<C64> = self
            .display
            .iter()
            .map(|&d| C64::new(if d == Some(j) { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Operator::new_unchecked(self.layout.clone(), CMatrix::diagonal(&diag), OperatorKind::Projector)
    }

    /// Composite basis indices grouped by displayed pointer index, with a
    /// final group for indices displaying nothing (empty for single pointers).
    pub fn branches(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); self.indices + 1];
        for (b, d) in self.display.iter().enumerate() {
            match d {
                Some(j) => groups[*j].push(b),
                None => groups[self.indices].push(b),
            }
        }
        groups
    }

    /// `P_j = Tr(P̂^O_j ρ)` for every pointer index, from basis populations.
    pub fn weights(&self, state: &Dynamical) -> Vec<f64> {
        self.weights_from_populations(&state.populations(), |_| true)
    }

    pub(crate) fn weights_from_populations(
        &self,
        pops: &[f64],
        mut admit: impl FnMut(usize) -> bool,
    ) -> Vec<f64> {
        let mut w = alloc::vec![0.0; self.indices];
        for (b, &p) in pops.iter().enumerate() {
            if let Some(j) = self.display[b] {
                if admit(b) {
                    w[j] += p;
                }
            }
        }
        w
    }
}
