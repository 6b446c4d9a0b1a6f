use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{CMatrix, SubsystemLayout, C64};
use crate::{Error, Result, EPS_NORM};

/// Normalized pure state on a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    layout: SubsystemLayout,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(layout: SubsystemLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dimension() {
            return Err(Error::arg(format!(
                "state has {} amplitudes, layout dimension is {}",
                amplitudes.len(),
                layout.total_dimension()
            )));
        }
        let norm = Float::sqrt(amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>());
        if Float::abs(norm - 1.0) > EPS_NORM {
            return Err(Error::Normalization(norm * norm));
        }
        Ok(Self { layout, amplitudes })
    }

    pub(crate) fn new_unchecked(layout: SubsystemLayout, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.total_dimension());
        Self { layout, amplitudes }
    }

    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let n = layout.total_dimension();
        if index >= n {
            return Err(Error::arg(format!("basis index {index} out of range for dimension {n}")));
        }
        let mut amps = alloc::vec![C64::new(0.0, 0.0); n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes: amps })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        Float::sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout.clone(),
            entries: CMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and the spectrum against `EPS_NORM`.
    pub fn new(layout: SubsystemLayout, entries: CMatrix) -> Result<Self> {
        if entries.dim() != layout.total_dimension() {
            return Err(Error::arg(format!(
                "density matrix is {0}x{0}, layout dimension is {1}",
                entries.dim(),
                layout.total_dimension()
            )));
        }
        if !entries.is_hermitian(EPS_NORM) {
            return Err(Error::arg("density matrix is not Hermitian"));
        }
        let tr = entries.trace();
        if Float::abs(tr.re - 1.0) > EPS_NORM || Float::abs(tr.im) > EPS_NORM {
            return Err(Error::arg(format!("density matrix trace is {tr}")));
        }
        let eig = super::eigen::hermitian_eigen(&entries)?;
        if let Some(&l) = eig.values.iter().find(|&&l| l < -EPS_NORM) {
            return Err(Error::arg(format!("density matrix has negative eigenvalue {l}")));
        }
        Ok(Self { layout, entries })
    }

    pub(crate) fn new_unchecked(layout: SubsystemLayout, entries: CMatrix) -> Self {
        debug_assert_eq!(entries.dim(), layout.total_dimension());
        Self { layout, entries }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let m = &self.entries;
        let n = m.dim();
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                s += (m[(r, c)] * m[(c, r)]).re;
            }
        }
        s
    }
}

/// The dynamical component of a dual state: pure or mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Dynamical {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl Dynamical {
    pub fn layout(&self) -> &SubsystemLayout {
        match self {
            Dynamical::Pure(s) => s.layout(),
            Dynamical::Mixed(r) => r.layout(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            Dynamical::Pure(s) => s.to_density(),
            Dynamical::Mixed(r) => r.clone(),
        }
    }

    /// Computational-basis populations `⟨b|ρ|b⟩`.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            Dynamical::Pure(s) => s.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
            Dynamical::Mixed(r) => (0..r.entries().dim()).map(|i| r.entries()[(i, i)].re).collect(),
        }
    }

    /// Bitwise equality of every stored floating-point component.
    pub fn bit_identical(&self, other: &Self) -> bool {
        fn same(a: &[C64], b: &[C64]) -> bool {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                })
        }
        match (self, other) {
            (Dynamical::Pure(a), Dynamical::Pure(b)) => {
                a.layout() == b.layout() && same(a.amplitudes(), b.amplitudes())
            }
            (Dynamical::Mixed(a), Dynamical::Mixed(b)) => {
                a.layout() == b.layout() && same(a.entries().as_slice(), b.entries().as_slice())
            }
            _ => false,
        }
    }
}

impl From<StateVector> for Dynamical {
    fn from(s: StateVector) -> Self {
        Dynamical::Pure(s)
    }
}

impl From<DensityMatrix> for Dynamical {
    fn from(r: DensityMatrix) -> Self {
        Dynamical::Mixed(r)
    }
}
