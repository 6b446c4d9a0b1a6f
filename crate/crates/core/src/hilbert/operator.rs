use alloc::format;

use serde::{Deserialize, Serialize};

use super::{CMatrix, SubsystemLayout};
use crate::{Error, Result, EPS_NORM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    Projector,
    General,
}

/// Square operator on a layout, tagged with a kind whose algebraic property
/// was verified at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    layout: SubsystemLayout,
    matrix: CMatrix,
    kind: OperatorKind,
}

impl Operator {
    pub fn new(layout: SubsystemLayout, matrix: CMatrix, kind: OperatorKind) -> Result<Self> {
        if matrix.dim() != layout.total_dimension() {
            return Err(Error::arg(format!(
                "operator is {0}x{0}, layout dimension is {1}",
                matrix.dim(),
                layout.total_dimension()
            )));
        }
        let ok = match kind {
            OperatorKind::Hermitian => matrix.is_hermitian(EPS_NORM),
            OperatorKind::Unitary => matrix.is_unitary(EPS_NORM),
            OperatorKind::Projector => matrix.is_projector(EPS_NORM),
            OperatorKind::General => true,
        };
        if !ok {
            return Err(Error::arg(format!("matrix does not satisfy the {kind:?} invariant")));
        }
        Ok(Self { layout, matrix, kind })
    }

    pub(crate) fn new_unchecked(layout: SubsystemLayout, matrix: CMatrix, kind: OperatorKind) -> Self {
        debug_assert_eq!(matrix.dim(), layout.total_dimension());
        Self { layout, matrix, kind }
    }

    pub fn identity(layout: SubsystemLayout) -> Self {
        let n = layout.total_dimension();
        Self { layout, matrix: CMatrix::identity(n), kind: OperatorKind::Unitary }
    }

    pub fn zero(layout: SubsystemLayout) -> Self {
        let n = layout.total_dimension();
        Self { layout, matrix: CMatrix::zeros(n), kind: OperatorKind::Hermitian }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn is_hermitian(&self) -> bool {
        matches!(self.kind, OperatorKind::Hermitian | OperatorKind::Projector)
            || self.matrix.is_hermitian(EPS_NORM)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
            kind: self.kind,
        }
    }

    /// Product `self · rhs`. Unitaries compose to a unitary; anything else is general.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.layout != rhs.layout {
            return Err(Error::arg("operator product across different layouts"));
        }
        let kind = match (self.kind, rhs.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &rhs.matrix,
            kind,
        })
    }

    pub fn commutator(&self, rhs: &Self) -> Result<CMatrix> {
        if self.layout != rhs.layout {
            return Err(Error::arg("commutator across different layouts"));
        }
        Ok(self.matrix.commutator(&rhs.matrix))
    }

    /// Re-tags as `kind` after verifying the corresponding invariant.
    pub fn with_kind(self, kind: OperatorKind) -> Result<Self> {
        Self::new(self.layout, self.matrix, kind)
    }
}
