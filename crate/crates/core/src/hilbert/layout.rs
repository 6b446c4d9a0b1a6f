use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered labeled tensor factors. Basis index `b` of the composite space
/// decomposes into per-factor digits with the first factor most significant,
/// matching Kronecker-product ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct SubsystemLayout {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    total: usize,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor { label: label.into(), dim })
            .collect();
        Self::from_factors(factors)
    }

    fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::arg("layout needs at least one factor"));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim < 2 {
                return Err(Error::arg(format!(
                    "factor `{}` has dimension {}; every factor needs at least 2",
                    f.label, f.dim
                )));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::arg(format!("duplicate factor label `{}`", f.label)));
            }
        }
        let mut strides = alloc::vec![1usize; factors.len()];
        for k in (0..factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1]
                .checked_mul(factors[k + 1].dim)
                .ok_or_else(|| Error::arg("layout dimension overflows usize"))?;
        }
        let total = strides[0]
            .checked_mul(factors[0].dim)
            .ok_or_else(|| Error::arg("layout dimension overflows usize"))?;
        Ok(Self { factors, strides, total })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    #[inline]
    pub fn total_dimension(&self) -> usize {
        self.total
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub(crate) fn require(&self, label: &str) -> Result<usize> {
        self.position(label)
            .ok_or_else(|| Error::arg(format!("layout has no factor `{label}`")))
    }

    pub fn dim_of(&self, label: &str) -> Option<usize> {
        self.position(label).map(|p| self.factors[p].dim)
    }

    /// Digit of factor `pos` in composite basis index `index`.
    #[inline]
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.factors[pos].dim
    }

    #[inline]
    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.factors.len());
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Concatenation `self ⊗ other`. Fails on any shared label.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if let Some(f) = other.factors.iter().find(|f| self.position(&f.label).is_some()) {
            return Err(Error::Composition(f.label.clone()));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::from_factors(factors)
    }

    /// Layout containing only the factors at `positions`, in layout order.
    pub(crate) fn restrict(&self, positions: &[usize]) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| positions.contains(i))
            .map(|(_, f)| f.clone())
            .collect();
        Self::from_factors(factors)
    }
}

impl TryFrom<Vec<Factor>> for SubsystemLayout {
    type Error = Error;
    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        Self::from_factors(factors)
    }
}

impl From<SubsystemLayout> for Vec<Factor> {
    fn from(layout: SubsystemLayout) -> Self {
        layout.factors
    }
}
