//! Dense complex linear algebra over labeled finite-dimensional tensor-product
//! spaces. All values are immutable; every operation returns a new value.

mod eigen;
mod layout;
mod matrix;
mod operator;
mod state;

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

pub use eigen::{block_spectral_norm, hermitian_eigen, propagator, psd_sqrt, spectral_norm, HermitianEigen};
pub use layout::{Factor, SubsystemLayout};
pub use matrix::CMatrix;
pub use operator::{Operator, OperatorKind};
pub use state::{DensityMatrix, Dynamical, StateVector};

use crate::{Error, Result, EPS_NORM};

pub type C64 = num_complex::Complex<f64>;

/// Kronecker composition of two values on disjoint layouts.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        let amps = self
            .amplitudes()
            .iter()
            .flat_map(|&a| other.amplitudes().iter().map(move |&b| a * b))
            .collect();
        Ok(StateVector::new_unchecked(layout, amps))
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        Ok(DensityMatrix::new_unchecked(layout, self.entries().kron(other.entries())))
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        let kind = if self.kind() == other.kind() {
            self.kind()
        } else {
            match (self.kind(), other.kind()) {
                (OperatorKind::Hermitian, OperatorKind::Projector)
                | (OperatorKind::Projector, OperatorKind::Hermitian) => OperatorKind::Hermitian,
                _ => OperatorKind::General,
            }
        };
        Ok(Operator::new_unchecked(layout, self.matrix().kron(other.matrix()), kind))
    }
}

pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// States that can be propagated and measured.
pub trait QuantumState: Sized {
    fn layout(&self) -> &SubsystemLayout;

    /// `Ψ → UΨ` or `ρ → UρU†`, without checking `U`.
    fn transform(&self, u: &CMatrix) -> Self;

    /// `Tr(ρA)` before the imaginary-part check.
    fn trace_with(&self, a: &CMatrix) -> C64;
}

impl QuantumState for StateVector {
    fn layout(&self) -> &SubsystemLayout {
        StateVector::layout(self)
    }

    fn transform(&self, u: &CMatrix) -> Self {
        StateVector::new_unchecked(self.layout().clone(), u.mul_vec(self.amplitudes()))
    }

    fn trace_with(&self, a: &CMatrix) -> C64 {
        let av = a.mul_vec(self.amplitudes());
        self.amplitudes().iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
    }
}

impl QuantumState for DensityMatrix {
    fn layout(&self) -> &SubsystemLayout {
        DensityMatrix::layout(self)
    }

    fn transform(&self, u: &CMatrix) -> Self {
        let m = &(u * self.entries()) * &u.adjoint();
        DensityMatrix::new_unchecked(self.layout().clone(), m)
    }

    fn trace_with(&self, a: &CMatrix) -> C64 {
        let r = self.entries();
        let n = r.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                s += r[(i, k)] * a[(k, i)];
            }
        }
        s
    }
}

impl QuantumState for Dynamical {
    fn layout(&self) -> &SubsystemLayout {
        Dynamical::layout(self)
    }

    fn transform(&self, u: &CMatrix) -> Self {
        match self {
            Dynamical::Pure(s) => Dynamical::Pure(s.transform(u)),
            Dynamical::Mixed(r) => Dynamical::Mixed(r.transform(u)),
        }
    }

    fn trace_with(&self, a: &CMatrix) -> C64 {
        match self {
            Dynamical::Pure(s) => s.trace_with(a),
            Dynamical::Mixed(r) => r.trace_with(a),
        }
    }
}

fn same_layout(a: &SubsystemLayout, b: &SubsystemLayout) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::arg("state and operator live on different layouts"))
    }
}

/// Applies a unitary operator. The operator must be tagged unitary.
pub fn apply_unitary<S: QuantumState>(state: &S, u: &Operator) -> Result<S> {
    if u.kind() != OperatorKind::Unitary {
        return Err(Error::arg(format!("apply_unitary needs a unitary, got {:?}", u.kind())));
    }
    same_layout(state.layout(), u.layout())?;
    Ok(state.transform(u.matrix()))
}

/// Propagates for time `dt` under Hermitian `h` with `U = exp(-i h dt)`.
pub fn evolve<S: QuantumState>(state: &S, h: &Operator, dt: f64) -> Result<S> {
    let u = propagator_for(h, dt)?;
    same_layout(state.layout(), u.layout())?;
    Ok(state.transform(u.matrix()))
}

/// The unitary `exp(-i h dt)` as an operator on the layout of `h`.
pub fn propagator_for(h: &Operator, dt: f64) -> Result<Operator> {
    if !h.is_hermitian() {
        return Err(Error::arg("evolution needs a Hermitian generator"));
    }
    if !dt.is_finite() {
        return Err(Error::arg("evolution time must be finite"));
    }
    if dt == 0.0 || h.matrix().as_slice().iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(Operator::identity(h.layout().clone()));
    }
    let u = propagator(h.matrix(), dt)?;
    Ok(Operator::new_unchecked(h.layout().clone(), u, OperatorKind::Unitary))
}

/// `Tr(ρA)` for Hermitian `A`, discarding an imaginary residue below `EPS_NORM`.
pub fn expectation<S: QuantumState>(state: &S, a: &Operator) -> Result<f64> {
    same_layout(state.layout(), a.layout())?;
    if !a.is_hermitian() {
        return Err(Error::arg("expectation needs a Hermitian observable"));
    }
    let v = state.trace_with(a.matrix());
    if Float::abs(v.im) > EPS_NORM {
        return Err(Error::Numerical(format!("expectation has imaginary part {}", v.im)));
    }
    Ok(v.re)
}

/// Reduced density matrix on the factors named in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    let n_factors = layout.factors().len();
    let mut kept: Vec<usize> = Vec::with_capacity(keep.len());
    for label in keep {
        let p = layout.require(label)?;
        if kept.contains(&p) {
            return Err(Error::arg(format!("factor `{label}` listed twice")));
        }
        kept.push(p);
    }
    if kept.is_empty() || kept.len() == n_factors {
        return Err(Error::arg("partial trace keeps a nonempty proper subset of factors"));
    }
    kept.sort_unstable();
    let reduced = layout.restrict(&kept)?;
    let traced: Vec<usize> = (0..n_factors).filter(|p| !kept.contains(p)).collect();

    let total = layout.total_dimension();
    // Split every composite index into (kept index, traced index).
    let split: Vec<(usize, usize)> = (0..total)
        .map(|b| {
            let k = kept.iter().fold(0, |acc, &p| acc * layout.factors()[p].dim + layout.digit(b, p));
            let t = traced.iter().fold(0, |acc, &p| acc * layout.factors()[p].dim + layout.digit(b, p));
            (k, t)
        })
        .collect();
    let traced_dim: usize = traced.iter().map(|&p| layout.factors()[p].dim).product();
    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); traced_dim];
    for (b, &(_, t)) in split.iter().enumerate() {
        groups[t].push(b);
    }

    let mut out = CMatrix::zeros(reduced.total_dimension());
    let m = rho.entries();
    for group in &groups {
        for &b1 in group {
            for &b2 in group {
                out[(split[b1].0, split[b2].0)] += m[(b1, b2)];
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(reduced, out))
}

/// Projector onto basis state `index` of factor `label`, identity on the rest.
pub fn basis_projector(layout: &SubsystemLayout, label: &str, index: usize) -> Result<Operator> {
    let p = layout.require(label)?;
    let dim = layout.factors()[p].dim;
    if index >= dim {
        return Err(Error::arg(format!(
            "index {index} out of range for factor `{label}` of dimension {dim}"
        )));
    }
    let diag: Vec<C64> = (0..layout.total_dimension())
        .map(|b| C64::new(if layout.digit(b, p) == index { 1.0 } else { 0.0 }, 0.0))
        .collect();
    Ok(Operator::new_unchecked(
        layout.clone(),
        CMatrix::diagonal(&diag),
        OperatorKind::Projector,
    ))
}

/// Embeds a local matrix acting on factor `label` as `I ⊗ A ⊗ I`.
pub fn embed(layout: &SubsystemLayout, label: &str, local: &CMatrix) -> Result<CMatrix> {
    let p = layout.require(label)?;
    let dim = layout.factors()[p].dim;
    if local.dim() != dim {
        return Err(Error::arg(format!(
            "local operator is {0}x{0} but factor `{label}` has dimension {dim}",
            local.dim()
        )));
    }
    let stride = layout.stride(p);
    Ok(CMatrix::from_fn(layout.total_dimension(), |r, c| {
        let (dr, dc) = (layout.digit(r, p), layout.digit(c, p));
        // All other digits must agree.
        if r - dr * stride == c - dc * stride {
            local[(dr, dc)]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Convex combination `Σ w_k ρ_k`.
pub fn mix(weights: &[f64], states: &[DensityMatrix]) -> Result<DensityMatrix> {
    if weights.len() != states.len() || states.is_empty() {
        return Err(Error::arg("mix needs one weight per state and at least one state"));
    }
    if let Some(w) = weights.iter().find(|&&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::arg(format!("mixture weight {w} is negative")));
    }
    let total: f64 = weights.iter().sum();
    if Float::abs(total - 1.0) > EPS_NORM {
        return Err(Error::arg(format!("mixture weights sum to {total}")));
    }
    let layout = states[0].layout();
    if states.iter().any(|s| s.layout() != layout) {
        return Err(Error::arg("mixture components live on different layouts"));
    }
    let mut acc = CMatrix::zeros(layout.total_dimension());
    for (w, s) in weights.iter().zip(states) {
        acc = &acc + &s.entries().scale(C64::new(*w, 0.0));
    }
    Ok(DensityMatrix::new_unchecked(layout.clone(), acc))
}

/// `½ Σ |λ_k(ρ − σ)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_layout(a.layout(), b.layout())?;
    let diff = a.entries() - b.entries();
    let eig = hermitian_eigen(&diff)?;
    Ok(0.5 * eig.values.iter().map(|l| Float::abs(*l)).sum::<f64>())
}

/// Uhlmann fidelity; reduces to `|⟨a|b⟩|²` or `⟨a|ρ|a⟩` when a side is pure.
pub fn fidelity(a: &Dynamical, b: &Dynamical) -> Result<f64> {
    same_layout(a.layout(), b.layout())?;
    match (a, b) {
        (Dynamical::Pure(x), Dynamical::Pure(y)) => Ok(x.inner(y).norm_sqr()),
        (Dynamical::Pure(x), Dynamical::Mixed(r)) | (Dynamical::Mixed(r), Dynamical::Pure(x)) => {
            Ok(r.trace_with(&CMatrix::outer(x.amplitudes(), x.amplitudes())).re)
        }
        (Dynamical::Mixed(r), Dynamical::Mixed(s)) => {
            let sr = psd_sqrt(r.entries())?;
            let inner = &(&sr * s.entries()) * &sr;
            let root = psd_sqrt(&inner)?;
            let t = root.trace().re;
            Ok(t * t)
        }
    }
}

#[cfg(test)]
mod tests;
