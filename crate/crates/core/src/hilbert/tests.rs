use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use super::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn layout(factors: &[(&str, usize)]) -> SubsystemLayout {
    SubsystemLayout::new(factors.iter().copied()).unwrap()
}

fn ket(factors: &[(&str, usize)], amps: &[C64]) -> StateVector {
    StateVector::new(layout(factors), amps.to_vec()).unwrap()
}

fn sigma_x() -> CMatrix {
    CMatrix::from_rows(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
}

/// Pure post-measurement state a1|s1 O1⟩ + a2|s2 O2⟩ on S(2) ⊗ O(3).
fn entangled(a1: C64, a2: C64) -> StateVector {
    let mut amps = vec![c(0.0, 0.0); 6];
    amps[1] = a1;
    amps[5] = a2;
    ket(&[("S", 2), ("O", 3)], &amps)
}

fn interference_b() -> Operator {
    // |s1⟩⟨s2| ⊗ |O1⟩⟨O2| + h.c. ; (s=0,o=1) is row 1, (s=1,o=2) is column 5
    let mut m = CMatrix::zeros(6);
    m[(1, 5)] = c(1.0, 0.0);
    m[(5, 1)] = c(1.0, 0.0);
    Operator::new(layout(&[("S", 2), ("O", 3)]), m, OperatorKind::Hermitian).unwrap()
}

#[test]
fn tensor_of_basis_kets() {
    let z = ket(&[("A", 2)], &[c(1.0, 0.0), c(0.0, 0.0)]);
    let w = ket(&[("B", 2)], &[c(1.0, 0.0), c(0.0, 0.0)]);
    let p = tensor_product(&z, &w).unwrap();
    assert_eq!(p.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
}

#[test]
fn tensor_of_superposition_with_ready_pointer() {
    let s = ket(&[("S", 2)], &[c(0.6, 0.0), c(0.8, 0.0)]);
    let o = ket(&[("O", 2)], &[c(1.0, 0.0), c(0.0, 0.0)]);
    let p = tensor_product(&s, &o).unwrap();
    assert_eq!(p.amplitudes(), &[c(0.6, 0.0), c(0.0, 0.0), c(0.8, 0.0), c(0.0, 0.0)]);
    assert!((p.norm() - 1.0).abs() < 1e-15);
}

#[test]
fn tensor_of_identities_and_label_clash() {
    let a = Operator::identity(layout(&[("A", 2)]));
    let b = Operator::identity(layout(&[("B", 3)]));
    let ab = tensor_product(&a, &b).unwrap();
    assert_eq!(ab.matrix(), &CMatrix::identity(6));
    assert_eq!(ab.kind(), OperatorKind::Unitary);
    assert_eq!(tensor_product(&a, &a), Err(Error::Composition("A".into())));
}

#[test]
fn partial_trace_of_entangled_state() {
    let psi = entangled(c(0.6, 0.0), c(0.8, 0.0));
    let r = partial_trace(&psi.to_density(), &["O"]).unwrap();
    let expected = CMatrix::diagonal(&[c(0.0, 0.0), c(0.36, 0.0), c(0.64, 0.0)]);
    assert!(r.entries().max_abs_diff(&expected) < 1e-15);
    assert_eq!(r.layout().factors()[0].label, "O");
}

#[test]
fn partial_trace_of_product_state_is_exact() {
    let s1 = ket(&[("S", 2)], &[c(1.0, 0.0), c(0.0, 0.0)]);
    let o0 = ket(&[("O", 3)], &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let rho = tensor_product(&s1, &o0).unwrap().to_density();
    let r = partial_trace(&rho, &["S"]).unwrap();
    assert_eq!(r.entries(), s1.to_density().entries());
}

#[test]
fn partial_trace_of_event_state_keeps_pointer() {
    // ρ^m_n = |O_l⟩⟨O_l| ⊗ |s_l⟩⟨s_l| with l = 2 in (O, S) ordering
    let o2 = ket(&[("O", 3)], &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let s2 = ket(&[("S", 2)], &[c(0.0, 0.0), c(1.0, 0.0)]);
    let rho = tensor_product(&o2.to_density(), &s2.to_density()).unwrap();
    let r = partial_trace(&rho, &["O"]).unwrap();
    assert_eq!(r.entries(), o2.to_density().entries());
}

#[test]
fn partial_trace_rejects_all_or_nothing() {
    let rho = entangled(c(0.6, 0.0), c(0.8, 0.0)).to_density();
    assert!(matches!(partial_trace(&rho, &[]), Err(Error::Argument(_))));
    assert!(matches!(partial_trace(&rho, &["S", "O"]), Err(Error::Argument(_))));
    assert!(matches!(partial_trace(&rho, &["X"]), Err(Error::Argument(_))));
}

#[test]
fn evolve_under_zero_hamiltonian_is_identity() {
    let psi = entangled(c(0.6, 0.0), c(0.0, 0.8));
    let h = Operator::zero(psi.layout().clone());
    assert_eq!(evolve(&psi, &h, 17.5).unwrap(), psi);
}

#[test]
fn evolve_forward_then_backward() {
    let l = layout(&[("S", 2), ("O", 3)]);
    let h = CMatrix::from_fn(6, |r, col| {
        if r == col {
            c(r as f64 * 0.3, 0.0)
        } else if r < col {
            c(0.1 * (r + col) as f64, 0.05 * col as f64)
        } else {
            c(0.1 * (r + col) as f64, -0.05 * r as f64)
        }
    });
    let h = Operator::new(l, h, OperatorKind::Hermitian).unwrap();
    let minus_h = Operator::new(h.layout().clone(), h.matrix().scale(c(-1.0, 0.0)), OperatorKind::Hermitian).unwrap();
    let psi = entangled(c(0.6, 0.0), c(0.0, 0.8));
    let there = evolve(&psi, &h, 2.3).unwrap();
    assert!((there.norm() - 1.0).abs() < EPS_NORM);
    let back = evolve(&there, &minus_h, 2.3).unwrap();
    for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
        assert!((a - b).norm() < EPS_NORM);
    }
    let rho = psi.to_density();
    let rho_t = evolve(&rho, &h, 2.3).unwrap();
    assert!((rho_t.purity() - 1.0).abs() < 10.0 * EPS_NORM);
    assert!((rho_t.trace() - 1.0).abs() < EPS_NORM);
}

#[test]
fn pi_half_sigma_x_flips_with_phase() {
    // exp(-i (π/2) σx) = cos(π/2) I - i sin(π/2) σx = -i σx, so |0⟩ ↦ -i|1⟩.
    let dt = 0.25;
    let l = layout(&[("Q", 2)]);
    let h = Operator::new(l.clone(), sigma_x().scale(c(FRAC_PI_2 / dt, 0.0)), OperatorKind::Hermitian).unwrap();
    let zero = StateVector::basis(l, 0).unwrap();
    let out = evolve(&zero, &h, dt).unwrap();
    assert!(out.amplitudes()[0].norm() < 1e-15);
    assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
}

#[test]
fn evolve_rejects_non_hermitian() {
    let l = layout(&[("Q", 2)]);
    let mut m = CMatrix::zeros(2);
    m[(0, 1)] = c(1.0, 0.0);
    let h = Operator::new(l.clone(), m, OperatorKind::General).unwrap();
    let zero = StateVector::basis(l, 0).unwrap();
    assert!(matches!(evolve(&zero, &h, 1.0), Err(Error::Argument(_))));
}

#[test]
fn apply_unitary_identity_and_inverse() {
    let psi = entangled(c(0.6, 0.0), c(0.8, 0.0));
    let id = Operator::identity(psi.layout().clone());
    assert_eq!(apply_unitary(&psi, &id).unwrap(), psi);

    let h = Operator::new(psi.layout().clone(), interference_b().matrix().clone(), OperatorKind::Hermitian).unwrap();
    let u = propagator_for(&h, 0.7).unwrap();
    let there = apply_unitary(&psi, &u).unwrap();
    let back = apply_unitary(&there, &u.adjoint()).unwrap();
    for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
        assert!((a - b).norm() < EPS_NORM);
    }
    assert!(matches!(apply_unitary(&psi, &h), Err(Error::Argument(_))));
}

#[test]
fn interference_expectation_pure_and_mixed() {
    let b = interference_b();
    let psi = entangled(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0));
    assert!((expectation(&psi, &b).unwrap() - 1.0).abs() < 1e-12);
    assert!((expectation(&psi.to_density(), &b).unwrap() - 1.0).abs() < 1e-12);

    for (a1, a2) in [(c(0.6, 0.0), c(0.8, 0.0)), (c(0.0, 0.6), c(0.8, 0.0)), (c(0.3, 0.4), c(0.0, -0.866_025_403_784_438_6))] {
        let psi = entangled(a1, a2);
        let want = 2.0 * (a1.conj() * a2).re;
        assert!((expectation(&psi, &b).unwrap() - want).abs() < 1e-12);
        let branches = [
            StateVector::basis(psi.layout().clone(), 1).unwrap().to_density(),
            StateVector::basis(psi.layout().clone(), 5).unwrap().to_density(),
        ];
        let mixed = mix(&[a1.norm_sqr(), a2.norm_sqr()], &branches).unwrap();
        assert!(expectation(&mixed, &b).unwrap().abs() < 1e-12);
    }
}

#[test]
fn expectation_of_identity_is_one() {
    let psi = entangled(c(0.6, 0.0), c(0.0, 0.8));
    let id = Operator::identity(psi.layout().clone());
    assert!((expectation(&psi, &id).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn expectation_rejects_non_hermitian_observable() {
    let psi = entangled(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2));
    let mut m = CMatrix::zeros(6);
    m[(1, 5)] = c(1.0, 0.0);
    let a = Operator::new(psi.layout().clone(), m, OperatorKind::General).unwrap();
    assert!(matches!(expectation(&psi, &a), Err(Error::Argument(_))));
    // the raw trace carries the imaginary part the checked path would reject
    assert!(psi.trace_with(a.matrix()).im.abs() > EPS_NORM);
}

#[test]
fn basis_projector_branch_and_completeness() {
    let psi = entangled(c(0.6, 0.0), c(0.8, 0.0));
    let l = psi.layout().clone();
    let p1 = basis_projector(&l, "O", 1).unwrap();
    let branch = p1.matrix().mul_vec(psi.amplitudes());
    assert!((branch[1] - c(0.6, 0.0)).norm() < 1e-15);
    assert!(branch.iter().enumerate().filter(|(i, _)| *i != 1).all(|(_, z)| z.norm() == 0.0));
    assert!((p1.matrix().trace().re - 2.0).abs() < 1e-15);

    let mut sum = CMatrix::zeros(6);
    for j in 0..3 {
        let p = basis_projector(&l, "O", j).unwrap();
        assert!(p.matrix().is_projector(0.0));
        sum = &sum + p.matrix();
    }
    assert_eq!(sum, CMatrix::identity(6));
    assert!(basis_projector(&l, "O", 3).is_err());
}

#[test]
fn mix_examples_and_errors() {
    let l = layout(&[("Q", 2)]);
    let z = StateVector::basis(l.clone(), 0).unwrap().to_density();
    let o = StateVector::basis(l.clone(), 1).unwrap().to_density();
    assert_eq!(mix(&[1.0], &[z.clone()]).unwrap(), z);
    let half = mix(&[0.5, 0.5], &[z.clone(), o.clone()]).unwrap();
    assert_eq!(half.entries(), &CMatrix::identity(2).scale(c(0.5, 0.0)));
    assert!(mix(&[-0.1, 1.1], &[z.clone(), o.clone()]).is_err());
    assert!(mix(&[0.5, 0.6], &[z, o]).is_err());
}

#[test]
fn embed_matches_kronecker() {
    let l = layout(&[("A", 2), ("B", 3), ("C", 2)]);
    let local = CMatrix::from_fn(3, |r, col| c((r * 3 + col) as f64, r as f64 - col as f64));
    let expected = CMatrix::identity(2).kron(&local).kron(&CMatrix::identity(2));
    assert_eq!(embed(&l, "B", &local).unwrap(), expected);
}

#[test]
fn trace_distance_of_pointer_states() {
    let l = layout(&[("O", 3)]);
    let r_o = DensityMatrix::new(l.clone(), CMatrix::diagonal(&[c(0.0, 0.0), c(0.36, 0.0), c(0.64, 0.0)])).unwrap();
    let r_v = StateVector::basis(l, 1).unwrap().to_density();
    assert!((trace_distance(&r_v, &r_o).unwrap() - 0.64).abs() < 1e-14);
}

#[test]
fn fidelity_agrees_across_representations() {
    let psi = entangled(c(0.6, 0.0), c(0.8, 0.0));
    let phi = entangled(c(0.8, 0.0), c(0.6, 0.0));
    let want = 0.96f64 * 0.96;
    let pp = fidelity(&psi.clone().into(), &phi.clone().into()).unwrap();
    let pm = fidelity(&psi.clone().into(), &Dynamical::Mixed(phi.to_density())).unwrap();
    let mm = fidelity(&Dynamical::Mixed(psi.to_density()), &Dynamical::Mixed(phi.to_density())).unwrap();
    for f in [pp, pm, mm] {
        assert!((f - want).abs() < 1e-7, "{f}");
    }
}

#[test]
fn commutator_of_pointer_observable_and_interference() {
    let l = layout(&[("S", 2), ("O", 3)]);
    let q = &basis_projector(&l, "O", 1).unwrap().matrix().scale(c(1.0, 0.0))
        + &basis_projector(&l, "O", 2).unwrap().matrix().scale(c(2.0, 0.0));
    let comm = q.commutator(interference_b().matrix());
    assert!((spectral_norm(&comm).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn density_tensor_matches_state_tensor() {
    let a = ket(&[("A", 2)], &[c(0.6, 0.0), c(0.0, 0.8)]);
    let b = ket(&[("B", 3)], &[c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]);
    let lhs = tensor_product(&a.to_density(), &b.to_density()).unwrap();
    let rhs = tensor_product(&a, &b).unwrap().to_density();
    assert!(lhs.entries().max_abs_diff(rhs.entries()) < 1e-15);
    let amps: Vec<f64> = rhs.entries().as_slice().iter().map(|z| z.norm()).collect();
    assert_eq!(amps.len(), 36);
}
