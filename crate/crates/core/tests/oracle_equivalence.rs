//! Fast paths against the dense reference implementations.

mod common;

use common::*;
use qst_core::estimator::{gradient, instantaneous_loss, sgd_step};
use qst_core::initializer::{init_step, UpdateSign};
use qst_core::measurement::true_expectation;
use qst_core::oracle::*;
use qst_core::pauli::{apply_pauli, pauli_expectation};
use qst_core::rng::seeded;
use qst_core::state::{factor_distance, frobenius_distance, random_init_factor};
use qst_core::{CMatrix, Complex64, FactorState, PauliString};
use rand::Rng;

const INSTANCES: usize = 100;

#[test]
fn apply_and_expectation_match_dense() {
    let mut rng = seeded(11);
    for n in 1..=4 {
        let d = 1 << n;
        for _ in 0..INSTANCES {
            let w = PauliString::sample_uniform(n, &mut rng).unwrap();
            let r = rng.random_range(1..=3);
            let m = rand_cmatrix(d, r, &mut rng);
            let fast = apply_pauli(&w, &m).unwrap();
            let dense = dense_apply(&w, &m).unwrap();
            assert!(max_abs_diff(&fast, &dense) <= 1e-12, "{w}");
            let e = pauli_expectation(&w, &m).unwrap();
            let e_dense = trace_product(&dense_pauli(&w).unwrap(), &(&m * m.adjoint()));
            assert!((e - e_dense).abs() <= 1e-10, "{w}: {e} vs {e_dense}");
        }
    }
}

#[test]
fn hand_examples() {
    let x: PauliString = "X".parse().unwrap();
    let m = CMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
    let out = apply_pauli(&x, &m).unwrap();
    assert_eq!(out.as_slice(), &[Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]);

    let yi: PauliString = "YI".parse().unwrap();
    let mut e0 = CMatrix::zeros(4, 1);
    e0[0] = Complex64::new(1.0, 0.0);
    let out = apply_pauli(&yi, &e0).unwrap();
    assert_eq!(out[2], Complex64::new(0.0, 1.0));
    assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
}

#[test]
fn true_expectation_matches_dense() {
    let mut rng = seeded(12);
    for n in 1..=4 {
        for _ in 0..INSTANCES {
            let t = rand_truth(n, &mut rng);
            let w = PauliString::sample_uniform(n, &mut rng).unwrap();
            let rho = dense_density_truth(&t).unwrap();
            let e = true_expectation(&w, &t).unwrap();
            assert!((e - dense_expectation(&w, &rho).unwrap()).abs() <= 1e-10);
        }
    }
}

#[test]
fn loss_and_gradient_match_dense() {
    let mut rng = seeded(13);
    for n in 1..=4 {
        let d = 1 << n;
        for _ in 0..INSTANCES {
            let r = rng.random_range(1..=3);
            let u = FactorState::new(n, rand_cmatrix(d, r, &mut rng)).unwrap();
            let b = rng.random_range(1..=8);
            let batch = noisy_batch(n, b, &mut rng);
            let l = instantaneous_loss(&u, &batch).unwrap();
            let ld = dense_loss(&u, &batch).unwrap();
            assert!((l - ld).abs() <= 1e-10 * (1.0 + ld), "{l} vs {ld}");
            let g = gradient(&u, &batch).unwrap();
            let gd = dense_gradient(&u, &batch).unwrap();
            assert!(max_abs_diff(&g, &gd) <= 1e-10 * (1.0 + gd.norm()));
        }
    }
}

#[test]
fn distances_match_dense() {
    let mut rng = seeded(14);
    for n in 1..=4 {
        let d = 1 << n;
        for _ in 0..INSTANCES {
            let t = rand_truth(n, &mut rng);
            let r = rng.random_range(1..=3);
            let u = FactorState::new(n, rand_cmatrix(d, r, &mut rng) * Complex64::new(0.3, 0.0)).unwrap();
            let fast = frobenius_distance(&u, &t).unwrap();
            let dense = dense_frobenius_distance(&u, &t).unwrap();
            assert!((fast - dense).abs() <= 1e-9, "{fast} vs {dense}");
            let via_factor = factor_distance(&u, &t.factor()).unwrap();
            assert!((fast - via_factor).abs() <= 1e-9);
            let v = FactorState::new(n, rand_cmatrix(d, 2, &mut rng)).unwrap();
            let dd = (dense_density_factor(&u).unwrap() - dense_density_factor(&v).unwrap()).norm();
            assert!((factor_distance(&u, &v).unwrap() - dd).abs() <= 1e-9);
        }
    }
}

#[test]
fn frozen_distance_values() {
    let t = qst_core::state::generate_ground_truth(
        3, 2, 3.0, qst_core::SpectrumShape::Geometric, qst_core::Normalization::TraceOne, 2,
    )
    .unwrap();
    assert!(frobenius_distance(&t.factor(), &t).unwrap() <= 1e-8);
    let e0 = CMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let e1 = CMatrix::from_column_slice(2, 1, &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)]);
    let a = FactorState::new(1, e0.clone()).unwrap();
    let b = FactorState::new(1, e1.clone()).unwrap();
    assert!((factor_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    let truth = qst_core::GroundTruth::pure(1, e1.as_slice()).unwrap();
    assert!((frobenius_distance(&a, &truth).unwrap() - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn dense_pauli_is_hermitian_unitary_with_unit_norm() {
    for n in 1..=3 {
        let d = 1 << n;
        for w in PauliString::enumerate(n).unwrap() {
            let p = dense_pauli(&w).unwrap();
            assert!(max_abs_diff(&p, &p.adjoint()) == 0.0);
            assert!(max_abs_diff(&(&p * &p), &CMatrix::identity(d, d)) <= 1e-15);
            let eig = nalgebra::SymmetricEigen::new(p.clone());
            assert!(eig.eigenvalues.iter().all(|l| (l.abs() - 1.0).abs() < 1e-12));
        }
    }
}

#[test]
fn pauli_basis_orthogonality_and_completeness() {
    let mut rng = seeded(15);
    for n in 1..=3 {
        let d = 1 << n;
        let basis: Vec<CMatrix> = PauliString::enumerate(n)
            .unwrap()
            .map(|w| dense_pauli(&w).unwrap())
            .collect();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let t = (a.adjoint() * b).trace();
                let want = if i == j { d as f64 } else { 0.0 };
                assert!((t - Complex64::new(want, 0.0)).norm() <= 1e-10);
            }
        }
        let x = rand_cmatrix(d, d, &mut rng);
        let mut rec = CMatrix::zeros(d, d);
        for w in &basis {
            let c = (w.adjoint() * &x).trace();
            rec += w * (c / d as f64);
        }
        assert!(max_abs_diff(&rec, &x) <= 1e-10);
    }
}

#[test]
fn parseval_over_pauli_basis() {
    let mut rng = seeded(16);
    for n in 1..=3 {
        let d = 1 << n;
        for _ in 0..10 {
            let x = rand_hermitian(d, &mut rng);
            let sum: f64 = PauliString::enumerate(n)
                .unwrap()
                .map(|w| trace_product(&dense_pauli(&w).unwrap(), &x).powi(2))
                .sum();
            let want = d as f64 * x.norm_squared();
            assert!((sum - want).abs() <= 1e-9 * (1.0 + want));
            // 4·E[ℓ] over a uniform Pauli equals ‖Δ‖²/d
            assert!((sum / 4f64.powi(n as i32) - x.norm_squared() / d as f64).abs() <= 1e-9 * (1.0 + want));
        }
    }
}

#[test]
fn expected_gradient_identity() {
    let mut rng = seeded(17);
    for n in 1..=3 {
        let d = 1 << n;
        for _ in 0..20 {
            let t = rand_truth(n, &mut rng);
            let r = rng.random_range(1..=3);
            let u = FactorState::new(n, rand_cmatrix(d, r, &mut rng) * Complex64::new(0.4, 0.0)).unwrap();
            let b = rng.random_range(1..=16);
            let mean = exhaustive_expected_gradient(&u, &t, b).unwrap();
            let delta = dense_density_factor(&u).unwrap() - dense_density_truth(&t).unwrap();
            let want = (delta * u.u()) * Complex64::new(b as f64 / d as f64, 0.0);
            assert!(max_abs_diff(&mean, &want) <= 1e-10);
        }
        let t = rand_truth(n, &mut rng);
        let zero = exhaustive_expected_gradient(&t.factor(), &t, 4).unwrap();
        assert!(zero.norm() <= 1e-12);
    }
}

#[test]
fn population_gradient_matches_finite_differences() {
    let mut rng = seeded(18);
    for n in 1..=3 {
        let d = 1 << n;
        let t = rand_truth(n, &mut rng);
        let rho = dense_density_truth(&t).unwrap();
        let u = rand_cmatrix(d, t.rank(), &mut rng) * Complex64::new(0.5, 0.0);
        let v = rand_cmatrix(d, t.rank(), &mut rng);
        let grad = (&(&u * u.adjoint() - &rho) * &u) * Complex64::new(4.0, 0.0);
        let eps = 1e-5;
        let fd = (population_objective(&(&u + &v * Complex64::new(eps, 0.0)), &rho)
            - population_objective(&(&u - &v * Complex64::new(eps, 0.0)), &rho))
            / (2.0 * eps);
        let an = real_inner(&grad, &v);
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
    }
}

#[test]
fn sgd_step_hand_case_matches_dense() {
    let truth = qst_core::GroundTruth::pure(1, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
    let o = qst_core::measurement::measure_exact(&"Z".parse().unwrap(), &truth).unwrap();
    let u = FactorState::new(1, CMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])).unwrap();
    let eta = 0.05;
    let fast = sgd_step(&u, std::slice::from_ref(&o), eta).unwrap();
    let dense = u.u() - dense_gradient(&u, &[o]).unwrap() * Complex64::new(eta, 0.0);
    assert!(max_abs_diff(fast.u(), &dense) <= 1e-15);
    assert!((fast.u()[0].re - 0.9).abs() < 1e-15);
}

#[test]
fn power_step_mean_is_rho_times_u_and_monotone() {
    let mut rng = seeded(19);
    for n in 1..=3 {
        let d = 1 << n;
        for _ in 0..10 {
            let t = rand_truth(n, &mut rng);
            let u: Vec<Complex64> = {
                let m = rand_cmatrix(d, 1, &mut rng);
                let norm = m.norm();
                m.iter().map(|z| z / norm).collect()
            };
            let mean = exhaustive_power_mean(&u, &t).unwrap();
            let rho = dense_density_truth(&t).unwrap();
            let want = &rho * CMatrix::from_column_slice(d, 1, &u);
            let got = CMatrix::from_column_slice(d, 1, &mean);
            assert!(max_abs_diff(&got, &want) <= 1e-10);
        }
        // Mean-field power step never loses overlap with a rank-1 target.
        let t = qst_core::state::generate_ground_truth(
            n, 1, 1.0, qst_core::SpectrumShape::Geometric, qst_core::Normalization::TraceOne, rng.random(),
        )
        .unwrap();
        let v: Vec<Complex64> = t.eigvecs().iter().copied().collect();
        let overlap = |x: &[Complex64]| x.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm();
        for _ in 0..20 {
            let m = rand_cmatrix(d, 1, &mut rng);
            let norm = m.norm();
            let u: Vec<Complex64> = m.iter().map(|z| z / norm).collect();
            let eta = rng.random_range(0.01..0.5);
            let mean = exhaustive_power_mean(&u, &t).unwrap();
            let mut next: Vec<Complex64> = u.iter().zip(&mean).map(|(a, b)| a + b * eta).collect();
            let nn = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            next.iter_mut().for_each(|z| *z /= nn);
            assert!(overlap(&next) >= overlap(&u) - 1e-12);
        }
    }
}

#[test]
fn init_step_matches_dense_update() {
    let mut rng = seeded(20);
    for n in 1..=4 {
        let d = 1 << n;
        for _ in 0..INSTANCES {
            let m = rand_cmatrix(d, 1, &mut rng);
            let norm = m.norm();
            let u: Vec<Complex64> = m.iter().map(|z| z / norm).collect();
            let o = noisy_batch(n, 1, &mut rng).pop().unwrap();
            let eta = rng.random_range(0.0..0.05);
            let fast = init_step(&u, &o, eta, UpdateSign::Ascent).unwrap();
            let a = dense_pauli(&o.pauli).unwrap();
            let uv = CMatrix::from_column_slice(d, 1, &u);
            let raw = &uv + (a * &uv) * Complex64::new(eta * d as f64 * o.y, 0.0);
            let want = &raw / Complex64::new(raw.norm(), 0.0);
            assert!(max_abs_diff(&CMatrix::from_column_slice(d, 1, &fast), &want) <= 1e-12);
        }
    }
}

#[test]
fn dense_density_properties() {
    let mut rng = seeded(21);
    for n in 1..=4 {
        let t = qst_core::state::generate_ground_truth(
            n,
            1.min(1 << n),
            1.0,
            qst_core::SpectrumShape::Geometric,
            qst_core::Normalization::TraceOne,
            rng.random(),
        )
        .unwrap();
        let rho = dense_density_truth(&t).unwrap();
        assert!((rho.trace().re - 1.0).abs() <= 1e-10);
        let t = rand_truth(n, &mut rng);
        let rho = dense_density_truth(&t).unwrap();
        assert!(max_abs_diff(&rho, &rho.adjoint()) <= 1e-12);
        let min = nalgebra::SymmetricEigen::new(rho).eigenvalues.min();
        assert!(min >= -1e-10);
    }
    let u = random_init_factor(2, 1, 1.0, 0).unwrap();
    let p = dense_density_factor(&u).unwrap();
    assert!(max_abs_diff(&p, &p.adjoint()) <= 1e-12);
}
