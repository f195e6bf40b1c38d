#![allow(dead_code)]

use qst_core::measurement::measure_exact;
use qst_core::rng::QstRng;
use qst_core::state::generate_ground_truth;
use qst_core::{CMatrix, Complex64, GroundTruth, MeasurementOutcome, Normalization, PauliString, SpectrumShape};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn cgauss(rng: &mut QstRng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn rand_cmatrix(rows: usize, cols: usize, rng: &mut QstRng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

pub fn rand_hermitian(d: usize, rng: &mut QstRng) -> CMatrix {
    let a = rand_cmatrix(d, d, rng);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random rank/kappa/normalization truth at `n` qubits.
pub fn rand_truth(n: usize, rng: &mut QstRng) -> GroundTruth {
    let d = 1usize << n;
    let r = rng.random_range(1..=d.min(3));
    let kappa = if r == 1 { 1.0 } else { rng.random_range(1.0..8.0) };
    let shape = if rng.random_bool(0.5) { SpectrumShape::Geometric } else { SpectrumShape::Linear };
    let norm = if rng.random_bool(0.5) { Normalization::TraceOne } else { Normalization::SpectralOne };
    generate_ground_truth(n, r, kappa, shape, norm, rng.random()).unwrap()
}

pub fn exact_batch(truth: &GroundTruth, b: usize, rng: &mut QstRng) -> Vec<MeasurementOutcome> {
    (0..b)
        .map(|_| {
            let w = PauliString::sample_uniform(truth.num_qubits(), rng).unwrap();
            measure_exact(&w, truth).unwrap()
        })
        .collect()
}

/// Batch with arbitrary targets `y`, not tied to any state.
pub fn noisy_batch(n: usize, b: usize, rng: &mut QstRng) -> Vec<MeasurementOutcome> {
    (0..b)
        .map(|_| {
            let w = PauliString::sample_uniform(n, rng).unwrap();
            MeasurementOutcome::exact(w, rng.random_range(-1.0..1.0))
        })
        .collect()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
