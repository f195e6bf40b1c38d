//! Monte-Carlo checks with fixed seeds. Tolerances are set from the sampling
//! distribution (chi-square quantiles, standard errors), not tuned to the seed.

mod common;

use common::*;
use qst_core::initializer::{
    boosted_init, geometric_median, replica_source, run_online_init, spectral_init, InitConfig,
};
use qst_core::measurement::{measure_exact, measure_shots};
use qst_core::oracle::{dense_density_factor, dense_density_truth, dense_pauli};
use qst_core::rng::seeded;
use qst_core::state::{frobenius_distance, generate_ground_truth, random_init_factor};
use qst_core::{
    BatchSource, CMatrix, Complex64, FactorState, GroundTruth, MeasurementMode, Normalization, PauliString,
    SpectrumShape,
};

/// 99% quantile of χ² with 15 degrees of freedom.
const CHI2_99_15: f64 = 30.577_914_166_892_49;
/// Bonferroni-corrected over 16 slots.
const CHI2_99_15_BONF16: f64 = 39.072_788_287_693_51;

fn chi_square(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

#[test]
fn uniform_pauli_sampling_passes_chi_square() {
    let mut rng = seeded(101);
    let mut counts = [0u64; 16];
    for _ in 0..100_000 {
        let w = PauliString::sample_uniform(2, &mut rng).unwrap();
        counts[w.to_index().unwrap() as usize] += 1;
    }
    let stat = chi_square(&counts);
    assert!(stat <= CHI2_99_15, "chi-square {stat}");
}

#[test]
fn batch_slots_are_uniform() {
    let t = generate_ground_truth(2, 1, 1.0, SpectrumShape::Geometric, Normalization::TraceOne, 3).unwrap();
    let mut src = BatchSource::new(&t, 16, MeasurementMode::Exact, seeded(102)).unwrap();
    let mut counts = vec![[0u64; 16]; 16];
    for _ in 0..10_000 {
        for (slot, o) in src.next_batch().unwrap().iter().enumerate() {
            counts[slot][o.pauli.to_index().unwrap() as usize] += 1;
        }
    }
    for (slot, c) in counts.iter().enumerate() {
        let stat = chi_square(c);
        assert!(stat <= CHI2_99_15_BONF16, "slot {slot}: chi-square {stat}");
    }
}

#[test]
fn binomial_moments_of_shot_noise() {
    let t = GroundTruth::pure(1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    let x: PauliString = "X".parse().unwrap();
    let mut rng = seeded(103);
    let ys: Vec<f64> = (0..1000).map(|_| measure_shots(&x, &t, 10_000, &mut rng).unwrap().y).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (ys.len() - 1) as f64).sqrt();
    assert!(mean.abs() <= 0.01, "mean {mean}");
    assert!((sd - 0.01).abs() <= 0.002, "sd {sd}");
}

#[test]
fn initial_factor_second_moment() {
    let mean = (0..1000u64)
        .map(|s| random_init_factor(7, 1, 0.01, s).unwrap().trace())
        .sum::<f64>()
        / 1000.0;
    assert!((mean - 0.0256).abs() <= 0.00256, "mean ‖U‖² {mean}");
}

/// `E[d·y·A] = ρ⋆` entrywise, within 5 standard errors.
#[test]
fn stochastic_estimator_is_unbiased_for_rho() {
    let n = 2;
    let d = 4;
    let t = generate_ground_truth(n, 2, 2.0, SpectrumShape::Geometric, Normalization::TraceOne, 9).unwrap();
    let rho = dense_density_truth(&t).unwrap();
    let mut rng = seeded(104);
    let draws = 100_000;
    let mut sum = CMatrix::zeros(d, d);
    let mut sum_sq = nalgebra::DMatrix::<f64>::zeros(2 * d, d);
    for _ in 0..draws {
        let w = PauliString::sample_uniform(n, &mut rng).unwrap();
        let o = measure_shots(&w, &t, 50, &mut rng).unwrap();
        let term = dense_pauli(&w).unwrap() * Complex64::new(d as f64 * o.y, 0.0);
        for i in 0..d {
            for j in 0..d {
                sum_sq[(i, j)] += term[(i, j)].re.powi(2);
                sum_sq[(d + i, j)] += term[(i, j)].im.powi(2);
            }
        }
        sum += term;
    }
    let m = draws as f64;
    for i in 0..d {
        for j in 0..d {
            let mean = sum[(i, j)] / m;
            let se_re = ((sum_sq[(i, j)] / m - mean.re.powi(2)) / m).sqrt();
            let se_im = ((sum_sq[(d + i, j)] / m - mean.im.powi(2)) / m).sqrt();
            let diff = mean - rho[(i, j)];
            assert!(diff.re.abs() <= 5.0 * se_re.max(1e-15), "({i},{j}) re {diff}");
            assert!(diff.im.abs() <= 5.0 * se_im.max(1e-15), "({i},{j}) im {diff}");
        }
    }
}

#[test]
fn spectral_init_improves_with_more_samples() {
    let n = 3;
    let d = 8;
    let mut small = 0.0;
    let mut large = 0.0;
    for seed in 0..20u64 {
        let t = generate_ground_truth(n, 1, 1.0, SpectrumShape::Geometric, Normalization::TraceOne, seed).unwrap();
        let mut src = BatchSource::new(&t, 1, MeasurementMode::Exact, seeded(seed)).unwrap();
        let samples: Vec<_> = (0..10 * d).map(|_| src.next_outcome().unwrap()).collect();
        small += frobenius_distance(&spectral_init(&samples[..d], 1).unwrap(), &t).unwrap();
        large += frobenius_distance(&spectral_init(&samples, 1).unwrap(), &t).unwrap();
    }
    assert!(large < small, "m=10d mean {} vs m=d mean {}", large / 20.0, small / 20.0);
}

#[test]
fn spectral_init_guards_dense_size() {
    let w = PauliString::identity(13).unwrap();
    let o = qst_core::MeasurementOutcome::exact(w, 1.0);
    assert!(matches!(spectral_init(&[o], 1), Err(qst_core::QstError::UnsupportedSize(_))));
}

fn dense_objective(x: &CMatrix, points: &[CMatrix]) -> f64 {
    points.iter().map(|p| (x - p).norm()).sum()
}

/// Projected (onto Hermitian matrices) gradient descent with backtracking on
/// `Σ‖X − P_k‖_F`, started from the mean.
fn descent_oracle(points: &[CMatrix]) -> f64 {
    let mut x = points.iter().fold(CMatrix::zeros(points[0].nrows(), points[0].ncols()), |a, p| a + p)
        / Complex64::new(points.len() as f64, 0.0);
    let mut f = dense_objective(&x, points);
    let mut step = 1.0;
    for _ in 0..20_000 {
        let mut g = CMatrix::zeros(x.nrows(), x.ncols());
        for p in points {
            let diff = &x - p;
            let len = diff.norm();
            if len > 0.0 {
                g += diff / Complex64::new(len, 0.0);
            }
        }
        g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
        let gn = g.norm_squared();
        if gn < 1e-30 {
            break;
        }
        step *= 2.0;
        loop {
            let cand = &x - &g * Complex64::new(step, 0.0);
            let fc = dense_objective(&cand, points);
            if fc <= f - 0.5 * step * gn {
                x = cand;
                f = fc;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return f;
            }
        }
    }
    f
}

#[test]
fn geometric_median_matches_descent_oracle() {
    let mut rng = seeded(105);
    for _ in 0..5 {
        let pts: Vec<FactorState> = (0..5)
            .map(|_| {
                let m = rand_cmatrix(4, 1, &mut rng);
                let norm = m.norm();
                FactorState::new(2, m / Complex64::new(norm, 0.0)).unwrap()
            })
            .collect();
        let dense: Vec<CMatrix> = pts.iter().map(|p| dense_density_factor(p).unwrap()).collect();
        let gm = geometric_median(&pts, 1e-14).unwrap();
        let x = gm
            .coefficients
            .iter()
            .zip(&dense)
            .fold(CMatrix::zeros(4, 4), |a, (c, p)| a + p * Complex64::new(*c, 0.0));
        let ours = dense_objective(&x, &dense);
        assert!((ours - gm.objective).abs() <= 1e-10);
        let oracle = descent_oracle(&dense);
        assert!(ours <= oracle + 1e-8, "median {ours} vs oracle {oracle}");
        assert!(oracle <= ours + 1e-8, "median {ours} vs oracle {oracle}");
        let total: f64 = gm.coefficients.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn median_projection_is_nearest_rank_one() {
    let mut rng = seeded(106);
    let pts: Vec<FactorState> = (0..7)
        .map(|_| FactorState::new(3, rand_cmatrix(8, 1, &mut rng)).unwrap())
        .collect();
    let gm = geometric_median(&pts, 1e-12).unwrap();
    let dense: Vec<CMatrix> = pts.iter().map(|p| dense_density_factor(p).unwrap()).collect();
    let x = gm
        .coefficients
        .iter()
        .zip(&dense)
        .fold(CMatrix::zeros(8, 8), |a, (c, p)| a + p * Complex64::new(*c, 0.0));
    let eig = nalgebra::SymmetricEigen::new(x.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let residual = ev[1..].iter().map(|l| l * l).sum::<f64>().sqrt();
    assert!((gm.projection_residual - residual).abs() <= 1e-9);
    let proj = dense_density_factor(&gm.projection).unwrap();
    assert!(((x - proj).norm() - residual).abs() <= 1e-9);
}

#[test]
fn boosting_does_not_hurt_at_small_scale() {
    // n = 4 with a short budget, so single runs fail often enough to compare.
    let n = 4;
    let t = generate_ground_truth(n, 1, 1.0, SpectrumShape::Geometric, Normalization::TraceOne, 5).unwrap();
    let mut cfg = InitConfig::new(3_000);
    cfg.j = 25;
    let (mut single, mut boosted) = (0, 0);
    let trials = 20;
    for seed in 0..trials {
        let mut src = replica_source(&t, MeasurementMode::Exact, seed, 0).unwrap();
        let s = run_online_init(&cfg, &mut src, seed).unwrap();
        single += (frobenius_distance(&s, &t).unwrap() <= 0.9) as usize;
        let b = boosted_init(&cfg, &t, MeasurementMode::Exact, seed).unwrap();
        boosted += (frobenius_distance(b.factor(), &t).unwrap() <= 0.9) as usize;
    }
    assert!(boosted >= single, "boosted {boosted}/{trials} vs single {single}/{trials}");
    assert!(boosted > 0);
}

#[test]
fn exact_sweep_reconstructs_state() {
    let mut rng = seeded(107);
    for n in 1..=3 {
        let t = rand_truth(n, &mut rng);
        let samples: Vec<_> = PauliString::enumerate(n).unwrap().map(|w| measure_exact(&w, &t).unwrap()).collect();
        let r = t.rank();
        let u = spectral_init(&samples, r).unwrap();
        assert!(frobenius_distance(&u, &t).unwrap() <= 1e-9);
    }
}
