//! Warm starts for the SGD loop.
//!
//! - Online initialization for rank-1 targets: normalized stochastic power
//!   iteration `u ← 𝒫(u + η_t·d·y·A·u)`, one Pauli outcome per step. Since
//!   `E[d·y·A] = ρ⋆`, the iteration tracks the top eigenvector.
//! - Boosting: `J` independent runs combined through the geometric median of
//!   their `uu†`, computed over the `J` factors so no `d×d` matrix is formed.
//! - A dense spectral baseline (small `n` only).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, mismatch, Result};
use crate::measurement::{
    BatchSource, ExpectationTable, MeasurementMode, MeasurementOutcome, TABLE_MAX_QUBITS,
};
use crate::pauli::{apply_into, inner, PauliString};
use crate::rng::{stream, stream_rng, QstRng};
use crate::state::{frobenius_distance, FactorState, GroundTruth};
use crate::{CMatrix, Complex64, QstError};

/// Largest qubit count for which a dense `d×d` matrix may be formed.
pub const DENSE_MAX_QUBITS: usize = 12;

/// Below this norm an update is considered degenerate.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Fresh starting vectors drawn before a run gives up on degenerate updates.
pub const MAX_RETRIES: usize = 10;

/// Accepted deviation of `‖u‖₂` from 1 on entry to [`init_step`].
pub const UNIT_NORM_TOL: f64 = 1e-10;

pub const WEISZFELD_MAX_ITER: usize = 10_000;

/// Offset applied when a Weiszfeld iterate lands on a data point.
pub const ANCHOR_OFFSET: f64 = 1e-12;

/// `η_t = ln d / (a·d·ln²d + t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum InitSchedule {
    #[default]
    Theorem40,
    Proof80,
    Custom(f64),
}

impl InitSchedule {
    pub fn a(self) -> f64 {
        match self {
            InitSchedule::Theorem40 => 40.0,
            InitSchedule::Proof80 => 80.0,
            InitSchedule::Custom(a) => a,
        }
    }
}

impl fmt::Display for InitSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSchedule::Theorem40 => f.write_str("theorem_40"),
            InitSchedule::Proof80 => f.write_str("proof_80"),
            InitSchedule::Custom(a) => write!(f, "custom:{a}"),
        }
    }
}

impl FromStr for InitSchedule {
    type Err = QstError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem_40" => Ok(InitSchedule::Theorem40),
            "proof_80" => Ok(InitSchedule::Proof80),
            other => {
                let a = other
                    .strip_prefix("custom:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| {
                        invalid(format!(
                            "unknown schedule {other:?} (theorem_40, proof_80, custom:<a>)"
                        ))
                    })?;
                Ok(InitSchedule::Custom(a))
            }
        }
    }
}

pub fn eta_schedule_init(t: usize, d: usize, schedule: InitSchedule) -> f64 {
    let ln_d = (d as f64).ln();
    ln_d / (schedule.a() * d as f64 * ln_d * ln_d + t as f64)
}

/// Direction of the stochastic power step. `Ascent` maximizes `u†ρ⋆u`;
/// `Descent` flips the sign of the stochastic term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateSign {
    #[default]
    Ascent,
    Descent,
}

impl UpdateSign {
    fn factor(self) -> f64 {
        match self {
            UpdateSign::Ascent => 1.0,
            UpdateSign::Descent => -1.0,
        }
    }
}

impl fmt::Display for UpdateSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateSign::Ascent => "plus",
            UpdateSign::Descent => "minus",
        })
    }
}

impl FromStr for UpdateSign {
    type Err = QstError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "ascent" => Ok(UpdateSign::Ascent),
            "minus" | "descent" => Ok(UpdateSign::Descent),
            other => Err(invalid(format!("unknown update sign {other:?} (plus, minus)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    /// Iteration budget `T₀`.
    pub t0: usize,
    pub schedule: InitSchedule,
    /// Replication count for boosting.
    pub j: usize,
    pub sign: UpdateSign,
}

impl InitConfig {
    pub fn new(t0: usize) -> Self {
        Self {
            t0,
            schedule: InitSchedule::default(),
            j: 1,
            sign: UpdateSign::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t0 == 0 {
            return Err(invalid("T0 must be at least 1"));
        }
        let a = self.schedule.a();
        if !(a > 0.0) || !a.is_finite() {
            return Err(invalid(format!("schedule constant must be positive, got {a}")));
        }
        if self.j == 0 {
            return Err(invalid("J must be at least 1"));
        }
        Ok(())
    }
}

/// `⌈72·ln d⌉`, the replication count that boosts success to `1 − 1/d`.
pub fn boosting_replicas(d: usize) -> usize {
    (72.0 * (d as f64).ln()).ceil() as usize
}

fn vec_norm(u: &[Complex64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn step_in_place(
    u: &mut [Complex64],
    w: &PauliString,
    y: f64,
    coeff: f64,
    scratch: &mut Vec<Complex64>,
) -> Result<()> {
    scratch.resize(u.len(), Complex64::new(0.0, 0.0));
    apply_into(w, u, scratch);
    let c = coeff * y;
    let mut norm_sq = 0.0;
    for (ui, ai) in u.iter_mut().zip(scratch.iter()) {
        *ui += ai * c;
        norm_sq += ui.norm_sqr();
    }
    let norm = norm_sq.sqrt();
    if !(norm >= DEGENERATE_NORM) {
        return Err(QstError::Degenerate(format!("updated vector has norm {norm:e}")));
    }
    let inv = 1.0 / norm;
    u.iter_mut().for_each(|z| *z *= inv);
    Ok(())
}

/// One normalized power step `(u ± η·d·y·A·u) / ‖·‖₂`.
pub fn init_step(
    u: &[Complex64],
    outcome: &MeasurementOutcome,
    eta: f64,
    sign: UpdateSign,
) -> Result<Vec<Complex64>> {
    let d = outcome.pauli.dim();
    if u.len() != d {
        return Err(mismatch(format!("vector length {} != 2^n = {d}", u.len())));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(invalid(format!("step size must be non-negative, got {eta}")));
    }
    let norm = vec_norm(u);
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(invalid(format!("input vector must have unit norm, got {norm}")));
    }
    let mut out = u.to_vec();
    step_in_place(&mut out, &outcome.pauli, outcome.y, sign.factor() * eta * d as f64, &mut Vec::new())?;
    Ok(out)
}

/// Uniform draw from the complex unit sphere.
fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    for _ in 0..=MAX_RETRIES {
        let mut u: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = vec_norm(&u);
        if norm >= DEGENERATE_NORM {
            u.iter_mut().for_each(|z| *z /= norm);
            return Ok(u);
        }
    }
    Err(QstError::Degenerate("could not draw a non-degenerate starting vector".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitTraceRow {
    pub iter: usize,
    /// `|⟨u_t, v⋆⟩|²` against the leading eigenvector of the truth.
    pub overlap: f64,
    pub frob_error: f64,
}

pub const INIT_TRACE_HEADER: &str = "iter,overlap,frob_error";

pub fn write_init_trace<W: Write>(rows: &[InitTraceRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{INIT_TRACE_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{:.16e},{:.16e}", r.iter, r.overlap, r.frob_error)?;
    }
    Ok(())
}

fn online_init_impl(
    cfg: &InitConfig,
    source: &mut BatchSource<'_>,
    start_rng: &mut QstRng,
    mut observe: impl FnMut(usize, &[Complex64]) -> Result<()>,
) -> Result<FactorState> {
    cfg.validate()?;
    if source.batch_size() != 1 {
        return Err(invalid(format!(
            "online initialization consumes one outcome per step, source has B = {}",
            source.batch_size()
        )));
    }
    let n = source.truth().num_qubits();
    let d = source.truth().dim();
    let mut u = unit_vector(d, start_rng)?;
    let mut scratch = Vec::with_capacity(d);
    let mut retries = 0;
    observe(0, &u)?;
    for t in 1..=cfg.t0 {
        let o = source.next_outcome()?;
        let coeff = cfg.sign.factor() * eta_schedule_init(t, d, cfg.schedule) * d as f64;
        match step_in_place(&mut u, &o.pauli, o.y, coeff, &mut scratch) {
            Ok(()) => {}
            Err(QstError::Degenerate(msg)) => {
                retries += 1;
                if retries > MAX_RETRIES {
                    return Err(QstError::Degenerate(format!(
                        "{msg}; gave up after {MAX_RETRIES} fresh starts"
                    )));
                }
                log::warn!("degenerate init step at t = {t}; drawing a fresh start");
                u = unit_vector(d, start_rng)?;
            }
            Err(e) => return Err(e),
        }
        observe(t, &u)?;
    }
    Ok(FactorState::from_parts_unchecked(
        n,
        CMatrix::from_column_slice(d, 1, &u),
    ))
}

/// `T₀` normalized power steps from a uniform random unit vector.
///
/// The start is drawn from the `INIT` stream of `seed`; outcomes come from
/// `source`, which must have `B = 1`.
pub fn run_online_init(cfg: &InitConfig, source: &mut BatchSource<'_>, seed: u64) -> Result<FactorState> {
    let mut rng = stream_rng(seed, stream::INIT);
    online_init_impl(cfg, source, &mut rng, |_, _| Ok(()))
}

/// [`run_online_init`] that also records overlap and error every `every` steps
/// (and at the last step).
pub fn run_online_init_traced(
    cfg: &InitConfig,
    source: &mut BatchSource<'_>,
    seed: u64,
    every: usize,
) -> Result<(FactorState, Vec<InitTraceRow>)> {
    let truth = source.truth();
    let n = truth.num_qubits();
    let d = truth.dim();
    let lead: Vec<Complex64> = truth.eigvecs().column(0).iter().copied().collect();
    let every = every.max(1);
    let t0 = cfg.t0;
    let mut rows = Vec::new();
    let mut rng = stream_rng(seed, stream::INIT);
    let state = online_init_impl(cfg, source, &mut rng, |t, u| {
        if t % every == 0 || t == t0 {
            let overlap = inner(&lead, u).norm_sqr();
            let f = FactorState::from_parts_unchecked(n, CMatrix::from_column_slice(d, 1, u));
            rows.push(InitTraceRow {
                iter: t,
                overlap,
                frob_error: frobenius_distance(&f, truth)?,
            });
        }
        Ok(())
    })?;
    Ok((state, rows))
}

/// Streams `(start, measurements)` for boosting replicate `j`. Replicate 0 uses
/// the same streams as a single [`run_online_init`] fed from `INIT_MEASURE`.
pub fn replica_streams(j: usize) -> (u64, u64) {
    if j == 0 {
        (stream::INIT, stream::INIT_MEASURE)
    } else {
        let base = stream::REPLICA_BASE + 2 * j as u64;
        (base, base + 1)
    }
}

/// Source for replicate `j` of a boosted run.
pub fn replica_source(
    truth: &GroundTruth,
    mode: MeasurementMode,
    seed: u64,
    j: usize,
) -> Result<BatchSource<'_>> {
    BatchSource::new(truth, 1, mode, stream_rng(seed, replica_streams(j).1))
}

/// Geometric median of `Σ_k c_k U_k U_k†`, reported by its coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMedian {
    /// Convex weights over the input points.
    pub coefficients: Vec<f64>,
    /// `Σ_k ‖X − U_kU_k†‖_F` at the returned iterate.
    pub objective: f64,
    pub iterations: usize,
    /// Nearest PSD matrix of the input rank, in factored form.
    pub projection: FactorState,
    /// Frobenius norm of the discarded spectrum.
    pub projection_residual: f64,
}

/// `‖Σ_l c_l p_l − p_k‖` for every `k`; also returns the iterate `Σ c_l p_l`.
fn distances(points: &DMatrix<f64>, c: &[f64], out: &mut [f64]) -> DVector<f64> {
    let x = points * DVector::from_column_slice(c);
    for (k, o) in out.iter_mut().enumerate() {
        *o = (&x - points.column(k)).norm();
    }
    x
}

/// Weiszfeld iteration over the points `U_kU_k†`. Stops once an iterate moves
/// less than `tol` in Frobenius norm.
pub fn geometric_median(points: &[FactorState], tol: f64) -> Result<GeometricMedian> {
    geometric_median_seeded(points, tol, 0)
}

/// [`geometric_median`] with an explicit seed for the anchor perturbation.
pub fn geometric_median_seeded(points: &[FactorState], tol: f64, seed: u64) -> Result<GeometricMedian> {
    let first = points.first().ok_or_else(|| invalid("geometric median of zero points"))?;
    if points
        .iter()
        .any(|p| p.dim() != first.dim() || p.rank() != first.rank())
    {
        return Err(mismatch("geometric median points must share their shape"));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let j = points.len();
    if j == 1 {
        return Ok(GeometricMedian {
            coefficients: vec![1.0],
            objective: 0.0,
            iterations: 0,
            projection: first.clone(),
            projection_residual: 0.0,
        });
    }

    // K_kl = ⟨P_k, P_l⟩_F = ‖U_k†U_l‖²_F. Writing K = QΛQᵀ, the columns of
    // Λ^{1/2}Qᵀ are J-dimensional points with the same pairwise geometry, so the
    // iteration never forms cᵀKc − 2(Kc)_k + K_kk, which cancels badly.
    let mut gram = DMatrix::<f64>::zeros(j, j);
    for k in 0..j {
        for l in k..j {
            let v = (points[k].u().adjoint() * points[l].u()).norm_squared();
            gram[(k, l)] = v;
            gram[(l, k)] = v;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut embedded = eig.eigenvectors.transpose();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        embedded.row_mut(i).scale_mut(lambda.max(0.0).sqrt());
    }

    let mut rng = stream_rng(seed, stream::INIT);
    let mut c = vec![1.0 / j as f64; j];
    let mut dist = vec![0.0; j];
    let mut prev_objective = f64::INFINITY;
    let mut best = (f64::INFINITY, c.clone());

    for iter in 1..=WEISZFELD_MAX_ITER {
        let mut x = distances(&embedded, &c, &mut dist);
        if let Some(k) = dist.iter().position(|&s| s <= ANCHOR_OFFSET) {
            // On a data point, which is the median iff the unit vectors towards
            // the other points sum to at most 1 in norm.
            let mut pull = DVector::<f64>::zeros(j);
            for l in (0..j).filter(|&l| dist[l] > ANCHOR_OFFSET) {
                pull += (embedded.column(l) - &x) / dist[l];
            }
            if pull.norm() <= 1.0 + 1e-12 {
                let objective: f64 = dist.iter().sum();
                let mut anchor = vec![0.0; j];
                anchor[k] = 1.0;
                return finish_median(points, anchor, objective, iter);
            }
            // Otherwise nudge off it in a random direction.
            let dir: Vec<f64> = (0..j).map(|_| rng.sample(StandardNormal)).collect();
            let len = (&embedded * DVector::from_column_slice(&dir)).norm();
            if len > 0.0 {
                c.iter_mut()
                    .zip(&dir)
                    .for_each(|(ci, di)| *ci += ANCHOR_OFFSET * di / len);
            }
            x = distances(&embedded, &c, &mut dist);
        }
        let objective: f64 = dist.iter().sum();
        debug_assert!(
            objective <= prev_objective + 1e-12 * (1.0 + prev_objective),
            "Weiszfeld objective increased: {prev_objective} -> {objective}"
        );
        prev_objective = objective;
        if objective < best.0 {
            best = (objective, c.clone());
        }

        let weights: Vec<f64> = dist.iter().map(|s| 1.0 / s.max(ANCHOR_OFFSET)).collect();
        let total: f64 = weights.iter().sum();
        c = weights.iter().map(|w| w / total).collect();
        let moved = (&embedded * DVector::from_column_slice(&c) - x).norm();
        if moved < tol {
            distances(&embedded, &c, &mut dist);
            let objective: f64 = dist.iter().sum();
            let (objective, c) = if objective <= best.0 { (objective, c) } else { best };
            return finish_median(points, c, objective, iter);
        }
    }
    let (objective, c) = best;
    let best = finish_median(points, c, objective, WEISZFELD_MAX_ITER)?;
    Err(QstError::NoConvergence {
        iterations: WEISZFELD_MAX_ITER,
        best: Box::new(best),
    })
}

/// Top-`r` eigenpairs of `X = Σ c_k U_kU_k†` via a thin QR of `[U_1 … U_J]`.
fn finish_median(
    points: &[FactorState],
    coefficients: Vec<f64>,
    objective: f64,
    iterations: usize,
) -> Result<GeometricMedian> {
    let d = points[0].dim();
    let r = points[0].rank();
    let n = points[0].num_qubits();
    let cols = points.len() * r;
    let mut f = CMatrix::zeros(d, cols);
    for (k, p) in points.iter().enumerate() {
        f.columns_mut(k * r, r).copy_from(p.u());
    }
    let qr = f.qr();
    let (q, rr) = (qr.q(), qr.r());
    // R·C·R†, C = diag(c_k ⊗ 1_r)
    let mut rc = rr.clone();
    for (k, &ck) in coefficients.iter().enumerate() {
        rc.columns_mut(k * r, r).scale_mut(ck);
    }
    let small = &rc * rr.adjoint();
    let small = (&small + small.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(small);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let keep = r.min(order.len());
    let mut u = CMatrix::zeros(d, r);
    for (slot, &idx) in order.iter().take(keep).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        let v = &q * eig.eigenvectors.column(idx);
        u.column_mut(slot).copy_from(&(v * Complex64::new(lambda.sqrt(), 0.0)));
    }
    let residual = order
        .iter()
        .skip(keep)
        .map(|&i| eig.eigenvalues[i].powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(GeometricMedian {
        coefficients,
        objective,
        iterations,
        projection: FactorState::new(n, u)?,
        projection_residual: residual,
    })
}

pub const GEOMETRIC_MEDIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct BoostedInit {
    pub median: GeometricMedian,
    pub replicas: Vec<FactorState>,
}

impl BoostedInit {
    pub fn factor(&self) -> &FactorState {
        &self.median.projection
    }
}

/// `cfg.j` independent online initializations (in parallel), combined by their
/// geometric median and projected back to rank 1.
pub fn boosted_init(
    cfg: &InitConfig,
    truth: &GroundTruth,
    mode: MeasurementMode,
    seed: u64,
) -> Result<BoostedInit> {
    cfg.validate()?;
    let table = if truth.num_qubits() <= TABLE_MAX_QUBITS {
        Some(Arc::new(ExpectationTable::build(truth)?))
    } else {
        None
    };
    let replicas = (0..cfg.j)
        .into_par_iter()
        .map(|j| {
            let mut source = replica_source(truth, mode, seed, j)?;
            if let Some(t) = &table {
                source = source.with_table(Arc::clone(t))?;
            }
            let mut rng = stream_rng(seed, replica_streams(j).0);
            online_init_impl(cfg, &mut source, &mut rng, |_, _| Ok(()))
        })
        .collect::<Result<Vec<_>>>()?;
    let median = geometric_median_seeded(&replicas, GEOMETRIC_MEDIAN_TOL, seed)?;
    Ok(BoostedInit { median, replicas })
}

/// `S = (d/m)·Σ yᵢ·Aᵢ` formed densely; returns `[vⱼ·√max(λⱼ, 0)]` for the top
/// `r` eigenpairs.
pub fn spectral_init(samples: &[MeasurementOutcome], r: usize) -> Result<FactorState> {
    let first = samples.first().ok_or_else(|| invalid("spectral init needs at least one sample"))?;
    let n = first.pauli.num_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(QstError::UnsupportedSize(format!(
            "spectral init forms a dense matrix; n = {n} exceeds {DENSE_MAX_QUBITS}"
        )));
    }
    if samples.iter().any(|s| s.pauli.num_qubits() != n) {
        return Err(mismatch("samples act on different qubit counts"));
    }
    let d = first.pauli.dim();
    if r == 0 || r > d {
        return Err(invalid(format!("rank must be in 1..={d}, got {r}")));
    }
    let scale = d as f64 / samples.len() as f64;
    let mut s = CMatrix::zeros(d, d);
    for o in samples {
        let c = scale * o.y;
        for col in 0..d {
            let (row, phase) = o.pauli.column_entry(col);
            s[(row, col)] += phase * c;
        }
    }
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = CMatrix::zeros(d, r);
    for (slot, &idx) in order.iter().take(r).enumerate() {
        let w = eig.eigenvalues[idx].max(0.0).sqrt();
        u.column_mut(slot)
            .copy_from(&(eig.eigenvectors.column(idx) * Complex64::new(w, 0.0)));
    }
    FactorState::new(n, u)
}
