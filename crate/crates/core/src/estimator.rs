//! Mini-batch SGD on the factored parameterization.
//!
//! For a batch `{(A_k, y_k)}` the instantaneous loss is
//! `ℓ(U) = ¼ Σ_k (y_k − Tr(A_k UU†))²` and the step direction is
//! `∇ℓ(U) = Σ_k [Tr(A_k UU†) − y_k]·A_k U`, paired with perturbations through
//! `d/dε ℓ(U + εV) = Re⟨∇ℓ(U), V⟩`. One round costs `O(B·r·d log d)`.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::error::{invalid, mismatch, Result};
use crate::measurement::{BatchSource, MeasurementOutcome};
use crate::pauli::{apply_into, inner, real_expectation};
use crate::state::{frobenius_distance, FactorState, GroundTruth};
use crate::{CMatrix, Complex64, QstError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaPolicy {
    /// `1/(4κr)` for `B ≤ 40`, `50/(4B)` above.
    AppendixRule,
    /// `c₂/(κ·r·ln d)`.
    TheoremRule { c2: f64 },
    Fixed(f64),
}

impl fmt::Display for EtaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaPolicy::AppendixRule => f.write_str("appendix_rule"),
            EtaPolicy::TheoremRule { c2 } => write!(f, "theorem_rule(c2={c2})"),
            EtaPolicy::Fixed(eta) => write!(f, "fixed({eta})"),
        }
    }
}

/// Learning rate selected by `policy` for the given problem shape.
pub fn eta_policy_value(policy: EtaPolicy, kappa: f64, r: usize, batch: usize, d: usize) -> f64 {
    match policy {
        EtaPolicy::AppendixRule => {
            if batch <= 40 {
                1.0 / (4.0 * kappa * r as f64)
            } else {
                50.0 / (4.0 * batch as f64)
            }
        }
        EtaPolicy::TheoremRule { c2 } => c2 / (kappa * r as f64 * (d as f64).ln()),
        EtaPolicy::Fixed(eta) => eta,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgdConfig {
    /// Round budget `T`.
    pub rounds: usize,
    pub batch_size: usize,
    pub eta_policy: EtaPolicy,
    /// `κ` used by the learning-rate policies and regime checks.
    pub kappa_hint: f64,
    pub rank: usize,
    /// Stop once the error proxy drops below this value.
    pub stop_tol: Option<f64>,
    /// Record per-round wall time. Off keeps traces byte-reproducible.
    pub record_wall_time: bool,
}

impl SgdConfig {
    pub fn new(rounds: usize, batch_size: usize, eta_policy: EtaPolicy, kappa_hint: f64, rank: usize) -> Self {
        Self {
            rounds,
            batch_size,
            eta_policy,
            kappa_hint,
            rank,
            stop_tol: None,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(invalid("round budget T must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size B must be at least 1"));
        }
        if self.rank == 0 {
            return Err(invalid("rank must be at least 1"));
        }
        if !(self.kappa_hint >= 1.0) || !self.kappa_hint.is_finite() {
            return Err(invalid(format!("kappa_hint must be >= 1, got {}", self.kappa_hint)));
        }
        match self.eta_policy {
            EtaPolicy::Fixed(eta) if !(eta > 0.0 && eta.is_finite()) => {
                return Err(invalid(format!("fixed learning rate must be positive, got {eta}")))
            }
            EtaPolicy::TheoremRule { c2 } if !(c2 > 0.0 && c2.is_finite()) => {
                return Err(invalid(format!("c2 must be positive, got {c2}")))
            }
            _ => {}
        }
        if let Some(tol) = self.stop_tol {
            if !(tol > 0.0) {
                return Err(invalid(format!("stop_tol must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    pub fn eta(&self, d: usize) -> f64 {
        eta_policy_value(self.eta_policy, self.kappa_hint, self.rank, self.batch_size, d)
    }
}

/// Conditions under which the convergence guarantees are stated. Violations are
/// supported experiments, so they are reported rather than rejected.
pub fn regime_warnings(config: &SgdConfig, d: usize) -> Vec<String> {
    let mut out = Vec::new();
    let kappa = config.kappa_hint;
    let r = config.rank as f64;
    let b_max = (40.0 * kappa.powf(2.0 / 3.0)).min(d as f64);
    if config.batch_size as f64 > b_max {
        out.push(format!(
            "batch size {} exceeds min(40·κ^(2/3), d) = {b_max:.3}",
            config.batch_size
        ));
    }
    if kappa > (d as f64 * r).sqrt() {
        out.push(format!("kappa {kappa} exceeds sqrt(d·r)"));
    }
    let c2 = match config.eta_policy {
        EtaPolicy::TheoremRule { c2 } => c2,
        _ => 1.0,
    };
    let bound = c2 / (kappa * r * (d as f64).ln());
    let eta = config.eta(d);
    if eta > bound {
        out.push(format!(
            "learning rate {eta:.6} exceeds c2/(κ·r·ln d) = {bound:.6} with c2 = {c2}"
        ));
    }
    out
}

fn check_batch(n: usize, batch: &[MeasurementOutcome]) -> Result<()> {
    if let Some(o) = batch.iter().find(|o| o.pauli.num_qubits() != n) {
        return Err(mismatch(format!(
            "outcome observable {} acts on {} qubits, factor on {n}",
            o.pauli,
            o.pauli.num_qubits()
        )));
    }
    Ok(())
}

fn norm_sqr(us: &[Complex64]) -> f64 {
    us.iter().map(|z| z.norm_sqr()).sum()
}

/// Writes `Σ_k [Tr(A_k UU†) − y_k]·A_k U` into `grad` and returns the batch loss.
///
/// With `update = Some(η)` the last term is fused with the step instead, so
/// `grad` ends up holding `U − η·∇ℓ(U)`, and the second return value is the
/// sum of its real and imaginary parts: non-finite iff some entry is (or the
/// iterate is astronomically large, which is divergence all the same).
fn loss_and_gradient_into(
    us: &[Complex64],
    batch: &[MeasurementOutcome],
    scratch: &mut Vec<Complex64>,
    grad: &mut [Complex64],
    update: Option<f64>,
) -> Result<(f64, f64)> {
    scratch.resize(us.len(), Complex64::new(0.0, 0.0));
    let mut probe = 0.0;
    if batch.is_empty() {
        match update {
            Some(_) => {
                grad.copy_from_slice(us);
                probe = us.iter().map(|z| z.re + z.im).sum();
            }
            None => grad.fill(Complex64::new(0.0, 0.0)),
        }
    }
    let last = batch.len().saturating_sub(1);
    let mut loss = 0.0;
    for (k, o) in batch.iter().enumerate() {
        apply_into(&o.pauli, us, scratch);
        let pred = real_expectation(inner(us, scratch), || norm_sqr(us))?;
        let residual = pred - o.y;
        loss += residual * residual;
        match (k == 0, k == last, update) {
            // the first term overwrites, saving a zero-fill pass
            (true, true, Some(eta)) => {
                let c = -eta * residual;
                for ((gi, ai), ui) in grad.iter_mut().zip(scratch.iter()).zip(us) {
                    *gi = ui + ai * c;
                    probe += gi.re + gi.im;
                }
            }
            (false, true, Some(eta)) => {
                for ((gi, ai), ui) in grad.iter_mut().zip(scratch.iter()).zip(us) {
                    *gi = ui - (*gi + ai * residual) * eta;
                    probe += gi.re + gi.im;
                }
            }
            (true, _, _) => {
                for (gi, ai) in grad.iter_mut().zip(scratch.iter()) {
                    *gi = ai * residual;
                }
            }
            (false, _, _) => {
                for (gi, ai) in grad.iter_mut().zip(scratch.iter()) {
                    *gi += ai * residual;
                }
            }
        }
    }
    Ok((0.25 * loss, probe))
}

/// Reusable buffers for allocation-free SGD steps; [`run_sgd`] and the
/// benchmarks step through this.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    scratch: Vec<Complex64>,
    next: CMatrix,
}

impl Default for StepWorkspace {
    fn default() -> Self {
        Self::new()
    }
}

impl StepWorkspace {
    pub fn new() -> Self {
        Self {
            scratch: Vec::new(),
            next: CMatrix::zeros(0, 0),
        }
    }

    /// `u ← u − η·∇ℓ(u)` in place; returns `ℓ(u)` before the step.
    ///
    /// On a non-finite result `u` is left untouched and `NonFinite` returned.
    /// The caller is responsible for `eta > 0` and matching qubit counts.
    pub fn step(&mut self, u: &mut CMatrix, batch: &[MeasurementOutcome], eta: f64) -> Result<f64> {
        if self.next.shape() != u.shape() {
            self.next = CMatrix::zeros(u.nrows(), u.ncols());
        }
        let (loss, probe) =
            loss_and_gradient_into(u.as_slice(), batch, &mut self.scratch, self.next.as_mut_slice(), Some(eta))?;
        if !probe.is_finite() {
            return Err(QstError::NonFinite);
        }
        std::mem::swap(u, &mut self.next);
        Ok(loss)
    }
}

/// `¼ Σ_k (y_k − Tr(A_k UU†))²`.
pub fn instantaneous_loss(u: &FactorState, batch: &[MeasurementOutcome]) -> Result<f64> {
    check_batch(u.num_qubits(), batch)?;
    let us = u.u().as_slice();
    let mut scratch = vec![Complex64::new(0.0, 0.0); us.len()];
    let mut loss = 0.0;
    for o in batch {
        apply_into(&o.pauli, us, &mut scratch);
        let residual = o.y - real_expectation(inner(us, &scratch), || u.trace())?;
        loss += residual * residual;
    }
    Ok(0.25 * loss)
}

/// `Σ_k [Tr(A_k UU†) − y_k]·A_k U`.
pub fn gradient(u: &FactorState, batch: &[MeasurementOutcome]) -> Result<CMatrix> {
    check_batch(u.num_qubits(), batch)?;
    let mut grad = CMatrix::zeros(u.dim(), u.rank());
    loss_and_gradient_into(u.u().as_slice(), batch, &mut Vec::new(), grad.as_mut_slice(), None)?;
    Ok(grad)
}

/// `U − η·∇ℓ(U)`. No projection or renormalization.
pub fn sgd_step(u: &FactorState, batch: &[MeasurementOutcome], eta: f64) -> Result<FactorState> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid(format!("learning rate must be positive, got {eta}")));
    }
    let grad = gradient(u, batch)?;
    let next = u.u() - grad * Complex64::new(eta, 0.0);
    if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QstError::NonFinite);
    }
    Ok(FactorState::from_parts_unchecked(u.num_qubits(), next))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// 1-based round index `t`.
    pub round: usize,
    /// `e_t = ‖U_t U_t† − ρ⋆‖_F`, when the truth is known.
    pub frob_error: Option<f64>,
    /// `ℓ_t(U_{t−1})`, the loss of the batch that produced this step.
    pub batch_loss: f64,
    /// `t·B·ℓ` measurement repetitions (`t·B` in exact mode).
    pub cum_samples: u64,
    pub wall_ns: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub final_state: FactorState,
    pub eta: f64,
    pub stopped_early: bool,
}

pub const TRACE_HEADER: &str = "round,frob_error,batch_loss,cum_samples,wall_ns";

impl RunTrace {
    pub fn last_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.frob_error)
    }

    /// First round whose error is at or below `tol`.
    pub fn rounds_to(&self, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.frob_error.is_some_and(|e| e <= tol))
            .map(|r| r.round)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            let err = r.frob_error.map(|e| format!("{e:.16e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{err},{:.16e},{},{}",
                r.round, r.batch_loss, r.cum_samples, r.wall_ns
            )?;
        }
        Ok(())
    }
}

/// Trailing window for the loss-based stopping rule.
pub const LOSS_WINDOW: usize = 50;

/// The online loop: one fresh batch and one gradient step per round.
///
/// Stops after `config.rounds` rounds, or earlier when `stop_tol` is set and the
/// error (true error if `truth` is given, else the trailing mean batch loss)
/// drops below it.
pub fn run_sgd(
    config: &SgdConfig,
    source: &mut BatchSource<'_>,
    u0: &FactorState,
    truth: Option<&GroundTruth>,
) -> Result<RunTrace> {
    config.validate()?;
    if config.batch_size != source.batch_size() {
        return Err(invalid(format!(
            "config batch size {} != source batch size {}",
            config.batch_size,
            source.batch_size()
        )));
    }
    let n = u0.num_qubits();
    if n != source.truth().num_qubits() {
        return Err(mismatch("initial factor and measurement source differ in qubit count"));
    }
    if let Some(t) = truth {
        if t.dim() != u0.dim() {
            return Err(mismatch("initial factor and ground truth differ in dimension"));
        }
    }
    let d = u0.dim();
    let eta = config.eta(d);
    for w in regime_warnings(config, d) {
        log::warn!("{w}");
    }
    let per_round = config.batch_size as u64 * source.mode().shots().unwrap_or(1);

    let mut u = u0.u().clone();
    let mut ws = StepWorkspace::new();
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut rows = Vec::with_capacity(config.rounds.min(1 << 20));
    let mut loss_window = std::collections::VecDeque::with_capacity(LOSS_WINDOW);
    let mut loss_sum = 0.0;
    let mut stopped_early = false;

    for t in 1..=config.rounds {
        let start = config.record_wall_time.then(Instant::now);
        source.next_batch_into(&mut batch)?;
        let loss = match ws.step(&mut u, &batch, eta) {
            Ok(loss) => loss,
            Err(QstError::NonFinite) => {
                let trace = RunTrace {
                    rows,
                    final_state: FactorState::from_parts_unchecked(n, u),
                    eta,
                    stopped_early: false,
                };
                return Err(QstError::Diverged {
                    round: t,
                    trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        let wall_ns = start.map_or(0, |s| s.elapsed().as_nanos() as u64);

        let state = FactorState::from_parts_unchecked(n, u);
        let frob_error = truth.map(|t| frobenius_distance(&state, t)).transpose()?;
        u = state.into_matrix();
        rows.push(TraceRow {
            round: t,
            frob_error,
            batch_loss: loss,
            cum_samples: t as u64 * per_round,
            wall_ns,
        });

        if loss_window.len() == LOSS_WINDOW {
            loss_sum -= loss_window.pop_front().unwrap_or(0.0);
        }
        loss_window.push_back(loss);
        loss_sum += loss;

        if let Some(tol) = config.stop_tol {
            let done = match frob_error {
                Some(e) => e < tol,
                None => loss_window.len() == LOSS_WINDOW && loss_sum / (LOSS_WINDOW as f64) < tol,
            };
            if done {
                stopped_early = t < config.rounds;
                break;
            }
        }
    }
    Ok(RunTrace {
        rows,
        final_state: FactorState::from_parts_unchecked(n, u),
        eta,
        stopped_early,
    })
}
