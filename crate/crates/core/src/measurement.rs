//! Simulated local Pauli measurements.
//!
//! An outcome is `y = Tr(Wρ⋆) + z`. In exact mode `z = 0`; in shot mode the
//! two-outcome measurement `{(I ± W)/2}` is repeated `ℓ` times and `y` is the
//! empirical mean of the `±1` results, drawn as a single binomial.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, mismatch, Result};
use crate::pauli::{apply_into, inner, real_expectation, PauliString};
use crate::rng::QstRng;
use crate::state::{GroundTruth, Normalization};
use crate::{Complex64, QstError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementMode {
    Exact,
    /// `ℓ` repetitions per sampled observable.
    Shots(u64),
}

impl MeasurementMode {
    pub fn shots(&self) -> Option<u64> {
        match self {
            MeasurementMode::Exact => None,
            MeasurementMode::Shots(l) => Some(*l),
        }
    }
}

impl fmt::Display for MeasurementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementMode::Exact => f.write_str("exact"),
            MeasurementMode::Shots(l) => write!(f, "shots({l})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub pauli: PauliString,
    pub y: f64,
    /// `None` for exact (infinitely many shots).
    pub shots: Option<u64>,
    /// Noise realization `y − Tr(Wρ⋆)`.
    pub z: f64,
}

impl MeasurementOutcome {
    /// Outcome with a caller-supplied value and no noise bookkeeping.
    pub fn exact(pauli: PauliString, y: f64) -> Self {
        Self {
            pauli,
            y,
            shots: None,
            z: 0.0,
        }
    }
}

/// Base of the logarithm in the shot-count bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

pub(crate) fn true_expectation_with(
    w: &PauliString,
    truth: &GroundTruth,
    scratch: &mut Vec<Complex64>,
) -> Result<f64> {
    if w.num_qubits() != truth.num_qubits() {
        return Err(mismatch(format!(
            "Pauli string on {} qubits, state on {}",
            w.num_qubits(),
            truth.num_qubits()
        )));
    }
    let d = truth.dim();
    let v = truth.eigvecs().as_slice();
    scratch.resize(v.len(), Complex64::new(0.0, 0.0));
    apply_into(w, v, scratch);
    let value = truth
        .spectrum()
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (j, &s)| {
            let col = j * d..(j + 1) * d;
            acc + inner(&v[col.clone()], &scratch[col]) * s
        });
    real_expectation(value, || truth.spectrum().iter().sum())
}

/// `Tr(Wρ⋆) = Σⱼ σⱼ⟨vⱼ, W vⱼ⟩`, in `O(r·d log d)`.
pub fn true_expectation(w: &PauliString, truth: &GroundTruth) -> Result<f64> {
    true_expectation_with(w, truth, &mut Vec::new())
}

pub fn measure_exact(w: &PauliString, truth: &GroundTruth) -> Result<MeasurementOutcome> {
    let y = true_expectation(w, truth)?;
    Ok(MeasurementOutcome::exact(w.clone(), y))
}

fn check_shot_preconditions(truth: &GroundTruth, shots: u64) -> Result<()> {
    if truth.normalization() != Normalization::TraceOne {
        return Err(QstError::InvalidState(
            "shot simulation needs a trace_one state; outcome probabilities are undefined otherwise"
                .into(),
        ));
    }
    if shots == 0 {
        return Err(invalid("shot count must be at least 1"));
    }
    Ok(())
}

/// Tolerance on `p₊ ∉ [0, 1]` before it is treated as a bug rather than rounding.
pub const PROBABILITY_TOL: f64 = 1e-9;

fn sample_shots<R: Rng + ?Sized>(
    pauli: PauliString,
    expectation: f64,
    shots: u64,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let p_plus = 0.5 * (1.0 + expectation);
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p_plus) {
        return Err(QstError::Internal(format!(
            "outcome probability {p_plus} outside [0, 1]"
        )));
    }
    let p_plus = p_plus.clamp(0.0, 1.0);
    let binomial = Binomial::new(shots, p_plus)
        .map_err(|e| QstError::Internal(format!("binomial({shots}, {p_plus}): {e}")))?;
    let k = binomial.sample(rng);
    let y = (2.0 * k as f64 - shots as f64) / shots as f64;
    Ok(MeasurementOutcome {
        pauli,
        y,
        shots: Some(shots),
        z: y - expectation,
    })
}

/// `ℓ`-shot estimate of `Tr(Wρ⋆)`.
pub fn measure_shots<R: Rng + ?Sized>(
    w: &PauliString,
    truth: &GroundTruth,
    shots: u64,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    check_shot_preconditions(truth, shots)?;
    let e = true_expectation(w, truth)?;
    sample_shots(w.clone(), e, shots, rng)
}

/// Shots needed for `|z| ≤ ε₀/√d` with high probability: `⌈112·ε₀⁻²·d·ln d⌉`.
pub fn shots_for_epsilon(eps0: f64, d: usize) -> Result<u64> {
    shots_for_epsilon_base(eps0, d, LogBase::Natural)
}

pub fn shots_for_epsilon_base(eps0: f64, d: usize, base: LogBase) -> Result<u64> {
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(invalid(format!("epsilon0 must be in (0, 1], got {eps0}")));
    }
    if d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    let d = d as f64;
    Ok((112.0 * d * base.log(d) / (eps0 * eps0)).ceil() as u64)
}

/// The fixed `ℓ = 20d` shot budget of the reference numerical experiments.
pub fn shots_20d(d: usize) -> u64 {
    20 * d as u64
}

/// Largest `n` for which [`ExpectationTable`] may be built (`4⁸` entries).
pub const TABLE_MAX_QUBITS: usize = 8;

/// `Tr(Wρ⋆)` for all `4ⁿ` strings, indexed by [`PauliString::to_index`].
///
/// Entries are produced by [`true_expectation`], so a source reading from the
/// table emits bit-identical outcomes to one that does not.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationTable {
    n: usize,
    values: Vec<f64>,
}

impl ExpectationTable {
    pub fn build(truth: &GroundTruth) -> Result<Self> {
        let n = truth.num_qubits();
        if n > TABLE_MAX_QUBITS {
            return Err(QstError::UnsupportedSize(format!(
                "expectation table limited to n <= {TABLE_MAX_QUBITS}, got {n}"
            )));
        }
        let mut scratch = Vec::new();
        let values = PauliString::enumerate(n)?
            .map(|w| true_expectation_with(&w, truth, &mut scratch))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, values })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn get(&self, w: &PauliString) -> Result<f64> {
        if w.num_qubits() != self.n {
            return Err(mismatch("Pauli string and table differ in qubit count"));
        }
        Ok(self.values[w.to_index()? as usize])
    }
}

/// Streaming source of measurement rounds: `B` fresh uniform Pauli strings per
/// round, each measured according to `mode`.
///
/// Owns its random stream; distinct sources must be given distinct streams.
#[derive(Debug)]
pub struct BatchSource<'a> {
    truth: &'a GroundTruth,
    batch_size: usize,
    mode: MeasurementMode,
    rng: QstRng,
    round: usize,
    scratch: Vec<Complex64>,
    table: Option<Arc<ExpectationTable>>,
}

impl<'a> BatchSource<'a> {
    pub fn new(
        truth: &'a GroundTruth,
        batch_size: usize,
        mode: MeasurementMode,
        rng: QstRng,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        let d = truth.dim();
        if batch_size > d.saturating_mul(d) {
            return Err(invalid(format!("batch size {batch_size} exceeds d^2")));
        }
        if let MeasurementMode::Shots(l) = mode {
            check_shot_preconditions(truth, l)?;
        }
        Ok(Self {
            truth,
            batch_size,
            mode,
            rng,
            round: 0,
            scratch: Vec::new(),
            table: None,
        })
    }

    /// Reads exact expectations from `table` instead of recomputing them.
    pub fn with_table(mut self, table: Arc<ExpectationTable>) -> Result<Self> {
        if table.num_qubits() != self.truth.num_qubits() {
            return Err(mismatch("expectation table and state differ in qubit count"));
        }
        self.table = Some(table);
        Ok(self)
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn mode(&self) -> MeasurementMode {
        self.mode
    }

    pub fn truth(&self) -> &'a GroundTruth {
        self.truth
    }

    /// Rounds emitted so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn next_outcome(&mut self) -> Result<MeasurementOutcome> {
        let w = PauliString::sample_uniform(self.truth.num_qubits(), &mut self.rng)?;
        let e = match &self.table {
            Some(t) => t.get(&w)?,
            None => true_expectation_with(&w, self.truth, &mut self.scratch)?,
        };
        match self.mode {
            MeasurementMode::Exact => Ok(MeasurementOutcome::exact(w, e)),
            MeasurementMode::Shots(l) => sample_shots(w, e, l, &mut self.rng),
        }
    }

    /// Replaces `out` with the next round of `B` outcomes.
    pub fn next_batch_into(&mut self, out: &mut Vec<MeasurementOutcome>) -> Result<()> {
        out.clear();
        for _ in 0..self.batch_size {
            let o = self.next_outcome()?;
            out.push(o);
        }
        self.round += 1;
        Ok(())
    }

    pub fn next_batch(&mut self) -> Result<Vec<MeasurementOutcome>> {
        let mut out = Vec::with_capacity(self.batch_size);
        self.next_batch_into(&mut out)?;
        Ok(out)
    }
}

pub const OUTCOME_LOG_HEADER: &str = "round,slot,pauli,y,z,shots";

/// Appends one round to an outcome log (`round,slot,pauli,y,z,shots`).
pub fn write_outcome_rows<W: Write>(
    out: &mut W,
    round: usize,
    outcomes: &[MeasurementOutcome],
) -> std::io::Result<()> {
    for (slot, o) in outcomes.iter().enumerate() {
        let shots = o.shots.map_or_else(|| "inf".to_string(), |l| l.to_string());
        writeln!(out, "{round},{slot},{},{:.16e},{:.16e},{shots}", o.pauli, o.y, o.z)?;
    }
    Ok(())
}
