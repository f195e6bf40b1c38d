//! Online low-rank quantum state tomography.
//!
//! An unknown `n`-qubit state `ρ⋆` of rank `r` is probed by random local Pauli
//! observables, one fresh mini-batch per round. The estimate is kept in factored
//! form `ρ = UU†` with `U ∈ ℂ^{d×r}`, `d = 2ⁿ`, and every round takes one
//! stochastic gradient step on the squared residuals of the batch. Nothing on the
//! hot path ever materializes a `d×d` matrix: Pauli strings act on `U` one 2×2
//! factor at a time, and distances use `r×r` Gram matrices.
//!
//! Modules:
//!
//! - [`pauli`]: Pauli strings, uniform sampling, fast application.
//! - [`state`]: ground-truth generation, initial factors, Frobenius distances.
//! - [`measurement`]: exact and shot-noise outcomes, streaming batch source.
//! - [`estimator`]: loss, gradient, SGD step and the online loop.
//! - [`initializer`]: online power-iteration initialization, geometric-median
//!   boosting and a spectral baseline.
//! - [`qst_file`]: binary `.qst` container for states and factors.
//! - `oracle` (feature `oracle`): dense reference implementations for tests.

pub mod error;
pub mod estimator;
pub mod initializer;
pub mod measurement;
pub mod pauli;
pub mod qst_file;
pub mod rng;
pub mod state;

#[cfg(feature = "oracle")]
pub mod oracle;

pub use num_complex::Complex64;

/// Column-major complex matrix. Columns of a `d×r` factor are contiguous.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

pub use error::{QstError, Result};
pub use estimator::{EtaPolicy, RunTrace, SgdConfig, StepWorkspace, TraceRow};
pub use initializer::{InitConfig, InitSchedule, UpdateSign};
pub use measurement::{BatchSource, MeasurementMode, MeasurementOutcome};
pub use pauli::{PauliCode, PauliString};
pub use state::{FactorState, GroundTruth, Normalization, SpectrumShape};
