//! Dense reference implementations. Test and calibration use only.
//!
//! Everything here materializes `d×d` matrices (guarded to `n ≤ 12`) or sweeps
//! all `4ⁿ` Pauli strings (guarded to `n ≤ 4`), and shares no code with the fast
//! paths beyond the data types.

use crate::error::{mismatch, Result};
use crate::initializer::DENSE_MAX_QUBITS;
use crate::measurement::MeasurementOutcome;
use crate::pauli::{PauliCode, PauliString};
use crate::state::{FactorState, GroundTruth};
use crate::{CMatrix, Complex64, QstError};

pub const EXHAUSTIVE_MAX_QUBITS: usize = 4;

fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(QstError::UnsupportedSize(format!(
            "dense oracle limited to n <= {limit}, got {n}"
        )));
    }
    Ok(())
}

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_2x2(code: PauliCode) -> CMatrix {
    let (o, l, i) = (z(0.0, 0.0), z(1.0, 0.0), z(0.0, 1.0));
    let entries = match code {
        PauliCode::I => [l, o, o, l],
        PauliCode::X => [o, l, l, o],
        PauliCode::Y => [o, -i, i, o],
        PauliCode::Z => [l, o, o, -l],
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

/// Kronecker product of the per-qubit factors, `codes[0]` most significant.
pub fn dense_pauli(w: &PauliString) -> Result<CMatrix> {
    guard(w.num_qubits(), DENSE_MAX_QUBITS)?;
    Ok(w
        .codes()
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, &c| acc.kronecker(&pauli_2x2(c))))
}

pub fn dense_density_truth(t: &GroundTruth) -> Result<CMatrix> {
    guard(t.num_qubits(), DENSE_MAX_QUBITS)?;
    let mut scaled = t.eigvecs().clone();
    for (j, &s) in t.spectrum().iter().enumerate() {
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(&scaled * t.eigvecs().adjoint())
}

pub fn dense_density_factor(f: &FactorState) -> Result<CMatrix> {
    guard(f.num_qubits(), DENSE_MAX_QUBITS)?;
    Ok(f.u() * f.u().adjoint())
}

/// `Re Tr(AB)`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * b).trace().re
}

/// `Re⟨A, B⟩ = Re Tr(A†B)`.
pub fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn dense_apply(w: &PauliString, m: &CMatrix) -> Result<CMatrix> {
    let p = dense_pauli(w)?;
    if p.ncols() != m.nrows() {
        return Err(mismatch("dense Pauli and matrix differ in dimension"));
    }
    Ok(p * m)
}

pub fn dense_expectation(w: &PauliString, rho: &CMatrix) -> Result<f64> {
    Ok(trace_product(&dense_pauli(w)?, rho))
}

pub fn dense_loss(u: &FactorState, batch: &[MeasurementOutcome]) -> Result<f64> {
    let rho = dense_density_factor(u)?;
    let mut total = 0.0;
    for o in batch {
        let r = o.y - dense_expectation(&o.pauli, &rho)?;
        total += r * r;
    }
    Ok(0.25 * total)
}

pub fn dense_gradient(u: &FactorState, batch: &[MeasurementOutcome]) -> Result<CMatrix> {
    let rho = dense_density_factor(u)?;
    let mut g = CMatrix::zeros(u.dim(), u.rank());
    for o in batch {
        let a = dense_pauli(&o.pauli)?;
        let r = trace_product(&a, &rho) - o.y;
        g += (a * u.u()) * z(r, 0.0);
    }
    Ok(g)
}

pub fn dense_frobenius_distance(est: &FactorState, truth: &GroundTruth) -> Result<f64> {
    Ok((dense_density_factor(est)? - dense_density_truth(truth)?).norm())
}

/// `f(U) = ‖UU† − ρ⋆‖²_F`.
pub fn population_objective(u: &CMatrix, rho: &CMatrix) -> f64 {
    (u * u.adjoint() - rho).norm_squared()
}

/// `(B/4ⁿ)·Σ_W [Tr(WUU†) − Tr(Wρ⋆)]·W·U` over all `4ⁿ` strings.
pub fn exhaustive_expected_gradient(u: &FactorState, truth: &GroundTruth, b: usize) -> Result<CMatrix> {
    let n = u.num_qubits();
    guard(n, EXHAUSTIVE_MAX_QUBITS)?;
    if truth.num_qubits() != n {
        return Err(mismatch("factor and truth differ in qubit count"));
    }
    let rho = dense_density_truth(truth)?;
    let uu = dense_density_factor(u)?;
    let mut g = CMatrix::zeros(u.dim(), u.rank());
    let count = 4usize.pow(n as u32);
    for w in PauliString::enumerate(n)? {
        let a = dense_pauli(&w)?;
        let r = trace_product(&a, &uu) - trace_product(&a, &rho);
        g += (a * u.u()) * z(r, 0.0);
    }
    Ok(g * z(b as f64 / count as f64, 0.0))
}

/// Exact mean of the stochastic power term: `(1/4ⁿ)·Σ_W d·Tr(Wρ⋆)·W·u`.
pub fn exhaustive_power_mean(u: &[Complex64], truth: &GroundTruth) -> Result<Vec<Complex64>> {
    let n = truth.num_qubits();
    guard(n, EXHAUSTIVE_MAX_QUBITS)?;
    let d = truth.dim();
    if u.len() != d {
        return Err(mismatch("vector length differs from the state dimension"));
    }
    let rho = dense_density_truth(truth)?;
    let v = CMatrix::from_column_slice(d, 1, u);
    let mut acc = CMatrix::zeros(d, 1);
    for w in PauliString::enumerate(n)? {
        let a = dense_pauli(&w)?;
        let y = trace_product(&a, &rho);
        acc += (a * &v) * z(d as f64 * y, 0.0);
    }
    let scale = 1.0 / 4f64.powi(n as i32);
    Ok(acc.iter().map(|x| x * scale).collect())
}

/// One side-by-side comparison from [`lemma_bound_audit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    fn at_least(lhs: f64, rhs: f64) -> Self {
        let slack = 1e-12 * (1.0 + lhs.abs().max(rhs.abs()));
        Self { lhs, rhs, satisfied: lhs >= rhs - slack }
    }

    fn at_most(lhs: f64, rhs: f64) -> Self {
        let slack = 1e-12 * (1.0 + lhs.abs().max(rhs.abs()));
        Self { lhs, rhs, satisfied: lhs <= rhs + slack }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaParams {
    pub batch: usize,
    /// Neighborhood radius: `‖Δ‖_F ≤ δ·σ_r` is assumed.
    pub delta: f64,
    /// Noise level: `E z² ≤ ε₀²/d` per outcome.
    pub eps0: f64,
    /// Radius constant for the Taylor-remainder bound, `‖V‖_F ≤ C·√σ_r`.
    pub c_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaAudit {
    /// `Re⟨4ΔU, E∇ℓ⟩ ≥ (2B/d)(1−δ)²σ_r‖Δ‖²`.
    pub regularity: BoundCheck,
    /// `E‖∇ℓ‖² ≤ [(3B·max{d,B}/d²)‖Δ‖² + 2Bε₀²/d]·r(κ+δ)σ_r`.
    pub smoothness: BoundCheck,
    /// `|f(U+V) − f(U) − Re⟨4ΔU, V⟩| ≤ L_C‖V‖²`, one per direction.
    pub taylor: Vec<BoundCheck>,
    /// `Re⟨ΔUU†, Δ⟩ ≥ ½(1−δ)²σ_r‖Δ‖²`.
    pub curvature: BoundCheck,
    /// `‖Δ‖_F`.
    pub delta_norm: f64,
}

impl LemmaAudit {
    pub fn all_satisfied(&self) -> bool {
        self.regularity.satisfied
            && self.smoothness.satisfied
            && self.curvature.satisfied
            && self.taylor.iter().all(|c| c.satisfied)
    }
}

/// `L_C = (4κ + 6δ + 2C√(κ+δ) + C²)·σ_r`.
pub fn taylor_constant(kappa: f64, delta: f64, c: f64, sigma_r: f64) -> f64 {
    (4.0 * kappa + 6.0 * delta + 2.0 * c * (kappa + delta).sqrt() + c * c) * sigma_r
}

/// Evaluates both sides of the regularity, smoothness, Taylor-remainder and
/// curvature inequalities by exhaustive enumeration. Directions longer than
/// `C·√σ_r` are rescaled onto that sphere.
pub fn lemma_bound_audit(
    u: &FactorState,
    truth: &GroundTruth,
    params: LemmaParams,
    directions: &[CMatrix],
) -> Result<LemmaAudit> {
    let n = u.num_qubits();
    guard(n, EXHAUSTIVE_MAX_QUBITS)?;
    let d = u.dim() as f64;
    let b = params.batch as f64;
    let sigma_r = truth.sigma_min();
    let kappa = truth.kappa();
    let r = truth.rank() as f64;
    let rho = dense_density_truth(truth)?;
    let uu = dense_density_factor(u)?;
    let delta_m = &uu - &rho;
    let delta_sq = delta_m.norm_squared();
    let grad_f = (&delta_m * u.u()) * z(4.0, 0.0);

    let expected = exhaustive_expected_gradient(u, truth, params.batch)?;
    let one_minus = (1.0 - params.delta).powi(2);
    let regularity = BoundCheck::at_least(
        real_inner(&grad_f, &expected),
        2.0 * b / d * one_minus * sigma_r * delta_sq,
    );

    // E‖g‖² for one outcome: mean over W of Tr(WΔ)²‖WU‖², plus the noise term.
    let count = 4f64.powi(n as i32);
    let mut second = 0.0;
    for w in PauliString::enumerate(n)? {
        let a = dense_pauli(&w)?;
        let res = trace_product(&a, &delta_m);
        second += res * res * (a * u.u()).norm_squared();
    }
    second /= count;
    second += params.eps0 * params.eps0 / d * u.u().norm_squared();
    let mean_sq = (expected * z(1.0 / b, 0.0)).norm_squared();
    let lhs = b * second + b * (b - 1.0) * mean_sq;
    let rhs = (3.0 * b * d.max(b) / (d * d) * delta_sq + 2.0 * b * params.eps0 * params.eps0 / d)
        * r
        * (kappa + params.delta)
        * sigma_r;
    let smoothness = BoundCheck::at_most(lhs, rhs);

    let l_c = taylor_constant(kappa, params.delta, params.c_radius, sigma_r);
    let radius = params.c_radius * sigma_r.sqrt();
    let f0 = delta_sq;
    let taylor = directions
        .iter()
        .map(|v| {
            if v.shape() != u.u().shape() {
                return Err(mismatch("direction shape differs from the factor"));
            }
            let len = v.norm();
            let v = if len > radius { v * z(radius / len, 0.0) } else { v.clone() };
            let f1 = population_objective(&(u.u() + &v), &rho);
            let rem = (f1 - f0 - real_inner(&grad_f, &v)).abs();
            Ok(BoundCheck::at_most(rem, l_c * v.norm_squared()))
        })
        .collect::<Result<Vec<_>>>()?;

    let curvature = BoundCheck::at_least(
        real_inner(&(&delta_m * &uu), &delta_m),
        0.5 * one_minus * sigma_r * delta_sq,
    );

    Ok(LemmaAudit {
        regularity,
        smoothness,
        taylor,
        curvature,
        delta_norm: delta_sq.sqrt(),
    })
}
