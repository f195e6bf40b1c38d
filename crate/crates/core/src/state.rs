//! Ground-truth states, factored estimates and Frobenius distances.
//!
//! Distances between `ρ_a = AA†` and `ρ_b = BB†` use the Gram identity
//! `‖AA† − BB†‖²_F = ‖A†A‖²_F + ‖B†B‖²_F − 2‖A†B‖²_F`, which costs `O(d·r²)` and
//! never builds a `d×d` matrix.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, mismatch, Result};
use crate::rng::{stream, stream_rng};
use crate::{CMatrix, Complex64, QstError};

/// Largest qubit count for which `d = 2ⁿ` is accepted anywhere in the crate.
pub const MAX_QUBITS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Normalization {
    /// `Tr ρ⋆ = 1`; required for shot-noise simulation.
    TraceOne,
    /// `‖ρ⋆‖ = 1`, so `σ⋆ᵣ = 1/κ`.
    SpectralOne,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::TraceOne => "trace_one",
            Normalization::SpectralOne => "spectral_one",
        })
    }
}

impl FromStr for Normalization {
    type Err = QstError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace_one" => Ok(Normalization::TraceOne),
            "spectral_one" => Ok(Normalization::SpectralOne),
            other => Err(invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SpectrumShape {
    /// `σⱼ ∝ κ^{−j/(r−1)}`.
    #[default]
    Geometric,
    /// `σⱼ ∝ 1 − (1 − 1/κ)·j/(r−1)`.
    Linear,
}

impl fmt::Display for SpectrumShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumShape::Geometric => "geometric",
            SpectrumShape::Linear => "linear",
        })
    }
}

impl FromStr for SpectrumShape {
    type Err = QstError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(SpectrumShape::Geometric),
            "linear" => Ok(SpectrumShape::Linear),
            other => Err(invalid(format!("unknown spectrum shape {other:?}"))),
        }
    }
}

pub(crate) fn dim_for(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_QUBITS {
        return Err(invalid(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(1 << n)
}

/// The unknown state `ρ⋆ = V⋆·diag(σ⋆)·V⋆†` in eigen-factored form.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    eigvecs: CMatrix,
    spectrum: Vec<f64>,
    normalization: Normalization,
    n: usize,
}

/// Orthonormality residual allowed for `V⋆`.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

impl GroundTruth {
    /// Assembles a ground truth from explicit parts and checks every invariant.
    pub fn from_parts(
        n: usize,
        eigvecs: CMatrix,
        spectrum: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        let d = dim_for(n)?;
        let r = spectrum.len();
        if r == 0 || r > d {
            return Err(invalid(format!("rank must be in 1..={d}, got {r}")));
        }
        if eigvecs.nrows() != d || eigvecs.ncols() != r {
            return Err(mismatch(format!(
                "eigenvectors are {}x{}, expected {d}x{r}",
                eigvecs.nrows(),
                eigvecs.ncols()
            )));
        }
        if spectrum.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(invalid("spectrum entries must be finite and positive"));
        }
        if spectrum.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("spectrum must be non-increasing"));
        }
        let gram = eigvecs.adjoint() * &eigvecs;
        let residual = (gram - CMatrix::identity(r, r)).norm();
        if residual > ORTHONORMAL_TOL {
            return Err(invalid(format!(
                "eigenvectors not orthonormal (residual {residual:e})"
            )));
        }
        let tol = 1e-10;
        match normalization {
            Normalization::TraceOne => {
                let t: f64 = spectrum.iter().sum();
                if (t - 1.0).abs() > tol {
                    return Err(invalid(format!("trace_one spectrum sums to {t}")));
                }
            }
            Normalization::SpectralOne => {
                if (spectrum[0] - 1.0).abs() > tol {
                    return Err(invalid(format!(
                        "spectral_one spectrum starts at {}",
                        spectrum[0]
                    )));
                }
            }
        }
        Ok(Self {
            eigvecs,
            spectrum,
            normalization,
            n,
        })
    }

    /// Pure state `vv†` from a (not necessarily normalized) vector.
    pub fn pure(n: usize, v: &[Complex64]) -> Result<Self> {
        let d = dim_for(n)?;
        if v.len() != d {
            return Err(mismatch(format!("vector length {} != {d}", v.len())));
        }
        let mut col = CMatrix::from_column_slice(d, 1, v);
        let norm = col.norm();
        if norm == 0.0 {
            return Err(invalid("zero vector"));
        }
        col /= Complex64::new(norm, 0.0);
        Self::from_parts(n, col, vec![1.0], Normalization::TraceOne)
    }

    pub fn eigvecs(&self) -> &CMatrix {
        &self.eigvecs
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn rank(&self) -> usize {
        self.spectrum.len()
    }

    pub fn kappa(&self) -> f64 {
        self.spectrum[0] / self.spectrum[self.spectrum.len() - 1]
    }

    /// Smallest nonzero eigenvalue `σ⋆ᵣ`.
    pub fn sigma_min(&self) -> f64 {
        self.spectrum[self.spectrum.len() - 1]
    }

    pub fn sigma_max(&self) -> f64 {
        self.spectrum[0]
    }

    /// The exact factor `V⋆·diag(√σ⋆)`.
    pub fn factor(&self) -> FactorState {
        let mut u = self.eigvecs.clone();
        for (j, &s) in self.spectrum.iter().enumerate() {
            u.column_mut(j).scale_mut(s.sqrt());
        }
        FactorState { u, n: self.n }
    }
}

/// The estimate's parameter matrix `U` (`d×r`), representing `ρ = UU†`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorState {
    u: CMatrix,
    n: usize,
}

impl FactorState {
    pub fn new(n: usize, u: CMatrix) -> Result<Self> {
        let d = dim_for(n)?;
        if u.nrows() != d || u.ncols() == 0 {
            return Err(mismatch(format!(
                "factor is {}x{}, expected {d} rows and at least one column",
                u.nrows(),
                u.ncols()
            )));
        }
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QstError::NonFinite);
        }
        Ok(Self { u, n })
    }

    pub(crate) fn from_parts_unchecked(n: usize, u: CMatrix) -> Self {
        Self { u, n }
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn into_matrix(self) -> CMatrix {
        self.u
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `Tr(UU†) = ‖U‖²_F`.
    pub fn trace(&self) -> f64 {
        self.u.norm_squared()
    }

    /// `U·Q` for an `r×r` matrix `Q` (a gauge transform when `Q` is unitary).
    pub fn right_mul(&self, q: &CMatrix) -> Result<Self> {
        if q.nrows() != self.rank() {
            return Err(mismatch("gauge matrix has wrong row count"));
        }
        Self::new(self.n, &self.u * q)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(scale * re, scale * im)
    })
}

/// Random `d×r` matrix with orthonormal columns (thin QR of a complex Gaussian).
pub(crate) fn random_orthonormal<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> CMatrix {
    let g = complex_gaussian(d, r, 1.0, rng);
    let mut q = g.qr().q();
    // Re-orthonormalize once more; a single Householder QR already lands near
    // machine precision but a second pass tightens the Gram residual.
    q = q.qr().q();
    q
}

/// Eigenvalues from 1 down to `1/κ` in the requested shape, then normalized.
pub fn shaped_spectrum(
    r: usize,
    kappa: f64,
    shape: SpectrumShape,
    normalization: Normalization,
) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(invalid("rank must be at least 1"));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    if r == 1 && kappa != 1.0 {
        return Err(invalid("a rank-1 state has kappa = 1"));
    }
    let mut spectrum: Vec<f64> = (0..r)
        .map(|j| {
            if r == 1 {
                return 1.0;
            }
            let frac = j as f64 / (r - 1) as f64;
            match shape {
                SpectrumShape::Geometric => kappa.powf(-frac),
                SpectrumShape::Linear => 1.0 - (1.0 - 1.0 / kappa) * frac,
            }
        })
        .collect();
    // pin the endpoint so kappa is exact
    spectrum[r - 1] = 1.0 / kappa;
    spectrum[0] = 1.0;
    if normalization == Normalization::TraceOne {
        let total: f64 = spectrum.iter().sum();
        spectrum.iter_mut().for_each(|s| *s /= total);
    }
    Ok(spectrum)
}

/// Random rank-`r` ground truth with condition number `kappa`.
///
/// Eigenvectors come from the `TRUTH` stream of `seed`.
pub fn generate_ground_truth(
    n: usize,
    r: usize,
    kappa: f64,
    shape: SpectrumShape,
    normalization: Normalization,
    seed: u64,
) -> Result<GroundTruth> {
    let d = dim_for(n)?;
    if r == 0 || r > d {
        return Err(invalid(format!("rank must be in 1..={d}, got {r}")));
    }
    let spectrum = shaped_spectrum(r, kappa, shape, normalization)?;
    let mut rng = stream_rng(seed, stream::TRUTH);
    let eigvecs = random_orthonormal(d, r, &mut rng);
    GroundTruth::from_parts(n, eigvecs, spectrum, normalization)
}

/// Initial factor with i.i.d. complex Gaussian entries, per-component std `scale`.
///
/// Draws from the `INIT` stream of `seed`.
pub fn random_init_factor(n: usize, r: usize, scale: f64, seed: u64) -> Result<FactorState> {
    let mut rng = stream_rng(seed, stream::INIT);
    random_init_factor_with(n, r, scale, &mut rng)
}

pub fn random_init_factor_with<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    scale: f64,
    rng: &mut R,
) -> Result<FactorState> {
    let d = dim_for(n)?;
    if r == 0 {
        return Err(invalid("rank must be at least 1"));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid(format!("scale must be positive, got {scale}")));
    }
    FactorState::new(n, complex_gaussian(d, r, scale, rng))
}

/// Below this fraction of the summed squared norms the Gram formula has lost
/// most of its digits to cancellation.
const CANCELLATION_RATIO: f64 = 1e-6;

/// `‖A·diag(wa)·A† − B·diag(wb)·B†‖_F` through a thin QR of `[A, B]`: both terms
/// live in the column space of `Q`, so the norm equals that of a small
/// `(ra+rb)²` matrix formed without cancellation.
fn lowrank_difference_norm(a: &CMatrix, wa: &[f64], b: &CMatrix, wb: &[f64]) -> f64 {
    let (ra, rb) = (a.ncols(), b.ncols());
    let mut f = CMatrix::zeros(a.nrows(), ra + rb);
    f.columns_mut(0, ra).copy_from(a);
    f.columns_mut(ra, rb).copy_from(b);
    let r = f.qr().r();
    let mut left = r.columns(0, ra).into_owned();
    for (j, &w) in wa.iter().enumerate() {
        left.column_mut(j).scale_mut(w);
    }
    let mut right = r.columns(ra, rb).into_owned();
    for (j, &w) in wb.iter().enumerate() {
        right.column_mut(j).scale_mut(w);
    }
    let diff = &left * r.columns(0, ra).adjoint() - &right * r.columns(ra, rb).adjoint();
    diff.norm()
}

/// `√(aa + bb − 2ab)`, recomputed by `exact` when the subtraction cancels.
fn gram_distance(aa: f64, bb: f64, ab: f64, exact: impl FnOnce() -> f64) -> f64 {
    let sq = aa + bb - 2.0 * ab;
    if sq <= CANCELLATION_RATIO * (aa + bb) {
        exact()
    } else {
        sq.sqrt()
    }
}

/// `‖UU† − ρ⋆‖_F` in `O(d·r²)`.
pub fn frobenius_distance(est: &FactorState, truth: &GroundTruth) -> Result<f64> {
    if est.dim() != truth.dim() {
        return Err(mismatch(format!(
            "estimate dimension {} != truth dimension {}",
            est.dim(),
            truth.dim()
        )));
    }
    let u = est.u();
    let gram = u.adjoint() * u;
    let mut cross = truth.eigvecs().adjoint() * u;
    for (j, &s) in truth.spectrum().iter().enumerate() {
        cross.row_mut(j).scale_mut(s.sqrt());
    }
    let truth_sq: f64 = truth.spectrum().iter().map(|s| s * s).sum();
    Ok(gram_distance(
        gram.norm_squared(),
        truth_sq,
        cross.norm_squared(),
        || {
            let ones = vec![1.0; u.ncols()];
            lowrank_difference_norm(u, &ones, truth.eigvecs(), truth.spectrum())
        },
    ))
}

/// `‖AA† − BB†‖_F` for two factored estimates, in `O(d·(r_a + r_b)²)`.
pub fn factor_distance(a: &FactorState, b: &FactorState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(mismatch(format!(
            "factor dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let (ua, ub) = (a.u(), b.u());
    let aa = (ua.adjoint() * ua).norm_squared();
    let bb = (ub.adjoint() * ub).norm_squared();
    let ab = (ua.adjoint() * ub).norm_squared();
    Ok(gram_distance(aa, bb, ab, || {
        lowrank_difference_norm(ua, &vec![1.0; ua.ncols()], ub, &vec![1.0; ub.ncols()])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_pure_truth() {
        let t = generate_ground_truth(1, 1, 1.0, SpectrumShape::Geometric, Normalization::SpectralOne, 3)
            .unwrap();
        assert_eq!(t.spectrum(), &[1.0]);
        assert!((t.eigvecs().norm() - 1.0).abs() < 1e-12);
        assert_eq!(t.kappa(), 1.0);
    }

    #[test]
    fn geometric_spectrum_matches_definition() {
        let s = shaped_spectrum(3, 10.0, SpectrumShape::Geometric, Normalization::SpectralOne).unwrap();
        assert_eq!(s[0], 1.0);
        assert!((s[1] - 10f64.powf(-0.5)).abs() < 1e-15);
        assert!((s[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn linear_spectrum_and_trace_normalization() {
        let s = shaped_spectrum(3, 4.0, SpectrumShape::Linear, Normalization::SpectralOne).unwrap();
        assert_eq!(s, vec![1.0, 0.625, 0.25]);
        let t = shaped_spectrum(3, 4.0, SpectrumShape::Linear, Normalization::TraceOne).unwrap();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((t[0] / t[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn generation_preconditions() {
        let g = SpectrumShape::Geometric;
        let s = Normalization::TraceOne;
        assert!(generate_ground_truth(2, 5, 2.0, g, s, 0).is_err());
        assert!(generate_ground_truth(2, 2, 0.5, g, s, 0).is_err());
        assert!(generate_ground_truth(2, 1, 2.0, g, s, 0).is_err());
        assert!(generate_ground_truth(0, 1, 1.0, g, s, 0).is_err());
    }

    #[test]
    fn orthonormality_and_determinism() {
        for seed in 0..20 {
            let t = generate_ground_truth(5, 4, 3.0, SpectrumShape::Geometric, Normalization::TraceOne, seed)
                .unwrap();
            let gram = t.eigvecs().adjoint() * t.eigvecs();
            assert!((gram - CMatrix::identity(4, 4)).norm() <= 1e-10);
            let again =
                generate_ground_truth(5, 4, 3.0, SpectrumShape::Geometric, Normalization::TraceOne, seed)
                    .unwrap();
            assert_eq!(t, again);
        }
    }

    #[test]
    fn init_factor_rejects_bad_scale_and_is_deterministic() {
        assert!(random_init_factor(3, 1, 0.0, 1).is_err());
        assert!(random_init_factor(3, 1, -1.0, 1).is_err());
        assert_eq!(
            random_init_factor(4, 2, 0.01, 5).unwrap(),
            random_init_factor(4, 2, 0.01, 5).unwrap()
        );
    }

    #[test]
    fn exact_factor_has_zero_distance() {
        let t = generate_ground_truth(4, 3, 5.0, SpectrumShape::Geometric, Normalization::TraceOne, 2).unwrap();
        assert!(frobenius_distance(&t.factor(), &t).unwrap() <= 1e-12);
    }

    #[test]
    fn orthogonal_rank_one_projectors_are_sqrt2_apart() {
        let e0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let e1 = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)];
        let t = GroundTruth::pure(1, &e0).unwrap();
        let u = FactorState::new(1, CMatrix::from_column_slice(2, 1, &e1)).unwrap();
        let dist = frobenius_distance(&u, &t).unwrap();
        assert!((dist - 2f64.sqrt()).abs() < 1e-15);
        let v = FactorState::new(1, CMatrix::from_column_slice(2, 1, &e0)).unwrap();
        assert!((factor_distance(&u, &v).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(factor_distance(&u, &u).unwrap() <= 1e-15);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let t = generate_ground_truth(2, 1, 1.0, SpectrumShape::Geometric, Normalization::TraceOne, 1).unwrap();
        let u = random_init_factor(3, 1, 1.0, 1).unwrap();
        assert!(frobenius_distance(&u, &t).is_err());
        assert!(factor_distance(&u, &t.factor()).is_err());
    }

    #[test]
    fn factor_rejects_non_finite_entries() {
        let mut m = CMatrix::zeros(2, 1);
        m[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(FactorState::new(1, m), Err(QstError::NonFinite)));
    }
}
