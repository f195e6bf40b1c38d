//! Local Pauli observables.
//!
//! A [`PauliString`] is an `n`-fold tensor product of single-qubit Pauli
//! matrices. `codes[0]` acts on the most-significant bit of the state index, so
//! the dense realization is `P₀ ⊗ P₁ ⊗ … ⊗ P_{n−1}` in the usual Kronecker order.
//!
//! Application to a `d×r` matrix walks the qubits one at a time. For qubit `q` the
//! 2×2 factor mixes index pairs `(i, i + s)` with `s = d >> (q + 1)`, which on a
//! column-major buffer is a sweep over contiguous blocks of length `2s`. Each
//! factor costs `O(dr)`, the whole string `O(n·d·r) = O(rd log d)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, mismatch, Result};
use crate::{CMatrix, Complex64};

/// Largest qubit count accepted by the base-4 index codec (`4ⁿ` must fit a `u64`).
pub const MAX_INDEX_QUBITS: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum PauliCode {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl PauliCode {
    pub const ALL: [PauliCode; 4] = [PauliCode::I, PauliCode::X, PauliCode::Y, PauliCode::Z];

    pub fn from_u8(code: u8) -> Result<Self> {
        match code {
            0 => Ok(PauliCode::I),
            1 => Ok(PauliCode::X),
            2 => Ok(PauliCode::Y),
            3 => Ok(PauliCode::Z),
            other => Err(invalid(format!("Pauli code {other} not in 0..=3"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliCode::I => 'I',
            PauliCode::X => 'X',
            PauliCode::Y => 'Y',
            PauliCode::Z => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    codes: Vec<PauliCode>,
}

impl PauliString {
    pub fn new(codes: Vec<PauliCode>) -> Result<Self> {
        if codes.is_empty() {
            return Err(invalid("a Pauli string needs at least one qubit"));
        }
        Ok(Self { codes })
    }

    pub fn from_codes(codes: &[u8]) -> Result<Self> {
        let codes = codes
            .iter()
            .map(|&c| PauliCode::from_u8(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(codes)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![PauliCode::I; n])
    }

    /// Draws each of the `n` codes independently and uniformly from `{I, X, Y, Z}`,
    /// i.e. a uniform element of the `4ⁿ`-element set of local Pauli strings.
    pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(invalid("qubit count must be at least 1"));
        }
        let mut codes = Vec::with_capacity(n);
        while codes.len() < n {
            // 32 two-bit codes per draw.
            let mut bits: u64 = rng.random();
            let take = (n - codes.len()).min(32);
            for _ in 0..take {
                codes.push(PauliCode::ALL[(bits & 3) as usize]);
                bits >>= 2;
            }
        }
        Ok(Self { codes })
    }

    /// Decodes a base-4 index; `codes[0]` is the most significant digit.
    pub fn from_index(n: usize, index: u64) -> Result<Self> {
        if n == 0 || n > MAX_INDEX_QUBITS {
            return Err(invalid(format!(
                "index codec supports 1..={MAX_INDEX_QUBITS} qubits, got {n}"
            )));
        }
        let count = 1u64 << (2 * n);
        if index >= count {
            return Err(invalid(format!("Pauli index {index} out of range [0, 4^{n})")));
        }
        let codes = (0..n)
            .map(|q| PauliCode::ALL[((index >> (2 * (n - 1 - q))) & 3) as usize])
            .collect();
        Ok(Self { codes })
    }

    pub fn to_index(&self) -> Result<u64> {
        if self.codes.len() > MAX_INDEX_QUBITS {
            return Err(invalid("too many qubits for the index codec"));
        }
        Ok(self
            .codes
            .iter()
            .fold(0u64, |acc, &c| (acc << 2) | c as u64))
    }

    /// All `4ⁿ` strings in index order.
    pub fn enumerate(n: usize) -> Result<impl Iterator<Item = PauliString>> {
        if n == 0 || n > MAX_INDEX_QUBITS {
            return Err(invalid(format!("cannot enumerate Pauli strings on {n} qubits")));
        }
        Ok((0..1u64 << (2 * n)).map(move |i| {
            PauliString::from_index(n, i).expect("index in range by construction")
        }))
    }

    pub fn num_qubits(&self) -> usize {
        self.codes.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.codes.len()
    }

    pub fn codes(&self) -> &[PauliCode] {
        &self.codes
    }

    pub fn is_identity(&self) -> bool {
        self.codes.iter().all(|&c| c == PauliCode::I)
    }

    /// Nonzero entry of column `col` of the dense realization: `(row, value)`.
    ///
    /// Every Pauli string is a phased permutation matrix, so each column has
    /// exactly one nonzero entry.
    pub fn column_entry(&self, col: usize) -> (usize, Complex64) {
        let n = self.codes.len();
        let mut row = col;
        let mut phase = Complex64::new(1.0, 0.0);
        for (q, &code) in self.codes.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            let set = col & bit != 0;
            match code {
                PauliCode::I => {}
                PauliCode::X => row ^= bit,
                PauliCode::Y => {
                    row ^= bit;
                    // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                    phase *= if set {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                }
                PauliCode::Z => {
                    if set {
                        phase = -phase;
                    }
                }
            }
        }
        (row, phase)
    }

    /// `(x, z, #Y)`: bit `n−1−q` of `x` is set when qubit `q` flips (X or Y),
    /// of `z` when it picks up a sign (Z or Y).
    fn masks(&self) -> (usize, usize, u32) {
        let n = self.codes.len();
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, &code) in self.codes.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match code {
                PauliCode::I => {}
                PauliCode::X => x |= bit,
                PauliCode::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                PauliCode::Z => z |= bit,
            }
        }
        (x, z, ny)
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if self.codes.len() >= usize::BITS as usize || rows != self.dim() {
            return Err(mismatch(format!(
                "Pauli string on {} qubits acts on dimension {}, got {rows} rows",
                self.codes.len(),
                1usize << self.codes.len().min(usize::BITS as usize - 1)
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.codes {
            write!(f, "{}", c.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = crate::QstError;

    fn from_str(s: &str) -> Result<Self> {
        let codes = s
            .chars()
            .map(|ch| match ch {
                'I' => Ok(PauliCode::I),
                'X' => Ok(PauliCode::X),
                'Y' => Ok(PauliCode::Y),
                'Z' => Ok(PauliCode::Z),
                other => Err(invalid(format!("invalid Pauli character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(codes)
    }
}

/// Applies `w` in place to a column-major buffer of `d`-row columns.
///
/// The buffer length must be a multiple of `d = w.dim()`; this is not checked.
pub(crate) fn apply_in_place(w: &PauliString, buf: &mut [Complex64]) {
    let d = w.dim();
    let block = d.min(APPLY_BLOCK);
    // qubits whose pairs straddle a block take a pass over the whole buffer;
    // the rest are applied block by block while the block sits in L1
    let strides = || w.codes.iter().enumerate().map(move |(q, &code)| (code, d >> (q + 1)));
    for (code, s) in strides().filter(|&(_, s)| 2 * s > block) {
        apply_factor(code, s, buf);
    }
    for chunk in buf.chunks_exact_mut(block) {
        for (code, s) in strides().filter(|&(_, s)| 2 * s <= block) {
            apply_factor(code, s, chunk);
        }
    }
}

/// Elements per cache block in [`apply_in_place`] (16 KiB).
const APPLY_BLOCK: usize = 1024;

/// One single-qubit factor whose pairs sit `s` apart; `buf.len()` is a multiple of `2s`.
fn apply_factor(code: PauliCode, s: usize, buf: &mut [Complex64]) {
    match code {
        PauliCode::I => {}
        PauliCode::X => {
            for block in buf.chunks_exact_mut(2 * s) {
                let (lo, hi) = block.split_at_mut(s);
                lo.swap_with_slice(hi);
            }
        }
        PauliCode::Y => {
            for block in buf.chunks_exact_mut(2 * s) {
                let (lo, hi) = block.split_at_mut(s);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (ta, tb) = (*a, *b);
                    // a' = −i·b, b' = i·a
                    *a = Complex64::new(tb.im, -tb.re);
                    *b = Complex64::new(-ta.im, ta.re);
                }
            }
        }
        PauliCode::Z => {
            for block in buf.chunks_exact_mut(2 * s) {
                for b in &mut block[s..] {
                    *b = -*b;
                }
            }
        }
    }
}

/// Writes `w·src` into `dst` (same length, column-major, `d` rows) in one
/// gather pass: `(w·v)[i] = i^{#Y}·(−1)^{|(i⊕x)∧z|}·v[i⊕x]`, with `x` marking the
/// X/Y qubits and `z` the Z/Y qubits.
pub(crate) fn apply_into(w: &PauliString, src: &[Complex64], dst: &mut [Complex64]) {
    let d = w.dim();
    let (x, z, ny) = w.masks();
    let base = match ny % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    for (out, col) in dst.chunks_exact_mut(d).zip(src.chunks_exact(d)) {
        for (i, o) in out.iter_mut().enumerate() {
            let j = i ^ x;
            let v = col[j] * base;
            *o = if (j & z).count_ones() & 1 == 0 { v } else { -v };
        }
    }
}

/// `Σⱼ ⟨a[:,j], b[:,j]⟩` over flat buffers of equal length.
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

/// Tolerance on the imaginary part of `Tr(W·UU†)` relative to `max(1, ‖U‖²_F)`.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

/// `scale` is only evaluated when the imaginary part exceeds the bare tolerance.
pub(crate) fn real_expectation(value: Complex64, scale: impl FnOnce() -> f64) -> Result<f64> {
    if value.im.abs() > EXPECTATION_IMAG_TOL && value.im.abs() > EXPECTATION_IMAG_TOL * scale().max(1.0) {
        return Err(crate::QstError::Internal(format!(
            "Pauli expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// `dense(w)·m` without forming `dense(w)`.
pub fn apply_pauli(w: &PauliString, m: &CMatrix) -> Result<CMatrix> {
    w.check_rows(m.nrows())?;
    if m.ncols() == 0 {
        return Err(mismatch("matrix has no columns"));
    }
    let mut out = m.clone();
    apply_in_place(w, out.as_mut_slice());
    Ok(out)
}

/// [`apply_pauli`] overwriting `m`.
pub fn apply_pauli_in_place(w: &PauliString, m: &mut CMatrix) -> Result<()> {
    w.check_rows(m.nrows())?;
    apply_in_place(w, m.as_mut_slice());
    Ok(())
}

/// `Tr(dense(w)·UU†) = Re Σⱼ ⟨U[:,j], w·U[:,j]⟩`.
pub fn pauli_expectation(w: &PauliString, u: &CMatrix) -> Result<f64> {
    let wu = apply_pauli(w, u)?;
    let value = inner(u.as_slice(), wu.as_slice());
    real_expectation(value, || u.norm_squared())
}
