//! `.qst` container for ground truths and factors.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic     4 bytes  "QST\0"
//! version   u16      1
//! kind      u8       1 = ground truth, 2 = factor
//! norm      u8       0 = none (factor), 1 = trace_one, 2 = spectral_one
//! n         u32
//! r         u32
//! spectrum  r × f64  (ground truth only)
//! payload   d·r × (f64 re, f64 im), row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::Result;
use crate::state::{FactorState, GroundTruth, Normalization, MAX_QUBITS};
use crate::{CMatrix, Complex64, QstError};

pub const MAGIC: [u8; 4] = *b"QST\0";
pub const VERSION: u16 = 1;

const KIND_TRUTH: u8 = 1;
const KIND_FACTOR: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum StoredState {
    Truth(GroundTruth),
    Factor(FactorState),
}

fn format_err(msg: impl Into<String>) -> QstError {
    QstError::Format(msg.into())
}

fn write_header<W: Write>(out: &mut W, kind: u8, norm: u8, n: usize, r: usize) -> Result<()> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[kind, norm])?;
    out.write_all(&(n as u32).to_le_bytes())?;
    out.write_all(&(r as u32).to_le_bytes())?;
    Ok(())
}

fn write_matrix<W: Write>(out: &mut W, m: &CMatrix) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_truth<W: Write>(out: &mut W, truth: &GroundTruth) -> Result<()> {
    let norm = match truth.normalization() {
        Normalization::TraceOne => 1,
        Normalization::SpectralOne => 2,
    };
    write_header(out, KIND_TRUTH, norm, truth.num_qubits(), truth.rank())?;
    for s in truth.spectrum() {
        out.write_all(&s.to_le_bytes())?;
    }
    write_matrix(out, truth.eigvecs())
}

pub fn write_factor<W: Write>(out: &mut W, factor: &FactorState) -> Result<()> {
    write_header(out, KIND_FACTOR, 0, factor.num_qubits(), factor.rank())?;
    write_matrix(out, factor.u())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_matrix<R: Read>(input: &mut R, rows: usize, cols: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = read_f64(input)?;
            let im = read_f64(input)?;
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

pub fn read_state<R: Read>(input: &mut R) -> Result<StoredState> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(format_err("bad magic"));
    }
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    let version = u16::from_le_bytes([b[0], b[1]]);
    if version != VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let (kind, norm) = (b[2], b[3]);
    let n = read_u32(input)? as usize;
    let r = read_u32(input)? as usize;
    if n == 0 || n > MAX_QUBITS {
        return Err(format_err(format!("qubit count {n} out of range")));
    }
    let d = 1usize << n;
    if r == 0 || r > d {
        return Err(format_err(format!("rank {r} out of range for d = {d}")));
    }
    match kind {
        KIND_TRUTH => {
            let normalization = match norm {
                1 => Normalization::TraceOne,
                2 => Normalization::SpectralOne,
                other => return Err(format_err(format!("bad normalization tag {other}"))),
            };
            let spectrum = (0..r).map(|_| read_f64(input)).collect::<Result<Vec<_>>>()?;
            let v = read_matrix(input, d, r)?;
            GroundTruth::from_parts(n, v, spectrum, normalization)
                .map(StoredState::Truth)
                .map_err(|e| format_err(format!("stored ground truth is invalid: {e}")))
        }
        KIND_FACTOR => {
            if norm != 0 {
                return Err(format_err(format!("factor carries normalization tag {norm}")));
            }
            let u = read_matrix(input, d, r)?;
            FactorState::new(n, u)
                .map(StoredState::Factor)
                .map_err(|e| format_err(format!("stored factor is invalid: {e}")))
        }
        other => Err(format_err(format!("unknown kind tag {other}"))),
    }
}

pub fn save_truth(path: impl AsRef<Path>, truth: &GroundTruth) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_truth(&mut out, truth)?;
    out.flush()?;
    Ok(())
}

pub fn save_factor(path: impl AsRef<Path>, factor: &FactorState) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_factor(&mut out, factor)?;
    out.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<StoredState> {
    read_state(&mut BufReader::new(File::open(path)?))
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    match load(path)? {
        StoredState::Truth(t) => Ok(t),
        StoredState::Factor(_) => Err(format_err("expected a ground truth, found a factor")),
    }
}

pub fn load_factor(path: impl AsRef<Path>) -> Result<FactorState> {
    match load(path)? {
        StoredState::Factor(f) => Ok(f),
        StoredState::Truth(_) => Err(format_err("expected a factor, found a ground truth")),
    }
}
