use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::{HarnessError, Result};

pub type AtomicWriter = BufWriter<tempfile::NamedTempFile>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates `dir` (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes through a temp file in the same directory, then renames over `path`,
/// so readers never observe a half-written file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut AtomicWriter) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(&dir))?;
    let mut out = BufWriter::new(tmp);
    fill(&mut out).map_err(io_err(path))?;
    let tmp = out.into_inner().map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    tmp.persist(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// `git describe --always --dirty` of the working directory, or `unknown`.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}
