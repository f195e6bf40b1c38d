//! One function per CLI subcommand. Each takes a resolved config, writes its
//! files under `cfg.output`, and returns a small summary for the caller.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use qst_core::estimator::{run_sgd, RunTrace};
use qst_core::initializer::{
    boosted_init, replica_source, run_online_init_traced, spectral_init, write_init_trace, InitTraceRow,
};
use qst_core::measurement::{write_outcome_rows, ExpectationTable, OUTCOME_LOG_HEADER, TABLE_MAX_QUBITS};
use qst_core::qst_file;
use qst_core::rng::{stream, stream_rng};
use qst_core::state::{frobenius_distance, generate_ground_truth, random_init_factor};
use qst_core::{BatchSource, FactorState, GroundTruth, QstError};

use crate::config::{ConfigError, ExperimentConfig, InitKind};
use crate::output::{ensure_dir, git_describe, write_atomic};
use crate::{HarnessError, Result};

/// Sweep cell `k` measures from stream `SWEEP_STREAM_BASE + k`, disjoint from the
/// run and replica streams.
pub const SWEEP_STREAM_BASE: u64 = 3 << 32;

pub const SWEEP_HEADER: &str = "B,iters_to_tol,success";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Cli,
    Env,
    Config,
}

impl fmt::Display for SeedSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedSource::Cli => "cli",
            SeedSource::Env => "QST_SEED",
            SeedSource::Config => "config",
        })
    }
}

/// Applies `--out` and the seed precedence `--seed` > `QST_SEED` > config.
pub fn apply_overrides(
    cfg: &mut ExperimentConfig,
    out: Option<PathBuf>,
    cli_seed: Option<u64>,
    env_seed: Option<&str>,
) -> Result<SeedSource> {
    if let Some(out) = out {
        cfg.output = out;
    }
    if let Some(seed) = cli_seed {
        cfg.seed = seed;
        return Ok(SeedSource::Cli);
    }
    if let Some(raw) = env_seed {
        cfg.seed = raw.trim().parse().map_err(|e| ConfigError {
            key: "QST_SEED".into(),
            line: None,
            message: format!("cannot parse {raw:?} as u64: {e}"),
        })?;
        return Ok(SeedSource::Env);
    }
    Ok(SeedSource::Config)
}

pub fn load_truth(cfg: &ExperimentConfig) -> Result<GroundTruth> {
    let truth = match &cfg.truth_file {
        Some(path) => {
            let t = qst_file::load_truth(path).map_err(|e| match e {
                QstError::Io(source) => HarnessError::Io {
                    path: path.clone(),
                    source,
                },
                other => HarnessError::Core(other),
            })?;
            if t.num_qubits() != cfg.n || t.rank() != cfg.r {
                return Err(ConfigError {
                    key: "truth_file".into(),
                    line: None,
                    message: format!(
                        "stored state has n = {}, r = {}; config says n = {}, r = {}",
                        t.num_qubits(),
                        t.rank(),
                        cfg.n,
                        cfg.r
                    ),
                }
                .into());
            }
            t
        }
        None => generate_ground_truth(cfg.n, cfg.r, cfg.kappa, cfg.spectrum_shape, cfg.normalization, cfg.seed)?,
    };
    Ok(truth)
}

fn shared_table(truth: &GroundTruth) -> Result<Option<Arc<ExpectationTable>>> {
    if truth.num_qubits() <= TABLE_MAX_QUBITS {
        Ok(Some(Arc::new(ExpectationTable::build(truth)?)))
    } else {
        Ok(None)
    }
}

/// The configured starting factor, plus an `iter,overlap,frob_error` trace.
pub fn initialize(cfg: &ExperimentConfig, truth: &GroundTruth) -> Result<(FactorState, Vec<InitTraceRow>)> {
    let mode = cfg.measurement_mode();
    let single_row = |iter: usize, f: &FactorState| -> Result<Vec<InitTraceRow>> {
        let v = truth.eigvecs().column(0);
        let u = f.u().column(0);
        let overlap = v.dotc(&u).norm_sqr() / u.norm_squared().max(f64::MIN_POSITIVE);
        Ok(vec![InitTraceRow {
            iter,
            overlap,
            frob_error: frobenius_distance(f, truth)?,
        }])
    };
    match cfg.init {
        InitKind::ScaledGaussian => {
            let f = random_init_factor(cfg.n, cfg.r, cfg.init_scale, cfg.seed)?;
            let rows = single_row(0, &f)?;
            Ok((f, rows))
        }
        InitKind::Online if cfg.init_j == 1 => {
            let mut source = replica_source(truth, mode, cfg.seed, 0)?;
            if let Some(t) = shared_table(truth)? {
                source = source.with_table(t)?;
            }
            Ok(run_online_init_traced(&cfg.init_config(), &mut source, cfg.seed, cfg.init_trace_every)?)
        }
        InitKind::Online => {
            let boosted = boosted_init(&cfg.init_config(), truth, mode, cfg.seed)?;
            let f = boosted.factor().clone();
            let rows = single_row(cfg.init_t0, &f)?;
            Ok((f, rows))
        }
        InitKind::Spectral => {
            let mut source = BatchSource::new(truth, 1, mode, stream_rng(cfg.seed, stream::INIT_MEASURE))?;
            let samples = (0..cfg.init_m)
                .map(|_| source.next_outcome())
                .collect::<qst_core::Result<Vec<_>>>()?;
            let f = spectral_init(&samples, cfg.r)?;
            let rows = single_row(cfg.init_m, &f)?;
            Ok((f, rows))
        }
    }
}

pub(crate) fn write_meta(cfg: &ExperimentConfig, command: &str, seed_source: SeedSource, extra: &[(&str, String)]) -> Result<()> {
    let path = cfg.output.join("meta.txt");
    let dump = cfg.dump();
    write_atomic(&path, |out| {
        writeln!(out, "# qst {command}")?;
        writeln!(out, "# git_describe = {}", git_describe())?;
        writeln!(out, "# seed = {} (from {seed_source})", cfg.seed)?;
        writeln!(
            out,
            "# streams: truth = {}, init = {}, measure = {}, init_measure = {}",
            stream::TRUTH,
            stream::INIT,
            stream::MEASURE,
            stream::INIT_MEASURE
        )?;
        for (k, v) in extra {
            writeln!(out, "# {k} = {v}")?;
        }
        out.write_all(dump.as_bytes())
    })
}

fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    write_atomic(path, |out| trace.write_csv(out))
}

pub fn cmd_gen(cfg: &ExperimentConfig, seed_source: SeedSource) -> Result<PathBuf> {
    ensure_dir(&cfg.output)?;
    let truth = load_truth(cfg)?;
    let path = cfg.output.join("truth.qst");
    write_atomic(&path, |out| {
        qst_file::write_truth(out, &truth).map_err(|e| match e {
            QstError::Io(e) => e,
            other => std::io::Error::other(other.to_string()),
        })
    })?;
    write_meta(cfg, "gen", seed_source, &[])?;
    Ok(path)
}

fn write_factor_file(path: &Path, f: &FactorState) -> Result<()> {
    write_atomic(path, |out| {
        qst_file::write_factor(out, f).map_err(|e| match e {
            QstError::Io(e) => e,
            other => std::io::Error::other(other.to_string()),
        })
    })
}

#[derive(Debug, Clone)]
pub struct InitSummary {
    pub overlap: f64,
    pub frob_error: f64,
}

pub fn cmd_init(cfg: &ExperimentConfig, seed_source: SeedSource) -> Result<InitSummary> {
    ensure_dir(&cfg.output)?;
    let truth = load_truth(cfg)?;
    let (f, rows) = initialize(cfg, &truth)?;
    write_atomic(&cfg.output.join("init_trace.csv"), |out| write_init_trace(&rows, out))?;
    write_factor_file(&cfg.output.join("init.qst"), &f)?;
    write_meta(cfg, "init", seed_source, &[])?;
    let last = rows.last().expect("init trace has at least one row");
    Ok(InitSummary {
        overlap: last.overlap,
        frob_error: last.frob_error,
    })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rounds: usize,
    pub final_error: Option<f64>,
    pub eta: f64,
}

/// Initialization, then SGD on the `MEASURE` stream. A diverged run still
/// leaves its partial trace and meta behind before the error is returned.
pub fn cmd_run(cfg: &ExperimentConfig, seed_source: SeedSource) -> Result<RunSummary> {
    ensure_dir(&cfg.output)?;
    let truth = load_truth(cfg)?;
    let (u0, _) = initialize(cfg, &truth)?;
    let sgd = cfg.sgd_config(cfg.batch);
    let eta = sgd.eta(cfg.dim());
    let mode = cfg.measurement_mode();
    let new_source = || -> Result<BatchSource<'_>> {
        let mut s = BatchSource::new(&truth, cfg.batch, mode, stream_rng(cfg.seed, stream::MEASURE))?;
        if let Some(t) = shared_table(&truth)? {
            s = s.with_table(t)?;
        }
        Ok(s)
    };
    let extra = [("eta", eta.to_string()), ("measurement_mode", mode.to_string())];
    let result = run_sgd(&sgd, &mut new_source()?, &u0, Some(&truth));
    let trace_path = cfg.output.join("trace.csv");
    let trace = match result {
        Ok(trace) => trace,
        Err(QstError::Diverged { round, trace }) => {
            write_trace(&trace_path, &trace)?;
            write_meta(cfg, "run", seed_source, &extra)?;
            return Err(QstError::Diverged { round, trace }.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_trace(&trace_path, &trace)?;
    write_factor_file(&cfg.output.join("final.qst"), &trace.final_state)?;
    if cfg.log_outcomes {
        // the source is a pure function of (seed, stream), so replaying it
        // reproduces exactly the batches the run consumed
        let mut replay = new_source()?;
        let mut batch = Vec::new();
        let rounds = trace.rows.len();
        write_atomic(&cfg.output.join("outcomes.csv"), |out| {
            writeln!(out, "{OUTCOME_LOG_HEADER}")?;
            for t in 1..=rounds {
                replay.next_batch_into(&mut batch).map_err(std::io::Error::other)?;
                write_outcome_rows(out, t, &batch)?;
            }
            Ok(())
        })?;
    }
    write_meta(cfg, "run", seed_source, &extra)?;
    Ok(RunSummary {
        rounds: trace.rows.len(),
        final_error: trace.last_error(),
        eta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub batch: usize,
    pub iters_to_tol: Option<usize>,
}

/// One run per `(B, seed index)` cell, in parallel. Truth and starting factor
/// come from the config seed; each cell measures from its own stream. Runs
/// stop at `sweep_tol` or after `T` rounds; a failed run counts as no success.
pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let truth = load_truth(cfg)?;
    let (u0, _) = initialize(cfg, &truth)?;
    let table = shared_table(&truth)?;
    let mode = cfg.measurement_mode();
    let cells: Vec<(usize, usize)> = cfg
        .sweep_b
        .iter()
        .enumerate()
        .flat_map(|(bi, &b)| (0..cfg.sweep_seeds).map(move |s| (bi * cfg.sweep_seeds + s, b)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(cell, b)| {
            let mut sgd = cfg.sgd_config(b);
            sgd.stop_tol = Some(cfg.sweep_tol);
            sgd.record_wall_time = false;
            let run = || -> qst_core::Result<Option<usize>> {
                let rng = stream_rng(cfg.seed, SWEEP_STREAM_BASE + cell as u64);
                let mut source = BatchSource::new(&truth, b, mode, rng)?;
                if let Some(t) = &table {
                    source = source.with_table(Arc::clone(t))?;
                }
                let trace = run_sgd(&sgd, &mut source, &u0, Some(&truth))?;
                Ok(trace.rounds_to(cfg.sweep_tol))
            };
            let iters_to_tol = run().unwrap_or_else(|e| {
                log::warn!("sweep cell B = {b} failed: {e}");
                None
            });
            SweepRow { batch: b, iters_to_tol }
        })
        .collect();
    Ok(rows)
}

pub fn cmd_sweep_batch(cfg: &ExperimentConfig, seed_source: SeedSource) -> Result<Vec<SweepRow>> {
    ensure_dir(&cfg.output)?;
    let rows = sweep_rows(cfg)?;
    write_atomic(&cfg.output.join("sweep.csv"), |out| {
        writeln!(out, "{SWEEP_HEADER}")?;
        for r in &rows {
            let iters = r.iters_to_tol.map(|i| i.to_string()).unwrap_or_default();
            writeln!(out, "{},{iters},{}", r.batch, u8::from(r.iters_to_tol.is_some()))?;
        }
        Ok(())
    })?;
    write_meta(cfg, "sweep-batch", seed_source, &[])?;
    Ok(rows)
}
