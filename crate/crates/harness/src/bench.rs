//! Timing of the two hot-path kernels: one Pauli application to a `d×r` factor,
//! and one full SGD step on a batch of `B` outcomes.
//!
//! Each point times `reps` repetitions after a warmup and reports the median.
//! A repetition cycles through a pool of random Paulis (or batches) holding at
//! least [`POOL_SAMPLES`] observables, so the Pauli weight averages out, and is
//! repeated until it lasts at least [`MIN_REP_NS`]. Repetitions are interleaved
//! across the whole grid: a slow stretch on the machine then costs one sample
//! of many points instead of every sample of one point.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use qst_core::pauli::apply_pauli_in_place;
use qst_core::rng::{stream, stream_rng};
use qst_core::state::{generate_ground_truth, random_init_factor};
use qst_core::{
    BatchSource, CMatrix, MeasurementMode, MeasurementOutcome, Normalization, PauliString, SpectrumShape,
    StepWorkspace,
};

use crate::commands::{write_meta, SeedSource};
use crate::config::ExperimentConfig;
use crate::output::{ensure_dir, write_atomic};
use crate::Result;

pub const BENCH_HEADER: &str = "n,r,B,apply_ns,step_ns";
pub const POOL_SAMPLES: usize = 64;
pub const MIN_REP_NS: u64 = 300_000;
const WARMUP_REPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub r: usize,
    pub batch: usize,
    pub apply_ns: f64,
    pub step_ns: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// One grid point with its own buffers.
struct Case {
    n: usize,
    r: usize,
    batch: usize,
    paulis: Vec<PauliString>,
    buf: CMatrix,
    batches: Vec<Vec<MeasurementOutcome>>,
    cur: CMatrix,
    ws: StepWorkspace,
    passes: [usize; 2],
    samples: [Vec<f64>; 2],
}

const APPLY: usize = 0;
const STEP: usize = 1;

impl Case {
    fn new(n: usize, r: usize, batch: usize, seed: u64) -> qst_core::Result<Self> {
        let mut rng = stream_rng(seed, stream::MEASURE);
        let paulis = (0..POOL_SAMPLES)
            .map(|_| PauliString::sample_uniform(n, &mut rng))
            .collect::<qst_core::Result<Vec<_>>>()?;
        let u = random_init_factor(n, r, 1.0 / (1usize << n) as f64, seed)?;
        let truth = generate_ground_truth(n, 1, 1.0, SpectrumShape::Geometric, Normalization::TraceOne, seed)?;
        let mut source = BatchSource::new(&truth, batch, MeasurementMode::Exact, rng)?;
        let batches = (0..POOL_SAMPLES.div_ceil(batch))
            .map(|_| source.next_batch())
            .collect::<qst_core::Result<Vec<_>>>()?;
        Ok(Self {
            n,
            r,
            batch,
            paulis,
            buf: u.u().clone(),
            batches,
            cur: u.into_matrix(),
            ws: StepWorkspace::new(),
            passes: [1, 1],
            samples: [Vec::new(), Vec::new()],
        })
    }

    fn per_pass(&self, kernel: usize) -> usize {
        if kernel == APPLY {
            self.paulis.len()
        } else {
            self.batches.len()
        }
    }

    fn pass(&mut self, kernel: usize) {
        if kernel == APPLY {
            for w in &self.paulis {
                apply_pauli_in_place(w, &mut self.buf).expect("sizes match");
            }
            black_box(&self.buf);
        } else {
            // a small step keeps the iterate bounded over many passes
            for b in &self.batches {
                black_box(self.ws.step(&mut self.cur, b, 1e-3).expect("finite step"));
            }
        }
    }

    /// One repetition; returns nanoseconds per kernel call.
    fn rep(&mut self, kernel: usize) -> f64 {
        let passes = self.passes[kernel];
        let start = Instant::now();
        for _ in 0..passes {
            self.pass(kernel);
        }
        start.elapsed().as_nanos() as f64 / (passes * self.per_pass(kernel)) as f64
    }

    fn calibrate(&mut self, kernel: usize) {
        for _ in 0..WARMUP_REPS {
            let start = Instant::now();
            for _ in 0..self.passes[kernel] {
                self.pass(kernel);
            }
            let ns = start.elapsed().as_nanos() as u64;
            if ns < MIN_REP_NS {
                let grow = (MIN_REP_NS / ns.max(1) + 1) as usize;
                self.passes[kernel] = self.passes[kernel].saturating_mul(grow).max(self.passes[kernel] + 1);
            }
        }
    }
}

/// Times every `(n, r, B)` in the grid, single-threaded so timings do not
/// compete for cores. Rows come out in grid order `n`, then `r`, then `B`.
pub fn bench_grid(ns: &[usize], rs: &[usize], bs: &[usize], reps: usize, seed: u64) -> qst_core::Result<Vec<BenchRow>> {
    let mut cases = Vec::new();
    for &n in ns {
        for &r in rs {
            for &b in bs {
                cases.push(Case::new(n, r, b, seed)?);
            }
        }
    }
    for c in &mut cases {
        c.calibrate(APPLY);
        c.calibrate(STEP);
    }
    for _ in 0..reps {
        for c in &mut cases {
            for kernel in [APPLY, STEP] {
                let ns = c.rep(kernel);
                c.samples[kernel].push(ns);
            }
        }
    }
    Ok(cases
        .into_iter()
        .map(|c| {
            let [apply, step] = c.samples;
            let row = BenchRow {
                n: c.n,
                r: c.r,
                batch: c.batch,
                apply_ns: median(apply),
                step_ns: median(step),
            };
            log::info!(
                "bench n = {}, r = {}, B = {}: apply {:.0} ns, step {:.0} ns",
                row.n,
                row.r,
                row.batch,
                row.apply_ns,
                row.step_ns
            );
            row
        })
        .collect())
}

pub fn bench_rows(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    Ok(bench_grid(&cfg.bench_n, &cfg.bench_r, &cfg.bench_b, cfg.bench_reps, cfg.seed)?)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{:.1},{:.1}", r.n, r.r, r.batch, r.apply_ns, r.step_ns)?;
    }
    Ok(())
}

pub fn cmd_bench(cfg: &ExperimentConfig, seed_source: SeedSource) -> Result<Vec<BenchRow>> {
    ensure_dir(&cfg.output)?;
    let rows = bench_rows(cfg)?;
    write_atomic(&cfg.output.join("bench.csv"), |out| write_bench_csv(&rows, out))?;
    write_meta(cfg, "bench", seed_source, &[])?;
    Ok(rows)
}
