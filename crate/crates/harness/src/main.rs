use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qst_harness::bench::cmd_bench;
use qst_harness::commands::{apply_overrides, cmd_gen, cmd_init, cmd_run, cmd_sweep_batch};
use qst_harness::config::KEY_HELP;
use qst_harness::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "qst", about = "Online low-rank quantum state tomography experiments", after_help = KEY_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground truth and write truth.qst
    Gen(Common),
    /// Initialize, run SGD, write trace.csv, final.qst and meta.txt
    Run(Common),
    /// Run only the configured initialization, write init_trace.csv and init.qst
    Init(Common),
    /// Rounds to reach sweep_tol for each B in sweep_B, write sweep.csv
    SweepBatch(Common),
    /// Time Pauli application and SGD steps, write bench.csv
    Bench(Common),
}

#[derive(Args)]
#[command(after_help = KEY_HELP)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides QST_SEED and `seed`)
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<()> {
    let (name, common) = match &cli.command {
        Command::Gen(c) => ("gen", c),
        Command::Run(c) => ("run", c),
        Command::Init(c) => ("init", c),
        Command::SweepBatch(c) => ("sweep-batch", c),
        Command::Bench(c) => ("bench", c),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    let env_seed = std::env::var("QST_SEED").ok();
    let seed_source = apply_overrides(&mut cfg, common.out.clone(), common.seed, env_seed.as_deref())?;
    log::info!("{name}: seed {} from {seed_source}, output {}", cfg.seed, cfg.output.display());
    match cli.command {
        Command::Gen(_) => {
            let path = cmd_gen(&cfg, seed_source)?;
            println!("wrote {}", path.display());
        }
        Command::Run(_) => {
            let s = cmd_run(&cfg, seed_source)?;
            match s.final_error {
                Some(e) => println!("{} rounds, eta = {}, final error {e:.3e}", s.rounds, s.eta),
                None => println!("{} rounds, eta = {}", s.rounds, s.eta),
            }
        }
        Command::Init(_) => {
            let s = cmd_init(&cfg, seed_source)?;
            println!("overlap {:.6}, error {:.3e}", s.overlap, s.frob_error);
        }
        Command::SweepBatch(_) => {
            let rows = cmd_sweep_batch(&cfg, seed_source)?;
            for r in rows {
                match r.iters_to_tol {
                    Some(i) => println!("B = {}: {i} rounds", r.batch),
                    None => println!("B = {}: tolerance not reached", r.batch),
                }
            }
        }
        Command::Bench(_) => {
            let rows = cmd_bench(&cfg, seed_source)?;
            println!("{} points written to {}", rows.len(), cfg.output.join("bench.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qst: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
