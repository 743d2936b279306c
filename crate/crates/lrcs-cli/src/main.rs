//! Command-line front end for the low-rank column-wise sensing library.
//!
//! Subcommands:
//!
//! * `lrcs run`: execute an experiment grid from a config file and write
//!   `results.csv`, `history.csv`, and `summary.csv`;
//! * `lrcs gen`: generate one synthetic instance and store it on disk;
//! * `lrcs verify-init`: Monte-Carlo check of the spectral-initialization
//!   mean against its closed form.
//!
//! Worker threads: `--threads N` wins, then the `LRCS_THREADS` environment
//! variable, then one thread per core.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lrcs::harness::{parse_config, run_experiment, ExperimentSpec};
use lrcs::init::verify_expectation;
use lrcs::io::save_instance;
use lrcs::model::{generate_ground_truth, incoherence, measure, nsr};

#[derive(Parser)]
#[command(name = "lrcs", version, about = "Low-rank column-wise sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid described by a config file.
    Run {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the solver from the config (altgdmin or altmin).
        #[arg(long)]
        solver: Option<String>,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: LRCS_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the base seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate one synthetic instance and write it to a directory.
    Gen {
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        q: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Rows per sketch.
        #[arg(long, default_value_t = 40)]
        m: usize,
        /// Condition number of the generated truth.
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 0.0)]
        sigma_v: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Monte-Carlo check of the initialization mean against its closed form.
    VerifyInit {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        q: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Rows per sketch.
        #[arg(long, default_value_t = 50)]
        m: usize,
        /// Condition number of the generated truth.
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 0.5)]
        sigma_v: f64,
        /// Monte-Carlo replicates.
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, solver, out, threads, seed } => {
            cmd_run(config, solver, out, threads, seed)
        }
        Command::Gen { out, n, q, r, m, kappa, sigma_v, seed } => {
            cmd_gen(out, n, q, r, m, kappa, sigma_v, seed)
        }
        Command::VerifyInit { n, q, r, m, kappa, sigma_v, reps, seed } => {
            cmd_verify_init(n, q, r, m, kappa, sigma_v, reps, seed)
        }
    }
}

/// `--threads` wins; otherwise LRCS_THREADS; otherwise none (rayon default).
fn thread_override(flag: Option<usize>) -> Result<Option<usize>> {
    let value = match flag {
        Some(t) => Some(t),
        None => match std::env::var("LRCS_THREADS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .with_context(|| format!("LRCS_THREADS must be an integer, got '{s}'"))?,
            ),
            Err(_) => None,
        },
    };
    if value == Some(0) {
        bail!("thread count must be at least 1");
    }
    Ok(value)
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("failed to configure the worker pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t != 1 {
            eprintln!("note: built without the 'parallel' feature, running on one thread");
        }
    }
    Ok(())
}

fn cmd_run(
    config: PathBuf,
    solver: Option<String>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    configure_threads(thread_override(threads)?)?;
    let text = std::fs::read_to_string(&config)
        .with_context(|| format!("cannot read config file {}", config.display()))?;
    let mut spec: ExperimentSpec = parse_config(&text)?;
    if let Some(s) = solver {
        spec.set("solver", &s)?;
    }
    if let Some(dir) = out {
        spec.out_dir = dir;
    }
    if let Some(s) = seed {
        spec.base_seed = s;
    }

    let outcome = run_experiment(&spec)?;
    println!(
        "ran {} trials ({} failed); wrote {}, {}, {}",
        outcome.records.len(),
        outcome.failed,
        outcome.results_path.display(),
        outcome.history_path.display(),
        outcome.summary_path.display()
    );
    for row in &outcome.summary {
        let c = &row.cell;
        let sd2 = row
            .sd2_p50
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "-".to_string());
        println!(
            "  n={} q={} r={} m={} sigma_v={}: ok {}/{}, success rate {:.2}, median sd2 {sd2}",
            c.n, c.q, c.r, c.m, c.sigma_v, row.ok, row.trials, row.success_rate
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    out: PathBuf,
    n: usize,
    q: usize,
    r: usize,
    m: usize,
    kappa: f64,
    sigma_v: f64,
    seed: u64,
) -> Result<()> {
    let truth = generate_ground_truth(n, q, r, kappa, seed)?;
    let inst = measure(&truth, m, sigma_v, seed)?;
    let coh = incoherence(&truth);
    save_instance(&out, &inst)?;
    println!(
        "wrote instance to {}: n={n} q={q} r={r} m={m} sigma_v={sigma_v} seed={seed}",
        out.display()
    );
    println!(
        "  kappa={:.6} mu={:.6} nsr={:.6e}",
        coh.kappa,
        coh.mu,
        nsr(&truth, sigma_v)
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify_init(
    n: usize,
    q: usize,
    r: usize,
    m: usize,
    kappa: f64,
    sigma_v: f64,
    reps: usize,
    seed: u64,
) -> Result<()> {
    let truth = generate_ground_truth(n, q, r, kappa, seed)?;
    let check = verify_expectation(&truth, m, sigma_v, reps, seed)?;
    println!(
        "expectation check: n={n} q={q} r={r} m={m} sigma_v={sigma_v} kappa={kappa} reps={reps}"
    );
    println!("  alpha = {:.6e}", check.alpha);
    println!("  relative deviation of the empirical mean = {:.6e}", check.rel_frob_dev);
    Ok(())
}
