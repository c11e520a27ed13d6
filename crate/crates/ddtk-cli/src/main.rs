//! `ddtk`: schedule synthesis, verification, and the measurement drivers
//! behind the error-scaling figures, as one reproducible command-line tool.
//!
//! Every command resolves its full configuration up front, writes its data
//! files under one output root, and appends a provenance record to that
//! directory's `manifest.jsonl`. Exit codes: 0 success or pass, 1 a
//! performed check failed, 2 usage or configuration error, 3 numerics did
//! not converge (partial results are still saved).

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process;

#[derive(Parser)]
#[command(
    name = "ddtk",
    version,
    about = "Dynamical decoupling schedule toolkit"
)]
struct Cli {
    /// Output root for data files and the run manifest.
    #[arg(long, global = true, env = "DDTK_OUT", default_value = ".")]
    out: PathBuf,

    /// Worker threads for grid evaluation. Results are identical for any
    /// value; only the wall-clock time changes.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an order-K schedule and save it with a verification report.
    Generate(commands::GenerateArgs),
    /// Check a saved schedule's moment cancellation order.
    Verify(commands::VerifyArgs),
    /// Evolve one sequence against sampled baths over a time grid.
    Simulate(commands::SimulateArgs),
    /// Run a declarative error-scaling sweep from a TOML config.
    Sweep(commands::SweepArgs),
    /// Head-to-head mean trace distance against nested-Uhrig sequences.
    Compare(commands::CompareArgs),
    /// Flip-count lower-bound certificates and exhaustive grid search.
    Certify(commands::CertifyArgs),
    /// Measure where digit-truncated pulse timings leave the exact curve.
    Jitter(commands::JitterArgs),
    /// Print and dump the embedded published interval tables.
    TableS1,
}

fn main() {
    // Default SIGPIPE disposition so `ddtk table-s1 | head` ends quietly
    // instead of panicking on the closed pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests land here too; only real usage
            // errors take the nonzero path.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            process::exit(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            process::exit(2);
        }
        // A second build_global is harmless: the pool is set once per
        // process and this runs before any parallel work.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match &cli.command {
        Command::Generate(args) => commands::generate(&cli.out, args),
        Command::Verify(args) => commands::verify(&cli.out, args),
        Command::Simulate(args) => commands::simulate(&cli.out, args),
        Command::Sweep(args) => commands::sweep(&cli.out, args),
        Command::Compare(args) => commands::compare(&cli.out, args),
        Command::Certify(args) => commands::certify(&cli.out, args),
        Command::Jitter(args) => commands::jitter(&cli.out, args),
        Command::TableS1 => commands::table_s1(&cli.out),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        process::exit(err.code());
    }
}
