use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stirap_cli::commands::{cmd_simulate, cmd_sweep, cmd_verify, CliError};

/// Qubit rotation by two-process STIRAP in a four-level atom.
#[derive(Parser)]
#[command(name = "stirap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one rotation; writes a trajectory CSV and a JSON summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Vary one schedule parameter and write `sweep_<axis>.csv`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// omega0, tau, t0, delta, chi, eta, detuning or shape (0 gaussian, 1 sin²).
        #[arg(long)]
        axis: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the acceptance checks; exits 0 only if all pass.
    Verify {
        /// 20 random tuples instead of 200 for the oracle check.
        #[arg(long)]
        quick: bool,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate { config, out_dir } => match cmd_simulate(&config, out_dir.as_deref()) {
            Ok(out) => {
                let s = &out.summary;
                println!("fidelity          {}", s.report.fidelity);
                println!("overlap           {:.12} {:+.3e}i", s.report.overlap_re, s.report.overlap_im);
                println!("max P4            {:e}", s.report.max_excited_population);
                println!("leakage           {:e}", s.report.leakage);
                println!("pulse area        {}", s.adiabaticity.pulse_area);
                if let Some(c) = s.convergence_certificate {
                    println!("step-halving diff {c:e}");
                }
                if let Some(w) = &s.report.warning {
                    eprintln!("warning: {w}");
                }
                println!("wrote {} and {}", out.trajectory_path.display(), out.summary_path.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Sweep { config, axis, from, to, points, out_dir } => {
            match cmd_sweep(&config, &axis, from, to, points, out_dir.as_deref()) {
                Ok(out) => {
                    let r = &out.result;
                    for (v, err) in r.values.iter().zip(&r.errors) {
                        if let Some(err) = err {
                            eprintln!("point {v}: {err}");
                        }
                    }
                    println!("min fidelity {} over {} points", r.min_fidelity(), r.values.len());
                    println!("wrote {}", out.path.display());
                    if r.all_succeeded() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { quick } => {
            let reports = cmd_verify(quick);
            for r in &reports {
                println!("{}", r.line());
            }
            let passed = reports.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", reports.len());
            if passed == reports.len() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
