//! `hprec`: command-line front end of the scenario runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_precoding::experiments::{cdf_study, oracle_study, run_scenario, timing_report, Check, Scenario};
use hybrid_precoding::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "hprec", version, about = "Hybrid precoding experiments with dynamic subarrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the SNR grid for every configured mode and write one CSV per curve.
    Run(Common),
    /// Compare the greedy subarray design with exhaustive partition search.
    Oracle(Common),
    /// Time the Monte Carlo MI against both closed-form bounds.
    Timing(Common),
    /// Final objectives of the manifold ascent from random starts.
    Cdf {
        #[command(flatten)]
        common: Common,
        /// Number of random initializations.
        #[arg(long, default_value_t = 100)]
        inits: usize,
    },
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (`key = value` lines).
    config: PathBuf,
    /// Override the output directory of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the assertions on the results.
    #[arg(long)]
    no_checks: bool,
}

impl Common {
    fn load(&self) -> Result<Scenario, Error> {
        let mut s = Scenario::from_file(&self.config)?;
        if let Some(out) = &self.out {
            s.outdir = out.clone();
        }
        if self.no_checks {
            s.checks = false;
        }
        Ok(s)
    }
}

fn report(checks: &[Check]) -> ExitCode {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}

fn execute(command: &Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run(common) => {
            let s = common.load()?;
            let outcome = run_scenario(&s)?;
            for c in &outcome.curves {
                println!("{}: {} points", c.name, c.points.len());
            }
            println!("wrote {}", outcome.dir.display());
            let failures = outcome.failures();
            for (curve, msg) in &failures {
                eprintln!("curve {curve} failed {msg}");
            }
            let code = report(&outcome.checks);
            Ok(if failures.is_empty() { code } else { ExitCode::from(EXIT_FAILURE) })
        }
        Command::Oracle(common) => {
            let s = common.load()?;
            let study = oracle_study(&s)?;
            for r in &study.rows {
                println!(
                    "draw {:>3}: design {:.6} oracle {:.6} ratio {:.4}",
                    r.draw,
                    r.design_gain,
                    r.oracle_gain,
                    r.ratio()
                );
            }
            Ok(if s.checks { report(&study.checks()) } else { ExitCode::SUCCESS })
        }
        Command::Timing(common) => {
            let s = common.load()?;
            let t = timing_report(&s)?;
            println!("{:>8} {:>12} {:>12} {:>12}", "snr_db", "t_mc [s]", "t_L [s]", "t_LA [s]");
            for r in &t.rows {
                println!("{:>8} {:>12.4e} {:>12.4e} {:>12.4e}", r.snr_db, r.t_mc, r.t_lower_bound, r.t_approx);
            }
            Ok(if s.checks { report(&t.checks()) } else { ExitCode::SUCCESS })
        }
        Command::Cdf { common, inits } => {
            let s = common.load()?;
            let study = cdf_study(&s, *inits)?;
            println!(
                "{} inits at {} dB: min {:.6} max {:.6}",
                study.finals.len(),
                study.snr_db,
                study.finals[0],
                study.finals[study.finals.len() - 1]
            );
            Ok(if s.checks { report(&[study.check()]) } else { ExitCode::SUCCESS })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::FixtureMissing(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}
