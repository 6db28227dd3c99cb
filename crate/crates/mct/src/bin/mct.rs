//! Command-line front end.
//!
//! Exit codes: 0 all enabled checks pass, 1 at least one binding check
//! failed, 2 configuration or runtime error.

use clap::{Parser, Subcommand};
use mct::harness::{
    builtin_names, builtin_text, init_threads, load_config, read_checks_csv, run_scenario,
    run_sweep, HarnessError,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mct",
    about = "Phase-field mean curvature flow with transport: scenario runner and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or builtin name.
    Run {
        /// Path to a config file, or a builtin scenario name.
        config: String,
    },
    /// Run an epsilon/resolution sweep from a config with a sweep section.
    Sweep { config: String },
    /// Re-render the summary of a finished run from its CSV outputs.
    Report { output_dir: PathBuf },
    /// Print the builtin scenario configs (all, or one by name).
    DumpDefaults { name: Option<String> },
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let report = run_scenario(&cfg)?;
            print!("{}", report.summary);
            println!("outputs: {}", report.output_dir.display());
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Sweep { config } => {
            let cfg = load_config(&config)?;
            let report = run_sweep(&cfg)?;
            print!("{}", report.summary);
            println!("outputs: {}", report.output_dir.display());
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Report { output_dir } => {
            let checks = read_checks_csv(&output_dir.join("checks.csv"))?;
            let mut failed = 0;
            for c in &checks {
                println!("{}", c.line());
                if c.binding && !c.pass {
                    failed += 1;
                }
            }
            if let Ok(rows) = mct::harness::read_measures_csv(&output_dir.join("measures.csv")) {
                println!("measures.csv: {} diagnostic rows", rows.len());
                if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                    println!(
                        "  mu: {:.6} -> {:.6}, D max {:.4}",
                        first.mu_total,
                        last.mu_total,
                        rows.iter().map(|r| r.d).fold(f64::MIN, f64::max)
                    );
                }
            }
            println!("verdict: {}", if failed == 0 { "PASS" } else { "FAIL" });
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::DumpDefaults { name } => {
            match name {
                Some(n) => match builtin_text(&n) {
                    Some(text) => print!("{text}"),
                    None => {
                        eprintln!(
                            "unknown builtin '{n}'; available: {}",
                            builtin_names().join(", ")
                        );
                        return Ok(ExitCode::from(2));
                    }
                },
                None => {
                    for n in builtin_names() {
                        println!("# --- {n} ---");
                        print!("{}", builtin_text(n).unwrap());
                        println!();
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
