//! `moscolab run <scenario.json>` and `moscolab suite <name>`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use moscolab::lab::{self, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "moscolab", version, about = "Mosco convergence experiments on Hadamard spaces")]
struct Cli {
    /// Override the geometric tolerance.
    #[arg(long, global = true)]
    tol_geom: Option<f64>,
    /// Override the prox tolerance.
    #[arg(long, global = true)]
    tol_prox: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a scenario file and write report.json, envelopes.csv and rho.csv.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to runs/<scenario id>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property battery: geometry, prox, convergence, metric or all.
    Suite {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the suite report as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>, String> {
    match v {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(format!("--{name} must be a positive number, got {t}")),
        v => Ok(v),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, String> {
    let overrides = Overrides { tol_geom: positive("tol-geom", cli.tol_geom)?, tol_prox: positive("tol-prox", cli.tol_prox)? };
    let started = Instant::now();
    match cli.command {
        Command::Run { file, seed, out } => {
            let scenario = Scenario::from_file(&file).map_err(|e| e.to_string())?;
            let report = lab::run(&scenario, seed, overrides).map_err(|e| e.to_string())?;
            let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&scenario.id));
            lab::write_outputs(&report, &dir).map_err(|e| e.to_string())?;
            println!("scenario {} (seed {seed})", report.scenario);
            for line in lab::summary_lines(&report) {
                println!("  {line}");
            }
            eprintln!("wrote {} in {:.2?}", dir.display(), started.elapsed());
            Ok(report.expectations_met)
        }
        Command::Suite { name, seed, out } => {
            let report = lab::suite(&name, seed).map_err(|e| e.to_string())?;
            for line in report.lines() {
                println!("{line}");
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
                let path = dir.join("suite.json");
                std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            eprintln!("suite {name} finished in {:.2?}", started.elapsed());
            Ok(report.all_pass)
        }
    }
}
