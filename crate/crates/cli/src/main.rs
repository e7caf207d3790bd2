use std::path::PathBuf;
use std::process::ExitCode;

use bubble_lab::{config, run, CliError, Experiment};
use clap::Parser;

/// Run a bubble-lab experiment and write its report.
#[derive(Debug, Parser)]
#[command(name = "bubble-lab", version)]
struct Args {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set params.ell=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = config::load(&args.config, &args.sets).and_then(|l| run(args.experiment, &l, args.out.as_deref()));
    match result {
        Ok(out) => {
            for c in &out.report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {} measured={:e}", c.name, c.measured);
            }
            println!("report: {}", out.out_dir.join("report.json").display());
            if out.report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("failing checks: {}", out.report.failures().join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("bubble-lab: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &CliError) -> u8 {
    e.exit_code() as u8
}
