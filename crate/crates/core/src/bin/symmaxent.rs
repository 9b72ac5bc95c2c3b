use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symmaxent::harness::{self, ExperimentConfig, TargetsFile};

#[derive(Parser)]
#[command(name = "symmaxent", version, about = "Maximum-entropy state estimation with symmetry constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fidelity sweep and write result.csv, summary.csv and meta.json.
    Sweep {
        /// Flat key = value configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the per-r summary of a result.csv.
    Summarize { result: PathBuf },
    /// Solve one problem given as JSON and print the solution.
    Solve {
        #[arg(long)]
        targets: PathBuf,
    },
}

fn run(cli: Cli) -> symmaxent::Result<()> {
    match cli.command {
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let result = harness::run_sweep(&cfg)?;
            harness::write_outputs(&result, &out)?;
            harness::write_summary_csv(&mut std::io::stdout().lock(), &result.summary())
        }
        Command::Summarize { result } => {
            let rows = harness::read_result_csv(BufReader::new(std::fs::File::open(result)?))?;
            if rows.is_empty() {
                return Err(symmaxent::Error::Config("result file has no rows".into()));
            }
            harness::write_summary_csv(&mut std::io::stdout().lock(), &harness::summarize(&rows))
        }
        Command::Solve { targets } => {
            let file: TargetsFile = serde_json::from_str(&std::fs::read_to_string(targets)?)?;
            let solution = harness::solve_targets(&file)?;
            println!("{}", serde_json::to_string_pretty(&solution.to_json())?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
