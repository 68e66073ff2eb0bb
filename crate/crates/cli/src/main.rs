use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use confpred_cli::{cmd_plot, cmd_report, cmd_run, cmd_synth, CliError};

/// Conformal classification benchmark: inverse probability, margin and IP_M.
#[derive(Parser)]
#[command(name = "confpred", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a four-cluster Gaussian dataset as CSV.
    Synth {
        #[arg(long)]
        sigma: f64,
        /// Instances per class.
        #[arg(long = "n")]
        n_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment grid described by a JSON config.
    Run {
        config: PathBuf,
    },
    /// Draw oneC and avgC against ε from a results CSV.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Rebuild validity, matrix and E_oneC summaries from a results CSV.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Defaults to the directory of the results file.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth {
            sigma,
            n_per_class,
            seed,
            out,
        } => {
            let data = cmd_synth(sigma, n_per_class, seed, &out)?;
            println!("wrote {} rows to {}", data.len(), out.display());
        }
        Command::Run { config } => {
            let outputs = cmd_run(&config)?;
            for w in &outputs.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} fold results", outputs.n_results);
            print_paths(&outputs.files);
        }
        Command::Plot { results, out_dir } => print_paths(&cmd_plot(&results, &out_dir)?),
        Command::Report { results, out_dir } => {
            let out_dir = out_dir.unwrap_or_else(|| results.parent().map(PathBuf::from).unwrap_or_default());
            print_paths(&cmd_report(&results, &out_dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
