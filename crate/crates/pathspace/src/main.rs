use clap::{Parser, Subcommand};
use pathspace::parallel::default_workers;
use pathspace::{registry, run_named, write_outputs, StatReport};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pathspace", version, about = "Run the registered path-space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered experiments.
    List,
    /// Run one experiment and write report.json and data.csv.
    Run {
        experiment: String,
        /// TOML file overriding the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the summary of a written report.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            for e in registry() {
                println!("{:>2}  {:<22} {}", e.criterion, e.name, e.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            experiment,
            config,
            seed,
            out,
            workers,
        } => {
            let workers = workers.unwrap_or_else(default_workers);
            let result = match run_named(&experiment, config.as_deref(), seed, workers) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code());
                }
            };
            if let Err(e) = write_outputs(&out, &result) {
                eprintln!("error: writing {}: {e}", out.display());
                return ExitCode::from(1);
            }
            print!("{}", result.report.summary());
            if result.report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Report { dir } => match StatReport::read(&dir.join("report.json")) {
            Ok(r) => {
                print!("{}", r.summary());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: reading {}: {e}", dir.display());
                ExitCode::from(2)
            }
        },
    }
}
