use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bsslab_core::{parse_config, run_to_dir, Error, ExperimentConfig, ExperimentKind};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bsslab", version, about = "Simulation and verification lab for Brownian semistationary processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long, env = "BSSLAB_THREADS")]
        threads: Option<usize>,
    },
    /// Print the available experiments.
    ListExperiments,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn report_error(path: &Path, e: &Error) {
    match e {
        Error::Config(issues) => {
            for i in issues {
                eprintln!("{}:{}: {}", path.display(), i.line, i.message);
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<14} {}", k.name(), k.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                print!("{}", c.echo());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report_error(&config, &e);
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            seed,
            out_dir,
            threads,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    report_error(&config, &e);
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let threads = threads
                .filter(|t| *t > 0)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            match run_to_dir(&cfg, threads) {
                Ok(report) => {
                    print!("{}", report.summary());
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => {
                    report_error(&config, &e);
                    ExitCode::from(2)
                }
            }
        }
    }
}
