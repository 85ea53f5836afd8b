use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sr_enhance::enhance::Method;
use sr_enhance_cli::commands::{self, seed_from_env};
use sr_enhance_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "sr-enhance",
    version,
    about = "Single-channel speech enhancement and evaluation"
)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sr,
    Wat,
}

#[derive(Subcommand)]
enum Command {
    /// Mix a clean signal with noise at a global SNR.
    Mix {
        clean: PathBuf,
        noise: PathBuf,
        #[arg(allow_negative_numbers = true)]
        snr_db: f64,
        out: PathBuf,
        /// Start the noise at a seeded random offset.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Enhance a noisy recording.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        /// Overrides the method from the config file.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Write a per-frame trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score both methods on every manifest condition.
    Eval {
        manifest: PathBuf,
        out_csv: PathBuf,
        out_json: PathBuf,
    },
    /// Render a log-magnitude spectrogram as a binary PGM.
    Spectrogram {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        dyn_range: Option<f64>,
    },
    /// Write a synthetic demo corpus and evaluation manifest.
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        duration: f64,
        #[arg(long, default_value_t = 8000)]
        rate: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the effective configuration.
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Mix {
            clean,
            noise,
            snr_db,
            out,
            seed,
        } => commands::cmd_mix(&clean, &noise, snr_db, &out, seed),
        Command::Enhance {
            input,
            output,
            method,
            trace,
        } => {
            let mut enhance = cfg.enhance;
            if let Some(m) = method {
                enhance.method = match m {
                    MethodArg::Sr => Method::Sr,
                    MethodArg::Wat => Method::Wat,
                };
            }
            commands::cmd_enhance(&input, &output, &enhance, trace.as_deref())
        }
        Command::Eval {
            manifest,
            out_csv,
            out_json,
        } => {
            let report =
                commands::cmd_eval(&manifest, &out_csv, &out_json, &cfg, seed_from_env()?)?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Spectrogram {
            input,
            output,
            dyn_range,
        } => commands::cmd_spectrogram(
            &input,
            &output,
            dyn_range.unwrap_or(cfg.dyn_range_db),
            &cfg.enhance,
        ),
        Command::Synth {
            out_dir,
            duration,
            rate,
            seed,
        } => {
            let manifest = commands::cmd_synth(&out_dir, duration, rate, seed)?;
            println!("{}", manifest.display());
            Ok(())
        }
        Command::Config => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sr-enhance: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
