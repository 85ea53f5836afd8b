//! Library side of the `sr-enhance` command-line tool: run configuration, commands and
//! exit-code mapping.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_enhance, cmd_eval, cmd_mix, cmd_spectrogram, cmd_synth};
pub use config::RunConfig;
pub use error::CliError;
