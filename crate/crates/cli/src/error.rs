use std::path::{Path, PathBuf};

use sr_enhance::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}line {line}: {message}", .path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Config {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },
    #[error("cannot read {}: {source}", .path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },
    #[error("manifest row {row}: {kind} file {} not found", .path.display())]
    ManifestInput {
        row: usize,
        kind: &'static str,
        path: PathBuf,
    },
    #[error("SR_ENHANCE_SEED=`{0}` is not an unsigned integer")]
    SeedEnv(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn read(path: &Path, source: std::io::Error) -> Self {
        CliError::Read {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn in_file(self, file: &Path) -> Self {
        match self {
            CliError::Config { line, message, .. } => CliError::Config {
                path: Some(file.to_path_buf()),
                line,
                message,
            },
            other => other,
        }
    }

    /// Process exit status: 2 missing input, 3 invalid parameter, 4 signal contract
    /// violation, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Manifest { .. } | CliError::SeedEnv(_) => 3,
            CliError::ManifestInput { .. } => 2,
            CliError::Read { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            CliError::Read { .. } => 1,
            CliError::Core(e) => core_exit_code(e.root()),
        }
    }
}

fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFound(_) => 2,
        Error::InvalidParameter(_)
        | Error::InvalidLength(_)
        | Error::SampleRateMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::BinCountMismatch { .. }
        | Error::EmptyInit => 3,
        Error::SignalTooShort { .. }
        | Error::NoiseTooShort { .. }
        | Error::SilentInput
        | Error::AllFramesSilent
        | Error::UnsupportedFormat(_)
        | Error::CorruptHeader(_)
        | Error::ColaViolation { .. }
        | Error::EmptyMatrix => 4,
        _ => 1,
    }
}
