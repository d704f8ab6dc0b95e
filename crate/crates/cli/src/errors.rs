//! CLI error classes mapped to exit codes: 0 success, 2 config error,
//! 3 data error, 4 dependency error.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Dependency { stage: String, path: PathBuf },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Dependency { stage, path } => write!(
                f,
                "missing artifact {}: run the `{stage}` stage first",
                path.display()
            ),
        }
    }
}

impl std::error::Error for CliError {}

pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(cli) = cause.downcast_ref::<CliError>() {
            return match cli {
                CliError::Config(_) => 2,
                CliError::Dependency { .. } => 4,
            };
        }
        if let Some(core) = cause.downcast_ref::<rinkpulse::Error>() {
            return match core {
                rinkpulse::Error::Config(_) => 2,
                _ => 3,
            };
        }
    }
    3
}
