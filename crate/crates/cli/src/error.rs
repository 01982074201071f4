use std::fmt;
use std::path::Path;

/// A failed command. The variant picks the exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad input data, spellbook, URL or arguments: exit 1.
    Validation(String),
    /// Unreadable input or unwritable output: exit 2.
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn invalid(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Validation(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}
