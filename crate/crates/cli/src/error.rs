use std::fmt;

/// Failure of a CLI invocation, with its stderr tag and exit code.
#[derive(Debug)]
pub enum CliError {
    /// A config or density file does not exist or cannot be read.
    Missing(String),
    /// A file exists but does not parse.
    Parse(String),
    /// Parsed values fail validation, or the command line is malformed.
    Invalid(String),
    /// A report could not be written.
    Output(String),
    /// Error propagated from the numerical library.
    Module(exdev::Error),
}

impl CliError {
    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Missing(_) => "CONFIG_MISSING",
            CliError::Parse(_) => "CONFIG_PARSE",
            CliError::Invalid(_) => "CONFIG_INVALID",
            CliError::Output(_) => "OUTPUT_UNWRITABLE",
            CliError::Module(e) => e.tag(),
        }
    }

    /// 2 for anything the user can fix in the inputs, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Module(e) if !e.is_validation() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Missing(m) | CliError::Parse(m) | CliError::Invalid(m) | CliError::Output(m) => {
                write!(f, "{}: {m}", self.tag())
            }
            CliError::Module(e) => write!(f, "{}: {e}", self.tag()),
        }
    }
}

impl From<exdev::Error> for CliError {
    fn from(e: exdev::Error) -> Self {
        CliError::Module(e)
    }
}
