use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Resource,
    Invariant,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Validation => 1,
            Kind::Resource => 2,
            Kind::Invariant => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Validation,
            message: message.into(),
        }
    }

    pub fn resource(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Resource,
            message: message.into(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Invariant,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Prefix the message with where the failure happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<modcomm::Error> for CliError {
    fn from(e: modcomm::Error) -> Self {
        let kind = match e {
            modcomm::Error::SizeLimit { .. } => Kind::Resource,
            modcomm::Error::Invariant(_) => Kind::Invariant,
            _ => Kind::Validation,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::validation(format!("JSON: {e}"))
    }
}
