use std::fmt;

use jobnet_core::Error as CoreError;

/// Process exit status of a failed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Invalid configuration or flag values.
    Config = 2,
    /// Input data that cannot be read or does not support the computation.
    Data = 3,
    Internal = 4,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of(e: &CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::Config(_) | CoreError::Pattern(_) => ExitKind::Config,
            _ => ExitKind::Data,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    /// Pipeline stage that failed, when known.
    pub stage: Option<&'static str>,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn new(kind: ExitKind, source: anyhow::Error) -> Self {
        CliError {
            kind,
            stage: None,
            source,
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Internal, anyhow::anyhow!("{msg}"))
    }

    /// Tag with `stage` unless an inner stage already claimed the error.
    pub fn in_stage(mut self, stage: &'static str) -> Self {
        self.stage.get_or_insert(stage);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(stage) = self.stage {
            write!(f, "[{stage}] ")?;
        }
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::new(ExitKind::of(&e), e.into())
    }
}

/// Attach context to core results while keeping their exit kind.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| {
            let kind = ExitKind::of(&e);
            CliError::new(kind, anyhow::Error::from(e).context(what.to_string()))
        })
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(ExitKind::Data, anyhow::Error::from(e).context(what.to_string())))
    }
}

impl<T> Context<T> for Result<T, csv::Error> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(ExitKind::Data, anyhow::Error::from(e).context(what.to_string())))
    }
}

impl<T> Context<T> for Result<T, serde_json::Error> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(ExitKind::Data, anyhow::Error::from(e).context(what.to_string())))
    }
}
