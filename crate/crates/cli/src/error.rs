use expose_core::ExposeError;
use std::fmt;

/// Failure classes mapped to process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad files, arguments or preconditions: exit 2.
    Input(String),
    /// A computation failed or a hard invariant did not hold: exit 1.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 1,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Wraps a core error with the module that raised it.
    pub fn from_core(module: &str, err: ExposeError) -> Self {
        let msg = format!("{module}: {err}");
        match err {
            ExposeError::InvalidInput(_)
            | ExposeError::Parse(_)
            | ExposeError::DimensionMismatch { .. }
            | ExposeError::InvalidPolynomial(_)
            | ExposeError::EmptyData(_)
            | ExposeError::NotOnBoundary(_)
            | ExposeError::NotConvex(_)
            | ExposeError::EmptyDomain => CliError::Input(msg),
            _ => CliError::Invariant(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Invariant(m) => write!(f, "failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Helper for `map_err` on core results.
pub fn core(module: &'static str) -> impl Fn(ExposeError) -> CliError {
    move |e| CliError::from_core(module, e)
}
