use std::fmt;

use crate::types::DetectionScheme;

pub type Result<T> = std::result::Result<T, Error>;

/// One violated input invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("scheme {scheme} unsupported: {reason}")]
    UnsupportedScheme { scheme: DetectionScheme, reason: String },

    #[error("{element} is not unitary (deviation {deviation:e})")]
    NonUnitary { element: String, deviation: f64 },

    #[error("{element} is not symplectic (deviation {deviation:e})")]
    NonSymplectic { element: String, deviation: f64 },

    #[error("state norm drifted to {norm} after {element}")]
    NormDrift { element: String, norm: f64 },

    #[error("dimension mismatch: state spans {state} modes, circuit spans {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },

    #[error("covariance not positive definite: pivot {pivot:e} at row {row}")]
    InvalidCovariance { row: usize, pivot: f64 },

    #[error("inclusion-exclusion partial sum of order {order} ({partial:e}) does not bracket {total:e}")]
    Bonferroni { order: usize, partial: f64, total: f64 },

    #[error("harmonic fit for {scheme} leaves residual {residual:e} > {tolerance:e}; widen the harmonic or degree set")]
    FitResidual { scheme: DetectionScheme, residual: f64, tolerance: f64 },

    #[error("harmonic fit system for {0} is singular")]
    SingularFit(DetectionScheme),

    #[error("insufficient sampling density: {0}")]
    InsufficientSampling(String),

    #[error("degenerate scan: {0}")]
    DegenerateScan(String),

    #[error("envelope not resolved: {0}")]
    Unresolved(String),

    #[error("missing scan for {0}")]
    MissingScan(&'static str),

    #[error("probability {value} outside [0, 1] at {context}")]
    ProbabilityRange { value: f64, context: String },

    #[error("{}", located("config", *.line, .message))]
    Config { line: Option<usize>, message: String },

    #[error("{}", located(.source_name, Some(*.line), .message))]
    Parse { source_name: String, line: usize, message: String },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn located(what: &str, line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("{what} line {l}: {message}"),
        None => format!("{what}: {message}"),
    }
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Rejected user input or configuration.
    Config,
    /// A numerical invariant broke during computation or analysis.
    Numeric,
    /// Reading or writing files, including malformed scan files.
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Invalid(_) | Error::UnsupportedScheme { .. } | Error::Config { .. } | Error::MissingScan(_) => {
                ErrorKind::Config
            }
            Error::Parse { .. } | Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Numeric,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
