use alloc::format;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

fn at_line(line: &Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error{}: {message}", at_line(line))]
    Parse { line: Option<usize>, message: String },
    #[error("series is constant (zero standard deviation)")]
    ConstantSeries,
    #[error("empty selection: {0}")]
    EmptySelection(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("insufficient data for {what}: need {needed}, got {got}")]
    InsufficientData { what: &'static str, needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular normal equations")]
    Singular,
    #[error("gradient undefined: no degree-day variation across winter day pairs")]
    UndefinedGradient,
    #[error("iterative decomposition did not converge")]
    NoConvergence,
}
