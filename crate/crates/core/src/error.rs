use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid sensitivity pair: {0}")]
    InvalidSensitivity(String),

    #[error("structural condition violated: {0}")]
    StructuralCondition(String),

    #[error("range violation: m = {m} must satisfy {lower} < m <= {upper}")]
    RangeViolation { m: f64, lower: f64, upper: f64 },

    #[error("integrability range violation: r = {r} is outside the admissible range for p = {p}")]
    IntegrabilityRange { r: f64, p: f64 },

    #[error("fast-diffusion unsupported: p = {0} < 2")]
    FastDiffusion(f64),

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { solver: &'static str, iterations: usize, residual: f64 },

    #[error("blow-up detected at step {step}: non-finite value in {field}")]
    BlowUp { step: usize, field: &'static str },

    #[error("stiffness abort: time step {0:e} underflowed")]
    Stiffness(f64),

    #[error("diagnostic overflow in {0}")]
    DiagnosticOverflow(&'static str),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("oracle size cap exceeded: {unknowns} unknowns > {cap}")]
    SizeCap { unknowns: usize, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
