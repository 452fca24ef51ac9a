use crate::bundle::SolutionBundle;

/// Errors raised by the model, integrator, simulator and analyzer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no potential defined for the hard spherical constraint")]
    NoPotential,

    #[error("blow-up at row {row} (t = {time}): non-finite value in {field}")]
    BlowUp {
        row: usize,
        time: f64,
        field: &'static str,
        partial: Box<SolutionBundle>,
    },

    #[error("requested window [{start}, {end}] exceeds the computed range [0, {available}]")]
    OutOfRange { start: f64, end: f64, available: f64 },

    #[error("truncation insufficient for beta*tau: tail bound {bound:.3e} exceeds {tolerance:.1e} at n_max = {n_max}")]
    Truncation {
        bound: f64,
        tolerance: f64,
        n_max: usize,
    },

    #[error("resource guard: {what} needs about {required_bytes} bytes (limit {limit_bytes})")]
    Resource {
        what: String,
        required_bytes: u64,
        limit_bytes: u64,
    },

    #[error("SDE norm blow-up: |x|^2/N = {norm} exceeds {limit} at step {step}")]
    NormBlowUp { norm: f64, limit: f64, step: usize },

    #[error("insufficient samples for {observable}: {reason}")]
    InsufficientSamples {
        observable: &'static str,
        reason: String,
    },

    #[error("no FDT root of F(Q) on [{lo}, {hi}]")]
    NoFdtRoot { lo: f64, hi: f64 },

    #[error("no FDT solution: {0}")]
    NoFdtSolution(String),

    #[error("FDT scheme error: {0}")]
    Scheme(String),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("no sign change of G(beta) on the scanned bracket [{lo}, {hi}]")]
    NoCriticalBeta { lo: f64, hi: f64 },

    #[error("random-field mixture (nu'(0) = {0}) is outside the FDT analysis")]
    RandomField(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
