use thiserror::Error;

/// Errors raised by the numerical kernels and model constructors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("vectors are not orthonormal (Gram residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("invalid tolerance `{name}`: {value}")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error(
        "symmetry residual exceeded: {residual:.3e} > {tol:.3e} on domain basis pair ({pair_a}, {pair_b})"
    )]
    ModelRejected {
        residual: f64,
        tol: f64,
        pair_a: usize,
        pair_b: usize,
    },

    #[error("spectral parameter {re}{im:+}i is not supported here: {reason}")]
    UnsupportedParameter { re: f64, im: f64, reason: &'static str },

    #[error(
        "no self-adjoint extension: extensions exist if and only if d_+(A)=d_-(A) (got d_+ = {d_plus}, d_- = {d_minus})"
    )]
    NoSelfAdjointExtension { d_plus: usize, d_minus: usize },

    #[error("parameter matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("domain and (U+I)N+ do not form a direct sum (rank {rank}, expected {expected})")]
    DegenerateSum { rank: usize, expected: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error(
        "tolerance inconsistency: found {found} nonzero vectors, expected {expected}; retune tol_zero"
    )]
    ToleranceInconsistency { found: usize, expected: usize },

    #[error("isomorphism certificate failed: {0}")]
    CertificateFailed(String),

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("malformed {kind} file, line {line}: {message}")]
    Parse {
        kind: &'static str,
        line: usize,
        message: String,
    },

    #[error("inconsistent constraints: {0}")]
    InconsistentConstraints(String),

    #[error("invalid preset parameters: {0}")]
    InvalidPreset(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
