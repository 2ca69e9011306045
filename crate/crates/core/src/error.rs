use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid beam geometry: {0}")]
    InvalidGeometry(String),

    #[error("geometry mismatch between fields")]
    GeometryMismatch,

    #[error("mode basis mismatch (n_max {left} vs {right})")]
    BasisMismatch { left: usize, right: usize },

    #[error("mode vector is not normalized: (phi, phi) = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("field configuration must be real-valued; max |imag| = {max_imag:e}")]
    ComplexConfiguration { max_imag: f64 },

    #[error("quadrature order {order} below policy minimum {required} for n_max = {n_max}")]
    QuadratureBelowPolicy {
        order: usize,
        required: usize,
        n_max: usize,
    },

    #[error("non-finite field sample at ({x}, {y}, {z})")]
    NonFiniteSample { x: f64, y: f64, z: f64 },

    #[error("invalid splitter coefficients: {0}")]
    InvalidSplitter(String),

    #[error("degenerate finite-difference step")]
    DegenerateStep,

    #[error("truncation policy violated: {0}")]
    TruncationPolicy(String),

    #[error("Fock space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("mode {mode} not present in the Fock space")]
    MissingMode { mode: String },

    #[error("beam splitter needs matched port-1/port-2 mode pairs; unmatched: {0}")]
    UnmatchedModes(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
