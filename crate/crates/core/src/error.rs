use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric {metric} is not defined on a {domain} domain")]
    MetricDomainMismatch { metric: String, domain: String },

    #[error("feature value {value} at index {index} outside domain bounds [{lo}, {hi}]")]
    ValueOutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("operation requires a non-empty set")]
    EmptySet,

    #[error("invalid unknown-index set: {0}")]
    InvalidUnknownSet(String),

    #[error("sibling enumeration of {cardinality} candidates exceeds the cap of {cap}")]
    SiblingCapExceeded { cardinality: u128, cap: u64 },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("class label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("training diverged with non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("shadow pool of {pool} records is too small for {needed}")]
    PoolTooSmall { pool: usize, needed: usize },

    #[error("could not produce a stratified shadow split after {attempts} attempts: class {class} missing")]
    StratificationFailed { attempts: usize, class: usize },

    #[error("sampling budget exhausted: {0}")]
    SamplingExhausted(String),

    #[error("membership score is not finite")]
    NonFiniteScore,

    #[error("code parameters infeasible: {0}")]
    InfeasibleCode(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
