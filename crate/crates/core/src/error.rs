use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("no active domains in ensemble")]
    NoActiveDomains,

    #[error("cycle count must be non-negative, got {0}")]
    NegativeCycleCount(i64),

    #[error("invalid device stack: {0}")]
    InvalidStack(String),

    #[error("total series capacitance {total:.4e} F must lie strictly between 0 and the ferroelectric capacitance {c_hzo:.4e} F")]
    SeriesCapacitanceBound { total: f64, c_hzo: f64 },

    #[error("negative gate bias {0} V drives the channel into accumulation; the depletion model requires v_gs >= 0")]
    NegativeGateBias(f64),

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("invalid protocol parameter: {0}")]
    InvalidProtocol(String),

    #[error("invalid analysis input: {0}")]
    AnalysisInput(String),

    #[error("malformed data file: {0}")]
    MalformedData(String),

    #[error("snapshot: {0}")]
    Snapshot(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
