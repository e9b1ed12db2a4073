use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("tilted sum diverges: rho * s = {rho_s} must exceed 1")]
    Divergent { rho_s: f64 },

    #[error("horizon exceeded: {0}")]
    HorizonExceeded(String),

    #[error("exact arithmetic limited to depth {max_depth}, got {depth}; use log-space mode")]
    Precision { depth: usize, max_depth: usize },

    #[error("schedule depth {depth} overflows 64-bit digit range")]
    Depth { depth: usize },

    #[error("infeasible block: alphabet size {alphabet} smaller than new-digit count {required}")]
    Infeasible { alphabet: u64, required: u64 },

    #[error("word not in support at position {position}: {reason}")]
    NotInSupport { position: usize, reason: String },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("profile not admissible on horizon: {0}")]
    NotAdmissible(String),

    #[error("K* search exceeded cap {cap}")]
    TiltThreshold { cap: u64 },

    #[error("enumeration of {size} words exceeds limit {limit}")]
    EnumerationSize { size: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
