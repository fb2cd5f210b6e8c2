use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum SspError {
    #[error("no proper policy: hitting-time values exceeded {ceiling:e}")]
    NoProperPolicy { ceiling: f64 },

    #[error("policy is improper: {0}")]
    ImproperPolicy(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hitting-time cap {bound} is below the fast-policy hitting time {min_hitting_time}")]
    InfeasibleT { bound: f64, min_hitting_time: f64 },

    #[error("dual solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    NonConvergence { iterations: usize, kkt_residual: f64 },

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("episode exceeded the cap of {cap} steps")]
    EpisodeCapExceeded { cap: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SspError>;
