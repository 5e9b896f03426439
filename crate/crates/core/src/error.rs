//! Error types for configuration handling and campaign execution.

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised while parsing or validating a scenario configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The document could not be parsed; `line` is 1-based.
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// The document parsed but violates a configuration invariant.
    #[error("invalid config: {0}")]
    Validation(String),
}

/// Errors raised while running a simulation campaign.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    /// An argument was outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Sub-network centers could not be placed under the separation constraint.
    #[error("sub-network placement infeasible: {0}")]
    PlacementInfeasible(String),

    /// The Gram matrix of a stacked channel is numerically rank deficient.
    #[error("rank-deficient channel draw: Gram condition number {cond:.3e} exceeds {limit:.1e}")]
    RankDeficient { cond: f64, limit: f64 },

    /// The adaptive power loop hit its floor before satisfying the threshold.
    #[error("adaptive power reduction reached floor {floor_dbm} dBm without clearing the sensing threshold")]
    AprFloorReached { floor_dbm: f64 },

    /// Every fading realization of a drop aborted.
    #[error("drop {drop_index}: all fading realizations aborted")]
    DropAborted { drop_index: u64 },

    /// Every drop of the campaign failed.
    #[error("campaign failed: every drop aborted (first failure: {first})")]
    CampaignFailed { first: String },

    /// An empirical distribution was requested over no samples.
    #[error("empty sample set")]
    EmptySamples,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
