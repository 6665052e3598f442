use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "no connected deployment after {attempts} attempts (radius {radius}, density {density}); density too low for connectivity"
    )]
    DeploymentFailed {
        attempts: u32,
        radius: f64,
        density: f64,
    },

    #[error("ledger integrity violated on link {sender}->{neighbor}: received {received} + captured {captured} would exceed sent {sent}")]
    LedgerIntegrity {
        sender: u32,
        neighbor: u32,
        sent: u64,
        received: u64,
        captured: u64,
    },

    #[error("opinion undefined for a link with no sent messages")]
    UndefinedOpinion,

    #[error("round {round} is outside the full-window range [{first}, {last}]")]
    RoundOutOfRange {
        round: usize,
        first: usize,
        last: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
