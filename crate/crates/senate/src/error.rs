//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Configuration file or parameter rejected at validation.
    #[error("config: {0}")]
    Config(String),

    /// A closed-form expression was evaluated outside its domain.
    #[error("domain: {0}")]
    Domain(String),

    /// The ALOHA lottery ran past its slot cap without filling every seat.
    #[error("sortition exceeded the slot cap of {0} slots before seating all candidates")]
    SortitionTimeout(u64),

    /// An operation requiring a complete distance matrix met invalid entries.
    #[error("distance matrix is incomplete: entry ({0},{1}) is invalid")]
    IncompleteMatrix(usize, usize),

    /// Too few candidates remain to pin down a planar embedding.
    #[error("degenerate geometry: only {0} candidates remain (need at least 3)")]
    DegenerateGeometry(usize),

    /// Every off-diagonal distance entry was flagged invalid.
    #[error("no valid distance data to embed")]
    NoData,

    /// Fewer points than requested clusters.
    #[error("quorum failure: {points} points cannot fill {clusters} clusters")]
    Quorum { points: usize, clusters: usize },

    /// Median-validity interval requested over an empty good-value array.
    #[error("no good values to validate against")]
    NoGoodValues,

    /// The agreement instance cannot give guarantees at this fault budget.
    #[error("agreement needs k >= 3t+1 (got k={k}, t={t})")]
    FaultBudget { k: usize, t: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
