//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice scale {n} too small: {reason}")]
    InvalidScale { n: u32, reason: String },

    #[error("scale {n} too small to rasterize region: edge from {from} to {to} spans fewer than 2 lattice points")]
    ScaleTooSmall { n: u32, from: String, to: String },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("oracle budget exceeded: n = {n} > {max} (dense Green solves are capped)")]
    GreenBudget { n: u32, max: u32 },

    #[error("coupling budget exceeded: n*m = {nm} > {max}")]
    CouplingBudget { nm: u32, max: u32 },

    #[error("projection solver did not converge: residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.1e})")]
    SolverDidNotConverge {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    #[error("vertex ({x}, {y}) is within distance {required} of the domain boundary; circle average undefined there")]
    BoundaryProximity { x: i64, y: i64, required: f64 },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("unsupported snapshot version: found magic {found:?}, expected {expected:?}")]
    SnapshotVersion { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
