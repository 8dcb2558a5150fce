//! Minimum-power placement of processing tasks across a central cloud,
//! metro and access fog layers, and vehicular edge clouds (VECs).
//!
//! The crate models a PON-based cloud-fog-VEC tree of network devices and
//! processing nodes, evaluates facility power with a linear load-dependent
//! profile per device, assembles a mixed-integer linear program whose
//! objective is total power, solves it exactly with an internal
//! branch-and-bound over a bounded-variable simplex, and drives scenario
//! sweeps through a CLI harness that emits deterministic CSV reports.

pub mod brute;
pub mod config;
pub mod export;
pub mod harness;
pub mod model;
pub mod power;
pub mod simplex;
pub mod solver;
pub mod topology;
pub mod verify;
pub mod workload;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("capacity exceeded on {device}: load {load} > capacity {capacity}")]
    CapacityExceeded {
        device: String,
        load: f64,
        capacity: f64,
    },
    #[error("inconsistent assignment: {0}")]
    InconsistentAssignment(String),
    #[error("instance too large for exhaustive search: {0}")]
    SizeLimit(String),
    #[error("records not comparable: {0}")]
    MismatchedRecords(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an I/O error with the file path it occurred on.
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
