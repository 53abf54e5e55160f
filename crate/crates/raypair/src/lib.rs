//! Benchmark harness for `raypair-core`: timed and parallel runs, particle
//! and result files, verification against the brute-force oracle and a
//! depth-image renderer for the ray-traced scenes.

pub mod bench;
pub mod io;
pub mod render;
pub mod run;
pub mod verify;

pub use bench::{BenchConfig, BenchRecord, Distribution, Variant};
pub use run::{NeighborResult, Runner, Timing};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] raypair_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error("could not start the thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
