//! Benchmark harness: pair files, synthetic scenes, benchmark runs, metrics and
//! reports.

pub mod bench;
pub mod eval;
pub mod io;
pub mod metrics;
pub mod report;
pub mod synth;

use thiserror::Error;

use crate::clustering::ClusterError;
use crate::ransac::RansacError;
use crate::summarization::SummaryError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("pair {pair_id}: intrinsics K1 and K2 are required for essential estimation")]
    CalibrationRequired { pair_id: String },
    #[error("pair {pair_id}: {message}")]
    InvalidRecord { pair_id: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Ransac(#[from] RansacError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
