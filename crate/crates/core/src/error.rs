use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("NaN at index {index} cannot be encoded as a sort key")]
    NanKey { index: usize },

    #[error("training a CDF model needs at least 2 sample keys, got {len}")]
    SampleTooSmall { len: usize },

    #[error("bucket count must be a power of two >= 2, got {0}")]
    BadBucketCount(usize),

    #[error("pivot quality is defined for {expected} pivots (b = {buckets}), got {got}")]
    PivotCountMismatch { buckets: usize, expected: usize, got: usize },

    #[error("unknown dataset `{name}`; known: {known}")]
    UnknownDataset { name: String, known: String },

    #[error("invalid sort configuration: {0}")]
    BadConfig(String),

    #[error("invalid dataset parameter: {0}")]
    BadDatasetParam(String),

    #[error("{path}: file is {actual} bytes, header needs at least 8")]
    MissingHeader { path: PathBuf, actual: u64 },

    #[error(
        "{path}: header declares {count} keys, expecting {expected} bytes but file has {actual} (mismatch starts at byte offset {offset})"
    )]
    Truncated {
        path: PathBuf,
        count: u64,
        expected: u64,
        actual: u64,
        offset: u64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
