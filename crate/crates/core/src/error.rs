use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A shape, grid or plan combination violates a divisibility or consistency rule.
    #[error("configuration error: {0}")]
    Config(String),

    /// An index or strided range falls outside its container.
    #[error("bounds error: {0}")]
    Bounds(String),

    #[error("unsupported transform length {len}: prime factor {factor} exceeds the naive base-case limit of {limit}")]
    UnsupportedLength {
        len: usize,
        factor: usize,
        limit: usize,
    },

    /// Malformed signal file.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Two Puts in the same superstep wrote the same destination element.
    #[error("overlapping put: rank {dest} register {register} element {element} written by ranks {first} and {second}")]
    OverlappingPut {
        dest: usize,
        register: usize,
        element: usize,
        first: usize,
        second: usize,
    },

    /// A program failed on one virtual processor, aborting the run.
    #[error("rank {pid} failed in superstep {superstep}: {source}")]
    Rank {
        pid: usize,
        superstep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
