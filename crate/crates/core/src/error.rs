use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("edge ({u}, {v}): {msg}")]
    Edge { u: u32, v: u32, msg: String },

    #[error("vertex {0} out of range")]
    Vertex(u32),

    #[error("collection is empty")]
    Empty,

    #[error("oracle budget exceeded: {needed} configurations > {limit}")]
    Budget { needed: f64, limit: u64 },

    #[error("sampler stopped after {draws} draws with {positives} positives")]
    SamplerExhausted { draws: u64, positives: u64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
