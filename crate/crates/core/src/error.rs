use std::path::PathBuf;

/// Errors produced by the modem, channel, analysis and harness layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("framing error: expected {expected} bits, got {got}")]
    Framing { expected: usize, got: usize },

    #[error("state error: {0}")]
    State(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("linear algebra error: {0}")]
    LinearAlgebra(String),

    #[error(
        "target average power {target:e} W is not reachable; achievable range is (0, {bound:e}] W"
    )]
    Range { target: f64, bound: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Whether the error stems from bad user input rather than a failure at run time.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::Range { .. }
                | Error::Domain(_)
                | Error::Framing { .. }
                | Error::Size(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
