use thiserror::Error;

#[derive(Debug, Error)]
pub enum MfeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("degenerate face {face} (area {area:e}) during assembly")]
    DegenerateFace { face: usize, area: f64 },

    #[error("mesh is not a closed 2-manifold: {0}")]
    NotManifold(String),

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("resolution guard: {0}")]
    Guard(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MfeError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        MfeError::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        MfeError::Numerical {
            message: msg.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, MfeError>;
