use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("domain kind error: {0}")]
    DomainKind(String),
    #[error("Spin^c obstruction: {0}")]
    SpincObstruction(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    Solver { iterations: usize, best_residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
