use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("grid inner radius must be positive, got r_min = {0}")]
    SingularOrigin(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("field is not tangential: {0}")]
    Tangency(String),
    #[error("conjugate gradients stalled at relative residual {residual:e} after {iterations} iterations")]
    Convergence { residual: f64, iterations: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("test function does not vanish at the grid boundary: {0}")]
    Support(String),
    #[error("recurrence premise violated: {0}")]
    PremiseViolated(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
