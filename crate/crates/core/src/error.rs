use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("degenerate plane: |u∧v|² = {0:e}")]
    DegeneratePlane(f64),
    #[error("degenerate pencil: {0}")]
    DegeneratePencil(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("wrong dimension: expected {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("unknown case '{0}'")]
    UnknownCase(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("invalid metric spec: {0}")]
    MetricSpec(String),
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPoint(_)
                | Error::DegeneratePencil(_)
                | Error::DegenerateMetric(_)
                | Error::DegeneratePlane(_)
                | Error::Expr(ExprError::Domain(_))
        )
    }
}
