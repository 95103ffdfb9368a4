use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids or shapes: {0}")]
    Mismatch(String),

    #[error("regularized product did not stabilize: level {level}, last difference {residual:e}")]
    NonConvergent { level: i32, residual: f64 },

    #[error("invalid drift spec: {0}")]
    InvalidSpec(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("parameter region K(beta={beta}, q={q}) is empty in dimension {dim}")]
    EmptyRegion { beta: f64, q: f64, dim: usize },

    #[error("fixed point not reached after {iterations} iterations (last difference {last_diff:e})")]
    MaxIterExceeded { iterations: usize, last_diff: f64 },

    #[error("lambda calibration failed after {doublings} doublings (last gradient sup {last_gradient})")]
    CalibrationFailed { doublings: usize, last_gradient: f64 },

    #[error("inverse of phi did not converge at t={t} after {iterations} iterations (step {last_step:e})")]
    InverseDiverged { t: f64, iterations: usize, last_step: f64 },

    #[error("diffusion matrix degenerate at t={t}: smallest singular value {min_singular}")]
    Degenerate { t: f64, min_singular: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
