use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("singular configuration in {context}: |sin alpha| = {sin_alpha:e} is below the chart guard")]
    SingularConfiguration {
        context: &'static str,
        sin_alpha: f64,
    },

    #[error(
        "constraint rows {} and {} are linearly dependent (singular value ratio {ratio:e})",
        rows.0, rows.1
    )]
    RankDeficient { rows: (usize, usize), ratio: f64 },

    #[error("linear solve failed in {0}")]
    SolveFailed(&'static str),

    #[error("control effectiveness vanished: c_x = c_y = 0 with epsilon = 0")]
    ZeroControlEffectiveness,

    #[error("step size underflow at t = {t} (state norm {state_norm:e})")]
    StepSizeUnderflow { t: f64, state_norm: f64 },

    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudgetExhausted { t: f64, steps: usize },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("unknown scenario `{name}`; available: {}", available.join(", "))]
    UnknownScenario {
        name: String,
        available: Vec<String>,
    },

    #[error("robot index {index} out of range ({count} robots)")]
    RobotIndex { index: usize, count: usize },

    #[error("scenario config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors that stem from bad input rather than from the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnknownScenario { .. }
                | Error::RobotIndex { .. }
                | Error::Config(_)
        )
    }
}
