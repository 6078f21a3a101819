use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vector is outside the D(A*) budget: |A* p| = {norm} exceeds {budget}")]
    DualBudget { norm: f64, budget: f64 },

    #[error("non-finite drift at t = {t}, state norm {state_norm}, control {control:?}")]
    NonFiniteDrift {
        t: f64,
        state_norm: f64,
        control: Vec<f64>,
    },

    #[error("enumeration of {count} control sequences exceeds the budget of {budget}")]
    EnumerationBudget { count: f64, budget: usize },

    #[error("convolution search did not converge at (t = {t}): {detail}")]
    NonConvergent { t: f64, detail: String },

    #[error("synthesis aborted at node {node}: {source}")]
    SynthesisNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
