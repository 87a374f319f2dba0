use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numerical inversion did not converge at x = {x}: talbot {talbot:e}, euler {euler:e}")]
    InversionDiverged { x: f64, talbot: f64, euler: f64 },

    #[error("scale tables were built for different models")]
    ModelMismatch,

    #[error(
        "insufficient conditional sample for {law}: {accepted} accepted paths (need {required})"
    )]
    InsufficientSample {
        law: String,
        accepted: u64,
        required: u64,
    },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed scale table: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        op,
        msg: msg.into(),
    }
}
