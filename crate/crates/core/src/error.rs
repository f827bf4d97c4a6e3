use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state of {requested} qubits exceeds the configured cap of {cap} qubits")]
    QubitCap { requested: usize, cap: usize },

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("duplicate register `{0}` in layout")]
    DuplicateRegister(String),

    #[error("registers overlap: `{0}` is used both as target and as control/condition")]
    RegisterOverlap(String),

    #[error("{what} must be a power of two, got {value}")]
    NotPowerOfTwo { what: &'static str, value: usize },

    #[error("length mismatch: {what} (expected {expected}, got {actual})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("vector is not unit-norm (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("normalization parameters are degenerate (constant input); inversion is undefined")]
    Degenerate,

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn ensure_power_of_two(what: &'static str, value: usize) -> Result<()> {
    if value.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NotPowerOfTwo { what, value })
    }
}
