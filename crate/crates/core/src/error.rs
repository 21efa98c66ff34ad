use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group model mismatch: {0}")]
    ModelMismatch(String),

    #[error("invalid word {word:?}: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("operation not supported for this group model: {0}")]
    Unsupported(&'static str),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("coset action is not transitive: {reached} of {size} cosets reachable from the base coset")]
    NotTransitive { reached: usize, size: usize },

    #[error("coset action is not compatible with the group model: {0}")]
    IncompatibleAction(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure does not generate the coset quotient: the projected chain is reducible")]
    Reducible,

    #[error("support cap of {cap} entries exceeded at step {step} (completed {completed} steps)")]
    SupportCap { cap: usize, step: usize, completed: usize },

    #[error("{0}")]
    Precondition(String),

    #[error("cylinder [{cylinder}] is too shallow for an element of length {length}")]
    ShallowCylinder { cylinder: String, length: usize },

    #[error("singular linear system")]
    Singular,

    #[error("invalid rational {0:?}")]
    ParseRational(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
