use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("malformed morphism: {0}")]
    MalformedMorphism(String),

    #[error("not a synchronization tree: {0}")]
    NotATree(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),

    #[error("invalid bound: {0}")]
    InvalidBound(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed presheaf: {0}")]
    MalformedPresheaf(String),

    #[error("morphism is not natural: {0}")]
    NotNatural(String),

    #[error("square does not commute: {0}")]
    NonCommutingSquare(String),

    #[error("exhaustive enumeration too large: {0}")]
    TooLarge(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
