use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ion {ion} out of range for a {n_ions}-ion register")]
    IonOutOfRange { ion: usize, n_ions: usize },

    #[error("basis index {index} out of range for a {n_ions}-ion register")]
    IndexOutOfRange { index: usize, n_ions: usize },

    #[error("register of {0} ions exceeds the supported maximum of {max}", max = crate::state::MAX_IONS)]
    TooManyIons(usize),

    #[error("register must contain at least one ion")]
    EmptyRegister,

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("operator annihilated the state (norm {0:e})")]
    Annihilated(f64),

    #[error("dimension mismatch: {0} vs {1} ions")]
    DimensionMismatch(usize, usize),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid circuit step: {0}")]
    InvalidStep(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state lies outside the code space (projection deficit {0:e})")]
    OutsideCodeSpace(f64),

    #[error("ancilla ion {ion} failed to disentangle (excited population {excited:.3e})")]
    AncillaEntangled { ion: usize, excited: f64 },

    #[error("master-equation oracle supports at most {max} ions, got {0}", max = crate::trajectory::ORACLE_MAX_IONS)]
    OracleTooLarge(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
