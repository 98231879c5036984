use crate::criticality::PhaseLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("full model requires auxiliary mode")]
    FullModelRequiresModeA,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("squeezed frame unstable: 1 - 4 xi / omega_b = {argument:.6e} <= 0")]
    SqueezedFrameUnstable { argument: f64 },

    #[error("unstable phase: A^2 frame argument {argument:.6e} <= 0")]
    UnstablePhase { argument: f64 },

    #[error("unstable regime: anisotropic frame argument {argument:.6e} <= 0")]
    UnstableRegime { argument: f64 },

    #[error("point lies in the {actual} phase, but a {requested} solution was requested")]
    WrongPhase {
        requested: PhaseLabel,
        actual: PhaseLabel,
    },

    #[error("operator is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("eigensolver did not converge after {iterations} restarts (best residual {best_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("state norm {norm:.12} deviates from 1")]
    StateNorm { norm: f64 },

    #[error("measurement outcome has vanishing probability ({probability:.3e})")]
    VanishingProbability { probability: f64 },

    #[error("cutoff too small for cat amplitude (truncation defect {defect:.3e})")]
    CutoffTooSmall { defect: f64 },

    #[error("unknown figure target '{name}'; valid names: {valid}")]
    UnknownFigure { name: String, valid: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
