use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("phonon cutoff n_max must be at least 1, got {0}")]
    PhononCutoff(usize),

    #[error("level {0} out of range (levels are 0..=3)")]
    Level(usize),

    #[error("ion index {0} out of range (ions are 1 and 2)")]
    Ion(usize),

    #[error("phonon number {n} exceeds cutoff {n_max}")]
    Phonon { n: usize, n_max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("no-photon probability {p0:e} too small to define a conditional state")]
    VanishingProbability { p0: f64 },

    #[error("matrix exponential overflowed (1-norm of argument {norm:e})")]
    ExpOverflow { norm: f64 },

    #[error("eigensolver failed to converge")]
    EigenConvergence,

    #[error(
        "matrix is not diagonalizable within tolerance: eigenvalue {eigenvalue} has multiplicity {multiplicity} \
         but residual {residual:e}"
    )]
    Defective {
        eigenvalue: num_complex::Complex64,
        multiplicity: usize,
        residual: f64,
    },

    #[error("jump operators are inconsistent with the anti-Hermitian part of H (residual {residual:e})")]
    JumpConsistency { residual: f64 },

    #[error("repeat count infeasible: p0^N underflows to zero (p0 = {p0}, N = {n_gates})")]
    Infeasible { p0: f64, n_gates: u64 },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by invalid user input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::PhononCutoff(_)
                | Error::Level(_)
                | Error::Ion(_)
                | Error::Phonon { .. }
                | Error::Dimension { .. }
                | Error::Parameter { .. }
                | Error::NotNormalized { .. }
                | Error::Config { .. }
                | Error::Json(_)
        )
    }
}
