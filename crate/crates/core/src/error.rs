use thiserror::Error;

/// Errors produced by construction, propagation, and observable evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs} vs {rhs}")]
    DimensionMismatch {
        op: &'static str,
        lhs: usize,
        rhs: usize,
    },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |m - m†| entry = {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("subsystem index {which} out of range for {total} subsystem(s)")]
    SubsystemOutOfRange { which: usize, total: usize },

    #[error("not a density matrix: {reason}")]
    InvalidState { reason: String },

    #[error(
        "positivity violation at t = {t} ps: min eigenvalue {min_eigenvalue:.3e} \
         below -1e-6 (time step too coarse for this generator)"
    )]
    PositivityViolation { t: f64, min_eigenvalue: f64 },

    #[error("undefined statistics: flux integral is zero")]
    UndefinedStatistics,

    #[error("gate start {t_start} ps outside grid [{grid_start}, {grid_end}] ps")]
    EmptyGateWindow {
        t_start: f64,
        grid_start: f64,
        grid_end: f64,
    },

    #[error("unusable fit window [{t_a}, {t_b}] ps: {reason}")]
    FitWindow { t_a: f64, t_b: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
