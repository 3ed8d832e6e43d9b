use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Population near or beyond the truncation edge exceeds the configured
    /// tolerance; results would depend on `n_cut`.
    #[error("truncated tail mass {tail_mass:.3e} exceeds tolerance {tolerance:.1e}")]
    TailOverflow { tail_mass: f64, tolerance: f64 },

    /// A post-selected branch has (numerically) vanishing weight. `step` is the
    /// 1-based measurement index when the failure happens inside a sequence.
    #[error("post-selected branch has probability {probability:.3e}{}", fmt_step(*.step))]
    ZeroProbability { step: Option<usize>, probability: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max |H - H†| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("symmetric ansatz requires odd M, got {0}")]
    EvenM(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn fmt_step(step: Option<usize>) -> String {
    match step {
        Some(s) => format!(" at step {s}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
