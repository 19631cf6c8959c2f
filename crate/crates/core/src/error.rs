use thiserror::Error;

/// Error type shared by every solver and oracle in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The problem instance has no feasible point. `deficit` is how far the
    /// binding budget would have to grow to restore feasibility.
    #[error("infeasible: {reason} (deficit {deficit})")]
    Infeasible { reason: String, deficit: f64 },

    /// A brute-force oracle refused to run because the instance is too large
    /// for exhaustive search.
    #[error("oracle guard: {0}")]
    OracleGuard(String),

    /// An internal numerical assumption failed (should not happen on valid
    /// inputs; reported instead of returning garbage).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
