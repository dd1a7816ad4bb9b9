use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the certification routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff: `s_i > tol_rank * s_max` counts toward the rank.
    pub tol_rank: f64,
    /// Eigenvalues `>= -tol_psd` count as nonnegative.
    pub tol_psd: f64,
    /// Largest tolerated `max |M - M^dagger|`.
    pub tol_herm: f64,
    /// Smallest trace-norm increase between grid points that counts as a violation.
    pub tol_mono: f64,
    /// Residual threshold for algebraic identities (`AGA = A` and friends).
    pub tol_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rank: 1e-10,
            tol_psd: 1e-9,
            tol_herm: 1e-10,
            tol_mono: 1e-8,
            tol_identity: 1e-9,
        }
    }
}
