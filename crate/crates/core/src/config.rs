//! Numerical tolerances and size caps shared by every module.

use serde::{Deserialize, Serialize};

/// Central tolerance record. Every default below is referenced by the
/// operation that enforces it; nothing else hard-codes these values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative Frobenius residual accepted for `M = M†`.
    pub hermitian: f64,
    /// Largest dimension for the dense eigendecomposition exponential.
    pub dense_cap: usize,
    /// Krylov subspace size limit (no restarts).
    pub krylov_max_dim: usize,
    /// Default accuracy requested from the Krylov propagator.
    pub krylov_tol: f64,
    /// Eigenvalue mass that may be discarded per layer from a factored density.
    pub truncation_budget: f64,
    /// Two candidates whose success probabilities differ by less than this are
    /// treated as tied and resolved lexicographically.
    pub tie_tolerance: f64,
    /// Largest qubit count for full-space pure-state runs.
    pub pure_qubit_cap: u32,
    /// Largest qudit dimension for full-space pure-state runs.
    pub pure_qudit_cap: usize,
    /// Largest dimension for dense mixed-state runs.
    pub mixed_dense_cap: usize,
    /// Largest dimension for factored mixed-state runs.
    pub mixed_factored_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            dense_cap: 1024,
            krylov_max_dim: 64,
            krylov_tol: 1e-12,
            truncation_budget: 1e-8,
            tie_tolerance: 1e-10,
            pure_qubit_cap: 14,
            pure_qudit_cap: 8192,
            mixed_dense_cap: 512,
            mixed_factored_cap: 5000,
        }
    }
}
