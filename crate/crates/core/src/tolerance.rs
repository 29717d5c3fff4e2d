//! Numerical tolerances shared across the crate.

/// Algebraic identities on unit vectors and small dense matrices.
pub const ALGEBRAIC: f64 = 1e-12;

/// Block sums of a probability table.
pub const TABLE_SUM: f64 = 1e-9;

/// Eigenvector residual ‖Av − ρv‖ at which power iteration stops.
pub const EIGEN_RESIDUAL: f64 = 1e-12;

/// Iteration cap for power iteration.
pub const EIGEN_MAX_ITERATIONS: usize = 100_000;

/// Two eigenvalues closer than this are treated as one degenerate level.
pub const EIGEN_DEGENERACY: f64 = 1e-8;

/// Classical (local hidden variable) bound on S_d.
pub const LOCAL_BOUND: f64 = 2.0;
