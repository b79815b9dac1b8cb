//! Shared numeric tolerances. Values scale-invariant where noted; all
//! entropies and rates in this crate are in bits (log base 2).

/// Max-norm hermiticity tolerance, relative to max(1, ||m||_max); inputs
/// within tolerance are symmetrized before use.
pub const HERMITICITY: f64 = 1e-8;

/// Eigenvalues at or below `SUPPORT_CUTOFF_REL * lambda_max` count as zero.
pub const SUPPORT_CUTOFF_REL: f64 = 1e-10;

/// PSD slack on the smallest eigenvalue, relative to max(1, lambda_max).
pub const PSD: f64 = 1e-8;

/// |trace - 1| allowed for density matrices.
pub const DENSITY_TRACE: f64 = 1e-8;

/// Probability vectors must sum to 1 within this.
pub const PROB_SUM: f64 = 1e-9;

/// Entropy-like quantities within [-ENTROPY_CLAMP, 0) clamp to 0; anything
/// more negative is an internal-consistency bug.
pub const ENTROPY_CLAMP: f64 = 1e-9;

/// Residual threshold for accepting a new (unit-normalized) direction into
/// an algebra basis; at fixpoint all products project back within this.
pub const BASIS_RESIDUAL: f64 = 1e-8;

/// Trace-distance tolerance for the P1 reconstruction check.
pub const P1: f64 = 1e-7;

/// Trace-distance tolerance for the P2 product-form check.
pub const P2: f64 = 1e-7;

/// Singular values below this count as zero in commutant rank computations.
pub const P3_RANK: f64 = 1e-7;

/// Eigenvalue grouping tolerance, relative to the spectral range.
pub const EIG_GROUP_REL: f64 = 1e-8;

/// Conditional block probabilities at or below this count as absent.
pub const PRESENCE: f64 = 1e-10;

/// Base commuting tolerance; scaled by max(1, ||a||_max * ||b||_max).
pub const COMMUTING: f64 = 1e-8;

/// Max entropy of a reduced state for an ensemble to classify as pure.
pub const PURE_ENTROPY: f64 = 1e-7;

/// Slack on the Kraft sum.
pub const KRAFT_SLACK: f64 = 1e-12;

/// Slack on asserted expected-length windows.
pub const WINDOW_SLACK: f64 = 1e-9;

/// Payload mass allowed outside the leading dim_J corner when decoding.
pub const PAYLOAD_LEAK: f64 = 1e-9;

/// Default cap on composite dimensions (tensor powers).
pub const MAX_DIM_DEFAULT: usize = 256;
