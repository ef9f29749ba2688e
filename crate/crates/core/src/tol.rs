//! Numerical tolerances shared across modules.
//!
//! Everything is relative to a problem-derived scale, and floored by a few
//! ulps of the scalar type so single precision does not demand
//! double-precision agreement.

use crate::scalar::{lit, Scalar};

/// Relative slack in `|Lgb·LgVᵀ|² ≥ (1 − slack)‖Lgb‖²‖LgV‖²`.
pub const PARALLEL_REL: f64 = 1e-12;

/// `|b(x)|` below this counts as on the boundary.
pub const BOUNDARY: f64 = 1e-10;

/// Target for KKT residuals of returned filter solutions.
pub const KKT: f64 = 1e-8;

/// Base relative tolerance for `T`.
pub fn base<T: Scalar>() -> T {
    lit::<T>(1e-9).max(T::epsilon() * lit(64.0))
}

/// Tolerance for equalities and strict inequalities among region predicates.
pub fn region<T: Scalar>(scale: T) -> T {
    base::<T>() * (T::one() + scale.abs())
}

/// Tolerance for deciding that a gradient row vanishes at `‖x‖`.
pub fn grad<T: Scalar>(x_norm: T) -> T {
    base::<T>() * (T::one() + x_norm)
}

/// Tolerance used for KKT acceptance of closed-form branches.
pub fn kkt<T: Scalar>(scale: T) -> T {
    lit::<T>(KKT).max(T::epsilon() * lit(1024.0)) * (T::one() + scale.abs())
}
