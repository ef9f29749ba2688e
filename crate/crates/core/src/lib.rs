//! Safety-and-stability QP filter for control-affine polynomial systems,
//! built on a control barrier function and a control Lyapunov function that
//! only need to be compatible on the barrier boundary.
//!
//! The filter state is evaluated from polynomial certificates ([`poly`],
//! [`system`]) and solved either by an active-set oracle or by a piecewise
//! closed form ([`filter`]). [`baselines`] holds the comparison filters,
//! [`compat`] the boundary compatibility checks, [`sim`] the closed loop and
//! [`experiments`] the end-to-end drivers.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_set;
pub mod baselines;
pub mod compat;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod poly;
pub mod scalar;
pub mod sim;
pub mod system;
pub mod tol;

pub use error::{Error, Result};
pub use filter::{CriticalRegion, FilterSolution, Method, Multiplier};
pub use poly::{PolyMatrix, PolyVector, Polynomial};
pub use scalar::{Coefficient, Scalar};
pub use system::{CertificateProblem, ClassK, ControlAffineSystem, FilterTerms, NominalController};

pub type Polynomial64 = Polynomial<f64>;
pub type Polynomial32 = Polynomial<f32>;
/// Exact arithmetic for symbolic checks of Lie derivatives.
pub type RationalPolynomial = Polynomial<num_rational::Ratio<i64>>;
pub type Problem64 = CertificateProblem<f64>;
pub type Problem32 = CertificateProblem<f32>;
pub type FilterSolution64 = FilterSolution<f64>;
pub type Trajectory64 = sim::Trajectory<f64>;
