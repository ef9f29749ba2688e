//! The safety-and-stability filter
//!
//! ```text
//! min_{u,s}  ½‖u − π(x)‖² + (p/2)(s − 1)²
//! s.t.       Lfb + Lgb·u + s·α(b) ≥ 0        (CBF, relaxed by s)
//!            LfV + LgV·u + β(b)·γ ≤ 0        (CLF)
//! ```
//!
//! Two independent solvers are provided: an active-set oracle and the
//! piecewise closed form, which falls back to the oracle whenever its branch
//! output does not pass a KKT check.

mod closed_form;
mod feasible;
mod kkt;
mod oracle;
mod regions;

pub use closed_form::closed_form_solve;
pub use feasible::{feasible_point, FeasiblePoint};
pub use kkt::{verify_kkt, KktReport};
pub use oracle::oracle_solve;
pub use regions::{classify_region, CriticalRegion};

use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::scalar::{lit, Scalar};
use crate::system::{CertificateProblem, FilterTerms};
use crate::tol;

/// A KKT multiplier, or a marker that any non-negative value is optimal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier<T> {
    Value(T),
    Indeterminate,
}

impl<T: Scalar> Multiplier<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            Multiplier::Value(v) => Some(v),
            Multiplier::Indeterminate => None,
        }
    }

    pub fn is_indeterminate(&self) -> bool {
        matches!(self, Multiplier::Indeterminate)
    }
}

impl<T: Scalar> Serialize for Multiplier<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplier::Value(v) => v.serialize(s),
            Multiplier::Indeterminate => s.serialize_str("indeterminate"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverPath {
    ClosedForm,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct FilterSolution<T> {
    pub u: Vec<T>,
    pub s: T,
    pub lambda1: Multiplier<T>,
    pub lambda2: Multiplier<T>,
    pub region: CriticalRegion,
    pub path: SolverPath,
    pub kkt_residual: T,
    pub objective: T,
}

/// Which solver `solve` should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Oracle,
}

/// Solves the filter at `x` for `prob`.
pub fn solve<T: Scalar>(prob: &CertificateProblem<T>, x: &[T], method: Method) -> Result<FilterSolution<T>> {
    let terms = prob.eval_terms(x)?;
    match method {
        Method::ClosedForm => closed_form_solve(&terms),
        Method::Oracle => oracle_solve(&terms),
    }
}

/// The 2×2 matrix of the both-active multiplier system
/// `[[F'_b, −Lgb·LgVᵀ], [LgV·Lgbᵀ, −LgV·LgVᵀ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AMatrix<T> {
    pub a: [[T; 2]; 2],
    pub det: T,
}

impl<T: Scalar> AMatrix<T> {
    pub fn from_terms(t: &FilterTerms<T>) -> Self {
        let a = [[t.f_b_prime, -t.gbv], [t.gbv, -t.gv]];
        // −gv·gb − gv·α²/p + gbv², with gbv² − gb·gv expanded as a sum of
        // squared 2×2 minors so nearly parallel rows keep their precision.
        let m = t.lgb.len();
        let mut minors = T::zero();
        for i in 0..m {
            for j in i + 1..m {
                let d = t.lgb[i] * t.lgv[j] - t.lgb[j] * t.lgv[i];
                minors = minors + d * d;
            }
        }
        let det = -minors - t.gv * t.alpha_b * t.alpha_b / t.p;
        Self { a, det }
    }

    /// `A λ = rhs` by Cramer's rule; `None` when `A` is numerically singular.
    pub fn solve(&self, rhs: [T; 2]) -> Option<[T; 2]> {
        let [[a, b], [c, d]] = self.a;
        let scale = (a * d).abs() + (b * c).abs();
        if !(self.det.abs() > lit::<T>(tol::PARALLEL_REL) * scale) {
            return None;
        }
        Some([(rhs[0] * d - b * rhs[1]) / self.det, (a * rhs[1] - c * rhs[0]) / self.det])
    }

    /// `A λ`.
    pub fn apply(&self, lam: [T; 2]) -> [T; 2] {
        let [[a, b], [c, d]] = self.a;
        [a * lam[0] + b * lam[1], c * lam[0] + d * lam[1]]
    }
}

/// `½‖u − π‖² + (p/2)(s − 1)²`.
pub fn objective<T: Scalar>(t: &FilterTerms<T>, u: &[T], s: T) -> T {
    let half = lit::<T>(0.5);
    let du = u
        .iter()
        .zip(&t.pi)
        .fold(T::zero(), |acc, (&ui, &pi)| acc + (ui - pi) * (ui - pi));
    half * du + half * t.p * (s - T::one()) * (s - T::one())
}

/// Whether the CBF row has a zero normal: `Lgb = 0` and `α(b) = 0`.
pub(crate) fn cbf_normal_vanishes<T: Scalar>(t: &FilterTerms<T>) -> bool {
    t.lgb_vanishes() && t.alpha_b.abs() <= lit(tol::BOUNDARY)
}

/// Attaches determinacy to raw multipliers.
///
/// A multiplier is indeterminate when its constraint is tight and either
/// its normal vanishes or both tight normals are linearly dependent.
pub(crate) fn tag_multipliers<T: Scalar>(t: &FilterTerms<T>, u: &[T], s: T, l1: T, l2: T) -> (Multiplier<T>, Multiplier<T>) {
    let scale = t.constraint_scale(u);
    let tight1 = t.cbf_value(u, s).abs() <= tol::kkt(scale);
    let tight2 = t.clf_value(u).abs() <= tol::kkt(scale);
    let zero1 = cbf_normal_vanishes(t);
    let zero2 = t.lgv_vanishes();
    let dependent = tight1 && tight2 && !zero1 && !zero2 && t.b.abs() <= lit(tol::BOUNDARY) && t.parallel();
    let m1 = if (tight1 && zero1) || dependent {
        Multiplier::Indeterminate
    } else {
        Multiplier::Value(l1)
    };
    let m2 = if (tight2 && zero2) || dependent {
        Multiplier::Indeterminate
    } else {
        Multiplier::Value(l2)
    };
    (m1, m2)
}
