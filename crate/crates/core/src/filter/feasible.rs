use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{dot, lit, Scalar};
use crate::system::FilterTerms;
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct FeasiblePoint<T> {
    pub u: Vec<T>,
    pub s: T,
}

/// Builds an explicit feasible `(u, s)` from any CLF-feasible input.
///
/// Off the boundary the slack is chosen so that the CBF row evaluates to
/// `|α(b)|`. On the boundary the slack is irrelevant and feasibility rests
/// on `Lfb + Lgb·u ≥ 0`, which relaxed compatibility provides.
pub fn feasible_point<T: Scalar>(t: &FilterTerms<T>, u_clf: &[T]) -> Result<FeasiblePoint<T>> {
    if u_clf.len() != t.m() {
        return Err(Error::Dimension {
            expected: t.m(),
            actual: u_clf.len(),
            context: "CLF-feasible input",
        });
    }
    let scale = t.constraint_scale(u_clf);
    let f2 = t.clf_value(u_clf);
    if f2 > tol::kkt(scale) {
        return Err(Error::InvalidInput(format!(
            "input violates the CLF constraint by {:e}",
            f2.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let drift = t.lfb + dot(&t.lgb, u_clf);
    let s = if t.b.abs() <= lit(tol::BOUNDARY) {
        if drift < -tol::region(scale) {
            return Err(Error::CompatibilityViolation {
                state: t.x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
                value: drift.to_f64().unwrap_or(f64::NAN),
            });
        }
        T::zero()
    } else if t.b > T::zero() {
        T::one() - drift / t.alpha_b
    } else {
        -drift / t.alpha_b - T::one()
    };
    Ok(FeasiblePoint { u: u_clf.to_vec(), s })
}
