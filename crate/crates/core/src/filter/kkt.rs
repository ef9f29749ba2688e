use serde::Serialize;

use super::{FilterSolution, Multiplier};
use crate::scalar::{dot, norm, Scalar};
use crate::system::FilterTerms;

/// Absolute KKT residuals of a candidate filter solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct KktReport<T> {
    /// `‖u − π − λ₁Lgbᵀ + λ₂LgVᵀ‖ + |p(s − 1) − λ₁α(b)|`
    pub stationarity: T,
    pub primal: T,
    pub dual: T,
    pub complementarity: T,
    pub max: T,
    /// Multipliers used for stationarity, with indeterminate ones replaced
    /// by the best non-negative choice.
    pub lambda: [T; 2],
}

/// Residual columns: stationarity is `r0 + λ₁ c₁ + λ₂ c₂`.
fn columns<T: Scalar>(t: &FilterTerms<T>, u: &[T], s: T) -> (Vec<T>, [Vec<T>; 2]) {
    let mut r0: Vec<T> = u.iter().zip(&t.pi).map(|(&a, &b)| a - b).collect();
    r0.push(t.p * (s - T::one()));
    let mut c1: Vec<T> = t.lgb.iter().map(|&v| -v).collect();
    c1.push(-t.alpha_b);
    let mut c2 = t.lgv.clone();
    c2.push(T::zero());
    (r0, [c1, c2])
}

fn residual<T: Scalar>(r0: &[T], c: &[Vec<T>; 2], lam: [T; 2]) -> Vec<T> {
    r0.iter()
        .enumerate()
        .map(|(i, &r)| r + lam[0] * c[0][i] + lam[1] * c[1][i])
        .collect()
}

/// Non-negative least squares over the free multipliers, by enumerating
/// supports (at most two unknowns).
fn best_multipliers<T: Scalar>(r0: &[T], c: &[Vec<T>; 2], fixed: [Option<T>; 2]) -> [T; 2] {
    let base = [fixed[0].unwrap_or(T::zero()), fixed[1].unwrap_or(T::zero())];
    let free: Vec<usize> = (0..2).filter(|&k| fixed[k].is_none()).collect();
    let r_base = residual(r0, c, base);
    let mut candidates = vec![base];
    for &k in &free {
        let ck = dot(&c[k], &c[k]);
        if ck > T::min_positive_value() {
            let mut lam = base;
            lam[k] = (-dot(&c[k], &r_base) / ck).max(T::zero());
            candidates.push(lam);
        }
    }
    if free.len() == 2 {
        let (g11, g22, g12) = (dot(&c[0], &c[0]), dot(&c[1], &c[1]), dot(&c[0], &c[1]));
        let (v1, v2) = (-dot(&c[0], &r_base), -dot(&c[1], &r_base));
        let det = g11 * g22 - g12 * g12;
        if det > T::epsilon() * g11 * g22 {
            let l1 = (g22 * v1 - g12 * v2) / det;
            let l2 = (g11 * v2 - g12 * v1) / det;
            if l1 >= T::zero() && l2 >= T::zero() {
                candidates.push([l1, l2]);
            }
        }
    }
    candidates
        .into_iter()
        .map(|lam| (norm(&residual(r0, c, lam)), lam))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(_, lam)| lam)
        .unwrap_or(base)
}

pub(crate) fn kkt_residuals<T: Scalar>(
    t: &FilterTerms<T>,
    u: &[T],
    s: T,
    lambda1: Multiplier<T>,
    lambda2: Multiplier<T>,
) -> KktReport<T> {
    let (r0, c) = columns(t, u, s);
    let lam = best_multipliers(&r0, &c, [lambda1.value(), lambda2.value()]);
    let r = residual(&r0, &c, lam);
    let m = t.m();
    let stationarity = norm(&r[..m]) + r[m].abs();
    let f1 = t.cbf_value(u, s);
    let f2 = t.clf_value(u);
    let primal = T::zero().max(-f1).max(f2);
    let mut dual = T::zero();
    let mut complementarity = T::zero();
    if let Some(l1) = lambda1.value() {
        dual = dual.max(-l1);
        complementarity = complementarity.max((l1 * f1).abs());
    }
    if let Some(l2) = lambda2.value() {
        dual = dual.max(-l2);
        complementarity = complementarity.max((l2 * f2).abs());
    }
    let max = stationarity.max(primal).max(dual).max(complementarity);
    KktReport {
        stationarity,
        primal,
        dual,
        complementarity,
        max,
        lambda: lam,
    }
}

/// KKT residuals of `sol` at the state behind `t`.
pub fn verify_kkt<T: Scalar>(sol: &FilterSolution<T>, t: &FilterTerms<T>) -> KktReport<T> {
    kkt_residuals(t, &sol.u, sol.s, sol.lambda1, sol.lambda2)
}
