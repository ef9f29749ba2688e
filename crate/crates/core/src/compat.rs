//! Sampling-based checks of relaxed compatibility on the barrier boundary,
//! plus the small-control and complementary-slackness diagnostics.
//!
//! On `b(x) = 0` relaxed compatibility asks for one input with
//! `Lfb + Lgb·u ≥ 0` and `LfV + LgV·u ≤ 0`. The strict variant adds `α(b)`
//! and `γ` to the two offsets and must hold everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::active_set::{DiagQp, Row};
use crate::poly::{PolyVector, Polynomial};
use crate::scalar::{dot, lit, norm, Scalar};
use crate::system::CertificateProblem;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    /// `Lgb = 0` with `Lfb < 0`.
    CbfDegenerate,
    /// `LgV = 0` with `LfV > 0`.
    ClfDegenerate,
    /// `Lgb` a positive multiple of `LgV` with incompatible offsets.
    ParallelConflict,
}

/// Decision for `{u : a·u ≥ −c1} ∩ {u : d·u ≤ −c2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct HalfspaceDecision<T> {
    pub feasible: bool,
    /// Least-norm point of the intersection.
    pub witness: Option<Vec<T>>,
    pub conflict: Option<ConflictKind>,
    /// Signed slack of the decisive inequality; `None` when the intersection
    /// is unbounded in every direction that matters.
    pub margin: Option<T>,
}

/// Analytic feasibility of two half-spaces.
pub fn halfspace_pair_feasible<T: Scalar>(a: &[T], c1: T, d: &[T], c2: T) -> HalfspaceDecision<T> {
    let (na, nd) = (norm(a), norm(d));
    let a_zero = na <= tol::grad(T::zero());
    let d_zero = nd <= tol::grad(T::zero());
    let ad = dot(a, d);
    let parallel = !a_zero && !d_zero && ad > T::zero() && ad * ad >= (T::one() - lit(tol::PARALLEL_REL)) * na * na * nd * nd;
    let scale = c1.abs() + c2.abs();
    let (conflict, margin) = if a_zero && d_zero {
        let m = c1.min(-c2);
        let kind = if c1 < -tol::region(c1) {
            Some(ConflictKind::CbfDegenerate)
        } else if c2 > tol::region(c2) {
            Some(ConflictKind::ClfDegenerate)
        } else {
            None
        };
        (kind, Some(m))
    } else if a_zero {
        (
            (c1 < -tol::region(c1)).then_some(ConflictKind::CbfDegenerate),
            Some(c1),
        )
    } else if d_zero {
        (
            (c2 > tol::region(c2)).then_some(ConflictKind::ClfDegenerate),
            Some(-c2),
        )
    } else if parallel {
        // a = t d: the pair reads  d·u ≥ −c1/t  and  d·u ≤ −c2.
        let t = ad / (nd * nd);
        let m = (c1 - t * c2) / (T::one() + t);
        (
            (t * c2 > c1 + tol::region(scale * (T::one() + t))).then_some(ConflictKind::ParallelConflict),
            Some(m),
        )
    } else {
        (None, None)
    };
    let feasible = conflict.is_none();
    let witness = if feasible { least_norm_witness(a, c1, d, c2) } else { None };
    HalfspaceDecision {
        feasible,
        witness,
        conflict,
        margin,
    }
}

fn least_norm_witness<T: Scalar>(a: &[T], c1: T, d: &[T], c2: T) -> Option<Vec<T>> {
    let m = a.len();
    // Rows with a vanishing normal are constant and already decided.
    let mut rows = Vec::new();
    if norm(a) > T::zero() {
        rows.push(Row {
            a: a.iter().map(|&v| -v).collect(),
            r: c1,
        });
    }
    if norm(d) > T::zero() {
        rows.push(Row { a: d.to_vec(), r: -c2 });
    }
    let qp = DiagQp::new(vec![T::one(); m], vec![T::zero(); m], rows).ok()?;
    match qp.solve() {
        Some(s) => Some(s.z),
        // Within the decision tolerance but outside the oracle's: snap to
        // the point that balances both rows along the shared normal.
        None => {
            let nd2 = dot(d, d);
            (nd2 > T::zero()).then(|| d.iter().map(|&v| -c2 * v / nd2).collect())
        }
    }
}

/// Which offsets to use when checking a boundary sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompatMode {
    /// `Lfb + Lgb·u ≥ 0`, `LfV + LgV·u ≤ 0`.
    Relaxed,
    /// `Lfb + Lgb·u + α(b) ≥ 0`, `LfV + LgV·u + γ ≤ 0`.
    Strict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundarySample<T> {
    pub x: Vec<T>,
    pub b: T,
    pub feasible: bool,
    pub witness_u: Option<Vec<T>>,
    pub conflict_kind: Option<ConflictKind>,
    pub margin: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CompatReport<T> {
    pub mode: CompatMode,
    pub samples: Vec<BoundarySample<T>>,
    pub all_feasible: bool,
    /// Least bounded margin over all samples; `None` if no sample has one.
    pub min_margin: Option<T>,
    /// Seeds that failed to project onto the boundary.
    pub skipped_seeds: usize,
}

/// Checks every sample under `mode`.
pub fn check_samples<T: Scalar>(prob: &CertificateProblem<T>, samples: &[Vec<T>], mode: CompatMode) -> CompatReport<T> {
    let checked: Vec<BoundarySample<T>> = samples
        .par_iter()
        .map(|x| {
            let t = prob.eval_terms(x).expect("sample dimension matches problem");
            let (c1, c2) = match mode {
                CompatMode::Relaxed => (t.lfb, t.lfv),
                CompatMode::Strict => (t.lfb + t.alpha_b, t.lfv + t.gamma),
            };
            let dec = halfspace_pair_feasible(&t.lgb, c1, &t.lgv, c2);
            BoundarySample {
                x: x.clone(),
                b: t.b,
                feasible: dec.feasible,
                witness_u: dec.witness,
                conflict_kind: dec.conflict,
                margin: dec.margin,
            }
        })
        .collect();
    let all_feasible = checked.iter().all(|s| s.feasible);
    let min_margin = checked
        .iter()
        .filter_map(|s| s.margin)
        .fold(None, |acc: Option<T>, m| Some(acc.map_or(m, |a| a.min(m))));
    CompatReport {
        mode,
        samples: checked,
        all_feasible,
        min_margin,
        skipped_seeds: 0,
    }
}

/// Samples the boundary by Newton projection from seeded random points and
/// checks relaxed compatibility on every sample.
pub fn check_relaxed_compatibility<T: Scalar>(prob: &CertificateProblem<T>, count: usize, seed: u64, half_width: T) -> CompatReport<T> {
    let sampling = sample_boundary(prob.b(), count, seed, half_width);
    let mut report = check_samples(prob, &sampling.points, CompatMode::Relaxed);
    report.skipped_seeds = sampling.skipped;
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundarySampling<T> {
    pub points: Vec<Vec<T>>,
    /// Seeds abandoned after 100 Newton steps or a vanishing gradient.
    pub skipped: usize,
}

/// Newton projection of `x` onto `b = 0` along `∇b`.
pub fn project_to_boundary<T: Scalar>(b: &Polynomial<T>, x: &[T]) -> Option<Vec<T>> {
    let grad = b.gradient();
    let mut x = x.to_vec();
    for _ in 0..100 {
        let v = b.eval_unchecked(&x);
        if v.abs() <= lit(tol::BOUNDARY) {
            return Some(x);
        }
        let g = grad.eval_unchecked(&x);
        let g2 = dot(&g, &g);
        if !(g2 > T::epsilon()) {
            return None;
        }
        for (xi, &gi) in x.iter_mut().zip(&g) {
            *xi = *xi - v * gi / g2;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    None
}

/// Up to `count` boundary points from seeds uniform in `[−w, w]^n`.
/// Tries at most `20·count` seeds, so a barrier without a zero set yields
/// an empty list together with the number of failed seeds.
pub fn sample_boundary<T: Scalar>(b: &Polynomial<T>, count: usize, seed: u64, half_width: T) -> BoundarySampling<T> {
    let n = b.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = half_width.to_f64().unwrap_or(1.0);
    let mut points = Vec::with_capacity(count);
    let mut skipped = 0;
    for _ in 0..count.saturating_mul(20) {
        if points.len() >= count {
            break;
        }
        let x0: Vec<T> = (0..n).map(|_| lit(rng.gen_range(-w..=w))).collect();
        match project_to_boundary(b, &x0) {
            Some(x) => points.push(x),
            None => skipped += 1,
        }
    }
    BoundarySampling { points, skipped }
}

/// `count` points `centre + r·(sin θ, −cos θ)` with `θ = 2πk/count`, each
/// polished onto `b = 0`. Starts at the bottom of the circle.
pub fn circle_grid<T: Scalar>(b: &Polynomial<T>, centre: [T; 2], radius: T, count: usize) -> Vec<Vec<T>> {
    (0..count)
        .map(|k| {
            let th = T::from_f64(std::f64::consts::TAU * k as f64 / count as f64).unwrap_or(T::zero());
            let x = vec![centre[0] + radius * th.sin(), centre[1] - radius * th.cos()];
            project_to_boundary(b, &x).unwrap_or(x)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status", bound = "T: Scalar")]
pub enum ScsMargin<T> {
    /// No grid point off the origin ball has `LgV = 0`.
    Vacuous,
    Value { margin: T },
}

/// `min −(LfV + γ)` over grid points with `LgV = 0` and `‖x‖ > origin_radius`.
pub fn scs_margin<T: Scalar>(prob: &CertificateProblem<T>, grid: &[Vec<T>], origin_radius: T) -> ScsMargin<T> {
    let mut best: Option<T> = None;
    for x in grid {
        let xn = norm(x);
        if xn <= origin_radius {
            continue;
        }
        let t = prob.eval_terms(x).expect("grid dimension matches problem");
        if norm(&t.lgv) <= tol::grad(xn) {
            let m = -(t.lfv + t.gamma);
            best = Some(best.map_or(m, |b| b.min(m)));
        }
    }
    best.map_or(ScsMargin::Vacuous, |margin| ScsMargin::Value { margin })
}

/// Small-control diagnostic for a candidate stabilizer `u_V`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct SmallControlDiagnostic<T> {
    pub has_constant_term: bool,
    /// `(r, max ‖u_V‖ on the circle of radius r)` for decreasing `r`.
    pub max_norm_by_radius: Vec<(T, T)>,
    /// Whether the maxima decrease towards zero.
    pub vanishes: bool,
}

pub fn small_control_diagnostic<T: Scalar>(u_v: &PolyVector<T>, radii: &[T]) -> SmallControlDiagnostic<T> {
    let has_constant_term = u_v.iter().any(|p| p.constant_term() != T::zero());
    let n = u_v.num_vars();
    let max_norm_by_radius: Vec<(T, T)> = radii
        .iter()
        .map(|&r| {
            let mx = (0..64)
                .map(|k| {
                    // First two coordinates on a circle, the rest at zero.
                    let th = T::from_f64(std::f64::consts::TAU * k as f64 / 64.0).unwrap_or(T::zero());
                    let mut x = vec![T::zero(); n];
                    x[0] = r * th.cos();
                    if n > 1 {
                        x[1] = r * th.sin();
                    }
                    norm(&u_v.eval_unchecked(&x))
                })
                .fold(T::zero(), T::max);
            (r, mx)
        })
        .collect();
    let vanishes = !has_constant_term && max_norm_by_radius.windows(2).all(|w| w[1].1 <= w[0].1);
    SmallControlDiagnostic {
        has_constant_term,
        max_norm_by_radius,
        vanishes,
    }
}
