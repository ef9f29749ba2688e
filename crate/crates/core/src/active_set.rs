//! Exact solver for diagonal-weighted QPs with at most two linear
//! inequalities, by enumerating every active set.
//!
//! ```text
//! minimise  ½ Σ wᵢ (zᵢ − cᵢ)²   subject to  aₖ · z ≤ rₖ,  k < 2
//! ```
//!
//! For an active set `S` the equality-constrained problem has the solution
//! `z = c − W⁻¹ A_Sᵀ ν` with `G ν = A_S c − r_S`, `G = A_S W⁻¹ A_Sᵀ`. When `G`
//! is singular the minimum-norm `ν = G⁺(A_S c − r_S)` is used and the
//! equality system is re-checked for consistency. The objective is strictly
//! convex, so every active set passing primal and dual checks yields the
//! same minimiser up to rounding; the least objective among them wins.

use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, lit, Scalar};
use crate::tol;

/// A linear inequality `a · z ≤ r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row<T> {
    pub a: Vec<T>,
    pub r: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagQp<T> {
    pub weights: Vec<T>,
    pub centre: Vec<T>,
    pub rows: Vec<Row<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution<T> {
    pub z: Vec<T>,
    /// One multiplier per row; zero for rows outside the winning active set.
    pub nu: Vec<T>,
    /// Rows in the winning active set.
    pub active: Vec<bool>,
    pub objective: T,
}

impl<T: Scalar> DiagQp<T> {
    pub fn new(weights: Vec<T>, centre: Vec<T>, rows: Vec<Row<T>>) -> Result<Self> {
        check_dim(weights.len(), centre.len(), "QP centre")?;
        if rows.len() > 2 {
            return Err(Error::InvalidInput("active-set oracle handles at most two rows".into()));
        }
        for row in &rows {
            check_dim(weights.len(), row.a.len(), "QP row")?;
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::InvalidInput("QP weights must be positive".into()));
        }
        Ok(Self { weights, centre, rows })
    }

    pub fn objective(&self, z: &[T]) -> T {
        let half = lit::<T>(0.5);
        self.weights
            .iter()
            .zip(z.iter().zip(&self.centre))
            .fold(T::zero(), |acc, (&w, (&zi, &ci))| acc + half * w * (zi - ci) * (zi - ci))
    }

    fn feas_tol(&self, row: &Row<T>, z: &[T]) -> T {
        let scale = row.r.abs()
            + row
                .a
                .iter()
                .zip(z)
                .fold(T::zero(), |acc, (&a, &zi)| acc + (a * zi).abs());
        tol::region(scale)
    }

    /// `a W⁻¹ bᵀ`.
    fn w_inner(&self, a: &[T], b: &[T]) -> T {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .fold(T::zero(), |acc, ((&x, &y), &w)| acc + x * y / w)
    }

    /// `det(A W⁻¹ Aᵀ)` for two rows via the Cauchy–Binet expansion, which
    /// avoids the cancellation in `g₁₁g₂₂ − g₁₂²` for nearly parallel rows.
    fn gram_det(&self, a: &[T], b: &[T]) -> T {
        let n = a.len();
        let mut det = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                let minor = a[i] * b[j] - a[j] * b[i];
                det = det + minor * minor / (self.weights[i] * self.weights[j]);
            }
        }
        det
    }

    /// `c − W⁻¹ A_Sᵀ ν`.
    fn step(&self, rows: &[&Row<T>], nu: &[T]) -> Vec<T> {
        let mut z = self.centre.clone();
        for (row, &nk) in rows.iter().zip(nu) {
            for ((zi, &ai), &w) in z.iter_mut().zip(&row.a).zip(&self.weights) {
                *zi = *zi - ai * nk / w;
            }
        }
        z
    }

    fn solve_set(&self, set: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
        let rows: Vec<&Row<T>> = set.iter().map(|&k| &self.rows[k]).collect();
        let rhs: Vec<T> = rows.iter().map(|row| dot(&row.a, &self.centre) - row.r).collect();
        let (z, nu): (Vec<T>, Vec<T>) = match rows.len() {
            0 => (self.centre.clone(), Vec::new()),
            1 => {
                let g = self.w_inner(&rows[0].a, &rows[0].a);
                let nu = if g > T::min_positive_value() {
                    vec![rhs[0] / g]
                } else {
                    vec![T::zero()]
                };
                (self.step(&rows, &nu), nu)
            }
            _ => {
                let g11 = self.w_inner(&rows[0].a, &rows[0].a);
                let g22 = self.w_inner(&rows[1].a, &rows[1].a);
                let g12 = self.w_inner(&rows[0].a, &rows[1].a);
                let det = self.gram_det(&rows[0].a, &rows[1].a);
                let mut nu = pinv2_apply(g11, g12, g22, det, rhs[0], rhs[1]);
                let mut z = self.step(&rows, &nu);
                // One step of iterative refinement on the active equalities,
                // applied to z directly because re-forming z from large
                // multipliers cancels.
                if det > T::zero() {
                    let r0 = dot(&rows[0].a, &z) - rows[0].r;
                    let r1 = dot(&rows[1].a, &z) - rows[1].r;
                    let d = pinv2_apply(g11, g12, g22, det, r0, r1);
                    for (k, row) in rows.iter().enumerate() {
                        for ((zi, &ai), &w) in z.iter_mut().zip(&row.a).zip(&self.weights) {
                            *zi = *zi - ai * d[k] / w;
                        }
                    }
                    nu[0] = nu[0] + d[0];
                    nu[1] = nu[1] + d[1];
                }
                (z, nu)
            }
        };
        // The pseudo-inverse solution only satisfies consistent systems.
        for row in &rows {
            if (dot(&row.a, &z) - row.r).abs() > self.feas_tol(row, &z) {
                return None;
            }
        }
        Some((z, nu))
    }

    /// Returns `None` when the feasible set is empty.
    pub fn solve(&self) -> Option<QpSolution<T>> {
        let k = self.rows.len();
        let sets: Vec<Vec<usize>> = match k {
            0 => vec![vec![]],
            1 => vec![vec![], vec![0]],
            _ => vec![vec![], vec![0], vec![1], vec![0, 1]],
        };
        let mut best: Option<QpSolution<T>> = None;
        for set in sets {
            let Some((z, nu_set)) = self.solve_set(&set) else {
                continue;
            };
            let primal_ok = self
                .rows
                .iter()
                .all(|row| dot(&row.a, &z) - row.r <= self.feas_tol(row, &z));
            let nu_scale = nu_set.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let dual_ok = nu_set.iter().all(|&v| v >= -tol::region(nu_scale));
            if !(primal_ok && dual_ok) {
                continue;
            }
            let mut nu = vec![T::zero(); k];
            let mut active = vec![false; k];
            for (&idx, &v) in set.iter().zip(&nu_set) {
                nu[idx] = v.max(T::zero());
                active[idx] = true;
            }
            let objective = self.objective(&z);
            if best.as_ref().is_none_or(|b| objective < b.objective) {
                best = Some(QpSolution { z, nu, active, objective });
            }
        }
        best
    }
}

/// `G⁺ v` for a symmetric positive semidefinite 2×2 `G` with determinant `det`.
fn pinv2_apply<T: Scalar>(g11: T, g12: T, g22: T, det: T, v1: T, v2: T) -> Vec<T> {
    let trace = g11 + g22;
    if !(trace > T::min_positive_value()) {
        return vec![T::zero(), T::zero()];
    }
    if det > lit::<T>(tol::PARALLEL_REL) * g11 * g22 {
        return vec![(g22 * v1 - g12 * v2) / det, (g11 * v2 - g12 * v1) / det];
    }
    // Rank one: G = λ qqᵀ with λ = trace, so G⁺ = G / λ².
    let t2 = trace * trace;
    vec![(g11 * v1 + g12 * v2) / t2, (g12 * v1 + g22 * v2) / t2]
}
