use super::kkt::kkt_residuals;
use super::{classify_region, objective, oracle_solve, tag_multipliers, AMatrix, CriticalRegion, FilterSolution, SolverPath};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::system::FilterTerms;
use crate::tol;

/// `(u, s, λ₁, λ₂)` from stationarity: `u = π + λ₁Lgbᵀ − λ₂LgVᵀ`, `s = 1 + λ₁α/p`.
fn from_multipliers<T: Scalar>(t: &FilterTerms<T>, l1: T, l2: T) -> (Vec<T>, T, T, T) {
    let u = t
        .pi
        .iter()
        .zip(t.lgb.iter().zip(&t.lgv))
        .map(|(&p, (&gb, &gv))| p + l1 * gb - l2 * gv)
        .collect();
    (u, T::one() + l1 * t.alpha_b / t.p, l1, l2)
}

fn branch<T: Scalar>(t: &FilterTerms<T>, region: CriticalRegion) -> Option<(Vec<T>, T, T, T)> {
    use CriticalRegion::*;
    let zero = T::zero();
    match region {
        Inactive | CbfActive2 | ClfActive2 | BothActive5 => Some(from_multipliers(t, zero, zero)),
        CbfActive1 | BothActive4 => Some(from_multipliers(t, -t.f_b / t.f_b_prime, zero)),
        ClfActive1 => Some(from_multipliers(t, zero, t.f_v / t.gv)),
        BothActive1 => {
            let a = AMatrix::from_terms(t);
            let [l1, l2] = a.solve([-t.f_b, -t.f_v])?;
            // Refine against the constraint values at the resulting input,
            // which are the residuals of the active equalities.
            // The correction is applied to (u, s) directly because forming u
            // from large multipliers cancels.
            let (mut u, mut s, _, _) = from_multipliers(t, l1, l2);
            let [d1, d2] = a.solve([-t.cbf_value(&u, s), -t.clf_value(&u)])?;
            for (ui, (&gb, &gv)) in u.iter_mut().zip(t.lgb.iter().zip(&t.lgv)) {
                *ui = *ui + d1 * gb - d2 * gv;
            }
            s = s + d1 * t.alpha_b / t.p;
            Some((u, s, l1 + d1, l2 + d2))
        }
        // CLF direction with λ₁ = 0.
        BothActive2 | BothActive3 => Some(from_multipliers(t, zero, t.f_v / t.gv)),
        Unclassified => None,
    }
}

/// Piecewise closed-form filter, with oracle fallback on unclassified
/// states and on branches that fail the KKT check.
pub fn closed_form_solve<T: Scalar>(t: &FilterTerms<T>) -> Result<FilterSolution<T>> {
    let region = classify_region(t);
    if let Some((u, s, l1, l2)) = branch(t, region) {
        let finite = u.iter().all(|v| v.is_finite()) && s.is_finite();
        if finite {
            let (lambda1, lambda2) = tag_multipliers(t, &u, s, l1, l2);
            let report = kkt_residuals(t, &u, s, lambda1, lambda2);
            let scale = t.constraint_scale(&u) + l1.abs() + l2.abs();
            if report.max <= tol::kkt(scale) {
                let obj = objective(t, &u, s);
                return Ok(FilterSolution {
                    u,
                    s,
                    lambda1,
                    lambda2,
                    region,
                    path: SolverPath::ClosedForm,
                    kkt_residual: report.max,
                    objective: obj,
                });
            }
        }
    }
    let mut sol = oracle_solve(t)?;
    sol.region = region;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Multiplier;
    use crate::system::{benchmark_problem, stabilizing_nominal};

    fn at(x: [f64; 2]) -> FilterSolution<f64> {
        closed_form_solve(&benchmark_problem::<f64>().eval_terms(&x).unwrap()).unwrap()
    }

    #[test]
    fn lower_boundary_point_falls_back() {
        let s = at([0.0, 2.0]);
        assert_eq!(s.path, SolverPath::Oracle);
        assert_eq!(s.region, CriticalRegion::Unclassified);
        assert!((s.u[1] + 2.0).abs() <= 1e-9);
    }

    #[test]
    fn upper_boundary_point() {
        let s = at([0.0, 6.0]);
        assert!(s.u[0].abs() <= 1e-9 && (s.u[1] + 6.0).abs() <= 1e-9);
        assert!((s.s - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn origin() {
        let s = at([0.0, 0.0]);
        assert_eq!(s.u, vec![0.0, 0.0]);
        assert_eq!(s.s, 1.0);
        assert_eq!(s.path, SolverPath::ClosedForm);
    }

    #[test]
    fn inactive_region_returns_nominal_exactly() {
        let prob = benchmark_problem::<f64>().with_pi(stabilizing_nominal(2)).unwrap();
        let t = prob.eval_terms(&[2.0, -1.0]).unwrap();
        let s = closed_form_solve(&t).unwrap();
        assert_eq!(s.region, CriticalRegion::Inactive);
        assert_eq!(s.u, t.pi);
        assert_eq!(s.s, 1.0);
        assert_eq!(s.lambda1, Multiplier::Value(0.0));
    }

    #[test]
    fn interior_point_matches_oracle() {
        let t = benchmark_problem::<f64>().eval_terms(&[3.0, 4.0]).unwrap();
        let cf = closed_form_solve(&t).unwrap();
        let or = oracle_solve(&t).unwrap();
        assert_eq!(cf.path, SolverPath::ClosedForm);
        for (a, b) in cf.u.iter().zip(&or.u) {
            assert!((a - b).abs() <= 1e-8);
        }
        assert!((cf.objective - or.objective).abs() <= 1e-8 * or.objective.abs());
    }
}
