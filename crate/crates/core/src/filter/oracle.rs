use super::kkt::verify_kkt;
use super::{classify_region, tag_multipliers, FilterSolution, SolverPath};
use crate::active_set::{DiagQp, Row};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::FilterTerms;

/// The filter as a weighted QP in `z = (u, s)` with constraints `a·z ≤ r`.
pub(crate) fn filter_qp<T: Scalar>(t: &FilterTerms<T>) -> DiagQp<T> {
    let m = t.m();
    let mut weights = vec![T::one(); m + 1];
    weights[m] = t.p;
    let mut centre = t.pi.clone();
    centre.push(T::one());
    // −Lgb·u − α s ≤ Lfb
    let mut cbf: Vec<T> = t.lgb.iter().map(|&v| -v).collect();
    cbf.push(-t.alpha_b);
    // LgV·u ≤ −LfV − βγ
    let mut clf = t.lgv.clone();
    clf.push(T::zero());
    DiagQp {
        weights,
        centre,
        rows: vec![
            Row { a: cbf, r: t.lfb },
            Row {
                a: clf,
                r: -t.lfv - t.beta_b * t.gamma,
            },
        ],
    }
}

/// Ground-truth solve by active-set enumeration.
pub fn oracle_solve<T: Scalar>(t: &FilterTerms<T>) -> Result<FilterSolution<T>> {
    let qp = filter_qp(t);
    let sol = qp.solve().ok_or_else(|| Error::Infeasible {
        state: t.x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
    })?;
    let m = t.m();
    let u = sol.z[..m].to_vec();
    let s = sol.z[m];
    let (lambda1, lambda2) = tag_multipliers(t, &u, s, sol.nu[0], sol.nu[1]);
    let mut out = FilterSolution {
        u,
        s,
        lambda1,
        lambda2,
        region: classify_region(t),
        path: SolverPath::Oracle,
        kkt_residual: T::zero(),
        objective: sol.objective,
    };
    out.kkt_residual = verify_kkt(&out, t).max;
    Ok(out)
}
