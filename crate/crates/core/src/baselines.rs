//! Comparison filters that enforce the CBF constraint hard and soften the
//! CLF constraint instead of the barrier.
//!
//! * slack CLF-QP: `min ½‖u − π‖² + (p_d/2)δ²` with `LfV + LgV·u + γ ≤ δ`
//! * the same QP with the stabilizing nominal `π(x) = −2x`
//! * penalty-lifted CLF: the CLF residual enters the objective directly
//!
//! All three keep `Lfb + Lgb·u + α(b) ≥ 0` as a hard constraint.

use serde::Serialize;

use crate::active_set::{DiagQp, Row};
use crate::error::{Error, Result};
use crate::scalar::{dot, lit, Scalar};
use crate::system::{stabilizing_nominal, CertificateProblem, FilterTerms, NominalController};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    SlackClf,
    SlackClfStabilizing,
    PenaltyLifted,
}

/// How the penalty-lifted baseline charges the CLF residual `F = LfV + LgV·u + γ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyForm {
    /// `(1/ε)·F`, i.e. a decrease reward that never switches off.
    Linear,
    /// `(1/(2ε))·max(0, F)²`. Algebraically the slack CLF-QP with `p_d = 1/ε`.
    SquaredHinge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Baseline<T> {
    pub kind: BaselineKind,
    pub p_d: T,
    pub epsilon: T,
    pub penalty: PenaltyForm,
    /// Replaces the problem's nominal controller when set.
    pub pi_override: Option<NominalController<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BaselineSolution<T> {
    pub u: Vec<T>,
    /// CLF slack `δ` (slack variants) or the CLF residual at `u` (penalty variant).
    pub slack: T,
    pub objective: T,
}

impl<T: Scalar> Baseline<T> {
    pub fn slack_clf(p_d: T) -> Self {
        Self {
            kind: BaselineKind::SlackClf,
            p_d,
            epsilon: lit(0.01),
            penalty: PenaltyForm::Linear,
            pi_override: None,
        }
    }

    pub fn slack_clf_stabilizing(p_d: T, n: usize) -> Self {
        Self {
            kind: BaselineKind::SlackClfStabilizing,
            pi_override: Some(stabilizing_nominal(n)),
            ..Self::slack_clf(p_d)
        }
    }

    pub fn penalty_lifted(epsilon: T, penalty: PenaltyForm) -> Self {
        Self {
            kind: BaselineKind::PenaltyLifted,
            p_d: lit(100.0),
            epsilon,
            penalty,
            pi_override: None,
        }
    }

    /// Defaults used in the benchmark comparison (`p_d = 100`, `ε = 0.01`).
    pub fn benchmark(kind: BaselineKind, n: usize) -> Self {
        match kind {
            BaselineKind::SlackClf => Self::slack_clf(lit(100.0)),
            BaselineKind::SlackClfStabilizing => Self::slack_clf_stabilizing(lit(100.0), n),
            BaselineKind::PenaltyLifted => Self::penalty_lifted(lit(0.01), PenaltyForm::Linear),
        }
    }

    pub fn solve(&self, prob: &CertificateProblem<T>, x: &[T]) -> Result<BaselineSolution<T>> {
        let mut t = prob.eval_terms(x)?;
        if let Some(pi) = &self.pi_override {
            t.pi = pi.eval(x, prob.m());
        }
        self.solve_terms(&t)
    }

    /// Solves with the nominal input already stored in `t.pi`.
    pub fn solve_terms(&self, t: &FilterTerms<T>) -> Result<BaselineSolution<T>> {
        let m = t.m();
        let cbf_row = |extra: usize| {
            let mut a: Vec<T> = t.lgb.iter().map(|&v| -v).collect();
            a.extend(std::iter::repeat_n(T::zero(), extra));
            Row { a, r: t.lfb + t.alpha_b }
        };
        let clf_offset = t.lfv + t.gamma;
        let infeasible = || Error::Infeasible {
            state: t.x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
        };
        let lifted_slack = |p_d: T| -> Result<BaselineSolution<T>> {
            let mut weights = vec![T::one(); m + 1];
            weights[m] = p_d;
            let mut centre = t.pi.clone();
            centre.push(T::zero());
            let mut clf = t.lgv.clone();
            clf.push(-T::one());
            let qp = DiagQp::new(weights, centre, vec![cbf_row(1), Row { a: clf, r: -clf_offset }])?;
            let sol = qp.solve().ok_or_else(infeasible)?;
            Ok(BaselineSolution {
                u: sol.z[..m].to_vec(),
                slack: sol.z[m],
                objective: sol.objective,
            })
        };
        match (self.kind, self.penalty) {
            (BaselineKind::SlackClf | BaselineKind::SlackClfStabilizing, _) => lifted_slack(self.p_d),
            (BaselineKind::PenaltyLifted, PenaltyForm::SquaredHinge) => {
                let mut sol = lifted_slack(T::one() / self.epsilon)?;
                sol.slack = clf_offset + dot(&t.lgv, &sol.u);
                Ok(sol)
            }
            (BaselineKind::PenaltyLifted, PenaltyForm::Linear) => {
                // ½‖u − π‖² + (1/ε)(LgV·u) = ½‖u − (π − LgVᵀ/ε)‖² + const.
                let inv = T::one() / self.epsilon;
                let centre: Vec<T> = t.pi.iter().zip(&t.lgv).map(|(&p, &g)| p - g * inv).collect();
                let qp = DiagQp::new(vec![T::one(); m], centre, vec![cbf_row(0)])?;
                let sol = qp.solve().ok_or_else(infeasible)?;
                let resid = clf_offset + dot(&t.lgv, &sol.z);
                let half = lit::<T>(0.5);
                let du = sol.z.iter().zip(&t.pi).fold(T::zero(), |a, (&u, &p)| a + (u - p) * (u - p));
                Ok(BaselineSolution {
                    objective: half * du + inv * resid,
                    slack: resid,
                    u: sol.z,
                })
            }
        }
    }
}

/// `min ½‖u − π‖²` with both CBF and CLF (`+γ`, no slack) as hard constraints.
pub fn hard_clf_qp<T: Scalar>(t: &FilterTerms<T>) -> Option<Vec<T>> {
    let cbf = Row {
        a: t.lgb.iter().map(|&v| -v).collect(),
        r: t.lfb + t.alpha_b,
    };
    let clf = Row {
        a: t.lgv.clone(),
        r: -t.lfv - t.gamma,
    };
    DiagQp::new(vec![T::one(); t.m()], t.pi.clone(), vec![cbf, clf])
        .ok()?
        .solve()
        .map(|s| s.z)
}
