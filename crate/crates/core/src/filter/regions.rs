//! Critical regions of the parametric filter QP.
//!
//! Each region fixes which constraints are active. Predicates are evaluated
//! with a tolerance proportional to the magnitudes of the terms being
//! compared, so equalities hold on thin bands and strict inequalities need
//! to clear the band. Classification is first-match in the fixed order
//! below; every labelled branch is KKT-checked downstream, so overlaps on
//! closures are harmless.

use serde::Serialize;

use crate::scalar::{dot, lit, Scalar};
use crate::system::FilterTerms;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalRegion {
    /// Neither constraint active: `F_b > 0`, `F_V < 0`.
    Inactive,
    /// CBF active with a determinate multiplier.
    CbfActive1,
    /// CBF row degenerate (`b = 0`, `Lgb = 0`), CLF inactive.
    CbfActive2,
    /// CLF active, CBF inactive.
    ClfActive1,
    /// `LgV = 0` with the CBF inactive.
    ClfActive2,
    /// Both active with an invertible multiplier system.
    BothActive1,
    /// Both active with a vanishing CBF row.
    BothActive2,
    /// Both active on the boundary with parallel rows.
    BothActive3,
    /// Both active with `LgV = 0`.
    BothActive4,
    /// Both rows vanish.
    BothActive5,
    Unclassified,
}

impl CriticalRegion {
    pub const ALL: [CriticalRegion; 11] = [
        CriticalRegion::Inactive,
        CriticalRegion::CbfActive1,
        CriticalRegion::CbfActive2,
        CriticalRegion::ClfActive1,
        CriticalRegion::ClfActive2,
        CriticalRegion::BothActive1,
        CriticalRegion::BothActive2,
        CriticalRegion::BothActive3,
        CriticalRegion::BothActive4,
        CriticalRegion::BothActive5,
        CriticalRegion::Unclassified,
    ];

    /// Position in the classification order, 1 to 10; 0 when unclassified.
    pub fn index(self) -> u8 {
        match self {
            CriticalRegion::Unclassified => 0,
            other => Self::ALL.iter().position(|&r| r == other).map_or(0, |i| i as u8 + 1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriticalRegion::Inactive => "inactive",
            CriticalRegion::CbfActive1 => "cbf-active-1",
            CriticalRegion::CbfActive2 => "cbf-active-2",
            CriticalRegion::ClfActive1 => "clf-active-1",
            CriticalRegion::ClfActive2 => "clf-active-2",
            CriticalRegion::BothActive1 => "both-active-1",
            CriticalRegion::BothActive2 => "both-active-2",
            CriticalRegion::BothActive3 => "both-active-3",
            CriticalRegion::BothActive4 => "both-active-4",
            CriticalRegion::BothActive5 => "both-active-5",
            CriticalRegion::Unclassified => "unclassified",
        }
    }
}

impl std::fmt::Display for CriticalRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A signed quantity together with the magnitude scale of its summands.
#[derive(Clone, Copy)]
struct Q<T> {
    v: T,
    scale: T,
}

impl<T: Scalar> Q<T> {
    fn sum(parts: &[T]) -> Self {
        Q {
            v: parts.iter().fold(T::zero(), |a, &p| a + p),
            scale: parts.iter().fold(T::zero(), |a, &p| a + p.abs()),
        }
    }
    fn tol(&self) -> T {
        tol::region(self.scale)
    }
    fn pos(&self) -> bool {
        self.v > self.tol()
    }
    fn neg(&self) -> bool {
        self.v < -self.tol()
    }
    fn nonneg(&self) -> bool {
        self.v >= -self.tol()
    }
    fn nonpos(&self) -> bool {
        self.v <= self.tol()
    }
    fn zero(&self) -> bool {
        self.v.abs() <= self.tol()
    }
}

struct Predicates<T> {
    f_b: Q<T>,
    f_v: Q<T>,
    b_zero: bool,
    lgb_zero: bool,
    lgv_zero: bool,
    parallel: bool,
}

impl<T: Scalar> Predicates<T> {
    fn new(t: &FilterTerms<T>) -> Self {
        let f_b = Q::sum(&[dot(&t.lgb, &t.pi), t.lfb, t.alpha_b]);
        let f_v = Q::sum(&[t.lfv, dot(&t.lgv, &t.pi), t.beta_b * t.gamma]);
        Predicates {
            f_b: Q { v: t.f_b, ..f_b },
            f_v: Q { v: t.f_v, ..f_v },
            b_zero: t.b.abs() <= lit(tol::BOUNDARY),
            lgb_zero: t.lgb_vanishes(),
            lgv_zero: t.lgv_vanishes(),
            parallel: t.parallel(),
        }
    }
}

/// Assigns the first matching critical region to the state behind `t`.
pub fn classify_region<T: Scalar>(t: &FilterTerms<T>) -> CriticalRegion {
    use CriticalRegion::*;
    let p = Predicates::new(t);
    let (f_b, f_v, fbp) = (t.f_b, t.f_v, t.f_b_prime);
    // F'_b vanishes only when Lgb and b both vanish, so test those directly.
    let fbp_zero = p.lgb_zero && p.b_zero;

    if p.f_b.pos() && p.f_v.neg() {
        return Inactive;
    }
    let cbf_only = Q::sum(&[f_v * fbp, -f_b * t.gbv]);
    if cbf_only.neg() && p.f_b.nonpos() && !fbp_zero {
        return CbfActive1;
    }
    if p.f_v.neg() && p.b_zero && p.lgb_zero {
        return CbfActive2;
    }
    let clf_only = Q::sum(&[f_b * t.gv, -f_v * t.gbv]);
    if clf_only.pos() && p.f_v.nonneg() && !p.lgv_zero {
        return ClfActive1;
    }
    if p.f_b.pos() && p.lgv_zero {
        return ClfActive2;
    }
    // Signs follow from solving the both-active system with right-hand side
    // (−F_b, −F_V); the determinant is negative whenever b ≠ 0.
    let lambda1_num = Q::sum(&[f_v * t.gbv, -f_b * t.gv]);
    let lambda2_num = Q::sum(&[fbp * f_v, -f_b * t.gbv]);
    if !p.lgv_zero && lambda1_num.nonneg() && lambda2_num.nonneg() && !p.b_zero {
        return BothActive1;
    }
    if !p.lgv_zero && p.f_v.nonpos() && fbp_zero && p.f_b.zero() {
        return BothActive2;
    }
    if !p.lgv_zero && p.b_zero && p.f_v.nonpos() && p.parallel && balanced(t) {
        return BothActive3;
    }
    if p.lgv_zero && p.f_b.nonpos() && !fbp_zero && p.f_v.zero() {
        return BothActive4;
    }
    if p.lgv_zero && fbp_zero && p.f_b.zero() && p.f_v.zero() {
        return BothActive5;
    }
    Unclassified
}

/// `F_V·LgV = −F_b·Lgb` componentwise.
fn balanced<T: Scalar>(t: &FilterTerms<T>) -> bool {
    t.lgv
        .iter()
        .zip(&t.lgb)
        .all(|(&gv, &gb)| Q::sum(&[t.f_v * gv, t.f_b * gb]).zero())
}
