//! Control-affine systems, certificate problems and the per-state quantities
//! the filter consumes.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::{PolyMatrix, PolyVector, Polynomial};
use crate::scalar::{dot, lit, norm, Scalar};
use crate::tol;

/// Extended class-K function used for `α` and `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum ClassK<T> {
    /// `r ↦ gain·r`
    Linear { gain: T },
    /// `r ↦ tanh(gain·r)`, bounded by one in magnitude.
    ScaledTanh { gain: T },
}

impl<T: Scalar> ClassK<T> {
    pub fn linear(gain: T) -> Self {
        ClassK::Linear { gain }
    }

    pub fn scaled_tanh(gain: T) -> Self {
        ClassK::ScaledTanh { gain }
    }

    pub fn gain(&self) -> T {
        match *self {
            ClassK::Linear { gain } | ClassK::ScaledTanh { gain } => gain,
        }
    }

    pub fn eval(&self, r: T) -> T {
        match *self {
            ClassK::Linear { gain } => gain * r,
            ClassK::ScaledTanh { gain } => (gain * r).tanh(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let g = self.gain();
        if g > T::zero() && g.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!("{name} gain must be positive and finite")))
        }
    }
}

/// Nominal controller `π(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum NominalController<T> {
    Zero,
    /// `π(x) = K x` with `K` given row by row (m rows of length n).
    Linear { gain: Vec<Vec<T>> },
    /// Arbitrary polynomial map, one entry per input.
    Polynomial { map: PolyVector<T> },
}

impl<T: Scalar> NominalController<T> {
    pub fn eval(&self, x: &[T], m: usize) -> Vec<T> {
        match self {
            NominalController::Zero => vec![T::zero(); m],
            NominalController::Linear { gain } => gain.iter().map(|row| dot(row, x)).collect(),
            NominalController::Polynomial { map } => map.eval_unchecked(x),
        }
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        match self {
            NominalController::Zero => Ok(()),
            NominalController::Linear { gain } => {
                check_dim(m, gain.len(), "nominal gain rows")?;
                for row in gain {
                    check_dim(n, row.len(), "nominal gain columns")?;
                }
                Ok(())
            }
            NominalController::Polynomial { map } => {
                check_dim(m, map.len(), "nominal map length")?;
                check_dim(n, map.num_vars(), "nominal map variables")?;
                let at_origin = map.eval_unchecked(&vec![T::zero(); n]);
                if at_origin.iter().any(|v| v.abs() > tol::base::<T>()) {
                    return Err(Error::InvalidProblem("nominal controller must vanish at the origin".into()));
                }
                Ok(())
            }
        }
    }
}

/// `ẋ = f(x) + g(x) u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemJson<T>", bound = "T: Scalar")]
pub struct ControlAffineSystem<T> {
    f: PolyVector<T>,
    g: PolyMatrix<T>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct SystemJson<T> {
    f: PolyVector<T>,
    g: PolyMatrix<T>,
}

impl<T: Scalar> TryFrom<SystemJson<T>> for ControlAffineSystem<T> {
    type Error = Error;
    fn try_from(raw: SystemJson<T>) -> Result<Self> {
        Self::new(raw.f, raw.g)
    }
}

impl<T: Scalar> ControlAffineSystem<T> {
    pub fn new(f: PolyVector<T>, g: PolyMatrix<T>) -> Result<Self> {
        let n = f.len();
        check_dim(n, f.num_vars(), "drift variables")?;
        check_dim(n, g.rows(), "input matrix rows")?;
        check_dim(n, g.num_vars(), "input matrix variables")?;
        if f.iter().any(|fi| fi.constant_term() != T::zero()) {
            return Err(Error::InvalidProblem("drift must vanish at the origin".into()));
        }
        Ok(Self { f, g })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn m(&self) -> usize {
        self.g.cols()
    }

    pub fn f(&self) -> &PolyVector<T> {
        &self.f
    }

    pub fn g(&self) -> &PolyMatrix<T> {
        &self.g
    }

    /// `f(x) + g(x) u`.
    pub fn vector_field(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        check_dim(self.n(), x.len(), "state")?;
        check_dim(self.m(), u.len(), "input")?;
        let fx = self.f.eval_unchecked(x);
        let gx = self.g.evaluate(x)?;
        let gu = PolyMatrix::apply(&gx, self.m(), u);
        Ok(fx.iter().zip(&gu).map(|(&a, &b)| a + b).collect())
    }
}

/// System, certificates and filter parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemJson<T>", into = "ProblemJson<T>", bound = "T: Scalar")]
pub struct CertificateProblem<T: Scalar> {
    system: ControlAffineSystem<T>,
    b: Polynomial<T>,
    v: Polynomial<T>,
    alpha: ClassK<T>,
    beta: ClassK<T>,
    gamma: Polynomial<T>,
    p: T,
    pi: NominalController<T>,
    provenance: Option<serde_json::Value>,
    lie: LieCache<T>,
}

#[derive(Clone, Debug, PartialEq)]
struct LieCache<T> {
    lfb: Polynomial<T>,
    lgb: PolyVector<T>,
    lfv: Polynomial<T>,
    lgv: PolyVector<T>,
    grad_b: PolyVector<T>,
    grad_v: PolyVector<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ProblemJson<T: Scalar> {
    system: ControlAffineSystem<T>,
    b: Polynomial<T>,
    #[serde(rename = "V")]
    v: Polynomial<T>,
    alpha: ClassK<T>,
    beta: ClassK<T>,
    gamma: Polynomial<T>,
    p: T,
    pi: NominalController<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

impl<T: Scalar> TryFrom<ProblemJson<T>> for CertificateProblem<T> {
    type Error = Error;
    fn try_from(r: ProblemJson<T>) -> Result<Self> {
        let mut prob = Self::new(r.system, r.b, r.v, r.alpha, r.beta, r.gamma, r.p, r.pi)?;
        prob.provenance = r.provenance;
        Ok(prob)
    }
}

impl<T: Scalar> From<CertificateProblem<T>> for ProblemJson<T> {
    fn from(p: CertificateProblem<T>) -> Self {
        ProblemJson {
            system: p.system,
            b: p.b,
            v: p.v,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            p: p.p,
            pi: p.pi,
            provenance: p.provenance,
        }
    }
}

impl<T: Scalar> CertificateProblem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        system: ControlAffineSystem<T>,
        b: Polynomial<T>,
        v: Polynomial<T>,
        alpha: ClassK<T>,
        beta: ClassK<T>,
        gamma: Polynomial<T>,
        p: T,
        pi: NominalController<T>,
    ) -> Result<Self> {
        let n = system.n();
        check_dim(n, b.num_vars(), "barrier variables")?;
        check_dim(n, v.num_vars(), "Lyapunov variables")?;
        check_dim(n, gamma.num_vars(), "decay-rate variables")?;
        if v.constant_term() != T::zero() {
            return Err(Error::InvalidProblem("V must vanish at the origin".into()));
        }
        if gamma.constant_term() != T::zero() {
            return Err(Error::InvalidProblem("gamma must vanish at the origin".into()));
        }
        if !(p > T::zero() && p.is_finite()) {
            return Err(Error::InvalidProblem("slack penalty p must be positive".into()));
        }
        alpha.validate("alpha")?;
        beta.validate("beta")?;
        pi.validate(n, system.m())?;
        let lie = LieCache {
            lfb: b.lie_derivative(system.f())?,
            lgb: b.lie_derivative_g(system.g())?,
            lfv: v.lie_derivative(system.f())?,
            lgv: v.lie_derivative_g(system.g())?,
            grad_b: b.gradient(),
            grad_v: v.gradient(),
        };
        Ok(Self {
            system,
            b,
            v,
            alpha,
            beta,
            gamma,
            p,
            pi,
            provenance: None,
            lie,
        })
    }

    pub fn system(&self) -> &ControlAffineSystem<T> {
        &self.system
    }
    pub fn b(&self) -> &Polynomial<T> {
        &self.b
    }
    pub fn v(&self) -> &Polynomial<T> {
        &self.v
    }
    pub fn gamma(&self) -> &Polynomial<T> {
        &self.gamma
    }
    pub fn alpha(&self) -> ClassK<T> {
        self.alpha
    }
    pub fn beta(&self) -> ClassK<T> {
        self.beta
    }
    pub fn p(&self) -> T {
        self.p
    }
    pub fn pi(&self) -> &NominalController<T> {
        &self.pi
    }
    pub fn provenance(&self) -> Option<&serde_json::Value> {
        self.provenance.as_ref()
    }
    pub fn n(&self) -> usize {
        self.system.n()
    }
    pub fn m(&self) -> usize {
        self.system.m()
    }
    pub fn grad_b(&self) -> &PolyVector<T> {
        &self.lie.grad_b
    }
    pub fn lgv_poly(&self) -> &PolyVector<T> {
        &self.lie.lgv
    }
    pub fn lfv_poly(&self) -> &Polynomial<T> {
        &self.lie.lfv
    }

    pub fn with_provenance(mut self, provenance: serde_json::Value) -> Self {
        self.provenance = Some(provenance);
        self
    }

    /// Same problem with a different nominal controller.
    pub fn with_pi(&self, pi: NominalController<T>) -> Result<Self> {
        pi.validate(self.n(), self.m())?;
        let mut out = self.clone();
        out.pi = pi;
        Ok(out)
    }

    /// Same problem with a different decay rate `γ`.
    pub fn with_gamma(&self, gamma: Polynomial<T>) -> Result<Self> {
        Self::new(
            self.system.clone(),
            self.b.clone(),
            self.v.clone(),
            self.alpha,
            self.beta,
            gamma,
            self.p,
            self.pi.clone(),
        )
    }

    /// Evaluates every state-dependent quantity the filter needs.
    pub fn eval_terms(&self, x: &[T]) -> Result<FilterTerms<T>> {
        check_dim(self.n(), x.len(), "state")?;
        let m = self.m();
        let pi = self.pi.eval(x, m);
        let lfb = self.lie.lfb.eval_unchecked(x);
        let lgb = self.lie.lgb.eval_unchecked(x);
        let lfv = self.lie.lfv.eval_unchecked(x);
        let lgv = self.lie.lgv.eval_unchecked(x);
        let b = self.b.eval_unchecked(x);
        let v = self.v.eval_unchecked(x);
        let gamma = self.gamma.eval_unchecked(x);
        let alpha_b = self.alpha.eval(b);
        let beta_b = self.beta.eval(b);
        let gb = dot(&lgb, &lgb);
        let gv = dot(&lgv, &lgv);
        let gbv = dot(&lgb, &lgv);
        let f_b = dot(&lgb, &pi) + lfb + alpha_b;
        let f_b_prime = gb + alpha_b * alpha_b / self.p;
        let f_v = lfv + dot(&lgv, &pi) + beta_b * gamma;
        Ok(FilterTerms {
            x: x.to_vec(),
            pi,
            lfb,
            lgb,
            lfv,
            lgv,
            b,
            v,
            alpha_b,
            beta_b,
            gamma,
            f_b,
            f_b_prime,
            f_v,
            gb,
            gv,
            gbv,
            p: self.p,
        })
    }

    /// `∇b · (f + g u)` and `∇V · (f + g u)` at `x`.
    pub fn derivatives(&self, x: &[T], u: &[T]) -> Result<(Vec<T>, T, T)> {
        let xdot = self.system.vector_field(x, u)?;
        let bdot = dot(&self.lie.grad_b.eval_unchecked(x), &xdot);
        let vdot = dot(&self.lie.grad_v.eval_unchecked(x), &xdot);
        Ok((xdot, bdot, vdot))
    }

    /// CLF failure witness at `x`: `LgV` vanishes but `LfV + γ > 0`.
    pub fn clf_candidate_witness(&self, x: &[T]) -> Result<ClfWitness<T>> {
        clf_candidate_witness(&self.system, &self.v, &self.gamma, x)
    }
}

/// Every quantity of the filter QP at one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct FilterTerms<T> {
    pub x: Vec<T>,
    pub pi: Vec<T>,
    pub lfb: T,
    pub lgb: Vec<T>,
    pub lfv: T,
    pub lgv: Vec<T>,
    pub b: T,
    pub v: T,
    pub alpha_b: T,
    pub beta_b: T,
    pub gamma: T,
    pub f_b: T,
    pub f_b_prime: T,
    pub f_v: T,
    /// `Lgb·Lgbᵀ`
    pub gb: T,
    /// `LgV·LgVᵀ`
    pub gv: T,
    /// `Lgb·LgVᵀ`
    pub gbv: T,
    pub p: T,
}

impl<T: Scalar> FilterTerms<T> {
    pub fn m(&self) -> usize {
        self.lgb.len()
    }

    /// `Lfb + Lgb·u + s·α(b)`; feasible when non-negative.
    pub fn cbf_value(&self, u: &[T], s: T) -> T {
        self.lfb + dot(&self.lgb, u) + s * self.alpha_b
    }

    /// `LfV + LgV·u + β(b)γ`; feasible when non-positive.
    pub fn clf_value(&self, u: &[T]) -> T {
        self.lfv + dot(&self.lgv, u) + self.beta_b * self.gamma
    }

    /// Scale used for feasibility tolerances of the two constraints.
    pub fn constraint_scale(&self, u: &[T]) -> T {
        let nu = norm(u);
        let a = self.lfb.abs() + norm(&self.lgb) * nu + self.alpha_b.abs();
        let c = self.lfv.abs() + norm(&self.lgv) * nu + (self.beta_b * self.gamma).abs();
        a.max(c)
    }

    pub fn lgv_vanishes(&self) -> bool {
        norm(&self.lgv) <= tol::grad(norm(&self.x))
    }

    pub fn lgb_vanishes(&self) -> bool {
        norm(&self.lgb) <= tol::grad(norm(&self.x))
    }

    /// `Lgb ∥ LgV` in the relative sense of the parallelism tolerance.
    pub fn parallel(&self) -> bool {
        self.gbv * self.gbv >= (T::one() - lit(tol::PARALLEL_REL)) * self.gb * self.gv
    }
}

/// Evaluates the CLF failure witness for any `(f, g, V, γ)`.
pub fn clf_candidate_witness<T: Scalar>(
    system: &ControlAffineSystem<T>,
    v: &Polynomial<T>,
    gamma: &Polynomial<T>,
    x: &[T],
) -> Result<ClfWitness<T>> {
    check_dim(system.n(), x.len(), "state")?;
    let lfv = v.lie_derivative(system.f())?.eval_unchecked(x);
    let lgv = v.lie_derivative_g(system.g())?.eval_unchecked(x);
    let xn = norm(x);
    let g = gamma.eval_unchecked(x);
    let is_violated = xn > T::zero() && norm(&lgv) <= tol::grad(xn) && lfv + g > T::zero();
    Ok(ClfWitness { is_violated, lfv, lgv })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ClfWitness<T> {
    pub is_violated: bool,
    pub lfv: T,
    pub lgv: Vec<T>,
}

fn x<T: Scalar>(i: usize) -> Polynomial<T> {
    Polynomial::var(2, i)
}

fn c<T: Scalar>(v: f64) -> Polynomial<T> {
    Polynomial::constant(2, lit(v))
}

fn sq_norm<T: Scalar>() -> Polynomial<T> {
    &x::<T>(0).pow(2) + &x::<T>(1).pow(2)
}

/// Planar single integrator with a disc obstacle of radius 2 centred at (0, 4).
///
/// `f = x`, `g = I`, `b = ‖x − (0,4)‖² − 4`, `V = γ = xᵀx`, `α(r) = r`,
/// `β(r) = tanh(1000 r)`, `p = 100`, `π = 0`.
pub fn benchmark_problem<T: Scalar>() -> CertificateProblem<T> {
    let system = ControlAffineSystem::new(
        PolyVector::new(vec![x(0), x(1)]).expect("two entries"),
        PolyMatrix::identity(2),
    )
    .expect("linear drift vanishes at the origin");
    let dy = &x::<T>(1) - &c(4.0);
    let b = &(&x::<T>(0).pow(2) + &dy.pow(2)) - &c(4.0);
    CertificateProblem::new(
        system,
        b,
        sq_norm(),
        ClassK::linear(T::one()),
        ClassK::scaled_tanh(lit(1000.0)),
        sq_norm(),
        lit(100.0),
        NominalController::Zero,
    )
    .expect("benchmark is well formed")
}

/// `π(x) = −2x`, the stabilizing nominal used by one baseline.
pub fn stabilizing_nominal<T: Scalar>(n: usize) -> NominalController<T> {
    NominalController::Linear {
        gain: (0..n)
            .map(|i| (0..n).map(|j| if i == j { lit(-2.0) } else { T::zero() }).collect())
            .collect(),
    }
}

/// Second-order polynomial system with its safe-set and domain polynomials.
#[derive(Clone, Debug)]
pub struct PolynomialCase<T> {
    pub system: ControlAffineSystem<T>,
    /// Obstacle complement: `s(x) ≥ 0` is safe.
    pub safe_set: Polynomial<T>,
    /// Domain of interest: `w(x) ≥ 0`.
    pub domain: Polynomial<T>,
}

/// `f = (x₂, x₁ + x₁³/3 + x₂)`, `g = diag(0.2x₁² + 0.2x₂ + 1, −0.2x₂² + 0.2x₁ + 4)`,
/// `s = x₁² + (x₂ − 1)² − 0.25`, `w = 100 − x₁² − x₂²`.
pub fn polynomial_case<T: Scalar>() -> PolynomialCase<T> {
    let (x1, x2) = (x::<T>(0), x::<T>(1));
    let f2 = &(&x1 + &x1.pow(3).scale(&lit(1.0 / 3.0))) + &x2;
    let f = PolyVector::new(vec![x2.clone(), f2]).expect("two entries");
    let g11 = &(&x1.pow(2).scale(&lit(0.2)) + &x2.scale(&lit(0.2))) + &c(1.0);
    let g22 = &(&x2.pow(2).scale(&lit(-0.2)) + &x1.scale(&lit(0.2))) + &c(4.0);
    let g = PolyMatrix::from_rows(vec![
        vec![g11, Polynomial::zero(2)],
        vec![Polynomial::zero(2), g22],
    ])
    .expect("2x2");
    let dy = &x2 - &c(1.0);
    let safe_set = &(&x1.pow(2) + &dy.pow(2)) - &c(0.25);
    let domain = &c::<T>(100.0) - &sq_norm();
    PolynomialCase {
        system: ControlAffineSystem::new(f, g).expect("drift vanishes at the origin"),
        safe_set,
        domain,
    }
}

impl<T: Scalar> PolynomialCase<T> {
    /// The naive candidate `V = xᵀx` with `γ = 0.05 xᵀx`.
    pub fn naive_clf_witness(&self, x: &[T]) -> Result<ClfWitness<T>> {
        clf_candidate_witness(&self.system, &sq_norm(), &sq_norm::<T>().scale(&lit(0.05)), x)
    }
}
