//! Closed-loop simulation `ẋ = f(x) + g(x)u*(x)` with invariance and
//! decrease monitors, equilibrium search and a sampled region-of-attraction
//! check.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::Baseline;
use crate::compat::project_to_boundary;
use crate::error::{Error, Result};
use crate::filter::{self, CriticalRegion, Method};
use crate::scalar::{dot, lit, norm, Scalar};
use crate::system::CertificateProblem;
use crate::tol;

/// Which feedback closes the loop.
#[derive(Clone, Debug, PartialEq)]
pub enum Controller<T> {
    /// The relaxed safety-and-stability filter.
    Filter(Method),
    Baseline(Baseline<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlOutput<T> {
    pub u: Vec<T>,
    /// Filter slack `s`, or `None` for baselines.
    pub s: Option<T>,
    pub region: Option<CriticalRegion>,
}

impl<T: Scalar> Controller<T> {
    pub fn ours() -> Self {
        Controller::Filter(Method::ClosedForm)
    }

    pub fn eval(&self, prob: &CertificateProblem<T>, x: &[T]) -> Result<ControlOutput<T>> {
        match self {
            Controller::Filter(method) => {
                let sol = filter::solve(prob, x, *method)?;
                Ok(ControlOutput {
                    u: sol.u,
                    s: Some(sol.s),
                    region: Some(sol.region),
                })
            }
            Controller::Baseline(b) => Ok(ControlOutput {
                u: b.solve(prob, x)?.u,
                s: None,
                region: None,
            }),
        }
    }

    /// `f(x) + g(x)u(x)`.
    pub fn field(&self, prob: &CertificateProblem<T>, x: &[T]) -> Result<Vec<T>> {
        let out = self.eval(prob, x)?;
        prob.system().vector_field(x, &out.u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct SimConfig<T> {
    pub dt: T,
    pub horizon: T,
    /// Stop once `‖x‖` falls below this.
    pub origin_tol: T,
    /// Stop once `‖ẋ‖` stays below this for `stall_steps` consecutive steps.
    pub velocity_tol: T,
    pub stall_steps: usize,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: lit(1e-3),
            horizon: lit(20.0),
            origin_tol: lit(1e-4),
            velocity_tol: lit(1e-6),
            stall_steps: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    Horizon,
    ConvergedToOrigin,
    ConvergedToBoundaryPoint,
    /// Stalled at a state with `b` well above zero.
    ConvergedToInteriorPoint,
    SolverInfeasible,
}

/// A stall counts as a boundary capture when `b` is below this.
const STALL_BOUNDARY: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub inputs: Vec<Vec<T>>,
    pub slacks: Vec<Option<T>>,
    pub regions: Vec<Option<CriticalRegion>>,
    pub b_vals: Vec<T>,
    pub v_vals: Vec<T>,
    pub vdot_vals: Vec<T>,
    pub terminal_reason: TerminalReason,
    /// State at which the controller failed, for `SolverInfeasible`.
    pub offending_state: Option<Vec<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[T] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.inputs.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("u{i}")));
        header.extend(["s", "b", "V", "Vdot", "region_label"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k].to_string()];
            row.extend(self.states[k].iter().map(ToString::to_string));
            row.extend(self.inputs[k].iter().map(ToString::to_string));
            row.push(self.slacks[k].map_or(String::new(), |s| s.to_string()));
            row.push(self.b_vals[k].to_string());
            row.push(self.v_vals[k].to_string());
            row.push(self.vdot_vals[k].to_string());
            row.push(self.regions[k].map_or(String::new(), |r| r.label().to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn axpy<T: Scalar>(x: &[T], h: T, k: &[T]) -> Vec<T> {
    x.iter().zip(k).map(|(&a, &b)| a + h * b).collect()
}

/// Classic RK4 with the controller re-solved at every stage.
pub fn simulate<T: Scalar>(
    prob: &CertificateProblem<T>,
    controller: &Controller<T>,
    x0: &[T],
    cfg: &SimConfig<T>,
) -> Result<Trajectory<T>> {
    if !(cfg.dt > T::zero()) || cfg.horizon < cfg.dt {
        return Err(Error::InvalidInput("need dt > 0 and horizon ≥ dt".into()));
    }
    crate::error::check_dim(prob.n(), x0.len(), "initial state")?;
    let steps = (cfg.horizon / cfg.dt - lit(1e-9)).ceil().to_usize().unwrap_or(0);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        slacks: Vec::with_capacity(steps + 1),
        regions: Vec::with_capacity(steps + 1),
        b_vals: Vec::with_capacity(steps + 1),
        v_vals: Vec::with_capacity(steps + 1),
        vdot_vals: Vec::with_capacity(steps + 1),
        terminal_reason: TerminalReason::Horizon,
        offending_state: None,
    };
    let field = |x: &[T]| controller.field(prob, x);
    let mut x = x0.to_vec();
    let mut stalled = 0usize;
    let half = lit::<T>(0.5);
    let sixth = T::one() / lit(6.0);
    for k in 0..=steps {
        let out = match controller.eval(prob, &x) {
            Ok(o) => o,
            Err(_) => {
                traj.terminal_reason = TerminalReason::SolverInfeasible;
                traj.offending_state = Some(x);
                return Ok(traj);
            }
        };
        let (xdot, _, vdot) = prob.derivatives(&x, &out.u)?;
        let t = T::from_usize(k).unwrap_or(T::zero()) * cfg.dt;
        traj.times.push(t);
        traj.b_vals.push(prob.b().eval_unchecked(&x));
        traj.v_vals.push(prob.v().eval_unchecked(&x));
        traj.vdot_vals.push(vdot);
        traj.inputs.push(out.u);
        traj.slacks.push(out.s);
        traj.regions.push(out.region);
        traj.states.push(x.clone());

        if norm(&x) <= cfg.origin_tol {
            traj.terminal_reason = TerminalReason::ConvergedToOrigin;
            return Ok(traj);
        }
        stalled = if norm(&xdot) <= cfg.velocity_tol { stalled + 1 } else { 0 };
        if stalled >= cfg.stall_steps {
            traj.terminal_reason = if *traj.b_vals.last().unwrap() <= lit(STALL_BOUNDARY) {
                TerminalReason::ConvergedToBoundaryPoint
            } else {
                TerminalReason::ConvergedToInteriorPoint
            };
            return Ok(traj);
        }
        if k == steps {
            break;
        }

        let h = cfg.dt;
        let stage = |y: Vec<T>| field(&y).map_err(|_| y);
        let result = (|| {
            let k1 = xdot.clone();
            let k2 = stage(axpy(&x, half * h, &k1))?;
            let k3 = stage(axpy(&x, half * h, &k2))?;
            let k4 = stage(axpy(&x, h, &k3))?;
            Ok::<_, Vec<T>>(
                (0..x.len())
                    .map(|i| x[i] + h * sixth * (k1[i] + lit::<T>(2.0) * (k2[i] + k3[i]) + k4[i]))
                    .collect::<Vec<T>>(),
            )
        })();
        match result {
            Ok(next) => x = next,
            Err(bad) => {
                traj.terminal_reason = TerminalReason::SolverInfeasible;
                traj.offending_state = Some(bad);
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Monitors<T> {
    pub min_b: T,
    /// `None` when no sample has `b > tol` and `‖x‖ > tol`.
    pub max_vdot_interior: Option<T>,
    /// Largest `‖Δu‖ / ‖Δx‖` between consecutive samples.
    pub lipschitz_estimate: Option<T>,
    /// Largest step-to-step increase of `V` over interior samples.
    pub max_v_increase: T,
}

pub fn monitors<T: Scalar>(traj: &Trajectory<T>) -> Monitors<T> {
    let tol: T = lit(1e-6);
    let min_b = traj.b_vals.iter().copied().fold(T::infinity(), T::min);
    let interior = |k: usize| traj.b_vals[k] > tol && norm(&traj.states[k]) > tol;
    let max_vdot_interior = (0..traj.len())
        .filter(|&k| interior(k))
        .map(|k| traj.vdot_vals[k])
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))));
    let mut lipschitz_estimate: Option<T> = None;
    let mut max_v_increase = T::neg_infinity();
    for k in 1..traj.len() {
        let dx: Vec<T> = traj.states[k].iter().zip(&traj.states[k - 1]).map(|(a, b)| *a - *b).collect();
        let du: Vec<T> = traj.inputs[k].iter().zip(&traj.inputs[k - 1]).map(|(a, b)| *a - *b).collect();
        let nx = norm(&dx);
        if nx > T::zero() {
            let l = norm(&du) / nx;
            lipschitz_estimate = Some(lipschitz_estimate.map_or(l, |a| a.max(l)));
        }
        if interior(k - 1) {
            max_v_increase = max_v_increase.max(traj.v_vals[k] - traj.v_vals[k - 1]);
        }
    }
    Monitors {
        min_b,
        max_vdot_interior,
        lipschitz_estimate,
        max_v_increase,
    }
}

/// Dense `n×n` solve by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut r: Vec<T>) -> Option<Vec<T>> {
    let n = r.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if !(a[p][c].abs() > T::zero()) {
            return None;
        }
        a.swap(c, p);
        r.swap(c, p);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                a[i][j] = a[i][j] - f * a[c][j];
            }
            r[i] = r[i] - f * r[c];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s = (i + 1..n).fold(r[i], |acc, j| acc - a[i][j] * x[j]);
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Damped Gauss–Newton on `residual(x) = 0` with a forward-difference
/// Jacobian. Returns the last iterate and its residual norm.
fn gauss_newton<T: Scalar>(x0: &[T], residual: impl Fn(&[T]) -> Option<Vec<T>>, iters: usize) -> Option<(Vec<T>, T)> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x)?;
    let sqrt_eps = T::epsilon().sqrt();
    for _ in 0..iters {
        let rn = norm(&r);
        if rn <= T::epsilon() * lit(16.0) {
            break;
        }
        let mut jac = vec![vec![T::zero(); n]; r.len()];
        for j in 0..n {
            let h = sqrt_eps * (T::one() + x[j].abs());
            let mut xp = x.clone();
            xp[j] = xp[j] + h;
            let rp = residual(&xp)?;
            for i in 0..r.len() {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        let mut jtj = vec![vec![T::zero(); n]; n];
        let mut jtr = vec![T::zero(); n];
        for i in 0..n {
            for j in 0..n {
                jtj[i][j] = (0..r.len()).fold(T::zero(), |a, k| a + jac[k][i] * jac[k][j]);
            }
            jtr[i] = -(0..r.len()).fold(T::zero(), |a, k| a + jac[k][i] * r[k]);
        }
        let trace = (0..n).fold(T::zero(), |a, i| a + jtj[i][i]);
        let mut mu = lit::<T>(1e-10) * (T::one() + trace);
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] = row[i] + mu;
            }
            if let Some(step) = solve_dense(damped, jtr.clone()) {
                let xn = axpy(&x, T::one(), &step);
                if let Some(rn_new) = residual(&xn) {
                    if norm(&rn_new) < rn {
                        x = xn;
                        r = rn_new;
                        improved = true;
                        break;
                    }
                }
            }
            mu = mu * lit(10.0);
        }
        if !improved {
            break;
        }
    }
    let rn = norm(&r);
    Some((x, rn))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct InteriorEquilibrium<T> {
    pub x: Vec<T>,
    pub speed: T,
}

/// Interior equilibria away from the origin on a square grid.
///
/// Grid points with `b > tol` and `‖x‖ > origin_guard` whose speed is a
/// local minimum over the eight neighbours seed a Gauss–Newton polish of
/// `f + g u* = 0`. A polished point is kept if its speed is at most `1e-6`
/// and it is still interior and outside the guard.
pub fn scan_interior_equilibria<T: Scalar>(
    prob: &CertificateProblem<T>,
    controller: &Controller<T>,
    half_width: T,
    resolution: T,
    origin_guard: T,
) -> Vec<InteriorEquilibrium<T>> {
    let steps = (lit::<T>(2.0) * half_width / resolution).round().to_usize().unwrap_or(0);
    let coord = |i: usize| -half_width + T::from_usize(i).unwrap_or(T::zero()) * resolution;
    let b_tol: T = lit(tol::BOUNDARY);
    let speed = |x: &[T]| -> Option<T> {
        if prob.b().eval_unchecked(x) <= b_tol || norm(x) <= origin_guard {
            return None;
        }
        controller.field(prob, x).ok().map(|f| norm(&f))
    };
    if prob.n() != 2 {
        return Vec::new();
    }
    let grid: Vec<Vec<Option<T>>> = (0..=steps)
        .into_par_iter()
        .map(|i| (0..=steps).map(|j| speed(&[coord(i), coord(j)])).collect())
        .collect();
    let mut seeds = Vec::new();
    for i in 0..=steps {
        for j in 0..=steps {
            let Some(s) = grid[i][j] else { continue };
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a > steps as i64 || b > steps as i64 {
                        continue;
                    }
                    if let Some(o) = grid[a as usize][b as usize] {
                        if o < s {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                seeds.push(vec![coord(i), coord(j)]);
            }
        }
    }
    let threshold: T = lit(1e-6);
    let polished: Vec<Option<InteriorEquilibrium<T>>> = seeds
        .par_iter()
        .map(|x0| {
            let (x, _) = gauss_newton(x0, |y| controller.field(prob, y).ok(), 60)?;
            let s = speed(&x)?;
            (s <= threshold && prob.b().eval_unchecked(&x) > lit(1e-8)).then_some(InteriorEquilibrium { x, speed: s })
        })
        .collect();
    let mut out: Vec<InteriorEquilibrium<T>> = Vec::new();
    for e in polished.into_iter().flatten() {
        let dup = out.iter().any(|o| {
            let d: Vec<T> = o.x.iter().zip(&e.x).map(|(a, b)| *a - *b).collect();
            norm(&d) <= resolution * lit(0.5)
        });
        if !dup {
            out.push(e);
        }
    }
    out
}

/// Membership of a boundary equilibrium in the three equilibrium families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryClass {
    /// `LgV ≠ 0` and `u* − π` points along `−LgVᵀ`.
    ClfDirection,
    /// `LgV = 0` and `F'_b ≠ 0`.
    FlatClfBarrierActive,
    /// `LgV = 0` and `F'_b = 0`.
    FlatClfDegenerate,
    /// `u* − π` has components along both `Lgb` and `LgV`: both multipliers
    /// are positive, which none of the three families covers.
    BothMultipliers,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundaryEquilibrium<T> {
    pub x: Vec<T>,
    pub b: T,
    pub speed: T,
    pub class: BoundaryClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct EquilibriumReport<T> {
    pub interior_candidates: Vec<InteriorEquilibrium<T>>,
    pub boundary_equilibria: Vec<BoundaryEquilibrium<T>>,
    pub origin_included: bool,
    /// Seeds whose polish did not reach an equilibrium.
    pub skipped_seeds: usize,
    /// Seeds that converged; equal to the number of seeds when every
    /// boundary point is an equilibrium.
    pub converged_seeds: usize,
}

fn classify_boundary<T: Scalar>(prob: &CertificateProblem<T>, x: &[T], u: &[T]) -> Result<BoundaryClass> {
    let t = prob.eval_terms(x)?;
    let tol = tol::region(norm(u));
    if !t.lgv_vanishes() {
        let r: Vec<T> = u.iter().zip(&t.pi).map(|(a, b)| *a - *b).collect();
        let k = dot(&r, &t.lgv) / t.gv;
        let perp: Vec<T> = r.iter().zip(&t.lgv).map(|(a, g)| *a - k * *g).collect();
        let along = norm(&perp) <= lit::<T>(1e-6) * (T::one() + norm(&r));
        return Ok(match (along, k <= tol) {
            (true, true) => BoundaryClass::ClfDirection,
            (false, _) => BoundaryClass::BothMultipliers,
            (true, false) => BoundaryClass::Unclassified,
        });
    }
    Ok(if t.f_b_prime.abs() > tol::region(t.gb) {
        BoundaryClass::FlatClfBarrierActive
    } else {
        BoundaryClass::FlatClfDegenerate
    })
}

/// Boundary equilibria from the given seeds.
///
/// Each seed is polished by Gauss–Newton on `(b, P(f + g u*))`, with `P`
/// the projection onto the tangent space of `b = 0`. A root is accepted when
/// `|b| ≤ 1e-8` and the full speed is at most `1e-6`, re-checked through
/// the oracle when the controller is the filter. Roots closer than `1e-6`
/// are merged.
pub fn find_boundary_equilibria<T: Scalar>(
    prob: &CertificateProblem<T>,
    controller: &Controller<T>,
    seeds: &[Vec<T>],
) -> EquilibriumReport<T> {
    let grad_b = prob.grad_b().clone();
    let residual = |x: &[T]| -> Option<Vec<T>> {
        let f = controller.field(prob, x).ok()?;
        let g = grad_b.eval_unchecked(x);
        let g2 = dot(&g, &g);
        let mut r = vec![prob.b().eval_unchecked(x)];
        if g2 > T::zero() {
            let k = dot(&f, &g) / g2;
            r.extend(f.iter().zip(&g).map(|(a, b)| *a - k * *b));
        } else {
            r.extend(f);
        }
        Some(r)
    };
    let checker = match controller {
        Controller::Filter(_) => Controller::Filter(Method::Oracle),
        other => other.clone(),
    };
    let results: Vec<Option<BoundaryEquilibrium<T>>> = seeds
        .par_iter()
        .map(|x0| {
            let start = project_to_boundary(prob.b(), x0).unwrap_or_else(|| x0.clone());
            let (x, _) = gauss_newton(&start, residual, 50)?;
            let b = prob.b().eval_unchecked(&x);
            let out = checker.eval(prob, &x).ok()?;
            let speed = norm(&prob.system().vector_field(&x, &out.u).ok()?);
            if b.abs() > lit(1e-8) || speed > lit(1e-6) {
                return None;
            }
            let class = classify_boundary(prob, &x, &out.u).ok()?;
            Some(BoundaryEquilibrium { x, b, speed, class })
        })
        .collect();
    let converged_seeds = results.iter().filter(|r| r.is_some()).count();
    let mut distinct: Vec<BoundaryEquilibrium<T>> = Vec::new();
    for e in results.into_iter().flatten() {
        let dup = distinct.iter().any(|o| {
            let d: Vec<T> = o.x.iter().zip(&e.x).map(|(a, b)| *a - *b).collect();
            norm(&d) <= lit(1e-6)
        });
        if !dup {
            distinct.push(e);
        }
    }
    let origin = vec![T::zero(); prob.n()];
    EquilibriumReport {
        interior_candidates: Vec::new(),
        boundary_equilibria: distinct,
        origin_included: prob.b().eval_unchecked(&origin) > T::zero(),
        skipped_seeds: seeds.len() - converged_seeds,
        converged_seeds,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status", bound = "T: Scalar")]
pub enum RoaReport<T> {
    /// `min V` on the boundary does not exceed `l`.
    NotApplicable { min_v_on_boundary: T },
    Checked {
        min_v_on_boundary: T,
        pass: bool,
        trials: usize,
        converged: usize,
        monotone: usize,
        /// Largest step-to-step increase of `V` over all trials.
        max_v_increase: T,
        initial_states: Vec<Vec<T>>,
    },
}

impl<T> RoaReport<T> {
    pub fn passed(&self) -> bool {
        matches!(self, RoaReport::Checked { pass: true, .. })
    }
}

/// `min V` over boundary samples, refined by projected gradient descent on `b = 0`.
pub fn min_v_on_boundary<T: Scalar>(prob: &CertificateProblem<T>, samples: &[Vec<T>]) -> Option<T> {
    let grad_v = prob.v().gradient();
    let grad_b = prob.grad_b();
    let v = |x: &[T]| prob.v().eval_unchecked(x);
    let best = samples.iter().min_by(|a, b| v(a).partial_cmp(&v(b)).unwrap())?;
    let mut x = best.clone();
    let mut step: T = lit(0.1);
    for _ in 0..500 {
        let gv = grad_v.eval_unchecked(&x);
        let gb = grad_b.eval_unchecked(&x);
        let gb2 = dot(&gb, &gb);
        if !(gb2 > T::zero()) {
            break;
        }
        let k = dot(&gv, &gb) / gb2;
        let tangent: Vec<T> = gv.iter().zip(&gb).map(|(a, b)| *a - k * *b).collect();
        if norm(&tangent) <= lit(1e-12) {
            break;
        }
        let Some(next) = project_to_boundary(prob.b(), &axpy(&x, -step, &tangent)) else {
            break;
        };
        if v(&next) < v(&x) {
            x = next;
        } else {
            step = step * lit(0.5);
        }
    }
    Some(samples.iter().map(|s| v(s)).fold(v(&x), T::min))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoaConfig<T> {
    /// Sublevel `l` of `{V ≤ l}`.
    pub l: T,
    pub trials: usize,
    pub seed: u64,
    /// Initial states are drawn from `[−w, w]^n`.
    pub half_width: T,
    pub sim: SimConfig<T>,
}

/// Sampled check that the sublevel set `{V ≤ l}` is a region of attraction.
///
/// Initial states are drawn uniformly from `[−w, w]^n` and kept when
/// `V(x₀) ≤ l` and `b(x₀) > 0`. A trial passes when it reaches
/// `‖x‖ ≤ 1e-3` within the horizon with `V` step-monotone up to `1e-9`
/// at every sample off the boundary.
pub fn roa_certificate<T: Scalar>(
    prob: &CertificateProblem<T>,
    controller: &Controller<T>,
    roa: &RoaConfig<T>,
    boundary_samples: &[Vec<T>],
) -> Result<RoaReport<T>> {
    let RoaConfig {
        l,
        trials,
        seed,
        half_width,
        sim: cfg,
    } = *roa;
    let min_v = min_v_on_boundary(prob, boundary_samples).unwrap_or(T::infinity());
    if min_v <= l {
        return Ok(RoaReport::NotApplicable { min_v_on_boundary: min_v });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = half_width.to_f64().unwrap_or(1.0);
    let mut initial_states = Vec::with_capacity(trials);
    let mut attempts = 0usize;
    while initial_states.len() < trials {
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(Error::InvalidInput("sublevel set too small for the sampling box".into()));
        }
        let x: Vec<T> = (0..prob.n()).map(|_| lit(rng.gen_range(-w..=w))).collect();
        if prob.v().eval_unchecked(&x) <= l && prob.b().eval_unchecked(&x) > T::zero() {
            initial_states.push(x);
        }
    }
    let cfg = SimConfig {
        origin_tol: lit(1e-3),
        ..cfg
    };
    let runs: Vec<Result<(bool, T)>> = initial_states
        .par_iter()
        .map(|x0| {
            let traj = simulate(prob, controller, x0, &cfg)?;
            let reached = norm(traj.final_state()) <= lit(1e-3);
            Ok((reached, monitors(&traj).max_v_increase))
        })
        .collect();
    let mut converged = 0;
    let mut monotone = 0;
    let mut max_v_increase = T::neg_infinity();
    for r in runs {
        let (reached, inc) = r?;
        converged += reached as usize;
        monotone += (inc <= lit(1e-9)) as usize;
        max_v_increase = max_v_increase.max(inc);
    }
    Ok(RoaReport::Checked {
        min_v_on_boundary: min_v,
        pass: converged == trials && monotone == trials,
        trials,
        converged,
        monotone,
        max_v_increase,
        initial_states,
    })
}
