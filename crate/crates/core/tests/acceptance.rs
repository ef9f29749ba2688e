//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaxcbf::compat::{check_samples, circle_grid, halfspace_pair_feasible, CompatMode};
use relaxcbf::experiments::{
    load_problem, run_benchmark_suite, run_mc_comparison, FilterKind, BENCHMARK_INITIAL_POINTS, NEAR_ORIGIN_POINTS,
};
use relaxcbf::filter::{closed_form_solve, oracle_solve, verify_kkt};
use relaxcbf::scalar::norm;
use relaxcbf::sim::{
    find_boundary_equilibria, scan_interior_equilibria, simulate, Controller, RoaConfig, RoaReport, SimConfig,
};
use relaxcbf::system::benchmark_problem;
use relaxcbf::Problem64;

type Outcome = (bool, String);
type Criterion = (&'static str, fn(&Problem64) -> Outcome);

fn oracle_closed_form_equivalence(prob: &Problem64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_obj, mut worst_kkt) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let x = [rng.gen_range(-8.0..=8.0), rng.gen_range(-8.0..=8.0)];
        let t = prob.eval_terms(&x).unwrap();
        let (cf, or) = (closed_form_solve(&t).unwrap(), oracle_solve(&t).unwrap());
        let scale = cf.objective.abs().max(or.objective.abs());
        if scale > 0.0 {
            worst_obj = worst_obj.max((cf.objective - or.objective).abs() / scale);
        }
        worst_kkt = worst_kkt.max(verify_kkt(&cf, &t).max).max(verify_kkt(&or, &t).max);
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst_obj <= 1e-8 && worst_kkt <= 1e-8 && secs <= 10.0,
        format!("max relative objective gap {worst_obj:.2e}, max KKT residual {worst_kkt:.2e}, {secs:.2}s"),
    )
}

fn constraint_geometry(prob: &Problem64) -> Outcome {
    let lo = closed_form_solve(&prob.eval_terms(&[0.0, 2.0]).unwrap()).unwrap();
    let hi = closed_form_solve(&prob.eval_terms(&[0.0, 6.0]).unwrap()).unwrap();
    let t5 = prob.eval_terms(&[0.0, 5.0]).unwrap();
    let strict = halfspace_pair_feasible(&t5.lgb, t5.lfb + t5.alpha_b, &t5.lgv, t5.lfv + t5.gamma);
    let ok_lo = (lo.u[1] + 2.0).abs() <= 1e-9;
    let ok_hi = hi.u[0].abs() <= 1e-9 && (hi.u[1] + 6.0).abs() <= 1e-9 && (hi.s - 1.0).abs() <= 1e-9;
    (
        ok_lo && ok_hi && !strict.feasible,
        format!(
            "u(0,2) = {:?}, u(0,6) = {:?} with s = {}, strict pair at (0,5) feasible = {}",
            lo.u, hi.u, hi.s, strict.feasible
        ),
    )
}

fn relaxed_vs_strict(prob: &Problem64) -> Outcome {
    let samples = circle_grid(prob.b(), [0.0, 4.0], 2.0, 360);
    let relaxed = check_samples(prob, &samples, CompatMode::Relaxed);
    let strict = check_samples(prob, &samples, CompatMode::Strict);
    let nearest = strict
        .samples
        .iter()
        .min_by(|a, b| {
            let d = |s: &relaxcbf::compat::BoundarySample<f64>| norm(&[s.x[0], s.x[1] - 6.0]);
            d(a).partial_cmp(&d(b)).unwrap()
        })
        .unwrap();
    (
        relaxed.samples.len() == 360 && relaxed.all_feasible && !nearest.feasible,
        format!(
            "relaxed feasible on {}/360, strict sample at {:?} feasible = {} ({:?})",
            relaxed.samples.iter().filter(|s| s.feasible).count(),
            nearest.x,
            nearest.feasible,
            nearest.conflict_kind
        ),
    )
}

fn closed_loop_classes(prob: &Problem64) -> Outcome {
    let start = Instant::now();
    let points: Vec<Vec<f64>> = BENCHMARK_INITIAL_POINTS.iter().map(|p| p.to_vec()).collect();
    let near: Vec<Vec<f64>> = NEAR_ORIGIN_POINTS.iter().map(|p| p.to_vec()).collect();
    let summary = run_benchmark_suite(prob, &points, &near, &SimConfig::default(), None).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for r in &summary.runs {
        if r.min_b < -1e-6 {
            ok = false;
            notes.push(format!("{} from {:?} reaches b = {:.2e}", r.filter.label(), r.x0, r.min_b));
        }
    }
    let ours: Vec<_> = summary.runs.iter().filter(|r| r.filter == FilterKind::Ours).collect();
    for r in &ours[1..points.len()] {
        if r.final_norm > 1e-3 {
            ok = false;
            notes.push(format!("ours from {:?} ends at ‖x‖ = {:.2e}", r.x0, r.final_norm));
        }
    }
    // Top point: terminal distance to the boundary, |b| / ‖∇b‖.
    let top = ours[0];
    let grad = prob.grad_b().evaluate(&top.final_state).unwrap();
    let dist = top.final_b.abs() / norm(&grad);
    if dist > 1e-3 || top.final_norm <= 1e-3 {
        ok = false;
    }
    notes.push(format!("top point ends at {:?}, distance to boundary {dist:.2e}", top.final_state));
    let slack_near: Vec<f64> = summary
        .runs
        .iter()
        .filter(|r| r.filter == FilterKind::SlackClf && near.contains(&r.x0))
        .map(|r| r.final_norm)
        .collect();
    if slack_near.iter().any(|&n| n <= 0.05) {
        ok = false;
    }
    notes.push(format!("slack-clf near-origin terminal norms {slack_near:.4?}"));
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 120.0;
    notes.push(format!("{secs:.1}s"));
    (ok, notes.join("; "))
}

fn equilibrium_characterization(prob: &Problem64) -> Outcome {
    let interior = scan_interior_equilibria(prob, &Controller::ours(), 8.0, 0.02, 0.05);
    let seeds = circle_grid(prob.b(), [0.0, 4.0], 2.0, 360);
    let rep = find_boundary_equilibria(prob, &Controller::ours(), &seeds);
    let expected = [[0.0, 2.0], [0.0, 6.0]];
    let found = |p: &[f64; 2]| rep.boundary_equilibria.iter().any(|e| norm(&[e.x[0] - p[0], e.x[1] - p[1]]) <= 1e-6);
    let exact = rep.boundary_equilibria.len() == 2 && expected.iter().all(found);
    (
        interior.is_empty() && exact,
        format!(
            "{} interior equilibria off the origin; {} distinct boundary equilibria from {} seeds (expected exactly (0,2) and (0,6); both present = {})",
            interior.len(),
            rep.boundary_equilibria.len(),
            seeds.len(),
            expected.iter().all(found)
        ),
    )
}

fn region_of_attraction(prob: &Problem64) -> Outcome {
    let seeds = circle_grid(prob.b(), [0.0, 4.0], 2.0, 360);
    let cfg = RoaConfig {
        l: 3.9,
        trials: 50,
        seed: 5,
        half_width: 2.0,
        sim: SimConfig::default(),
    };
    match relaxcbf::sim::roa_certificate(prob, &Controller::ours(), &cfg, &seeds).unwrap() {
        RoaReport::Checked {
            pass,
            converged,
            monotone,
            max_v_increase,
            min_v_on_boundary,
            ..
        } => (
            pass,
            format!("min V on boundary {min_v_on_boundary:.6}, converged {converged}/50, step-monotone {monotone}/50, max V increase {max_v_increase:.2e}"),
        ),
        RoaReport::NotApplicable { min_v_on_boundary } => (false, format!("sublevel touches the boundary (min V {min_v_on_boundary})")),
    }
}

fn monte_carlo_ordering(prob: &Problem64) -> Outcome {
    let mc = run_mc_comparison(prob, 2024, 100, 8.0).unwrap();
    let stab = mc.count(FilterKind::SlackClfStabilizing.label(), |v| v > 0.0);
    let pen = mc.count(FilterKind::PenaltyLifted.label(), |v| v > 0.0);
    let slack = mc.count(FilterKind::SlackClf.label(), |v| v.abs() <= 0.1);
    (
        stab >= 90 && pen >= 90 && slack >= 90,
        format!("beats stabilizing slack CLF-QP {stab}/100, beats penalty-lifted {pen}/100, within 0.1 of slack CLF-QP {slack}/100"),
    )
}

fn numeric_sanity(prob: &Problem64) -> Outcome {
    // RK4 order on segments that stay in one region.
    let ours = Controller::ours();
    let run = |x0: &[f64], dt: f64| {
        let cfg = SimConfig {
            dt,
            horizon: 1.0,
            ..SimConfig::default()
        };
        simulate(prob, &ours, x0, &cfg).unwrap()
    };
    let mut worst_ratio = f64::INFINITY;
    let mut one_region = true;
    for x0 in [[3.0, -3.0], [-5.0, -2.0], [6.0, -1.0]] {
        let reference = run(&x0, 0.1 / 16.0);
        one_region &= reference.regions.windows(2).all(|w| w[0] == w[1]);
        let err = |dt: f64| {
            let xf = run(&x0, dt).final_state().to_vec();
            norm(&[xf[0] - reference.final_state()[0], xf[1] - reference.final_state()[1]])
        };
        worst_ratio = worst_ratio.min(err(0.1) / err(0.05));
    }

    // Gradients of the shipped polynomial artifact against central differences.
    let poly = load_problem("builtin:poly-case").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_grad = 0.0f64;
    for _ in 0..200 {
        let x = [rng.gen_range(-3.0..=3.0), rng.gen_range(-3.0..=3.0)];
        for p in [poly.b(), poly.v(), prob.b()] {
            let g = p.gradient().evaluate(&x).unwrap();
            for i in 0..2 {
                let h = 1e-5;
                let (mut a, mut c) = (x, x);
                a[i] += h;
                c[i] -= h;
                let fd = (p.evaluate(&a).unwrap() - p.evaluate(&c).unwrap()) / (2.0 * h);
                worst_grad = worst_grad.max((fd - g[i]).abs() / g[i].abs().max(1.0));
            }
        }
    }

    // Serialization round trip.
    let mut stable = true;
    for p in [prob.clone(), poly] {
        let text = serde_json::to_string(&p).unwrap();
        let back: Problem64 = serde_json::from_str(&text).unwrap();
        stable &= back == p && serde_json::to_string(&back).unwrap() == text;
    }
    (
        worst_ratio >= 12.0 && one_region && worst_grad <= 1e-6 && stable,
        format!("RK4 error ratio {worst_ratio:.2} (single region {one_region}), gradient deviation {worst_grad:.1e}, round trip stable {stable}"),
    )
}

fn main() -> ExitCode {
    let prob = benchmark_problem::<f64>();
    let criteria: [Criterion; 8] = [
        ("closed form matches oracle", oracle_closed_form_equivalence),
        ("constraint geometry on the symmetry axis", constraint_geometry),
        ("relaxed vs strict compatibility", relaxed_vs_strict),
        ("closed-loop trajectory classes", closed_loop_classes),
        ("equilibrium characterization", equilibrium_characterization),
        ("sublevel set is a region of attraction", region_of_attraction),
        ("Monte-Carlo cost ordering", monte_carlo_ordering),
        ("numeric sanity", numeric_sanity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let (ok, detail) = check(&prob);
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += !ok as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
