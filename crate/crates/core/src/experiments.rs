//! End-to-end experiment drivers producing plot-ready CSV and JSON.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{Baseline, BaselineKind};
use crate::compat::project_to_boundary;
use crate::error::{Error, Result};
use crate::filter::{self, Method};
use crate::poly::Polynomial;
use crate::scalar::{dot, norm};
use crate::sim::{monitors, simulate, Controller, SimConfig, TerminalReason, Trajectory};
use crate::system::{benchmark_problem, polynomial_case, CertificateProblem};

const POLY_CASE_ARTIFACT: &str = include_str!("../fixtures/poly_case_artifact.json");

/// Resolves `builtin:benchmark`, `builtin:poly-case` or a JSON file path.
pub fn load_problem(source: &str) -> Result<CertificateProblem<f64>> {
    match source {
        "builtin:benchmark" => Ok(benchmark_problem()),
        "builtin:poly-case" => parse_problem(POLY_CASE_ARTIFACT),
        path => parse_problem(&fs::read_to_string(path)?),
    }
}

/// Parses problem JSON, reporting the failing location on schema errors.
pub fn parse_problem(text: &str) -> Result<CertificateProblem<f64>> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("problem JSON at line {} column {}: {e}", e.line(), e.column())))
}

/// The four filters compared on the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    Ours,
    SlackClf,
    SlackClfStabilizing,
    PenaltyLifted,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Ours,
        FilterKind::SlackClf,
        FilterKind::SlackClfStabilizing,
        FilterKind::PenaltyLifted,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Ours => "ours",
            FilterKind::SlackClf => "slack-clf",
            FilterKind::SlackClfStabilizing => "slack-clf-stabilizing",
            FilterKind::PenaltyLifted => "penalty-lifted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    pub fn controller(self, n: usize) -> Controller<f64> {
        match self {
            FilterKind::Ours => Controller::ours(),
            FilterKind::SlackClf => Controller::Baseline(Baseline::benchmark(BaselineKind::SlackClf, n)),
            FilterKind::SlackClfStabilizing => Controller::Baseline(Baseline::benchmark(BaselineKind::SlackClfStabilizing, n)),
            FilterKind::PenaltyLifted => Controller::Baseline(Baseline::benchmark(BaselineKind::PenaltyLifted, n)),
        }
    }
}

/// Default benchmark initial points, read off the published trajectory plot
/// (reconstructed, not exact). The first is the "top" point on the symmetry
/// axis above the obstacle.
pub const BENCHMARK_INITIAL_POINTS: [[f64; 2]; 9] = [
    [0.0, 7.0],
    [2.0, 6.5],
    [-2.0, 6.5],
    [4.0, 5.0],
    [-4.0, 5.0],
    [5.0, 2.0],
    [-5.0, 2.0],
    [3.0, -3.0],
    [-3.0, -3.0],
];

/// Starts inside and outside the off-origin ring where the slack CLF-QP stalls.
pub const NEAR_ORIGIN_POINTS: [[f64; 2]; 2] = [[0.02, 0.03], [0.2, -0.1]];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub filter: FilterKind,
    pub x0: Vec<f64>,
    pub terminal_reason: TerminalReason,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub final_norm: f64,
    pub final_b: f64,
    pub min_b: f64,
    pub max_vdot_interior: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkSummary {
    pub initial_points: Vec<Vec<f64>>,
    pub near_origin_points: Vec<Vec<f64>>,
    pub runs: Vec<RunSummary>,
}

fn summarize(filter: FilterKind, x0: &[f64], traj: &Trajectory<f64>) -> RunSummary {
    let m = monitors(traj);
    RunSummary {
        filter,
        x0: x0.to_vec(),
        terminal_reason: traj.terminal_reason,
        final_time: traj.times.last().copied().unwrap_or(0.0),
        final_state: traj.final_state().to_vec(),
        final_norm: norm(traj.final_state()),
        final_b: traj.b_vals.last().copied().unwrap_or(f64::NAN),
        min_b: m.min_b,
        max_vdot_interior: m.max_vdot_interior,
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_traj(path: &Path, traj: &Trajectory<f64>) -> Result<()> {
    traj.write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Simulates every filter from every initial point, plus the near-origin
/// points. With `outdir` set, writes `<filter>_<k>.csv` per run (near-origin
/// runs are numbered after the main set) and `summary.json`.
pub fn run_benchmark_suite(
    prob: &CertificateProblem<f64>,
    initial_points: &[Vec<f64>],
    near_origin_points: &[Vec<f64>],
    cfg: &SimConfig<f64>,
    outdir: Option<&Path>,
) -> Result<BenchmarkSummary> {
    let starts: Vec<&Vec<f64>> = initial_points.iter().chain(near_origin_points).collect();
    let jobs: Vec<(FilterKind, usize)> = FilterKind::ALL
        .into_iter()
        .flat_map(|f| (0..starts.len()).map(move |k| (f, k)))
        .collect();
    let trajs: Vec<Result<Trajectory<f64>>> = jobs
        .par_iter()
        .map(|&(f, k)| simulate(prob, &f.controller(prob.n()), starts[k], cfg))
        .collect();
    if let Some(dir) = outdir {
        fs::create_dir_all(dir)?;
    }
    let mut runs = Vec::with_capacity(jobs.len());
    for (&(f, k), traj) in jobs.iter().zip(trajs) {
        let traj = traj?;
        if let Some(dir) = outdir {
            write_traj(&dir.join(format!("{}_{k}.csv", f.label())), &traj)?;
        }
        runs.push(summarize(f, starts[k], &traj));
    }
    let summary = BenchmarkSummary {
        initial_points: initial_points.to_vec(),
        near_origin_points: near_origin_points.to_vec(),
        runs,
    };
    if let Some(dir) = outdir {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McComparison {
    pub seed: u64,
    pub states: Vec<Vec<f64>>,
    /// `‖u‖²` per filter label.
    pub costs: BTreeMap<String, Vec<f64>>,
    /// `log(‖u_o‖² / ‖u*‖²)` per competitor label; positive when the competitor spends more.
    pub log_ratios: BTreeMap<String, Vec<f64>>,
}

impl McComparison {
    pub fn count(&self, competitor: &str, pred: impl Fn(f64) -> bool) -> usize {
        self.log_ratios.get(competitor).map_or(0, |r| r.iter().filter(|&&v| pred(v)).count())
    }
}

/// Cost comparison on `samples` states drawn uniformly from `[−w, w]^n ∩ {b ≥ 0}`.
pub fn run_mc_comparison(prob: &CertificateProblem<f64>, seed: u64, samples: usize, half_width: f64) -> Result<McComparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(samples);
    while states.len() < samples {
        let x: Vec<f64> = (0..prob.n()).map(|_| rng.gen_range(-half_width..=half_width)).collect();
        if prob.b().evaluate(&x)? >= 0.0 {
            states.push(x);
        }
    }
    let mut costs = BTreeMap::new();
    for kind in FilterKind::ALL {
        let c: Vec<Result<f64>> = states
            .par_iter()
            .map(|x| {
                debug_assert!(prob.b().evaluate(x).is_ok_and(|b| b >= 0.0));
                let u = match kind {
                    FilterKind::Ours => filter::solve(prob, x, Method::ClosedForm)?.u,
                    _ => match kind.controller(prob.n()) {
                        Controller::Baseline(b) => b.solve(prob, x)?.u,
                        Controller::Filter(_) => unreachable!(),
                    },
                };
                Ok(dot(&u, &u))
            })
            .collect();
        costs.insert(kind.label().to_string(), c.into_iter().collect::<Result<Vec<f64>>>()?);
    }
    let ours = costs[FilterKind::Ours.label()].clone();
    let log_ratios = FilterKind::ALL[1..]
        .iter()
        .map(|k| {
            let r = costs[k.label()].iter().zip(&ours).map(|(o, s)| (o / s).ln()).collect();
            (k.label().to_string(), r)
        })
        .collect();
    Ok(McComparison {
        seed,
        states,
        costs,
        log_ratios,
    })
}

/// Polylines of `b = 0` on a square grid by marching squares.
#[allow(clippy::needless_range_loop)]
pub fn marching_squares(b: &Polynomial<f64>, lo: [f64; 2], hi: [f64; 2], cells: usize) -> Vec<Vec<[f64; 2]>> {
    let hx = (hi[0] - lo[0]) / cells as f64;
    let hy = (hi[1] - lo[1]) / cells as f64;
    let at = |i: usize, j: usize| [lo[0] + i as f64 * hx, lo[1] + j as f64 * hy];
    let val: Vec<Vec<f64>> = (0..=cells)
        .map(|i| (0..=cells).map(|j| b.eval_unchecked(&at(i, j))).collect())
        .collect();
    // Edge keys: (0, i, j) joins (i,j)-(i+1,j); (1, i, j) joins (i,j)-(i,j+1).
    type Edge = (u8, usize, usize);
    let crossing = |e: Edge| -> Option<[f64; 2]> {
        let (p, q) = match e.0 {
            0 => ((e.1, e.2), (e.1 + 1, e.2)),
            _ => ((e.1, e.2), (e.1, e.2 + 1)),
        };
        let (a, c) = (val[p.0][p.1], val[q.0][q.1]);
        if (a >= 0.0) == (c >= 0.0) {
            return None;
        }
        let t = a / (a - c);
        let (pa, pc) = (at(p.0, p.1), at(q.0, q.1));
        Some([pa[0] + t * (pc[0] - pa[0]), pa[1] + t * (pc[1] - pa[1])])
    };
    let mut adj: HashMap<Edge, Vec<Edge>> = HashMap::new();
    let mut points: HashMap<Edge, [f64; 2]> = HashMap::new();
    for i in 0..cells {
        for j in 0..cells {
            // Sides in counter-clockwise order: bottom, right, top, left.
            let sides = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let hit: Vec<Edge> = sides.into_iter().filter(|&e| crossing(e).is_some()).collect();
            let pairs: Vec<(Edge, Edge)> = match hit.len() {
                2 => vec![(hit[0], hit[1])],
                4 => {
                    let centre = b.eval_unchecked(&[lo[0] + (i as f64 + 0.5) * hx, lo[1] + (j as f64 + 0.5) * hy]);
                    // Join the sides around the corner whose sign differs from the centre.
                    if (centre >= 0.0) == (val[i][j] >= 0.0) {
                        vec![(hit[0], hit[1]), (hit[2], hit[3])]
                    } else {
                        vec![(hit[3], hit[0]), (hit[1], hit[2])]
                    }
                }
                _ => Vec::new(),
            };
            for (a, c) in pairs {
                for e in [a, c] {
                    points.entry(e).or_insert_with(|| crossing(e).expect("checked crossing"));
                }
                adj.entry(a).or_default().push(c);
                adj.entry(c).or_default().push(a);
            }
        }
    }
    let mut keys: Vec<Edge> = adj.keys().copied().collect();
    keys.sort_unstable();
    // Open chains start at edges of degree one, then closed loops.
    keys.sort_by_key(|e| adj[e].len() != 1);
    let mut seen = std::collections::HashSet::new();
    let mut lines = Vec::new();
    for start in keys {
        if seen.contains(&start) {
            continue;
        }
        let mut line = vec![points[&start]];
        seen.insert(start);
        let mut cur = start;
        while let Some(&next) = adj[&cur].iter().find(|e| !seen.contains(*e)) {
            seen.insert(next);
            line.push(points[&next]);
            cur = next;
        }
        if adj[&cur].contains(&start) && line.len() > 2 {
            line.push(points[&start]);
        }
        lines.push(line);
    }
    lines
}

/// Reconstructed start rectangle above the obstacle, and the two starts at its upper corners.
pub const POLY_START_RECTANGLE: [[f64; 2]; 2] = [[-1.0, 2.5], [1.0, 3.0]];
pub const POLY_STARTS: [[f64; 2]; 2] = [[-1.0, 3.0], [1.0, 3.0]];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolySuiteReport {
    pub b_at_origin: f64,
    pub boundary_polylines: usize,
    pub boundary_points_checked: usize,
    /// `min (f + g u*)·∇b` over polished boundary points.
    pub min_boundary_flow: f64,
    pub invariance_ok: bool,
    /// `s(x) < 0 ⇒ b(x) < 0` on the mesh, when a safe-set polynomial is given.
    pub obstacle_excluded: Option<bool>,
    pub trajectories: Vec<RunSummary>,
    pub trajectories_ok: bool,
}

/// Phase portrait data and invariance checks for a designed problem.
///
/// Writes `vector_field.csv`, `boundary.csv`, `traj_<k>.csv` and
/// `summary.json` when `outdir` is set.
pub fn run_polynomial_suite(
    prob: &CertificateProblem<f64>,
    safe_set: Option<&Polynomial<f64>>,
    starts: &[Vec<f64>],
    cfg: &SimConfig<f64>,
    outdir: Option<&Path>,
) -> Result<PolySuiteReport> {
    if prob.n() != 2 {
        return Err(Error::InvalidInput("the polynomial suite is planar".into()));
    }
    let ours = Controller::ours();
    let (lo, hi) = ([-4.0, -4.0], [4.0, 4.0]);
    let lines = marching_squares(prob.b(), lo, hi, 400);
    let polished: Vec<Vec<f64>> = lines
        .iter()
        .flatten()
        .filter_map(|p| project_to_boundary(prob.b(), p))
        .collect();
    let flows: Vec<Result<f64>> = polished
        .par_iter()
        .map(|x| {
            let f = ours.field(prob, x)?;
            Ok(dot(&f, &prob.grad_b().evaluate(x)?))
        })
        .collect();
    let flows = flows.into_iter().collect::<Result<Vec<f64>>>()?;
    let min_boundary_flow = flows.iter().copied().fold(f64::INFINITY, f64::min);

    let mesh: Vec<[f64; 2]> = (0..=32)
        .flat_map(|i| (0..=32).map(move |j| [lo[0] + 0.25 * i as f64, lo[1] + 0.25 * j as f64]))
        .collect();
    let field: Vec<Result<Vec<f64>>> = mesh.par_iter().map(|x| ours.field(prob, x)).collect();
    let field = field.into_iter().collect::<Result<Vec<_>>>()?;
    let obstacle_excluded = safe_set.map(|s| {
        (0..=400).all(|i| {
            (0..=400).all(|j| {
                let x = [lo[0] + 0.02 * i as f64, lo[1] + 0.02 * j as f64];
                s.eval_unchecked(&x) >= 0.0 || prob.b().eval_unchecked(&x) < 0.0
            })
        })
    });

    let trajs: Vec<Result<Trajectory<f64>>> = starts.par_iter().map(|x0| simulate(prob, &ours, x0, cfg)).collect();
    let trajs = trajs.into_iter().collect::<Result<Vec<_>>>()?;
    let trajectories: Vec<RunSummary> = trajs.iter().zip(starts).map(|(t, x0)| summarize(FilterKind::Ours, x0, t)).collect();
    let trajectories_ok = trajectories.iter().all(|r| r.min_b >= -1e-6 && r.final_norm <= 1e-3);

    let report = PolySuiteReport {
        b_at_origin: prob.b().evaluate(&[0.0, 0.0])?,
        boundary_polylines: lines.len(),
        boundary_points_checked: polished.len(),
        min_boundary_flow,
        invariance_ok: !polished.is_empty() && min_boundary_flow >= -1e-6,
        obstacle_excluded,
        trajectories,
        trajectories_ok,
    };
    if let Some(dir) = outdir {
        use std::io::Write;
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("vector_field.csv"))?);
        writeln!(w, "x1,x2,dx1,dx2,b")?;
        for (x, f) in mesh.iter().zip(&field) {
            writeln!(w, "{},{},{},{},{}", x[0], x[1], f[0], f[1], prob.b().eval_unchecked(x))?;
        }
        let mut w = BufWriter::new(File::create(dir.join("boundary.csv"))?);
        writeln!(w, "polyline,x1,x2")?;
        for (k, line) in lines.iter().enumerate() {
            for p in line {
                writeln!(w, "{k},{},{}", p[0], p[1])?;
            }
        }
        for (k, t) in trajs.iter().enumerate() {
            write_traj(&dir.join(format!("traj_{k}.csv")), t)?;
        }
        write_json(&dir.join("summary.json"), &report)?;
    }
    Ok(report)
}

/// The safe-set polynomial of the shipped polynomial case.
pub fn poly_case_safe_set() -> Polynomial<f64> {
    polynomial_case::<f64>().safe_set
}
