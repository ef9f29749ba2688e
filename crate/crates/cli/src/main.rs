//! Command-line front end for the relaxed CBF–CLF filter.
//!
//! Exit codes: 0 on success, 1 on errors, 2 when a check ran but failed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use relaxcbf::compat::{check_samples, sample_boundary, CompatMode};
use relaxcbf::experiments::{
    load_problem, poly_case_safe_set, run_benchmark_suite, run_mc_comparison, run_polynomial_suite, FilterKind,
    BENCHMARK_INITIAL_POINTS, NEAR_ORIGIN_POINTS, POLY_STARTS,
};
use relaxcbf::filter::{solve, verify_kkt, Method};
use relaxcbf::sim::{find_boundary_equilibria, monitors, scan_interior_equilibria, simulate, SimConfig};
use relaxcbf::Problem64;

#[derive(Parser)]
#[command(name = "relaxcbf", version, about = "Relaxed CBF–CLF safety filter experiments")]
struct Cli {
    /// `builtin:benchmark`, `builtin:poly-case` or a problem JSON file.
    #[arg(long, global = true, default_value = "builtin:benchmark")]
    problem: String,
    /// RNG seed for sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path: a CSV file for `simulate`, a directory for the suites,
    /// a JSON file otherwise. JSON goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the filter QP at one state.
    FilterEval {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x: Point,
        #[arg(long, value_enum, default_value = "closed-form")]
        method: MethodArg,
    },
    /// Simulate one closed-loop trajectory and write it as CSV.
    Simulate {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x0: Point,
        #[arg(long, default_value = "ours", value_parser = parse_filter)]
        filter: FilterKind,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 20.0)]
        horizon: f64,
    },
    /// Run every filter from the default benchmark initial points.
    BenchmarkSuite {
        #[arg(long = "T", default_value_t = 20.0)]
        horizon: f64,
    },
    /// Compare input costs of the filters on random safe states.
    McCompare {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
    },
    /// Search for boundary equilibria and, in the plane, interior ones.
    Equilibria {
        #[arg(long, default_value_t = 360)]
        samples: usize,
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
        /// Grid spacing of the interior scan; 0 skips it.
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        #[arg(long, value_parser = parse_filter, default_value = "ours")]
        filter: FilterKind,
    },
    /// Check compatibility of the two constraints on boundary samples.
    CompatCheck {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, value_enum, default_value = "relaxed")]
        mode: ModeArg,
    },
    /// Phase portrait, boundary invariance and trajectories for a designed problem.
    PolySuite {
        #[arg(long = "T", default_value_t = 20.0)]
        horizon: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    ClosedForm,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Relaxed,
    Strict,
}

/// Comma-separated state such as `0,6`.
#[derive(Clone, Debug)]
struct Point(Vec<f64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Point)
}

fn parse_filter(s: &str) -> Result<FilterKind, String> {
    FilterKind::parse(s).ok_or_else(|| {
        let labels: Vec<&str> = FilterKind::ALL.iter().map(|k| k.label()).collect();
        format!("unknown filter `{s}`, expected one of {}", labels.join(", "))
    })
}

fn emit(json: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(json)?;
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            writeln!(w, "{text}")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn check_dim(prob: &Problem64, x: &[f64]) -> Result<()> {
    if x.len() != prob.n() {
        bail!("state has {} entries, the problem has {} states", x.len(), prob.n());
    }
    Ok(())
}

/// Runs the command; `Ok(false)` means a check ran and failed.
fn run(cli: &Cli) -> Result<bool> {
    let prob = load_problem(&cli.problem).with_context(|| format!("loading problem `{}`", cli.problem))?;
    let out = cli.out.as_deref();
    let passed = match &cli.command {
        Command::FilterEval { x: Point(x), method } => {
            check_dim(&prob, x)?;
            let method = match method {
                MethodArg::ClosedForm => Method::ClosedForm,
                MethodArg::Oracle => Method::Oracle,
            };
            let sol = solve(&prob, x, method)?;
            let kkt = verify_kkt(&sol, &prob.eval_terms(x)?);
            let json = json!({ "x": x, "solution": sol, "kkt": { "max": kkt.max, "lambda": kkt.lambda } });
            emit(&json, out)?;
            true
        }
        Command::Simulate {
            x0: Point(x0),
            filter,
            dt,
            horizon,
        } => {
            check_dim(&prob, x0)?;
            let cfg = SimConfig {
                dt: *dt,
                horizon: *horizon,
                ..SimConfig::default()
            };
            let traj = simulate(&prob, &filter.controller(prob.n()), x0, &cfg)?;
            let path = out.map_or_else(|| PathBuf::from("traj.csv"), Path::to_path_buf);
            traj.write_csv(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))?;
            let json = json!({
                "filter": filter.label(),
                "x0": x0,
                "csv": path,
                "samples": traj.len(),
                "terminal_reason": traj.terminal_reason,
                "final_time": traj.times.last(),
                "final_state": traj.final_state(),
                "offending_state": traj.offending_state,
                "monitors": monitors(&traj),
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
            true
        }
        Command::BenchmarkSuite { horizon } => {
            let cfg = SimConfig {
                horizon: *horizon,
                ..SimConfig::default()
            };
            let points: Vec<Vec<f64>> = BENCHMARK_INITIAL_POINTS.iter().map(|p| p.to_vec()).collect();
            let near: Vec<Vec<f64>> = NEAR_ORIGIN_POINTS.iter().map(|p| p.to_vec()).collect();
            let summary = run_benchmark_suite(&prob, &points, &near, &cfg, out)?;
            let json = serde_json::to_value(&summary)?;
            println!("{}", serde_json::to_string_pretty(&json)?);
            true
        }
        Command::McCompare { samples, half_width } => {
            let mc = run_mc_comparison(&prob, cli.seed.unwrap_or(2024), *samples, *half_width)?;
            let counts: serde_json::Map<String, Value> = mc
                .log_ratios
                .keys()
                .map(|k| {
                    let v = json!({
                        "competitor_costs_more": mc.count(k, |r| r > 0.0),
                        "within_0.1": mc.count(k, |r| r.abs() <= 0.1),
                    });
                    (k.clone(), v)
                })
                .collect();
            let json = json!({ "counts": counts, "comparison": mc });
            emit(&json, out)?;
            true
        }
        Command::Equilibria {
            samples,
            half_width,
            resolution,
            filter,
        } => {
            let ctl = filter.controller(prob.n());
            let seeds = sample_boundary(prob.b(), *samples, cli.seed.unwrap_or(0), *half_width);
            let mut rep = find_boundary_equilibria(&prob, &ctl, &seeds.points);
            rep.skipped_seeds += seeds.skipped;
            if prob.n() == 2 && *resolution > 0.0 {
                rep.interior_candidates = scan_interior_equilibria(&prob, &ctl, *half_width, *resolution, 0.05);
            }
            let json = serde_json::to_value(&rep)?;
            emit(&json, out)?;
            true
        }
        Command::CompatCheck {
            samples,
            half_width,
            mode,
        } => {
            let mode = match mode {
                ModeArg::Relaxed => CompatMode::Relaxed,
                ModeArg::Strict => CompatMode::Strict,
            };
            let sampling = sample_boundary(prob.b(), *samples, cli.seed.unwrap_or(0), *half_width);
            let mut rep = check_samples(&prob, &sampling.points, mode);
            rep.skipped_seeds = sampling.skipped;
            let passed = rep.all_feasible && !rep.samples.is_empty();
            let json = serde_json::to_value(&rep)?;
            emit(&json, out)?;
            passed
        }
        Command::PolySuite { horizon } => {
            let cfg = SimConfig {
                horizon: *horizon,
                ..SimConfig::default()
            };
            let starts: Vec<Vec<f64>> = POLY_STARTS.iter().map(|p| p.to_vec()).collect();
            // The obstacle check only makes sense for the shipped polynomial case.
            let safe = (cli.problem == "builtin:poly-case").then(poly_case_safe_set);
            let rep = run_polynomial_suite(&prob, safe.as_ref(), &starts, &cfg, out)?;
            let passed = rep.invariance_ok && rep.trajectories_ok && rep.obstacle_excluded != Some(false);
            let json = serde_json::to_value(&rep)?;
            println!("{}", serde_json::to_string_pretty(&json)?);
            passed
        }
    };
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
