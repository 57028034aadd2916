//! One function per experiment kind. Each writes its files into the output
//! directory and returns the list of paths written.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use mems_core::elliptic::{g_eps, solve_potential, solve_potential_split};
use mems_core::evolution::{check_evenness_preservation, check_sign_preservation, run, Outcome};
use mems_core::small_aspect::{limit_study, pullin0, pullin0_shooting, LimitSetup};
use mems_core::steady::{
    continue_branch, nonexistence_bound, solve_steady, trace_lower_bound_check, NewtonOptions, SteadyBranch,
};
use mems_core::verification::{mms_errors, observed_orders};
use mems_core::{Grid1D, Grid2D, MembraneState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, CliResult};
use crate::output::{num, profile_header, profile_row, OutDir};

/// Settings that come from the command line rather than the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `output_dir` from the config.
    pub out: Option<PathBuf>,
    /// Worker threads for experiments that fan out over `eps`.
    pub threads: Option<usize>,
    pub quiet: bool,
}

#[derive(Debug)]
pub struct Report {
    pub kind: Kind,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: OutDir,
    opts: &'a RunOptions,
}

impl Ctx<'_> {
    fn note(&self, msg: &str) {
        if !self.opts.quiet {
            eprintln!("{msg}");
        }
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.opts.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::invalid("--threads", e.to_string()))
    }

    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.cfg.newton_tol,
            touchdown_floor: self.cfg.touchdown_floor,
            ..NewtonOptions::default()
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<Report> {
    let root = opts.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let ctx = Ctx {
        cfg,
        out: OutDir::create(&root)?,
        opts,
    };
    match cfg.kind {
        Kind::Evolve => evolve(&ctx),
        Kind::Steady => steady(&ctx),
        Kind::Continuation => continuation(&ctx),
        Kind::Pullin => pullin(&ctx),
        Kind::LimitStudy => limit(&ctx),
        Kind::Validate => validate(&ctx),
    }
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Converged => "converged",
        Outcome::Touchdown => "touchdown",
        Outcome::MaxTimeReached => "max_time_reached",
    }
}

#[derive(Serialize)]
struct EvolveMeta<'a> {
    config: &'a ExperimentConfig,
    outcome: &'static str,
    touchdown_time: Option<f64>,
    steps: usize,
    final_time: f64,
    final_min_gap: f64,
    stored_states: usize,
    wall_time_s: f64,
}

fn evolve(ctx: &Ctx) -> CliResult<Report> {
    let cfg = ctx.cfg;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_state(grid.gx())?;
    let start = Instant::now();
    ctx.note(&format!("evolve: eps={} lambda={} dt={}", cfg.eps, cfg.lambda, cfg.dt));
    let traj = run(&u0, &cfg.params(cfg.eps), &grid).map_err(CliError::solver("evolution"))?;
    let wall = start.elapsed().as_secs_f64();

    let mut files = vec![ctx.out.csv(
        "trajectory.csv",
        &profile_header("time", grid.gx()),
        traj.states.iter().map(|s| profile_row(s.time, s)),
    )?];
    if cfg.record_energy {
        files.push(ctx.out.csv(
            "energy.csv",
            &["time".into(), "energy".into()],
            traj.energy_series.iter().map(|&(t, e)| [num(t), num(e)]),
        )?);
    }
    let last = traj.final_state();
    files.push(ctx.out.json(
        "run.json",
        &EvolveMeta {
            config: cfg,
            outcome: outcome_name(traj.outcome),
            touchdown_time: traj.touchdown_time,
            steps: traj.steps,
            final_time: last.time,
            final_min_gap: last.min_gap(),
            stored_states: traj.states.len(),
            wall_time_s: wall,
        },
    )?);
    if cfg.require_survival {
        if let Some(time) = traj.touchdown_time {
            return Err(CliError::Touchdown {
                stage: "evolution",
                time,
            });
        }
    }
    Ok(Report {
        kind: cfg.kind,
        files,
        summary: format!(
            "{} after {} steps (t = {})",
            outcome_name(traj.outcome),
            traj.steps,
            last.time
        ),
    })
}

#[derive(Serialize)]
struct SteadyMeta<'a> {
    config: &'a ExperimentConfig,
    residual: f64,
    newton_iters: usize,
    min_gap: f64,
    min_physical_trace: f64,
    nonexistence_bound: f64,
}

fn steady(ctx: &Ctx) -> CliResult<Report> {
    let cfg = ctx.cfg;
    let grid = cfg.grid()?;
    let guess = cfg.initial_state(grid.gx())?;
    let sol = solve_steady(cfg.lambda, cfg.eps, &guess, &grid, &ctx.newton()).map_err(CliError::solver("steady"))?;
    let trace = trace_lower_bound_check(&sol.state, cfg.eps, &grid).map_err(CliError::solver("steady"))?;
    let bound = nonexistence_bound(cfg.eps).map_err(CliError::solver("steady"))?;
    let files = vec![
        ctx.out.csv(
            "steady.csv",
            &["x".into(), "u".into()],
            grid.gx()
                .nodes()
                .iter()
                .zip(sol.state.values())
                .map(|(&x, &u)| [num(x), num(u)]),
        )?,
        ctx.out.json(
            "steady.json",
            &SteadyMeta {
                config: cfg,
                residual: sol.residual,
                newton_iters: sol.iterations,
                min_gap: sol.state.min_gap(),
                min_physical_trace: trace,
                nonexistence_bound: bound,
            },
        )?,
    ];
    Ok(Report {
        kind: cfg.kind,
        files,
        summary: format!(
            "steady state with min gap {} after {} iterations",
            sol.state.min_gap(),
            sol.iterations
        ),
    })
}

#[derive(Serialize)]
struct FoldRecord {
    lower: f64,
    upper: f64,
    midpoint: f64,
}

#[derive(Serialize)]
struct BranchRecord {
    eps: f64,
    points: usize,
    last_lambda: f64,
    fold: Option<FoldRecord>,
    nonexistence_bound: f64,
    fold_below_bound: Option<bool>,
    file: String,
}

#[derive(Serialize)]
struct ContinuationMeta<'a> {
    config: &'a ExperimentConfig,
    branches: Vec<BranchRecord>,
}

fn continuation(ctx: &Ctx) -> CliResult<Report> {
    let cfg = ctx.cfg;
    let grid = cfg.grid()?;
    let opts = ctx.newton();
    ctx.note(&format!("continuation over eps = {:?}", cfg.eps_list));
    let branches: Vec<CliResult<SteadyBranch>> = ctx.pool()?.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| {
                continue_branch(eps, cfg.lambda_max, cfg.dlambda, &grid, &opts)
                    .map_err(CliError::solver("continuation"))
            })
            .collect()
    });

    let mut files = Vec::new();
    let mut records = Vec::new();
    for (branch, &eps) in branches.into_iter().zip(&cfg.eps_list) {
        let branch = branch?;
        let name = format!("branch_eps_{}.csv", num(eps));
        files.push(ctx.out.csv(
            &name,
            &["lambda", "min_gap", "max_deflection", "newton_iters"].map(String::from),
            branch.points.iter().map(|p| {
                let deflection = p.state.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                [
                    num(p.lambda),
                    num(p.min_gap),
                    num(deflection),
                    p.newton_iters.to_string(),
                ]
            }),
        )?);
        if cfg.dump_profiles {
            files.push(ctx.out.csv(
                &format!("profiles_eps_{}.csv", num(eps)),
                &profile_header("lambda", grid.gx()),
                branch.points.iter().map(|p| profile_row(p.lambda, &p.state)),
            )?);
        }
        let bound = nonexistence_bound(eps).map_err(CliError::solver("continuation"))?;
        records.push(BranchRecord {
            eps,
            points: branch.points.len(),
            last_lambda: branch.last().lambda,
            fold: branch.fold.map(|f| FoldRecord {
                lower: f.lower,
                upper: f.upper,
                midpoint: f.midpoint(),
            }),
            nonexistence_bound: bound,
            fold_below_bound: branch.fold_estimate().map(|f| f <= bound),
            file: name,
        });
    }
    let summary = records
        .iter()
        .map(|r| match &r.fold {
            Some(f) => format!("eps={}: fold near {}", r.eps, f.midpoint),
            None => format!("eps={}: branch reached {}", r.eps, r.last_lambda),
        })
        .collect::<Vec<_>>()
        .join("; ");
    files.push(ctx.out.json(
        "continuation.json",
        &ContinuationMeta {
            config: cfg,
            branches: records,
        },
    )?);
    Ok(Report {
        kind: cfg.kind,
        files,
        summary,
    })
}

#[derive(Serialize)]
struct PullinMeta<'a> {
    config: &'a ExperimentConfig,
    lambda_star: f64,
    lower: f64,
    upper: f64,
    shooting_lambda_star: f64,
    shooting_tol: f64,
    difference: f64,
}

fn pullin(ctx: &Ctx) -> CliResult<Report> {
    let cfg = ctx.cfg;
    let grid = Grid1D::new(cfg.n_pullin).map_err(CliError::solver("pullin"))?;
    let p = pullin0(cfg.tol_lambda, &grid).map_err(CliError::solver("pullin"))?;
    let shoot_tol = cfg.tol_lambda / 10.0;
    let shoot = pullin0_shooting(shoot_tol);
    let files = vec![ctx.out.json(
        "pullin.json",
        &PullinMeta {
            config: cfg,
            lambda_star: p.lambda_star,
            lower: p.lower,
            upper: p.upper,
            shooting_lambda_star: shoot,
            shooting_tol: shoot_tol,
            difference: (p.lambda_star - shoot).abs(),
        },
    )?];
    Ok(Report {
        kind: cfg.kind,
        files,
        summary: format!(
            "pull-in {} in [{}, {}], shooting {}",
            p.lambda_star, p.lower, p.upper, shoot
        ),
    })
}

#[derive(Serialize)]
struct LimitMeta<'a> {
    config: &'a ExperimentConfig,
    eps_values: &'a [f64],
    sample_times: Vec<f64>,
    sup_errors: Vec<f64>,
    potential_errors: Vec<Vec<f64>>,
    complete: bool,
    horizon: f64,
    sup_errors_decreasing: bool,
    potential_errors_decreasing: bool,
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn limit(ctx: &Ctx) -> CliResult<Report> {
    let cfg = ctx.cfg;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_state(grid.gx())?;
    if u0.max_value() > 0.0 {
        return Err(CliError::invalid(
            "initial",
            "the limit study needs a nonpositive initial profile",
        ));
    }
    ctx.note(&format!("limit study over eps = {:?}", cfg.eps_list));
    let parts: Vec<_> = ctx.pool()?.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| {
                limit_study(&LimitSetup {
                    u0: &u0,
                    lambda: cfg.lambda,
                    eps_values: &[eps],
                    tau: cfg.tau,
                    dt: cfg.dt,
                    grid: &grid,
                })
                .map_err(CliError::solver("limit-study"))
            })
            .collect()
    });
    let parts = parts.into_iter().collect::<CliResult<Vec<_>>>()?;

    // each part was cut at its own touchdown; keep the span common to all
    let shortest = parts
        .iter()
        .min_by_key(|p| p.sample_times.len())
        .expect("eps_list is not empty");
    let sample_times = shortest.sample_times.clone();
    let complete = parts.iter().all(|p| p.complete);
    let horizon = sample_times.last().copied().unwrap_or(0.0);
    if !complete {
        ctx.note(&format!(
            "warning: touchdown before tau = {}; horizon shortened to {horizon}",
            cfg.tau
        ));
    }
    let sup_errors: Vec<f64> = parts.iter().map(|p| p.sup_errors[0]).collect();
    let potential_errors: Vec<Vec<f64>> = parts
        .iter()
        .map(|p| p.potential_errors[0][..sample_times.len()].to_vec())
        .collect();
    let pot_max: Vec<f64> = potential_errors
        .iter()
        .map(|e| e.iter().copied().fold(0.0, f64::max))
        .collect();

    let mut header = vec!["eps".to_string(), "sup_error".to_string()];
    header.extend(sample_times.iter().map(|t| format!("potential_error_t{}", num(*t))));
    let rows = cfg
        .eps_list
        .iter()
        .zip(&sup_errors)
        .zip(&potential_errors)
        .map(|((&e, &s), p)| {
            [num(e), num(s)]
                .into_iter()
                .chain(p.iter().map(|&v| num(v)))
                .collect::<Vec<_>>()
        });
    let files = vec![
        ctx.out.csv("limit_study.csv", &header, rows)?,
        ctx.out.json(
            "limit_study.json",
            &LimitMeta {
                config: cfg,
                eps_values: &cfg.eps_list,
                sample_times,
                sup_errors_decreasing: decreasing(&sup_errors),
                potential_errors_decreasing: decreasing(&pot_max),
                sup_errors,
                potential_errors,
                complete,
                horizon,
            },
        )?,
    ];
    if cfg.require_survival && !complete {
        return Err(CliError::Touchdown {
            stage: "limit-study",
            time: horizon,
        });
    }
    Ok(Report {
        kind: cfg.kind,
        files,
        summary: format!(
            "limit study over {} aspect ratios, horizon {horizon}",
            cfg.eps_list.len()
        ),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

fn check(name: &str, value: f64, threshold: f64, passed: bool) -> Check {
    Check {
        name: name.to_owned(),
        passed,
        value,
        threshold,
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// The invariant suite behind the `validate` kind, on small grids.
pub fn invariant_checks(seed: u64) -> mems_core::Result<Vec<Check>> {
    let mut out = Vec::new();
    for eps in [0.1, 1.0] {
        let errs = [16, 32, 64]
            .iter()
            .map(|&n| mms_errors(eps, n).map(|e| e.split))
            .collect::<mems_core::Result<Vec<_>>>()?;
        let orders = observed_orders(&errs);
        let worst = orders
            .iter()
            .copied()
            .fold(2.0f64, |m, p| if (p - 2.0).abs() > (m - 2.0).abs() { p } else { m });
        out.push(check(
            &format!("mms_order_eps_{eps}"),
            worst,
            0.1,
            (worst - 2.0).abs() <= 0.1,
        ));
    }

    let grid = Grid2D::with_cells(32, 16)?;
    let zero = MembraneState::zero(grid.gx().clone());
    let mut g_dev = 0.0f64;
    for eps in [0.01, 0.1, 1.0, 10.0] {
        g_dev = g_dev.max(
            g_eps(&zero, eps, &grid)?
                .iter()
                .fold(0.0f64, |m, g| m.max((g - 1.0).abs())),
        );
    }
    out.push(check("g_eps_at_rest", g_dev, 1e-10, g_dev <= 1e-10));

    let bowl = MembraneState::parabola(grid.gx().clone(), 0.4);
    let asym = solve_potential(&bowl, 0.5, &grid)?.asymmetry();
    out.push(check("potential_symmetry", asym, 1e-10, asym <= 1e-10));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dual = 0.0f64;
    for _ in 0..5 {
        let amps: Vec<f64> = (1..=3).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
        let raw = grid.gx().sample(|x| {
            amps.iter()
                .enumerate()
                .map(|(k, a)| a * (PI * (k + 1) as f64 * (x + 1.0) / 2.0).sin())
                .sum()
        });
        let scale = rng.gen_range(0.05..0.6) / raw.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        let v = MembraneState::new(grid.gx().clone(), raw.iter().map(|r| r * scale).collect(), 0.0)?;
        let eps = rng.gen_range(0.05..2.0);
        dual = dual.max(max_diff(
            &solve_potential(&v, eps, &grid)?.phi,
            &solve_potential_split(&v, eps, &grid)?.phi,
        ));
    }
    out.push(check("dual_formulation", dual, 1e-8, dual <= 1e-8));

    let p = mems_core::evolution::ModelParams {
        max_time: 0.1,
        equilibrium_tol: 0.0,
        ..mems_core::evolution::ModelParams::new(0.1, 0.3)
    };
    let traj = run(&MembraneState::parabola(grid.gx().clone(), 0.1), &p, &grid)?;
    let top = traj
        .states
        .iter()
        .map(|s| s.max_value())
        .fold(f64::NEG_INFINITY, f64::max);
    let tasym = traj.states.iter().map(|s| s.asymmetry()).fold(0.0, f64::max);
    out.push(check("sign_preservation", top, 1e-12, check_sign_preservation(&traj)));
    out.push(check(
        "evenness_preservation",
        tasym,
        1e-10,
        check_evenness_preservation(&traj),
    ));

    let b = nonexistence_bound(1.0)?;
    out.push(check(
        "nonexistence_bound_eps_1",
        (b - 2.0 / 3.0).abs(),
        1e-12,
        (b - 2.0 / 3.0).abs() <= 1e-12,
    ));
    Ok(out)
}

#[derive(Serialize)]
struct ValidateMeta<'a> {
    config: &'a ExperimentConfig,
    passed: usize,
    failed: usize,
    checks: &'a [Check],
}

fn validate(ctx: &Ctx) -> CliResult<Report> {
    let cfg = ctx.cfg;
    let checks = invariant_checks(cfg.seed).map_err(CliError::solver("validate"))?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let files = vec![
        ctx.out.csv(
            "validate.csv",
            &["check", "passed", "value", "threshold"].map(String::from),
            checks
                .iter()
                .map(|c| [c.name.clone(), c.passed.to_string(), num(c.value), num(c.threshold)]),
        )?,
        ctx.out.json(
            "validate.json",
            &ValidateMeta {
                config: cfg,
                passed: checks.len() - failed,
                failed,
                checks: &checks,
            },
        )?,
    ];
    for c in checks.iter().filter(|c| !c.passed) {
        ctx.note(&format!(
            "check {} failed: {} (threshold {})",
            c.name, c.value, c.threshold
        ));
    }
    if failed > 0 {
        return Err(CliError::Validation {
            failed,
            total: checks.len(),
        });
    }
    Ok(Report {
        kind: cfg.kind,
        files,
        summary: format!("{} checks passed", checks.len()),
    })
}
