//! The zero-aspect-ratio model
//!
//! ```text
//! u_t = u_xx - lambda / (1 + u)^2,   psi_0 = (1 + z) / (1 + u),
//! ```
//!
//! its steady problem and pull-in voltage, and the comparison of the full
//! model against it as `eps -> 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{solve_potential, PotentialField};
use crate::evolution::{self, Mode, ModelParams, Outcome, Trajectory};
use crate::math::{max_abs, sqrt};
use crate::numerics::{solve_tridiagonal, Grid1D, Grid2D};
use crate::transform::MembraneState;
use crate::{Error, Result};

/// `(1 + z) / (1 + u)` for `-1 <= z <= u`.
pub fn psi0_at(u: f64, z: f64) -> f64 {
    (1.0 + z) / (1.0 + u)
}

/// Zero-aspect potential sampled on `[-1, 1] x [-1, 0]`; node `(i, j)` sits
/// at `z = eta_j - 1`. Nodes above the membrane are flagged outside and hold
/// zero.
#[derive(Clone, Debug)]
pub struct Psi0Field {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

pub fn psi0(u0: &MembraneState, grid: &Grid2D) -> Result<Psi0Field> {
    if u0.grid() != grid.gx() {
        return Err(Error::DimensionMismatch {
            expected: grid.gx().len(),
            found: u0.values().len(),
        });
    }
    u0.check_admissible()?;
    let mut values = vec![0.0; grid.len()];
    let mut inside = vec![false; grid.len()];
    for j in 0..=grid.n_eta() {
        let z = grid.eta_nodes()[j] - 1.0;
        for i in 0..=grid.n_x() {
            let u = u0.values()[i];
            let k = grid.idx(i, j);
            if z <= u {
                inside[k] = true;
                values[k] = psi0_at(u, z);
            }
        }
    }
    Ok(Psi0Field {
        grid: grid.clone(),
        values,
        inside,
    })
}

/// `psi_0 o T_u^{-1}` on the rectangle: evaluated at the physical height
/// `z = (1 + u) eta - 1` of every node.
pub fn psi0_pullback(u: &MembraneState, grid: &Grid2D) -> Result<PotentialField> {
    u.check_admissible()?;
    let mut phi = vec![0.0; grid.len()];
    for j in 0..=grid.n_eta() {
        let eta = grid.eta_nodes()[j];
        for i in 0..=grid.n_x() {
            let gap = 1.0 + u.values()[i];
            phi[grid.idx(i, j)] = psi0_at(u.values()[i], gap * eta - 1.0);
        }
    }
    PotentialField::new(grid.clone(), phi)
}

/// One IMEX step of the zero-aspect model.
pub fn step0(u: &MembraneState, lambda: f64, dt: f64) -> Result<MembraneState> {
    u.check_admissible()?;
    let n = u.grid().n_cells();
    let h = u.grid().h();
    let r = dt / (h * h);
    let m = n - 1;
    let off = vec![-r; m - 1];
    let diag = vec![1.0 + 2.0 * r; m];
    let b: Vec<f64> = u.values()[1..n]
        .iter()
        .map(|&v| v - dt * lambda / ((1.0 + v) * (1.0 + v)))
        .collect();
    let x = solve_tridiagonal(&off, &diag, &off, &b)?;
    let mut next = vec![0.0; n + 1];
    next[1..n].copy_from_slice(&x);
    MembraneState::new(u.grid().clone(), next, u.time + dt)
}

/// Time integration of the zero-aspect model. Uses `lambda`, `dt`, the
/// stopping rules and `store_every` from `p`; `eps` and `mode` are ignored.
pub fn run0(u0: &MembraneState, p: &ModelParams) -> Result<Trajectory> {
    p.validate()?;
    let t0 = u0.time;
    let n_steps = steps_for(p.max_time, p.dt);
    let mut traj = Trajectory {
        states: vec![u0.clone()],
        outcome: Outcome::MaxTimeReached,
        touchdown_time: None,
        energy_series: Vec::new(),
        steps: 0,
    };
    if u0.min_gap() <= p.touchdown_floor {
        traj.outcome = Outcome::Touchdown;
        traj.touchdown_time = Some(t0);
        return Ok(traj);
    }
    let mut u = u0.clone();
    for k in 1..=n_steps {
        let mut next = step0(&u, p.lambda, p.dt)?;
        next.time = t0 + k as f64 * p.dt;
        let change = next
            .values()
            .iter()
            .zip(u.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / p.dt;
        u = next;
        traj.steps = k;
        let touchdown = u.min_gap() <= p.touchdown_floor;
        let converged = !touchdown && change <= p.equilibrium_tol;
        if touchdown || converged || k == n_steps || k % p.store_every == 0 {
            traj.states.push(u.clone());
        }
        if touchdown {
            traj.outcome = Outcome::Touchdown;
            traj.touchdown_time = Some(u.time);
            break;
        }
        if converged {
            traj.outcome = Outcome::Converged;
            break;
        }
    }
    Ok(traj)
}

pub(crate) fn steps_for(t: f64, dt: f64) -> usize {
    let s = t / dt;
    let r = libm::round(s);
    (if (s - r).abs() < 1e-9 * s.max(1.0) {
        r
    } else {
        libm::ceil(s)
    }) as usize
}

const STEADY0_MAX_ITER: usize = 50;
const STEADY0_FLOOR: f64 = 0.05;

/// Steady zero-aspect state `u'' = lambda / (1 + u)^2` on the minimal
/// branch.
///
/// Newton is first started from `u = 0`. Close to the fold that guess lies
/// outside the basin of attraction, so on failure the state is followed from
/// `lambda = 0` in steps that are halved whenever Newton fails; the call
/// fails once the step drops below `1e-9 lambda`.
pub fn steady0(lambda: f64, tol: f64, grid: &Grid1D) -> Result<MembraneState> {
    let zero = MembraneState::zero(grid.clone());
    let direct = steady0_from(lambda, &zero, tol);
    if direct.is_ok() || lambda == 0.0 {
        return direct;
    }
    let mut at = 0.0;
    let mut state = zero;
    let mut dl = lambda / 8.0;
    while at < lambda {
        let target = (at + dl).min(lambda);
        match steady0_from(target, &state, tol) {
            Ok(s) => {
                state = s;
                at = target;
            }
            Err(e @ Error::NoSteadyState { .. }) | Err(e @ Error::DegenerateGeometry { .. }) => {
                if dl < 1e-9 * lambda {
                    return Err(match e {
                        Error::NoSteadyState { residual, .. } => Error::NoSteadyState { lambda, residual },
                        other => other,
                    });
                }
                dl *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

fn residual0(u: &[f64], lambda: f64, h: f64) -> Vec<f64> {
    let n = u.len() - 1;
    let mut r = vec![0.0; n + 1];
    for i in 1..n {
        let g = 1.0 + u[i];
        r[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h) - lambda / (g * g);
    }
    r
}

/// Like [`steady0`] with an explicit starting guess.
pub fn steady0_from(lambda: f64, guess: &MembraneState, tol: f64) -> Result<MembraneState> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter { name: "lambda" });
    }
    if guess.min_gap() <= STEADY0_FLOOR {
        return Err(Error::DegenerateGeometry {
            min_gap: guess.min_gap(),
        });
    }
    let grid = guess.grid().clone();
    let n = grid.n_cells();
    let h = grid.h();
    let mut u = guess.values().to_vec();
    let mut r = residual0(&u, lambda, h);
    let mut norm = max_abs(&r);
    for _ in 0..STEADY0_MAX_ITER {
        if norm <= tol {
            return MembraneState::new(grid, u, 0.0);
        }
        let m = n - 1;
        let off = vec![1.0 / (h * h); m - 1];
        let diag: Vec<f64> = (1..n)
            .map(|i| {
                let g = 1.0 + u[i];
                -2.0 / (h * h) + 2.0 * lambda / (g * g * g)
            })
            .collect();
        let rhs: Vec<f64> = r[1..n].iter().map(|x| -x).collect();
        let step =
            solve_tridiagonal(&off, &diag, &off, &rhs).map_err(|_| Error::NoSteadyState { lambda, residual: norm })?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=8 {
            let mut trial = u.clone();
            for (t, s) in trial[1..n].iter_mut().zip(&step) {
                *t += alpha * s;
            }
            if trial.iter().all(|&v| 1.0 + v > STEADY0_FLOOR) {
                let rt = residual0(&trial, lambda, h);
                let nt = max_abs(&rt);
                if nt < norm {
                    u = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NoSteadyState { lambda, residual: norm });
        }
    }
    if norm <= tol {
        return MembraneState::new(grid, u, 0.0);
    }
    Err(Error::NoSteadyState { lambda, residual: norm })
}

/// Pull-in estimate from bisection on the existence of steady states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PullIn {
    pub lambda_star: f64,
    /// Largest value with a converged steady state.
    pub lower: f64,
    /// Smallest value without one.
    pub upper: f64,
}

/// Residual tolerance used by the bisection.
const PULLIN_NEWTON_TOL: f64 = 1e-10;

/// Bisection for the largest `lambda` at which [`steady0`] succeeds. Stops
/// once the bracket is narrower than `tol`.
pub fn pullin0(tol: f64, grid: &Grid1D) -> Result<PullIn> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter { name: "tol" });
    }
    let exists = |l: f64| steady0(l, PULLIN_NEWTON_TOL, grid).is_ok();
    let mut lo = 0.0;
    let mut hi = 0.5;
    while exists(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonConvergence { residual: hi });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if exists(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PullIn {
        lambda_star: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
    })
}

/// Pull-in value of the continuous zero-aspect problem on `(-1, 1)` from
/// shooting: with `w'' = 1 / (1 + w)^2`, `w(0) = -a`, `w'(0) = 0` and `s(a)`
/// the first zero of `w`, the scaling `u(x) = w(s x)` solves the steady
/// problem for `lambda = s(a)^2`, and the pull-in value is the maximum over
/// `a`.
pub fn pullin0_shooting(tol: f64) -> f64 {
    let lam = |a: f64| {
        let s = first_zero(a);
        s * s
    };
    // golden-section search on the unimodal map a -> lambda(a)
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (0.05, 0.95);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (lam(c), lam(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = lam(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = lam(d);
        }
    }
    fc.max(fd)
}

fn rk4(w: f64, p: f64, ds: f64) -> (f64, f64) {
    let f = |w: f64| 1.0 / ((1.0 + w) * (1.0 + w));
    let (k1w, k1p) = (p, f(w));
    let (k2w, k2p) = (p + 0.5 * ds * k1p, f(w + 0.5 * ds * k1w));
    let (k3w, k3p) = (p + 0.5 * ds * k2p, f(w + 0.5 * ds * k2w));
    let (k4w, k4p) = (p + ds * k3p, f(w + ds * k3w));
    (
        w + ds / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        p + ds / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

fn first_zero(a: f64) -> f64 {
    const DS: f64 = 1e-3;
    let (mut w, mut p, mut s) = (-a, 0.0, 0.0);
    loop {
        let (wn, pn) = rk4(w, p, DS);
        if wn >= 0.0 {
            // secant on the step length of a single RK4 step
            let (mut lo, mut hi) = (0.0, DS);
            let (mut flo, mut fhi) = (w, wn);
            for _ in 0..60 {
                let mid = lo - flo * (hi - lo) / (fhi - flo);
                let fm = rk4(w, p, mid).0;
                if fm.abs() < 1e-15 {
                    return s + mid;
                }
                if fm < 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                    fhi = fm;
                }
            }
            return s + 0.5 * (lo + hi);
        }
        w = wn;
        p = pn;
        s += DS;
    }
}

/// Comparison of the full model with the zero-aspect model for a sequence of
/// aspect ratios.
#[derive(Clone, Debug)]
pub struct LimitComparison {
    pub eps_values: Vec<f64>,
    pub sample_times: Vec<f64>,
    /// `sup_errors[k]` is the largest `max_x |u_eps - u_0|` over all time
    /// steps up to the horizon for `eps_values[k]`.
    pub sup_errors: Vec<f64>,
    /// `potential_errors[k][s]` is the `L^2(I x (-1, 0))` distance of the
    /// zero-extended potentials at `sample_times[s]`.
    pub potential_errors: Vec<Vec<f64>>,
    /// False when touchdown cut the horizon short. Errors then cover the span
    /// on which every run exists and later samples are dropped.
    pub complete: bool,
}

impl LimitComparison {
    pub fn potential_sup(&self) -> Vec<f64> {
        self.potential_errors
            .iter()
            .map(|e| e.iter().copied().fold(0.0, f64::max))
            .collect()
    }
}

pub struct LimitSetup<'a> {
    pub u0: &'a MembraneState,
    pub lambda: f64,
    pub eps_values: &'a [f64],
    pub tau: f64,
    pub dt: f64,
    pub grid: &'a Grid2D,
}

/// Runs the full quasilinear model for each `eps` and the zero-aspect model
/// from the same data, sampled at `tau/4, tau/2, 3 tau/4, tau`.
pub fn limit_study(setup: &LimitSetup) -> Result<LimitComparison> {
    let LimitSetup {
        u0,
        lambda,
        eps_values,
        tau,
        dt,
        grid,
    } = *setup;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter { name: "tau" });
    }
    let sample_steps: Vec<usize> = (1..=4).map(|k| steps_for(tau * k as f64 / 4.0, dt)).collect();
    let n_steps = sample_steps[3];
    let base = ModelParams {
        lambda,
        dt,
        max_time: n_steps as f64 * dt,
        equilibrium_tol: 0.0,
        mode: Mode::Quasilinear,
        ..ModelParams::new(1.0, lambda)
    };
    let floor = base.touchdown_floor;

    let mut reference = vec![u0.clone()];
    while reference.len() <= n_steps && reference[reference.len() - 1].min_gap() > floor {
        let next = step0(&reference[reference.len() - 1], lambda, dt)?;
        reference.push(next);
    }

    let mut runs = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let p = ModelParams { eps, ..base.clone() };
        let mut path = Vec::with_capacity(n_steps + 1);
        let traj = evolution::run_observed(u0, &p, grid, |s| path.push(s.clone()))?;
        if traj.outcome == Outcome::Converged {
            // stationary from here on
            let last = path[path.len() - 1].clone();
            path.resize(n_steps + 1, last);
        }
        runs.push(path);
    }

    // number of leading states that exist in every run
    let alive = |path: &[MembraneState]| path.iter().take_while(|s| s.min_gap() > floor).count();
    let common = runs.iter().map(|p| alive(p)).fold(alive(&reference), usize::min);
    let samples: Vec<usize> = sample_steps.iter().copied().filter(|&k| k < common).collect();

    let mut out = LimitComparison {
        eps_values: eps_values.to_vec(),
        sample_times: samples.iter().map(|&k| k as f64 * dt).collect(),
        sup_errors: Vec::with_capacity(eps_values.len()),
        potential_errors: Vec::with_capacity(eps_values.len()),
        complete: common == n_steps + 1,
    };
    for (path, &eps) in runs.iter().zip(eps_values) {
        let sup = path[..common]
            .iter()
            .zip(&reference)
            .map(|(a, b)| {
                a.values()
                    .iter()
                    .zip(b.values())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            })
            .fold(0.0, f64::max);
        let mut pot = Vec::with_capacity(samples.len());
        for &k in &samples {
            let field = solve_potential(&path[k], eps, grid)?;
            pot.push(potential_distance(&field, &path[k], &reference[k])?);
        }
        out.sup_errors.push(sup);
        out.potential_errors.push(pot);
    }
    Ok(out)
}

/// `L^2` distance on `[-1, 1] x [-1, 0]` between the potential of `ue`
/// (given on the rectangle) and `psi_0` of `u0`, both extended by zero above
/// their membranes. Along each column both are piecewise linear in `z`, so
/// Simpson's rule on every piece is exact; columns are combined with the
/// trapezoid rule.
pub fn potential_distance(field: &PotentialField, ue: &MembraneState, u0: &MembraneState) -> Result<f64> {
    let grid = &field.grid;
    let (nx, ne) = (grid.n_x(), grid.n_eta());
    if ue.values().len() != nx + 1 || u0.values().len() != nx + 1 {
        return Err(Error::DimensionMismatch {
            expected: nx + 1,
            found: ue.values().len().min(u0.values().len()),
        });
    }
    let mut cols = Vec::with_capacity(nx + 1);
    for i in 0..=nx {
        let ge = 1.0 + ue.values()[i];
        let top0 = u0.values()[i];
        let ref_at = |z: f64| if z <= top0 { psi0_at(top0, z) } else { 0.0 };
        let mut sum = 0.0;
        let mut piece = |za: f64, zb: f64, fa: &dyn Fn(f64) -> f64| {
            if zb <= za {
                return;
            }
            let zm = 0.5 * (za + zb);
            let (a, m, b) = (fa(za), fa(zm), fa(zb));
            sum += (zb - za) / 6.0 * (a * a + 4.0 * m * m + b * b);
        };
        for j in 0..ne {
            let za = ge * grid.eta_nodes()[j] - 1.0;
            let zb = if j + 1 == ne {
                ue.values()[i]
            } else {
                ge * grid.eta_nodes()[j + 1] - 1.0
            };
            let (pa, pb) = (field.at(i, j), field.at(i, j + 1));
            let fe = move |z: f64| pa + (pb - pa) * (z - za) / (zb - za);
            // split where psi_0 switches off
            let cut = top0.clamp(za, zb);
            let lo_part = |z: f64| fe(z) - ref_at(z.min(top0));
            piece(za, cut, &lo_part);
            piece(cut, zb, &fe);
        }
        let top_e = ue.values()[i];
        if top0 > top_e {
            piece(top_e, top0, &|z: f64| ref_at(z));
        }
        cols.push(sum);
    }
    let h = grid.h_x();
    let total = h * (cols[1..nx].iter().sum::<f64>() + 0.5 * (cols[0] + cols[nx]));
    Ok(sqrt(total))
}
