//! Stationary membranes, branch continuation and the non-existence bound.
//!
//! A steady state solves
//!
//! ```text
//! u'' = lambda h_eps(u),   h_eps(u) = (1 + eps^2 u'^2)^(5/2) / (1 + u)^2 * |d_eta phi_u(., 1)|^2,
//! ```
//!
//! with `u(+-1) = 0`, which is the curvature equation multiplied through by
//! `(1 + eps^2 u'^2)^(3/2)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{trace_of_state, trace_sensitivity};
use crate::math::{max_abs, pow5_2, sqrt};
use crate::numerics::{d1_central, d2_central, DenseLu, Grid2D};
use crate::transform::MembraneState;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Converged once `max |R(u)| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of step halvings tried before giving up on an iteration.
    pub max_halvings: usize,
    /// Iterates with `min(1 + u) <= touchdown_floor` are rejected.
    pub touchdown_floor: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 8,
            touchdown_floor: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadySolution {
    pub state: MembraneState,
    pub residual: f64,
    pub iterations: usize,
}

fn h_from_trace(u: &[f64], du: &[f64], trace: &[f64], eps: f64) -> Vec<f64> {
    let e2 = eps * eps;
    u.iter()
        .zip(du)
        .zip(trace)
        .map(|((&v, &d), &t)| pow5_2(1.0 + e2 * d * d) * t * t / ((1.0 + v) * (1.0 + v)))
        .collect()
}

/// Nodal `h_eps(u)`.
pub fn h_eps(u: &MembraneState, eps: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    let t = trace_of_state(u, eps, grid)?;
    let du = d1_central(u.values(), u.grid())?;
    Ok(h_from_trace(u.values(), &du, &t, eps))
}

fn residual_from_parts(u: &MembraneState, trace: &[f64], lambda: f64, eps: f64) -> Result<Vec<f64>> {
    let uxx = d2_central(u.values(), u.grid())?;
    let du = d1_central(u.values(), u.grid())?;
    let h = h_from_trace(u.values(), &du, trace, eps);
    let n = uxx.len() - 1;
    let mut r = vec![0.0; n + 1];
    for i in 1..n {
        r[i] = uxx[i] - lambda * h[i];
    }
    Ok(r)
}

/// `u'' - lambda h_eps(u)` at interior nodes; the clamped ends carry zero.
pub fn steady_residual(u: &MembraneState, lambda: f64, eps: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    let t = trace_of_state(u, eps, grid)?;
    residual_from_parts(u, &t, lambda, eps)
}

/// Newton matrix `dR_i / du_k` over interior nodes, row-major.
fn jacobian(u: &MembraneState, lambda: f64, eps: f64, grid: &Grid2D) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = u.grid().n_cells();
    let m = n - 1;
    let delta = 1e-6 * (1.0 + max_abs(u.values()));
    let (trace, columns) = if lambda == 0.0 {
        (vec![1.0; n + 1], Vec::new())
    } else {
        let s = trace_sensitivity(u, eps, grid, delta)?;
        (s.trace, s.columns)
    };
    let r0 = residual_from_parts(u, &trace, lambda, eps)?;
    let mut jac = vec![0.0; m * m];
    let mut up = u.values().to_vec();
    let mut tp = trace.clone();
    for k in 1..n {
        up[k] += delta;
        if lambda != 0.0 {
            for (t, (t0, s)) in tp.iter_mut().zip(trace.iter().zip(&columns[k - 1])) {
                *t = t0 + delta * s;
            }
        }
        let state = MembraneState::new(u.grid().clone(), up.clone(), u.time)?;
        let r = residual_from_parts(&state, &tp, lambda, eps)?;
        up[k] = u.values()[k];
        for i in 1..n {
            jac[(i - 1) * m + (k - 1)] = (r[i] - r0[i]) / delta;
        }
    }
    Ok((jac, r0))
}

/// Damped Newton iteration for a steady state at `lambda`, started from
/// `guess`.
///
/// Each step is halved until the trial iterate stays above the touchdown
/// floor and lowers the residual. A guess or an iteration that can only
/// produce near-touching iterates yields [`Error::DegenerateGeometry`];
/// stagnation or the iteration cap yields [`Error::NoSteadyState`].
pub fn solve_steady(
    lambda: f64,
    eps: f64,
    guess: &MembraneState,
    grid: &Grid2D,
    opts: &NewtonOptions,
) -> Result<SteadySolution> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter { name: "lambda" });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter { name: "eps" });
    }
    if guess.min_gap() <= opts.touchdown_floor {
        return Err(Error::DegenerateGeometry {
            min_gap: guess.min_gap(),
        });
    }
    let n = guess.grid().n_cells();
    let mut u = guess.clone();
    let mut r = steady_residual(&u, lambda, eps, grid)?;
    let mut norm = max_abs(&r);
    for it in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok(SteadySolution {
                state: u,
                residual: norm,
                iterations: it,
            });
        }
        let (jac, _) = jacobian(&u, lambda, eps, grid)?;
        let lu = DenseLu::factor(n - 1, jac).map_err(|_| Error::NoSteadyState { lambda, residual: norm })?;
        let rhs: Vec<f64> = r[1..n].iter().map(|x| -x).collect();
        let step = lu.solve(&rhs)?;

        let mut alpha = 1.0;
        let mut accepted = None;
        let mut any_admissible = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = u.values().to_vec();
            for (t, s) in trial[1..n].iter_mut().zip(&step) {
                *t += alpha * s;
            }
            let trial = MembraneState::new(u.grid().clone(), trial, u.time)?;
            if trial.min_gap() > opts.touchdown_floor {
                any_admissible = true;
                if let Ok(rt) = steady_residual(&trial, lambda, eps, grid) {
                    let nt = max_abs(&rt);
                    if nt < norm {
                        accepted = Some((trial, rt, nt));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, rt, nt)) => {
                u = trial;
                r = rt;
                norm = nt;
            }
            None if !any_admissible => {
                return Err(Error::DegenerateGeometry { min_gap: u.min_gap() });
            }
            None => return Err(Error::NoSteadyState { lambda, residual: norm }),
        }
    }
    if norm <= opts.tol {
        return Ok(SteadySolution {
            state: u,
            residual: norm,
            iterations: opts.max_iter,
        });
    }
    Err(Error::NoSteadyState { lambda, residual: norm })
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub lambda: f64,
    pub state: MembraneState,
    pub min_gap: f64,
    pub newton_iters: usize,
}

/// Bracket of the fold: a steady state was found at `lower` but not at
/// `upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldBracket {
    pub lower: f64,
    pub upper: f64,
}

impl FoldBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Clone, Debug)]
pub struct SteadyBranch {
    pub eps: f64,
    pub points: Vec<BranchPoint>,
    pub fold: Option<FoldBracket>,
}

impl SteadyBranch {
    /// Midpoint of the fold bracket, if continuation stopped before
    /// `lambda_max`.
    pub fn fold_estimate(&self) -> Option<f64> {
        self.fold.map(|f| f.midpoint())
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("a branch starts at lambda = 0")
    }
}

/// Steps below `dlambda0 / 2^MAX_REFINEMENTS` end the continuation.
const MAX_REFINEMENTS: u32 = 12;

/// Natural-parameter continuation of the minimal branch from `u = 0` at
/// `lambda = 0`. A failed Newton solve halves the step; the step is never
/// enlarged again. Continuation stops at `lambda_max` or once the step has
/// been refined `MAX_REFINEMENTS` times, in which case the last failure
/// brackets the fold.
pub fn continue_branch(
    eps: f64,
    lambda_max: f64,
    dlambda0: f64,
    grid: &Grid2D,
    opts: &NewtonOptions,
) -> Result<SteadyBranch> {
    if !(dlambda0 > 0.0) {
        return Err(Error::InvalidParameter { name: "dlambda" });
    }
    if !(lambda_max >= 0.0) {
        return Err(Error::InvalidParameter { name: "lambda_max" });
    }
    let zero = MembraneState::zero(grid.gx().clone());
    let mut branch = SteadyBranch {
        eps,
        points: vec![BranchPoint {
            lambda: 0.0,
            min_gap: 1.0,
            state: zero,
            newton_iters: 0,
        }],
        fold: None,
    };
    let min_step = dlambda0 / f64::from(1u32 << MAX_REFINEMENTS);
    let mut dl = dlambda0;
    while branch.last().lambda < lambda_max {
        let from = branch.last();
        let target = (from.lambda + dl).min(lambda_max);
        match solve_steady(target, eps, &from.state, grid, opts) {
            Ok(sol) => branch.points.push(BranchPoint {
                lambda: target,
                min_gap: sol.state.min_gap(),
                state: sol.state,
                newton_iters: sol.iterations,
            }),
            Err(Error::NoSteadyState { .. } | Error::DegenerateGeometry { .. } | Error::SingularSystem { .. }) => {
                let lower = from.lambda;
                if dl <= min_step {
                    branch.fold = Some(FoldBracket { lower, upper: target });
                    break;
                }
                dl = 0.5 * (target - lower);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(branch)
}

/// `J(r) = r (2 r^2 + 3) / (3 (r^2 + 1)^(3/2))`.
pub fn j_function(r: f64) -> f64 {
    let s = r * r + 1.0;
    r * (2.0 * r * r + 3.0) / (3.0 * s * sqrt(s))
}

/// `min(2 J(eps), 2/3) / eps`: no steady state exists above this value.
pub fn nonexistence_bound(eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter { name: "eps" });
    }
    Ok((2.0 * j_function(eps)).min(2.0 / 3.0) / eps)
}

/// `min_i d_eta phi_u(x_i, 1) / (1 + u_i)` over all nodes: the smallest
/// physical normal field at the membrane, which is at least one for steady
/// states. At the clamped ends the discrete value is exactly one.
pub fn trace_lower_bound_check(u: &MembraneState, eps: f64, grid: &Grid2D) -> Result<f64> {
    let t = trace_of_state(u, eps, grid)?;
    Ok(t.iter()
        .zip(u.values())
        .map(|(ti, ui)| ti / (1.0 + ui))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert!((nonexistence_bound(0.1).unwrap() - 1.9835065).abs() < 1e-6);
        assert!((nonexistence_bound(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((nonexistence_bound(0.01).unwrap() - 1.99983335).abs() < 1e-7);
        assert!(nonexistence_bound(0.0).is_err());
    }

    #[test]
    fn j_saturates_at_two_thirds() {
        assert!(j_function(0.0) == 0.0);
        assert!((j_function(1e6) - 2.0 / 3.0).abs() < 1e-9);
        let mut prev = 0.0;
        for k in 1..200 {
            let v = j_function(k as f64 * 0.05);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn zero_lambda_gives_rest() {
        let g = Grid2D::with_cells(16, 8).unwrap();
        let guess = MembraneState::parabola(g.gx().clone(), 0.3);
        let sol = solve_steady(0.0, 0.2, &guess, &g, &NewtonOptions::default()).unwrap();
        assert!(max_abs(sol.state.values()) < 1e-10);
    }

    #[test]
    fn residual_of_rest() {
        let g = Grid2D::with_cells(16, 8).unwrap();
        let u = MembraneState::zero(g.gx().clone());
        let r = steady_residual(&u, 0.7, 0.3, &g).unwrap();
        for &x in &r[1..16] {
            assert!((x + 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn small_lambda_solution() {
        let g = Grid2D::with_cells(32, 16).unwrap();
        let zero = MembraneState::zero(g.gx().clone());
        let sol = solve_steady(0.1, 0.1, &zero, &g, &NewtonOptions::default()).unwrap();
        let r = steady_residual(&sol.state, 0.1, 0.1, &g).unwrap();
        assert!(max_abs(&r) <= 1e-10);
        assert!(sol.state.max_value() <= 0.0);
        assert!(sol.state.asymmetry() < 1e-9);
        assert!(sol.iterations <= 10);
    }

    #[test]
    fn bad_guess_is_degenerate() {
        let g = Grid2D::with_cells(16, 8).unwrap();
        let guess = MembraneState::parabola(g.gx().clone(), 0.97);
        assert!(matches!(
            solve_steady(0.1, 0.1, &guess, &g, &NewtonOptions::default()),
            Err(Error::DegenerateGeometry { .. })
        ));
    }
}
