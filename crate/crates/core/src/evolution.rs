//! Semi-implicit time stepping of the membrane equation
//!
//! ```text
//! u_t = D(u) u_xx - lambda g_eps(u),   u(t, +-1) = 0,
//! ```
//!
//! with `D(u) = (1 + eps^2 u_x^2)^(-3/2)` for the curvature operator and
//! `D = 1` for the linearized stretching model. Each step solves
//! `(I - dt D(u^n) d_xx) u^{n+1} = u^n - dt lambda g_eps(u^n)`: diffusion is
//! implicit with the coefficient frozen at the old state, the electrostatic
//! source is explicit.

use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{g_eps, solve_potential_split, trace_top};
use crate::math::{pow3_2, sqrt};
use crate::numerics::{d1_central, d2_central, solve_tridiagonal, Grid2D};
use crate::small_aspect::psi0_pullback;
use crate::transform::MembraneState;
use crate::{Error, Result};

/// Stretching law of the membrane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Full curvature operator `d_x(u_x / sqrt(1 + eps^2 u_x^2))`.
    Quasilinear,
    /// Small-deformation law `u_xx`.
    Linearized,
}

/// How the electrostatic source is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Forcing {
    /// `g_eps(u)` from the transformed potential problem.
    Electrostatic,
    /// `1 / (1 + u)^2` obtained from the trace of the explicit zero-aspect
    /// potential `(1 + z) / (1 + u)`; used to check that the pipeline
    /// degenerates to the small-aspect model.
    ZeroAspect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub eps: f64,
    pub lambda: f64,
    pub mode: Mode,
    pub forcing: Forcing,
    pub dt: f64,
    /// A run stops with touchdown once `min(1 + u) <= touchdown_floor`.
    pub touchdown_floor: f64,
    /// A run counts as converged once `max|u^{n+1} - u^n| / dt` drops to
    /// this value.
    pub equilibrium_tol: f64,
    pub max_time: f64,
    /// Keep every `store_every`-th state in the trajectory (the first and
    /// last states are always kept).
    pub store_every: usize,
    pub record_energy: bool,
}

impl ModelParams {
    pub fn new(eps: f64, lambda: f64) -> Self {
        Self {
            eps,
            lambda,
            mode: Mode::Quasilinear,
            forcing: Forcing::Electrostatic,
            dt: 1e-3,
            touchdown_floor: 0.05,
            equilibrium_tol: 1e-9,
            max_time: 10.0,
            store_every: 1,
            record_energy: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter { name: "eps" });
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter { name: "lambda" });
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt" });
        }
        if !(self.touchdown_floor > 0.0 && self.touchdown_floor < 1.0) {
            return Err(Error::InvalidParameter {
                name: "touchdown_floor",
            });
        }
        if !(self.equilibrium_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "equilibrium_tol",
            });
        }
        if !(self.max_time > 0.0) {
            return Err(Error::InvalidParameter { name: "max_time" });
        }
        if self.store_every == 0 {
            return Err(Error::InvalidParameter { name: "store_every" });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Converged,
    Touchdown,
    MaxTimeReached,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<MembraneState>,
    pub outcome: Outcome,
    pub touchdown_time: Option<f64>,
    pub energy_series: Vec<(f64, f64)>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &MembraneState {
        self.states.last().expect("a trajectory holds its initial state")
    }
}

/// Nodal mobility `D(u)`.
pub fn mobility(u: &MembraneState, p: &ModelParams) -> Result<Vec<f64>> {
    match p.mode {
        Mode::Linearized => Ok(vec![1.0; u.values().len()]),
        Mode::Quasilinear => {
            let du = d1_central(u.values(), u.grid())?;
            let e2 = p.eps * p.eps;
            Ok(du.iter().map(|d| 1.0 / pow3_2(1.0 + e2 * d * d)).collect())
        }
    }
}

/// Nodal source `g` (without the factor `lambda`).
pub fn source(u: &MembraneState, p: &ModelParams, grid: &Grid2D) -> Result<Vec<f64>> {
    match p.forcing {
        Forcing::Electrostatic => g_eps(u, p.eps, grid),
        Forcing::ZeroAspect => {
            let phi0 = psi0_pullback(u, grid)?;
            let t = trace_top(&phi0)?;
            Ok(u.values()
                .iter()
                .zip(&t.dphi_top)
                .map(|(&v, &tr)| tr * tr / ((1.0 + v) * (1.0 + v)))
                .collect())
        }
    }
}

/// `D(u) u_xx - lambda g(u)` at interior nodes, zero at the clamped ends.
pub fn rhs(u: &MembraneState, p: &ModelParams, grid: &Grid2D) -> Result<Vec<f64>> {
    u.check_admissible()?;
    let d = mobility(u, p)?;
    let uxx = d2_central(u.values(), u.grid())?;
    let g = if p.lambda == 0.0 {
        vec![0.0; d.len()]
    } else {
        source(u, p, grid)?
    };
    let n = d.len() - 1;
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        out[i] = d[i] * uxx[i] - p.lambda * g[i];
    }
    Ok(out)
}

/// One IMEX step of size `p.dt`.
pub fn step(u: &MembraneState, p: &ModelParams, grid: &Grid2D) -> Result<MembraneState> {
    u.check_admissible()?;
    let d = mobility(u, p)?;
    let g = if p.lambda == 0.0 {
        vec![0.0; d.len()]
    } else {
        source(u, p, grid)?
    };
    let n = d.len() - 1;
    let h = u.grid().h();
    let r = p.dt / (h * h);
    let m = n - 1;
    let mut lower = Vec::with_capacity(m - 1);
    let mut diag = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m - 1);
    let mut b = Vec::with_capacity(m);
    for i in 1..n {
        let w = r * d[i];
        diag.push(1.0 + 2.0 * w);
        if i > 1 {
            lower.push(-w);
        }
        if i < n - 1 {
            upper.push(-w);
        }
        b.push(u.values()[i] - p.dt * p.lambda * g[i]);
    }
    let x = solve_tridiagonal(&lower, &diag, &upper, &b)?;
    let mut next = vec![0.0; n + 1];
    next[1..n].copy_from_slice(&x);
    MembraneState::new(u.grid().clone(), next, u.time + p.dt)
}

/// Integrates until equilibrium, touchdown or `p.max_time`.
pub fn run(u0: &MembraneState, p: &ModelParams, grid: &Grid2D) -> Result<Trajectory> {
    run_observed(u0, p, grid, |_| {})
}

/// Like [`run`], calling `observe` on every computed state (including the
/// initial one), regardless of thinning.
pub fn run_observed(
    u0: &MembraneState,
    p: &ModelParams,
    grid: &Grid2D,
    mut observe: impl FnMut(&MembraneState),
) -> Result<Trajectory> {
    p.validate()?;
    let t0 = u0.time;
    let n_steps = {
        let s = p.max_time / p.dt;
        let r = libm::round(s);
        (if (s - r).abs() < 1e-9 * s.max(1.0) {
            r
        } else {
            libm::ceil(s)
        }) as usize
    };
    let mut traj = Trajectory {
        states: vec![u0.clone()],
        outcome: Outcome::MaxTimeReached,
        touchdown_time: None,
        energy_series: Vec::new(),
        steps: 0,
    };
    if p.record_energy {
        traj.energy_series.push((t0, total_energy(u0, p, grid)?));
    }
    observe(u0);
    if u0.min_gap() <= p.touchdown_floor {
        traj.outcome = Outcome::Touchdown;
        traj.touchdown_time = Some(t0);
        return Ok(traj);
    }

    let mut u = u0.clone();
    for k in 1..=n_steps {
        let mut next = step(&u, p, grid)?;
        next.time = t0 + k as f64 * p.dt;
        let change = next
            .values()
            .iter()
            .zip(u.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / p.dt;
        u = next;
        traj.steps = k;
        observe(&u);

        let touchdown = u.min_gap() <= p.touchdown_floor;
        let converged = !touchdown && change <= p.equilibrium_tol;
        let last = touchdown || converged || k == n_steps;
        if p.record_energy && !touchdown {
            traj.energy_series.push((u.time, total_energy(&u, p, grid)?));
        }
        if last || k % p.store_every == 0 {
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

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    h * (values[1..n].iter().sum::<f64>() + 0.5 * (values[0] + values[n]))
}

/// Elastic energy `int (sqrt(1 + eps^2 u_x^2) - 1) dx` minus
/// `lambda / 2 int_{Omega(u)} (eps^2 psi_x^2 + psi_z^2)`.
///
/// The field integral is evaluated on the rectangle: with `psi = phi o T_u`,
/// `psi_z = phi_eta / (1 + u)`, `psi_x = phi_x - eta u_x phi_eta / (1 + u)`
/// and `dz = (1 + u) d eta`. Both integrals use the trapezoid rule.
pub fn total_energy(u: &MembraneState, p: &ModelParams, grid: &Grid2D) -> Result<f64> {
    u.check_admissible()?;
    let e2 = p.eps * p.eps;
    let du = d1_central(u.values(), u.grid())?;
    let stretch: Vec<f64> = du.iter().map(|d| sqrt(1.0 + e2 * d * d) - 1.0).collect();
    let elastic = trapezoid(&stretch, u.grid().h());
    if p.lambda == 0.0 {
        return Ok(elastic);
    }

    let phi = solve_potential_split(u, p.eps, grid)?;
    let (nx, ne) = (grid.n_x(), grid.n_eta());
    let gx = grid.gx();
    // phi_eta along each column, phi_x along each row
    let mut phi_eta = vec![0.0; grid.len()];
    let col_grid = crate::numerics::Grid1D::new(ne)?;
    for i in 0..=nx {
        let col: Vec<f64> = (0..=ne).map(|j| phi.at(i, j)).collect();
        // d1_central works on [-1, 1]; rescale to [0, 1]
        let d = d1_central(&col, &col_grid)?;
        for j in 0..=ne {
            phi_eta[grid.idx(i, j)] = 2.0 * d[j];
        }
    }
    let mut column_integrals = Vec::with_capacity(nx + 1);
    let mut integrand = vec![0.0; ne + 1];
    let mut rows_x: Vec<Vec<f64>> = Vec::with_capacity(ne + 1);
    for j in 0..=ne {
        let row: Vec<f64> = (0..=nx).map(|i| phi.at(i, j)).collect();
        rows_x.push(d1_central(&row, gx)?);
    }
    for i in 0..=nx {
        let gap = 1.0 + u.values()[i];
        for j in 0..=ne {
            let eta = grid.eta_nodes()[j];
            let pe = phi_eta[grid.idx(i, j)];
            let psi_x = rows_x[j][i] - eta * du[i] * pe / gap;
            let psi_z = pe / gap;
            integrand[j] = (e2 * psi_x * psi_x + psi_z * psi_z) * gap;
        }
        column_integrals.push(trapezoid(&integrand, grid.h_eta()));
    }
    let field = trapezoid(&column_integrals, gx.h());
    Ok(elastic - 0.5 * p.lambda * field)
}

/// True iff every stored state satisfies `max u <= 1e-12`.
pub fn check_sign_preservation(traj: &Trajectory) -> bool {
    traj.states.iter().all(|s| s.max_value() <= 1e-12)
}

/// True iff every stored state is even to `1e-10`.
pub fn check_evenness_preservation(traj: &Trajectory) -> bool {
    traj.states.iter().all(|s| s.asymmetry() <= 1e-10)
}
