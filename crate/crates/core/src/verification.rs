//! Manufactured-solution study for the potential solver.
//!
//! The membrane is `v(x) = -(1 - x^2) / 4` and the exact correction is
//! `Phi*(x, eta) = sin(pi (x + 1) / 2) sin(pi eta)`. The forcing
//! `F = -L_v Phi*` is built from closed-form derivatives and coefficients,
//! so it does not share code with the discrete assembly it checks.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::elliptic::{trace_top, EllipticSystem, PotentialField};
use crate::math::{cos, sin};
use crate::numerics::Grid2D;
use crate::transform::MembraneState;
use crate::Result;

const DEPTH: f64 = 0.25;

fn membrane(x: f64) -> (f64, f64, f64) {
    // v, v', v''
    (-DEPTH * (1.0 - x * x), 2.0 * DEPTH * x, 2.0 * DEPTH)
}

/// Exact correction `Phi*`.
pub fn exact_correction(x: f64, eta: f64) -> f64 {
    sin(PI * (x + 1.0) / 2.0) * sin(PI * eta)
}

/// Exact `d_eta Phi*(x, 1)`.
pub fn exact_correction_trace(x: f64) -> f64 {
    -PI * sin(PI * (x + 1.0) / 2.0)
}

/// `-L_v Phi*` evaluated from closed forms.
pub fn manufactured_forcing(eps: f64, x: f64, eta: f64) -> f64 {
    let (v, dv, d2v) = membrane(x);
    let gap = 1.0 + v;
    let e2 = eps * eps;
    let a_xx = e2;
    let a_xeta = -2.0 * e2 * eta * dv / gap;
    let a_etaeta = (1.0 + e2 * eta * eta * dv * dv) / (gap * gap);
    let b_eta = e2 * eta * (2.0 * (dv / gap) * (dv / gap) - d2v / gap);

    let k = PI / 2.0;
    let (sx, cx) = (sin(k * (x + 1.0)), cos(k * (x + 1.0)));
    let (se, ce) = (sin(PI * eta), cos(PI * eta));
    let p_xx = -k * k * sx * se;
    let p_xeta = k * PI * cx * ce;
    let p_etaeta = -PI * PI * sx * se;
    let p_eta = PI * sx * ce;
    -(a_xx * p_xx + a_xeta * p_xeta + a_etaeta * p_etaeta + b_eta * p_eta)
}

/// Max-norm errors of one manufactured solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsErrors {
    pub n: usize,
    /// Homogeneous-data formulation `-L_v Phi = F`.
    pub split: f64,
    /// Direct formulation `L_v phi = f_v - F`, `phi = eta` on the boundary.
    pub direct: f64,
    /// Top trace of the split solution against `d_eta Phi*(x, 1)`.
    pub trace: f64,
}

pub fn mms_errors(eps: f64, n: usize) -> Result<MmsErrors> {
    let grid = Grid2D::with_cells(n, n)?;
    let v = MembraneState::from_fn(grid.gx().clone(), |x| membrane(x).0)?;
    let sys = EllipticSystem::new(&v, eps, &grid)?;

    let forcing = grid.sample(|x, eta| manufactured_forcing(eps, x, eta));
    let exact = grid.sample(exact_correction);

    let big_phi = sys.solve_homogeneous(&forcing)?;
    let split = max_diff(&big_phi, &exact);

    // L_v (eta + Phi*) = f_v - F, and f_v is the b_eta field.
    let source: Vec<f64> = sys
        .coefficients()
        .b_eta
        .iter()
        .zip(&forcing)
        .map(|(b, f)| b - f)
        .collect();
    let lin = grid.sample(|_, eta| eta);
    let phi = sys.solve(Some(&source), &lin)?;
    let shifted: Vec<f64> = phi.iter().zip(&lin).map(|(p, e)| p - e).collect();
    let direct = max_diff(&shifted, &exact);

    let field = PotentialField::new(grid.clone(), big_phi)?;
    let tr = trace_top(&field)?;
    let trace = tr
        .dphi_top
        .iter()
        .zip(grid.gx().nodes())
        .fold(0.0f64, |m, (t, &x)| m.max((t - exact_correction_trace(x)).abs()));
    Ok(MmsErrors {
        n,
        split,
        direct,
        trace,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Observed orders `log2(e_k / e_{k+1})` of a sequence of errors on grids
/// refined by a factor of two.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| crate::math::ln(w[0] / w[1]) / core::f64::consts::LN_2)
        .collect()
}
