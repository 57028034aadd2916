//! The map `T_v(x, z) = (x, (1 + z) / (1 + v(x)))` from the region between
//! plate and membrane onto the fixed rectangle, and the coefficients of the
//! pulled-back Laplacian
//!
//! ```text
//! L_v w = a_xx w_xx + a_xeta w_xeta + a_etaeta w_etaeta + b_eta w_eta
//! a_xx     = eps^2
//! a_xeta   = -2 eps^2 eta v' / (1 + v)
//! a_etaeta = (1 + eps^2 eta^2 v'^2) / (1 + v)^2
//! b_eta    = eps^2 eta [2 (v' / (1 + v))^2 - v'' / (1 + v)]
//! ```

use alloc::vec::Vec;

use crate::numerics::{d1_central, d2_central, Grid1D, Grid2D};
use crate::{Error, Result};

/// Membrane deflection sampled on a [`Grid1D`], clamped at `x = +-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MembraneState {
    grid: Grid1D,
    u: Vec<f64>,
    pub time: f64,
}

impl MembraneState {
    /// Builds a state from nodal values. The end values must vanish (to
    /// 1e-12); they are then set to exactly zero.
    pub fn new(grid: Grid1D, mut u: Vec<f64>, time: f64) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: u.len(),
            });
        }
        let last = u.len() - 1;
        if u[0].abs() > 1e-12 || u[last].abs() > 1e-12 {
            return Err(Error::Domain {
                what: "membrane must be clamped: u(-1) = u(1) = 0",
            });
        }
        u[0] = 0.0;
        u[last] = 0.0;
        Ok(Self { grid, u, time })
    }

    pub fn zero(grid: Grid1D) -> Self {
        let u = alloc::vec![0.0; grid.len()];
        Self { grid, u, time: 0.0 }
    }

    /// Samples `f` on the grid; `f(+-1)` must vanish.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = grid.sample(f);
        Self::new(grid, u, 0.0)
    }

    /// The parabola `-depth (1 - x^2)`.
    pub fn parabola(grid: Grid1D, depth: f64) -> Self {
        let u = grid.sample(|x| -depth * (1.0 - x * x));
        Self::new(grid, u, 0.0).expect("parabola is clamped")
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn into_values(self) -> Vec<f64> {
        self.u
    }

    /// `min(1 + u)`, the smallest gap to the ground plate.
    pub fn min_gap(&self) -> f64 {
        self.u.iter().fold(f64::INFINITY, |m, &v| m.min(1.0 + v))
    }

    pub fn max_value(&self) -> f64 {
        self.u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Errors with [`Error::DegenerateGeometry`] unless `min(1 + u) > 0`.
    pub fn check_admissible(&self) -> Result<()> {
        let g = self.min_gap();
        if !(g > 0.0) {
            return Err(Error::DegenerateGeometry { min_gap: g });
        }
        Ok(())
    }

    /// Deflection at `x`, linear between nodes.
    pub fn at(&self, x: f64) -> Result<f64> {
        self.grid.interpolate(&self.u, x)
    }

    /// Largest `|u(x) - u(-x)|` over the grid.
    pub fn asymmetry(&self) -> f64 {
        (0..self.u.len())
            .map(|i| (self.u[i] - self.u[self.grid.mirror(i)]).abs())
            .fold(0.0, f64::max)
    }
}

/// Nodal coefficient fields of `L_v` on a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorCoefficients {
    pub grid: Grid2D,
    pub a_xx: Vec<f64>,
    pub a_xeta: Vec<f64>,
    pub a_etaeta: Vec<f64>,
    pub b_eta: Vec<f64>,
}

impl OperatorCoefficients {
    /// Smallest eigenvalue of the symmetric principal symbol
    /// `[[a_xx, a_xeta / 2], [a_xeta / 2, a_etaeta]]` over all nodes.
    pub fn min_symbol_eigenvalue(&self) -> f64 {
        let mut m = f64::INFINITY;
        for k in 0..self.a_xx.len() {
            let (a, b, c) = (self.a_xx[k], 0.5 * self.a_xeta[k], self.a_etaeta[k]);
            let mean = 0.5 * (a + c);
            let rad = crate::math::sqrt(0.25 * (a - c) * (a - c) + b * b);
            m = m.min(mean - rad);
        }
        m
    }
}

/// `T_v(x, z) = (x, (1 + z) / (1 + v(x)))`.
pub fn map_to_rect(x: f64, z: f64, v: &MembraneState) -> Result<(f64, f64)> {
    let vx = v.at(x)?;
    if !(1.0 + vx > 0.0) {
        return Err(Error::DegenerateGeometry { min_gap: 1.0 + vx });
    }
    if z < -1.0 || z > vx {
        return Err(Error::Domain {
            what: "z outside [-1, v(x)]",
        });
    }
    Ok((x, (1.0 + z) / (1.0 + vx)))
}

/// `T_v^{-1}(x, eta) = (x, (1 + v(x)) eta - 1)`.
pub fn map_from_rect(x: f64, eta: f64, v: &MembraneState) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            what: "eta outside [0, 1]",
        });
    }
    let vx = v.at(x)?;
    Ok((x, (1.0 + vx) * eta - 1.0))
}

/// Nodal `v'`, `v''` and `1 + v` after checking compatibility and
/// admissibility.
pub(crate) fn geometry(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter { name: "eps" });
    }
    if grid.gx() != v.grid() {
        return Err(Error::DimensionMismatch {
            expected: grid.gx().len(),
            found: v.grid().len(),
        });
    }
    v.check_admissible()?;
    let dv = d1_central(v.values(), v.grid())?;
    let d2v = d2_central(v.values(), v.grid())?;
    Ok((dv, d2v))
}

#[inline]
fn b_eta_at(eps2: f64, eta: f64, dv: f64, d2v: f64, gap: f64) -> f64 {
    let s = dv / gap;
    eps2 * eta * (2.0 * s * s - d2v / gap)
}

pub fn assemble_coefficients(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<OperatorCoefficients> {
    let (dv, d2v) = geometry(v, eps, grid)?;
    let eps2 = eps * eps;
    let n = grid.len();
    let mut c = OperatorCoefficients {
        grid: grid.clone(),
        a_xx: alloc::vec![eps2; n],
        a_xeta: Vec::with_capacity(n),
        a_etaeta: Vec::with_capacity(n),
        b_eta: Vec::with_capacity(n),
    };
    let u = v.values();
    for &eta in grid.eta_nodes() {
        for i in 0..=grid.n_x() {
            let gap = 1.0 + u[i];
            c.a_xeta.push(-2.0 * eps2 * eta * dv[i] / gap);
            c.a_etaeta.push((1.0 + eps2 * eta * eta * dv[i] * dv[i]) / (gap * gap));
            c.b_eta.push(b_eta_at(eps2, eta, dv[i], d2v[i], gap));
        }
    }
    Ok(c)
}

/// `f_v = L_v eta`, the source of the homogeneous-boundary formulation.
pub fn source_f_v(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    let (dv, d2v) = geometry(v, eps, grid)?;
    let eps2 = eps * eps;
    let u = v.values();
    let mut f = Vec::with_capacity(grid.len());
    for &eta in grid.eta_nodes() {
        for i in 0..=grid.n_x() {
            f.push(b_eta_at(eps2, eta, dv[i], d2v[i], 1.0 + u[i]));
        }
    }
    Ok(f)
}
