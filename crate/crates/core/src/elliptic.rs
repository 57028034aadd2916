//! The pulled-back potential problem `L_v phi = 0` in the rectangle with
//! `phi = eta` on its boundary, solved with a nine-point finite-difference
//! stencil: central differences for `d_xx`, `d_etaeta`, `d_eta`, and the
//! four-corner cross stencil for `d_xeta`. Dirichlet data is always
//! eliminated into the right-hand side.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::max_abs;
use crate::numerics::{solve_factored, BandedLu, CsrMatrix, Grid1D, Grid2D, DEFAULT_SOLVER_TOL};
use crate::transform::{assemble_coefficients, source_f_v, MembraneState, OperatorCoefficients};
use crate::{Error, Result};

/// Nodal potential on the fixed rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub grid: Grid2D,
    pub phi: Vec<f64>,
}

impl PotentialField {
    pub fn new(grid: Grid2D, phi: Vec<f64>) -> Result<Self> {
        grid.check_len(&phi)?;
        Ok(Self { grid, phi })
    }

    /// The field `phi = eta`, the solution for a flat membrane.
    pub fn linear(grid: Grid2D) -> Self {
        let phi = grid.sample(|_, eta| eta);
        Self { grid, phi }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.idx(i, j)]
    }

    /// Bilinear interpolation at `(x, eta)`.
    pub fn sample(&self, x: f64, eta: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain {
                what: "(x, eta) outside the rectangle",
            });
        }
        let g = &self.grid;
        let sx = (x + 1.0) / g.h_x();
        let se = eta / g.h_eta();
        let i = (sx as usize).min(g.n_x() - 1);
        let j = (se as usize).min(g.n_eta() - 1);
        let (wx, we) = (sx - i as f64, se - j as f64);
        Ok((1.0 - wx) * (1.0 - we) * self.at(i, j)
            + wx * (1.0 - we) * self.at(i + 1, j)
            + (1.0 - wx) * we * self.at(i, j + 1)
            + wx * we * self.at(i + 1, j + 1))
    }

    pub fn min(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|phi(x, eta) - phi(-x, eta)|`.
    pub fn asymmetry(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0f64;
        for j in 0..=g.n_eta() {
            for i in 0..=g.n_x() {
                m = m.max((self.at(i, j) - self.at(g.n_x() - i, j)).abs());
            }
        }
        m
    }

    /// Largest deviation from the boundary data `eta` on the four sides.
    pub fn boundary_defect(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0f64;
        for j in 0..=g.n_eta() {
            for i in 0..=g.n_x() {
                if g.is_boundary(i, j) {
                    m = m.max((self.at(i, j) - g.eta_nodes()[j]).abs());
                }
            }
        }
        m
    }
}

/// `d_eta phi(x, 1)` at every x-node.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceProfile {
    pub grid: Grid1D,
    pub dphi_top: Vec<f64>,
}

/// Weights of the discrete `L_v` at one node, in the order
/// `[centre, W, E, S, N, SW, SE, NW, NE]`.
#[inline]
fn stencil(a_xx: f64, a_xeta: f64, a_etaeta: f64, b_eta: f64, hx: f64, he: f64) -> [f64; 9] {
    let wx = a_xx / (hx * hx);
    let we = a_etaeta / (he * he);
    let wb = b_eta / (2.0 * he);
    let wc = a_xeta / (4.0 * hx * he);
    [-2.0 * wx - 2.0 * we, wx, wx, we - wb, we + wb, wc, -wc, -wc, wc]
}

const OFFSETS: [(isize, isize); 9] = [
    (0, 0),
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (1, -1),
    (-1, 1),
    (1, 1),
];

fn node_stencil(c: &OperatorCoefficients, k: usize) -> [f64; 9] {
    let g = &c.grid;
    stencil(c.a_xx[k], c.a_xeta[k], c.a_etaeta[k], c.b_eta[k], g.h_x(), g.h_eta())
}

/// Discrete `L_v w` at the interior node `(i, j)`.
fn apply_at(c: &OperatorCoefficients, w: &[f64], i: usize, j: usize) -> f64 {
    let g = &c.grid;
    let s = node_stencil(c, g.idx(i, j));
    OFFSETS
        .iter()
        .zip(s)
        .map(|(&(di, dj), wt)| wt * w[g.idx((i as isize + di) as usize, (j as isize + dj) as usize)])
        .sum()
}

/// Discrete `L_v w` at every interior node (boundary entries are zero).
pub fn apply_operator(c: &OperatorCoefficients, w: &[f64]) -> Result<Vec<f64>> {
    let g = &c.grid;
    g.check_len(w)?;
    let mut out = vec![0.0; g.len()];
    for j in 1..g.n_eta() {
        for i in 1..g.n_x() {
            out[g.idx(i, j)] = apply_at(c, w, i, j);
        }
    }
    Ok(out)
}

/// True when every off-centre weight of the discrete `L_v` is nonnegative
/// at every interior node, i.e. `-L_v` has nonpositive off-diagonals and
/// the discrete maximum principle applies.
pub fn stencil_is_positive(c: &OperatorCoefficients) -> bool {
    let g = &c.grid;
    (1..g.n_eta()).all(|j| (1..g.n_x()).all(|i| node_stencil(c, g.idx(i, j))[1..].iter().all(|&w| w >= 0.0)))
}

/// The assembled and factored matrix of `-L_v` on the interior unknowns for
/// one membrane state. Factoring once lets several right-hand sides share the
/// cost.
pub struct EllipticSystem {
    coeffs: OperatorCoefficients,
    matrix: CsrMatrix,
    lu: BandedLu,
    tol: f64,
}

impl EllipticSystem {
    pub fn new(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<Self> {
        let coeffs = assemble_coefficients(v, eps, grid)?;
        Self::from_coefficients(coeffs)
    }

    pub fn from_coefficients(coeffs: OperatorCoefficients) -> Result<Self> {
        let g = &coeffs.grid;
        let n = g.interior_len();
        let mut matrix = CsrMatrix::with_dimension(n, 9 * n);
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|_| Vec::new()).collect();
        for j in 1..g.n_eta() {
            for i in 1..g.n_x() {
                let s = node_stencil(&coeffs, g.idx(i, j));
                let row = &mut rows[g.interior_index(i, j)];
                for (&(di, dj), wt) in OFFSETS.iter().zip(s) {
                    let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if !g.is_boundary(ii, jj) {
                        row.push((g.interior_index(ii, jj), -wt));
                    }
                }
            }
        }
        for row in &rows {
            matrix.push_row(row)?;
        }
        let lu = BandedLu::factor(&matrix)?;
        Ok(Self {
            coeffs,
            matrix,
            lu,
            tol: DEFAULT_SOLVER_TOL,
        })
    }

    pub fn coefficients(&self) -> &OperatorCoefficients {
        &self.coeffs
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid2D {
        &self.coeffs.grid
    }

    /// Solves `L_v w = source` inside with `w = boundary` on the four sides.
    /// Only the boundary entries of `boundary` are read.
    pub fn solve(&self, source: Option<&[f64]>, boundary: &[f64]) -> Result<Vec<f64>> {
        let g = self.grid();
        g.check_len(boundary)?;
        if let Some(s) = source {
            g.check_len(s)?;
        }
        let mut rhs = vec![0.0; g.interior_len()];
        for j in 1..g.n_eta() {
            for i in 1..g.n_x() {
                let k = g.interior_index(i, j);
                let mut r = source.map_or(0.0, |s| -s[g.idx(i, j)]);
                let s = node_stencil(&self.coeffs, g.idx(i, j));
                for (&(di, dj), wt) in OFFSETS.iter().zip(s) {
                    let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if g.is_boundary(ii, jj) {
                        r += wt * boundary[g.idx(ii, jj)];
                    }
                }
                rhs[k] = r;
            }
        }
        let x = solve_factored(&self.matrix, &self.lu, &rhs, self.tol)?;
        let mut w = boundary.to_vec();
        for j in 1..g.n_eta() {
            for i in 1..g.n_x() {
                w[g.idx(i, j)] = x[g.interior_index(i, j)];
            }
        }
        Ok(w)
    }

    /// Solves `-L_v w = rhs` with `w = 0` on the boundary.
    pub fn solve_homogeneous(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let g = self.grid();
        g.check_len(rhs)?;
        let neg: Vec<f64> = rhs.iter().map(|r| -r).collect();
        self.solve(Some(&neg), &vec![0.0; g.len()])
    }

    /// Direct formulation: `L_v phi = 0`, `phi = eta` on the boundary.
    pub fn potential(&self) -> Result<PotentialField> {
        let g = self.grid().clone();
        let lin = g.sample(|_, eta| eta);
        let phi = self.solve(None, &lin)?;
        PotentialField::new(g, phi)
    }

    /// Split formulation: `-L_v Phi = f_v` with `Phi = 0` on the boundary;
    /// returns `Phi` only. `f_v` equals the `b_eta` coefficient field.
    pub fn potential_correction(&self) -> Result<Vec<f64>> {
        let f = self.coeffs.b_eta.clone();
        self.solve_homogeneous(&f)
    }
}

pub fn solve_potential(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<PotentialField> {
    EllipticSystem::new(v, eps, grid)?.potential()
}

/// Solves for `Phi = phi - eta` (homogeneous Dirichlet data, source `f_v`)
/// and returns `Phi + eta`.
pub fn solve_potential_split(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<PotentialField> {
    let sys = EllipticSystem::new(v, eps, grid)?;
    let f = source_f_v(v, eps, grid)?;
    let big_phi = sys.solve_homogeneous(&f)?;
    let phi = grid
        .sample(|_, eta| eta)
        .iter()
        .zip(&big_phi)
        .map(|(e, p)| e + p)
        .collect();
    PotentialField::new(grid.clone(), phi)
}

/// Three-point backward difference `(3 w_N - 4 w_{N-1} + w_{N-2}) / (2 h)`
/// along the top row.
fn top_derivative(w: &[f64], grid: &Grid2D) -> Result<Vec<f64>> {
    let n = grid.n_eta();
    if n < 3 {
        return Err(Error::GridTooCoarse {
            nodes: n + 1,
            required: 4,
        });
    }
    let h = grid.h_eta();
    Ok((0..=grid.n_x())
        .map(|i| (3.0 * w[grid.idx(i, n)] - 4.0 * w[grid.idx(i, n - 1)] + w[grid.idx(i, n - 2)]) / (2.0 * h))
        .collect())
}

pub fn trace_top(phi: &PotentialField) -> Result<TraceProfile> {
    Ok(TraceProfile {
        grid: phi.grid.gx().clone(),
        dphi_top: top_derivative(&phi.phi, &phi.grid)?,
    })
}

/// Top trace of `phi_v = eta + Phi_v`: the `eta` part contributes exactly 1.
pub(crate) fn trace_of_state(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    let sys = EllipticSystem::new(v, eps, grid)?;
    let big_phi = sys.potential_correction()?;
    let mut t = top_derivative(&big_phi, grid)?;
    for ti in &mut t {
        *ti += 1.0;
    }
    Ok(t)
}

/// `g_eps(v) = (1 + eps^2 v'^2) / (1 + v)^2 * |d_eta phi_v(., 1)|^2`.
pub fn g_eps(v: &MembraneState, eps: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    let t = trace_of_state(v, eps, grid)?;
    let dv = crate::numerics::d1_central(v.values(), v.grid())?;
    Ok(v.values()
        .iter()
        .zip(&dv)
        .zip(&t)
        .map(|((&u, &du), &tr)| (1.0 + eps * eps * du * du) / ((1.0 + u) * (1.0 + u)) * tr * tr)
        .collect())
}

/// Top trace of `phi_v` and its derivatives with respect to the interior
/// membrane values.
pub struct TraceSensitivity {
    pub trace: Vec<f64>,
    /// `columns[k - 1][i] = d trace_i / d u_k` for `k = 1..n_x`.
    pub columns: Vec<Vec<f64>>,
}

/// Finite-difference sensitivity of the top trace. For each interior node
/// `k` the discrete operator is rebuilt at `v + delta e_k` and applied to the
/// current `phi_v`; the resulting defect is mapped back through the factored
/// matrix of `-L_v`, which costs one back-substitution per column instead of
/// a fresh factorization.
pub fn trace_sensitivity(v: &MembraneState, eps: f64, grid: &Grid2D, delta: f64) -> Result<TraceSensitivity> {
    let sys = EllipticSystem::new(v, eps, grid)?;
    let big_phi = sys.potential_correction()?;
    let mut trace = top_derivative(&big_phi, grid)?;
    for t in &mut trace {
        *t += 1.0;
    }
    let phi: Vec<f64> = grid
        .sample(|_, eta| eta)
        .iter()
        .zip(&big_phi)
        .map(|(e, p)| e + p)
        .collect();

    let nx = grid.n_x();
    let ne = grid.n_eta();
    let h = grid.h_eta();
    let mut columns = Vec::with_capacity(nx - 1);
    let mut u = v.values().to_vec();
    let mut rhs = vec![0.0; grid.interior_len()];
    for k in 1..nx {
        u[k] += delta;
        let vp = MembraneState::new(v.grid().clone(), u.clone(), v.time)?;
        u[k] = v.values()[k];
        let cp = assemble_coefficients(&vp, eps, grid)?;
        rhs.iter_mut().for_each(|r| *r = 0.0);
        for i in k.saturating_sub(1).max(1)..=(k + 1).min(nx - 1) {
            for j in 1..ne {
                rhs[grid.interior_index(i, j)] = apply_at(&cp, &phi, i, j);
            }
        }
        sys.lu.solve_in_place(&mut rhs)?;
        let col = (0..=nx)
            .map(|i| {
                if i == 0 || i == nx {
                    return 0.0;
                }
                let d1 = rhs[grid.interior_index(i, ne - 1)];
                let d2 = if ne >= 3 {
                    rhs[grid.interior_index(i, ne - 2)]
                } else {
                    0.0
                };
                (-4.0 * d1 + d2) / (2.0 * h * delta)
            })
            .collect();
        columns.push(col);
    }
    Ok(TraceSensitivity { trace, columns })
}

/// Largest residual `|L_v phi|` over interior nodes, scaled by the largest
/// stencil weight; used for self-checks.
pub fn discrete_residual(v: &MembraneState, eps: f64, phi: &PotentialField) -> Result<f64> {
    let c = assemble_coefficients(v, eps, &phi.grid)?;
    let r = apply_operator(&c, &phi.phi)?;
    Ok(max_abs(&r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(nx: usize, ne: usize) -> (Grid2D, MembraneState) {
        let g = Grid2D::with_cells(nx, ne).unwrap();
        let v = MembraneState::zero(g.gx().clone());
        (g, v)
    }

    #[test]
    fn flat_membrane_gives_linear_potential() {
        for eps in [0.01, 0.1, 1.0, 10.0] {
            let (g, v) = flat(16, 12);
            let phi = solve_potential(&v, eps, &g).unwrap();
            for (p, e) in phi.phi.iter().zip(g.sample(|_, eta| eta)) {
                assert!((p - e).abs() <= 1e-12);
            }
            let split = solve_potential_split(&v, eps, &g).unwrap();
            assert_eq!(split.phi, g.sample(|_, eta| eta));
            let t = trace_top(&phi).unwrap();
            assert!(t.dphi_top.iter().all(|&d| (d - 1.0).abs() < 1e-10));
            assert!(g_eps(&v, eps, &g).unwrap().iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn flat_stencil_is_positive() {
        let (g, v) = flat(8, 8);
        let c = assemble_coefficients(&v, 1.0, &g).unwrap();
        assert!(stencil_is_positive(&c));
        let bowl = MembraneState::parabola(g.gx().clone(), 0.3);
        let c = assemble_coefficients(&bowl, 1.0, &g).unwrap();
        assert!(!stencil_is_positive(&c));
    }

    #[test]
    fn trace_exact_on_quadratics() {
        let g = Grid2D::with_cells(6, 5).unwrap();
        let lin = PotentialField::new(g.clone(), g.sample(|_, e| e)).unwrap();
        assert!(trace_top(&lin)
            .unwrap()
            .dphi_top
            .iter()
            .all(|&d| (d - 1.0).abs() < 1e-13));
        let quad = PotentialField::new(g.clone(), g.sample(|_, e| e * e)).unwrap();
        assert!(trace_top(&quad)
            .unwrap()
            .dphi_top
            .iter()
            .all(|&d| (d - 2.0).abs() < 1e-12));
        let coarse = Grid2D::with_cells(6, 2).unwrap();
        let f = PotentialField::linear(coarse);
        assert!(matches!(trace_top(&f), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn bowl_solution_properties() {
        let g = Grid2D::with_cells(32, 16).unwrap();
        let v = MembraneState::parabola(g.gx().clone(), 0.4);
        let phi = solve_potential(&v, 0.5, &g).unwrap();
        assert!(phi.boundary_defect() == 0.0);
        assert!(phi.asymmetry() < 1e-10);
        assert!(discrete_residual(&v, 0.5, &phi).unwrap() < 1e-8);
        let split = solve_potential_split(&v, 0.5, &g).unwrap();
        let diff = phi
            .phi
            .iter()
            .zip(&split.phi)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-10);
        let gv = g_eps(&v, 0.5, &g).unwrap();
        assert!(gv.iter().all(|&x| x >= 0.0));
        for i in 0..=32 {
            assert!((gv[i] - gv[32 - i]).abs() < 1e-10);
        }
    }

    #[test]
    fn sensitivity_matches_full_resolves() {
        let g = Grid2D::with_cells(10, 8).unwrap();
        let v = MembraneState::from_fn(g.gx().clone(), |x| -0.3 * (1.0 - x * x) * (1.0 + 0.3 * x)).unwrap();
        let eps = 0.7;
        let s = trace_sensitivity(&v, eps, &g, 1e-6).unwrap();
        let base = trace_of_state(&v, eps, &g).unwrap();
        for (a, b) in s.trace.iter().zip(&base) {
            assert!((a - b).abs() < 1e-13);
        }
        // central differences of full solves as the reference
        for k in [1usize, 4, 9] {
            let h = 1e-5;
            let mut up = v.values().to_vec();
            up[k] += h;
            let mut dn = v.values().to_vec();
            dn[k] -= h;
            let tp = trace_of_state(&MembraneState::new(g.gx().clone(), up, 0.0).unwrap(), eps, &g).unwrap();
            let tm = trace_of_state(&MembraneState::new(g.gx().clone(), dn, 0.0).unwrap(), eps, &g).unwrap();
            for i in 0..=10 {
                let fd = (tp[i] - tm[i]) / (2.0 * h);
                assert!(
                    (fd - s.columns[k - 1][i]).abs() < 1e-4 * (1.0 + fd.abs()),
                    "k={k} i={i}: {fd} vs {}",
                    s.columns[k - 1][i]
                );
            }
        }
    }
}
