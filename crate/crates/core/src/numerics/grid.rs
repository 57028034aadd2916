use alloc::vec::Vec;

use crate::{Error, Result};

/// Uniform grid on `[-1, 1]` with `n_cells + 1` nodes.
///
/// Nodes are computed as `(2i - n) / n`, so the grid is exactly symmetric
/// under `x -> -x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    nodes: Vec<f64>,
    h: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::GridTooCoarse {
                nodes: n_cells + 1,
                required: 3,
            });
        }
        let n = n_cells as f64;
        let nodes = (0..=n_cells).map(|i| (2.0 * i as f64 - n) / n).collect();
        Ok(Self {
            n_cells,
            nodes,
            h: 2.0 / n,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Index of the node mirrored through `x = 0`.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        self.n_cells - i
    }

    /// Evaluates `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Piecewise-linear interpolation of nodal `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                what: "x outside [-1, 1]",
            });
        }
        let s = (x + 1.0) / self.h;
        let i = (s as usize).min(self.n_cells - 1);
        let w = s - i as f64;
        Ok((1.0 - w) * values[i] + w * values[i + 1])
    }
}

/// Tensor grid on the fixed rectangle `[-1, 1] x [0, 1]`.
///
/// Nodal arrays are stored row by row: `eta` index `j` selects the row, the
/// `x` index `i` the column, so `flat = j * (n_x + 1) + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    gx: Grid1D,
    n_eta: usize,
    eta_nodes: Vec<f64>,
    h_eta: f64,
}

impl Grid2D {
    pub fn new(gx: Grid1D, n_eta: usize) -> Result<Self> {
        if n_eta < 2 {
            return Err(Error::GridTooCoarse {
                nodes: n_eta + 1,
                required: 3,
            });
        }
        let m = n_eta as f64;
        let eta_nodes = (0..=n_eta).map(|j| j as f64 / m).collect();
        Ok(Self {
            gx,
            n_eta,
            eta_nodes,
            h_eta: 1.0 / m,
        })
    }

    pub fn with_cells(n_x: usize, n_eta: usize) -> Result<Self> {
        Self::new(Grid1D::new(n_x)?, n_eta)
    }

    pub fn gx(&self) -> &Grid1D {
        &self.gx
    }

    pub fn n_x(&self) -> usize {
        self.gx.n_cells()
    }

    pub fn n_eta(&self) -> usize {
        self.n_eta
    }

    pub fn eta_nodes(&self) -> &[f64] {
        &self.eta_nodes
    }

    pub fn h_x(&self) -> f64 {
        self.gx.h()
    }

    pub fn h_eta(&self) -> f64 {
        self.h_eta
    }

    /// Total node count `(n_x + 1) * (n_eta + 1)`.
    pub fn len(&self) -> usize {
        (self.n_x() + 1) * (self.n_eta + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n_x() + 1) + i
    }

    /// Inverse of [`Grid2D::idx`].
    #[inline]
    pub fn ij(&self, flat: usize) -> (usize, usize) {
        let w = self.n_x() + 1;
        (flat % w, flat / w)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n_x() || j == self.n_eta
    }

    /// Number of interior unknowns `(n_x - 1) * (n_eta - 1)`.
    pub fn interior_len(&self) -> usize {
        (self.n_x() - 1) * (self.n_eta - 1)
    }

    /// Unknown numbering for interior node `(i, j)`, `1 <= i < n_x`,
    /// `1 <= j < n_eta`. The shorter direction runs fastest so the
    /// bandwidth of the assembled matrix is `min(n_x, n_eta)`.
    #[inline]
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        let (mx, me) = (self.n_x() - 1, self.n_eta - 1);
        if me <= mx {
            (i - 1) * me + (j - 1)
        } else {
            (j - 1) * mx + (i - 1)
        }
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &eta in &self.eta_nodes {
            for &x in self.gx.nodes() {
                out.push(f(x, eta));
            }
        }
        out
    }

    pub(crate) fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: field.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid1d_endpoints_and_spacing() {
        for n in [2, 7, 64, 129] {
            let g = Grid1D::new(n).unwrap();
            assert_eq!(g.len(), n + 1);
            assert_eq!(g.nodes()[0], -1.0);
            assert_eq!(g.nodes()[n], 1.0);
            for w in g.nodes().windows(2) {
                assert!(((w[1] - w[0]) - g.h()).abs() <= 1e-14 * g.h());
            }
            for i in 0..=n {
                assert_eq!(g.nodes()[i], -g.nodes()[g.mirror(i)]);
            }
        }
        assert!(Grid1D::new(1).is_err());
    }

    #[test]
    fn grid2d_indexing_is_bijective() {
        let g = Grid2D::with_cells(6, 4).unwrap();
        assert_eq!(g.eta_nodes()[0], 0.0);
        assert_eq!(*g.eta_nodes().last().unwrap(), 1.0);
        let mut seen = vec![false; g.len()];
        for j in 0..=4 {
            for i in 0..=6 {
                let k = g.idx(i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(g.ij(k), (i, j));
            }
        }
        let mut seen = vec![false; g.interior_len()];
        for j in 1..4 {
            for i in 1..6 {
                let k = g.interior_index(i, j);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let g = Grid1D::new(4).unwrap();
        let v = g.sample(|x| 2.0 * x + 1.0);
        assert!((g.interpolate(&v, 0.3).unwrap() - 1.6).abs() < 1e-15);
        assert_eq!(g.interpolate(&v, 1.0).unwrap(), 3.0);
        assert!(g.interpolate(&v, 1.5).is_err());
    }
}
