use alloc::vec::Vec;

use super::Grid1D;
use crate::{Error, Result};

fn check(f: &[f64], grid: &Grid1D) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: f.len(),
        });
    }
    Ok(())
}

/// First derivative: central differences inside, three-point one-sided
/// differences at `x = -1` and `x = 1`. All second order.
pub fn d1_central(f: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    check(f, grid)?;
    let n = grid.n_cells();
    let h = grid.h();
    let mut d = Vec::with_capacity(n + 1);
    d.push((-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h));
    for i in 1..n {
        d.push((f[i + 1] - f[i - 1]) / (2.0 * h));
    }
    d.push((3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h));
    Ok(d)
}

/// Second derivative: central three-point stencil inside. The endpoints use
/// the four-point one-sided stencil `(2f0 - 5f1 + 4f2 - f3) / h^2`, which is
/// second order; on a two-cell grid they fall back to the first-order
/// three-point stencil.
pub fn d2_central(f: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    check(f, grid)?;
    let n = grid.n_cells();
    let h2 = grid.h() * grid.h();
    let mut d = Vec::with_capacity(n + 1);
    let (first, last) = if n >= 3 {
        (
            (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2,
            (2.0 * f[n] - 5.0 * f[n - 1] + 4.0 * f[n - 2] - f[n - 3]) / h2,
        )
    } else {
        ((f[0] - 2.0 * f[1] + f[2]) / h2, (f[n] - 2.0 * f[n - 1] + f[n - 2]) / h2)
    };
    d.push(first);
    for i in 1..n {
        d.push((f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2);
    }
    d.push(last);
    Ok(d)
}
