use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense LU factorization with partial pivoting, row-major storage.
///
/// Used for the Newton Jacobians of the steady-state solver, whose dimension
/// is the number of interior membrane nodes.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: a.len(),
            });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem { pivot: k });
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            for r in k + 1..n {
                let m = a[r * n + k] / piv;
                a[r * n + k] = m;
                if m != 0.0 {
                    for c in k + 1..n {
                        a[r * n + c] -= m * a[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[self.perm[i]];
            for c in 0..i {
                s -= self.lu[i * n + c] * x[c];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..n {
                s -= self.lu[i * n + c] * x[c];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}
