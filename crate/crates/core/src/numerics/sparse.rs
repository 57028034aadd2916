use alloc::vec;
use alloc::vec::Vec;

use crate::math::norm2;
use crate::{Error, Result};

/// Default relative residual tolerance of [`solve_sparse`].
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Square matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Starts an empty matrix of dimension `n`; fill it row by row with
    /// [`CsrMatrix::push_row`].
    pub fn with_dimension(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            col_idx: Vec::with_capacity(nnz_hint),
            values: Vec::with_capacity(nnz_hint),
        }
    }

    /// Appends the next row. Entries with equal column indices are summed,
    /// explicit zeros are dropped.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        if self.rows() >= self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.rows() + 1,
            });
        }
        let start = self.col_idx.len();
        for &(c, v) in entries {
            if c >= self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: c + 1,
                });
            }
            if let Some(k) = self.col_idx[start..].iter().position(|&x| x == c) {
                self.values[start + k] += v;
            } else {
                self.col_idx.push(c);
                self.values.push(v);
            }
        }
        // keep columns sorted within the row and drop cancelled entries
        let mut row: Vec<(usize, f64)> = self.col_idx[start..]
            .iter()
            .copied()
            .zip(self.values[start..].iter().copied())
            .filter(|&(_, v)| v != 0.0)
            .collect();
        row.sort_unstable_by_key(|&(c, _)| c);
        self.col_idx.truncate(start);
        self.values.truncate(start);
        for (c, v) in row {
            self.col_idx.push(c);
            self.values.push(v);
        }
        self.row_ptr.push(self.col_idx.len());
        Ok(())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::with_dimension(n, n);
        for i in 0..n {
            m.push_row(&[(i, 1.0)]).expect("in range");
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_complete(&self) -> bool {
        self.rows() == self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Lower and upper bandwidth `(kl, ku)`.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.rows() {
            for (c, _) in self.row(i) {
                if c < i {
                    kl = kl.max(i - c);
                } else {
                    ku = ku.max(c - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.rows())
            .map(|i| self.row(i).map(|(c, v)| v * x[c]).sum())
            .collect())
    }
}

/// A sparse linear system `A x = b` together with the relative residual
/// tolerance its solution must meet.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub tol: f64,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        Self {
            matrix,
            rhs,
            tol: DEFAULT_SOLVER_TOL,
        }
    }
}

/// Banded LU factorization with partial pivoting.
///
/// Storage follows the LAPACK `gbtrf` layout: column-major with leading
/// dimension `2 kl + ku + 1`, so that row interchanges fit inside the band.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        // row offset kv + i - j inside column j
        (self.kl + self.ku + i - j) + j * self.ld()
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if !a.is_complete() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: a.rows(),
            });
        }
        let n = a.dim();
        let (kl, ku) = a.bandwidth();
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: Vec::new(),
            ipiv: vec![0; n],
        };
        lu.ab = vec![0.0; lu.ld() * n];
        for i in 0..n {
            for (c, v) in a.row(i) {
                let k = lu.at(i, c);
                lu.ab[k] = v;
            }
        }

        let ld = lu.ld();
        let kv = kl + ku;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ld + kv;
            let mut p = 0;
            let mut best = lu.ab[col].abs();
            for r in 1..=km {
                let v = lu.ab[col + r].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            lu.ipiv[j] = j + p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem { pivot: j });
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let a0 = lu.at(j, c);
                    let a1 = lu.at(j + p, c);
                    lu.ab.swap(a0, a1);
                }
            }
            let piv = lu.ab[col];
            for r in 1..=km {
                lu.ab[col + r] /= piv;
            }
            for c in j + 1..=ju {
                let t = lu.ab[lu.at(j, c)];
                if t != 0.0 {
                    let base = lu.at(j, c);
                    for r in 1..=km {
                        let m = lu.ab[col + r];
                        lu.ab[base + r] -= m * t;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let ld = self.ld();
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                let km = self.kl.min(n - 1 - j);
                let col = j * ld + kv;
                for r in 1..=km {
                    b[j + r] -= self.ab[col + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ld + kv;
            b[j] /= self.ab[col];
            let bj = b[j];
            if bj != 0.0 {
                let top = j.saturating_sub(kv);
                for i in top..j {
                    b[i] -= self.ab[col - (j - i)] * bj;
                }
            }
        }
        Ok(())
    }
}

/// Solves `system` by banded LU with one step of iterative refinement when
/// the first residual misses the tolerance.
///
/// The result satisfies `||A x - b||_2 <= tol * ||b||_2`, otherwise
/// [`Error::NonConvergence`] carries the relative residual reached.
pub fn solve_sparse(system: &SparseSystem) -> Result<Vec<f64>> {
    let a = &system.matrix;
    if system.rhs.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: system.rhs.len(),
        });
    }
    let lu = BandedLu::factor(a)?;
    solve_factored(a, &lu, &system.rhs, system.tol)
}

/// Back-solves with an existing factorization of `a` and certifies the
/// residual like [`solve_sparse`].
pub(crate) fn solve_factored(a: &CsrMatrix, lu: &BandedLu, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let b_norm = norm2(rhs);
    let mut x = lu.solve(rhs)?;
    let mut res = residual(a, &x, rhs)?;
    let mut rel = relative(norm2(&res), b_norm);
    if rel > tol {
        lu.solve_in_place(&mut res)?;
        for (xi, di) in x.iter_mut().zip(&res) {
            *xi += di;
        }
        res = residual(a, &x, rhs)?;
        rel = relative(norm2(&res), b_norm);
    }
    if rel > tol || !rel.is_finite() {
        return Err(Error::NonConvergence { residual: rel });
    }
    Ok(x)
}

fn relative(r: f64, b: f64) -> f64 {
    if b == 0.0 {
        r
    } else {
        r / b
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let mut r = a.mul_vec(x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(r)
}
