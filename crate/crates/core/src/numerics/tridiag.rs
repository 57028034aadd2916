use alloc::vec::Vec;

use crate::{Error, Result};

/// Thomas algorithm for `T x = rhs` where `T` has sub-diagonal `lower`,
/// diagonal `diag` and super-diagonal `upper` (`lower[i]` sits in row
/// `i + 1`, `upper[i]` in row `i`).
///
/// No pivoting is performed; the matrix is expected to be diagonally dominant
/// or symmetric positive definite.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let off = n.saturating_sub(1);
    for band in [lower, upper] {
        if band.len() != off {
            return Err(Error::DimensionMismatch {
                expected: off,
                found: band.len(),
            });
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut c = Vec::with_capacity(off);
    let mut x = Vec::with_capacity(n);
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::SingularSystem { pivot: 0 });
    }
    x.push(rhs[0] / pivot);
    for i in 1..n {
        c.push(upper[i - 1] / pivot);
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::SingularSystem { pivot: i });
        }
        let xi = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
        x.push(xi);
    }
    for i in (0..off).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity() {
        let x = solve_tridiagonal(&[0.0, 0.0], &[1.0, 1.0, 1.0], &[0.0, 0.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_by_two() {
        let x = solve_tridiagonal(&[1.0], &[2.0, 2.0], &[1.0], &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_dominant_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| 2.5 + rng.gen_range(0.0..1.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        let rhs_norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let mut ax = diag[i] * x[i];
            if i > 0 {
                ax += lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                ax += upper[i] * x[i + 1];
            }
            assert!((ax - rhs[i]).abs() <= 1e-12 * (rhs_norm + 1.0));
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let err = solve_tridiagonal(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::SingularSystem { pivot: 1 });
        let err = solve_tridiagonal(&[], &[0.0], &[], &[1.0]).unwrap_err();
        assert_eq!(err, Error::SingularSystem { pivot: 0 });
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            solve_tridiagonal(&[1.0], &[1.0, 1.0], &[], &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
