// Float intrinsics are not available in `core`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// `x^(3/2)` for `x >= 0`.
#[inline]
pub(crate) fn pow3_2(x: f64) -> f64 {
    x * libm::sqrt(x)
}

/// `x^(5/2)` for `x >= 0`.
#[inline]
pub(crate) fn pow5_2(x: f64) -> f64 {
    x * x * libm::sqrt(x)
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}
