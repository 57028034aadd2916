use crate::math::ln;
use crate::{Error, Result};

/// Least-squares fit of `log(value) = log(a) + rate * t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialFit {
    pub rate: f64,
    pub log_amplitude: f64,
    /// Coefficient of determination of the log-linear fit; reported as 0
    /// when the data has no variance.
    pub r_squared: f64,
}

pub fn fit_exponential_rate(times: &[f64], values: &[f64]) -> Result<ExponentialFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if values.len() < 5 {
        return Err(Error::Domain {
            what: "exponential fit needs at least 5 samples",
        });
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain {
            what: "exponential fit needs strictly positive values",
        });
    }
    let n = values.len() as f64;
    let t_mean = times.iter().sum::<f64>() / n;
    let y_mean = values.iter().map(|&v| ln(v)).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for (&t, &v) in times.iter().zip(values) {
        let dt = t - t_mean;
        let dy = ln(v) - y_mean;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::Domain {
            what: "exponential fit needs distinct sample times",
        });
    }
    let rate = sty / stt;
    // Relative threshold: log-values equal up to rounding count as constant.
    let r_squared = if syy <= 1e-28 * (1.0 + y_mean * y_mean) * n {
        0.0
    } else {
        let ss_res = syy - rate * sty;
        1.0 - ss_res / syy
    };
    Ok(ExponentialFit {
        rate,
        log_amplitude: y_mean - rate * t_mean,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_exponential() {
        let t: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let v: Vec<f64> = t.iter().map(|&t| (-2.0 * t).exp()).collect();
        let fit = fit_exponential_rate(&t, &v).unwrap();
        assert!((fit.rate + 2.0).abs() < 1e-8);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_values() {
        let t: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let fit = fit_exponential_rate(&t, &[4.0; 6]).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn noisy_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t: Vec<f64> = (0..100).map(|k| 0.1 * k as f64).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|&t| 3.0 * (-0.5 * t).exp() * (1.0 + 0.001 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_exponential_rate(&t, &v).unwrap();
        assert!((fit.rate + 0.5).abs() < 0.01);
        assert!((fit.log_amplitude - 3.0f64.ln()).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fit_exponential_rate(&t, &[1.0, 0.5, 0.0, 0.1, 0.1]),
            Err(Error::Domain { .. })
        ));
        assert!(fit_exponential_rate(&t[..4], &[1.0; 4]).is_err());
    }
}
