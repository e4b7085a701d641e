//! Small numeric helpers shared by the filter, the chain and the diagnostics.

use statrs::distribution::{ContinuousCDF, Normal};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln Σ exp(v)`. Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// `ln( (1/n) Σ exp(v) )`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}

/// Log density of N(mean, sd²) at `x`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * (LN_2PI + z * z) - sd.ln()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Arithmetic mean, accumulated as offsets from the first value so a constant
/// series returns that constant exactly.
pub fn mean(values: &[f64]) -> f64 {
    let Some(&v0) = values.first() else {
        return f64::NAN;
    };
    v0 + values.iter().map(|v| v - v0).sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (divisor n − 1). Zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp(&[0.0, f64::NEG_INFINITY]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn log_mean_exp_of_constant_is_constant() {
        assert!((log_mean_exp(&[-3.5; 7]) + 3.5).abs() < 1e-14);
    }

    #[test]
    fn normal_logpdf_at_mode() {
        assert!((normal_logpdf(0.0, 0.0, 1.0) + 0.5 * LN_2PI).abs() < 1e-15);
        assert!((normal_logpdf(2.0, 1.0, 2.0) - (-0.5 * LN_2PI - 0.125 - 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [0.01, 0.2, 0.5, 0.77, 0.999] {
            let back = std_normal_cdf(std_normal_quantile(p));
            assert!((back - p).abs() < 1e-9, "{p}: {back}");
        }
    }

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((ols_slope(&x, &y) - 2.0).abs() < 1e-14);
    }
}
