//! Target densities and the floored γ transform used by the pair weight.
//!
//! Every density is consumed through [`DensityOracle`], which floors the
//! density at `f_floor` so that `γ(x) = max(-ln f(x), γ_floor)` stays finite
//! in the tails.

use std::fmt;
use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::riesz::Point;

pub const DEFAULT_F_FLOOR: f64 = 1e-300;
pub const DEFAULT_GAMMA_FLOOR: f64 = 0.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// A (possibly unnormalized) log density over R^d.
pub trait LogDensity: Send + Sync {
    fn log_pdf(&self, x: &[f64]) -> f64;
}

impl<F> LogDensity for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn log_pdf(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Shared handle to a target density plus the flooring rules for `γ`.
#[derive(Clone)]
pub struct DensityOracle {
    inner: Arc<dyn LogDensity>,
    f_floor: f64,
    gamma_floor: f64,
}

impl fmt::Debug for DensityOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityOracle")
            .field("f_floor", &self.f_floor)
            .field("gamma_floor", &self.gamma_floor)
            .finish_non_exhaustive()
    }
}

impl DensityOracle {
    pub fn new(density: impl LogDensity + 'static) -> Self {
        Self {
            inner: Arc::new(density),
            f_floor: DEFAULT_F_FLOOR,
            gamma_floor: DEFAULT_GAMMA_FLOOR,
        }
    }

    pub fn from_arc(density: Arc<dyn LogDensity>) -> Self {
        Self {
            inner: density,
            f_floor: DEFAULT_F_FLOOR,
            gamma_floor: DEFAULT_GAMMA_FLOOR,
        }
    }

    pub fn with_floors(mut self, f_floor: f64, gamma_floor: f64) -> Result<Self> {
        if !(f_floor > 0.0 && f_floor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "f_floor must be positive, got {f_floor}"
            )));
        }
        if !(gamma_floor >= 0.0 && gamma_floor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "gamma_floor must be non-negative, got {gamma_floor}"
            )));
        }
        self.f_floor = f_floor;
        self.gamma_floor = gamma_floor;
        Ok(self)
    }

    /// Raw log density, unfloored.
    pub fn logpdf(&self, x: &Point) -> f64 {
        self.inner.log_pdf(x.coords())
    }

    /// Log density floored at `ln f_floor`. NaN is treated as zero density.
    pub fn floored_logpdf(&self, x: &Point) -> f64 {
        let lf = self.inner.log_pdf(x.coords());
        let floor = self.f_floor.ln();
        if lf.is_nan() || lf < floor {
            floor
        } else {
            lf
        }
    }

    /// `γ(x) = max(-ln f(x), γ_floor)` with `f` floored first.
    pub fn gamma(&self, x: &Point) -> f64 {
        (-self.floored_logpdf(x)).max(self.gamma_floor)
    }

    pub fn f_floor(&self) -> f64 {
        self.f_floor
    }
}

/// Uniform density on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct UniformBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    log_volume: f64,
}

impl UniformBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput(
                "box bounds must have equal, non-zero length".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::InvalidInput(
                "box requires finite lo < hi per coordinate".into(),
            ));
        }
        let log_volume = lo.iter().zip(&hi).map(|(l, h)| (h - l).ln()).sum();
        Ok(Self { lo, hi, log_volume })
    }

    pub fn unit(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("unit box is valid")
    }
}

impl LogDensity for UniformBox {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let inside = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v >= l && v <= h);
        if inside && x.len() == self.lo.len() {
            -self.log_volume
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Isotropic Gaussian N(mean, sd² I).
#[derive(Debug, Clone)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sd must be positive, got {sd}"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn standard(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            sd: 1.0,
        }
    }
}

impl LogDensity for Gaussian {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = self.mean.len() as f64;
        let sq: f64 = x
            .iter()
            .zip(&self.mean)
            .map(|(v, m)| {
                let z = (v - m) / self.sd;
                z * z
            })
            .sum();
        -0.5 * sq - d * (LN_SQRT_2PI + self.sd.ln())
    }
}

/// One-dimensional Gaussian truncated to `[lo, hi]`, properly normalized.
#[derive(Debug, Clone)]
pub struct TruncatedGaussian {
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
    log_norm: f64,
}

impl TruncatedGaussian {
    pub fn new(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sd > 0.0) || !(lo < hi) {
            return Err(Error::InvalidParams(
                "truncated gaussian needs sd > 0 and lo < hi".into(),
            ));
        }
        let std = Normal::standard();
        let mass = std.cdf((hi - mean) / sd) - std.cdf((lo - mean) / sd);
        if !(mass > 0.0) {
            return Err(Error::InvalidParams(
                "truncation interval carries no mass".into(),
            ));
        }
        Ok(Self {
            mean,
            sd,
            lo,
            hi,
            log_norm: mass.ln(),
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let std = Normal::standard();
        let a = std.cdf((self.lo - self.mean) / self.sd);
        (std.cdf((x - self.mean) / self.sd) - a) / self.log_norm.exp()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

impl LogDensity for TruncatedGaussian {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let v = x[0];
        if v < self.lo || v > self.hi {
            return f64::NEG_INFINITY;
        }
        let z = (v - self.mean) / self.sd;
        -0.5 * z * z - LN_SQRT_2PI - self.sd.ln() - self.log_norm
    }
}

/// Exponential(rate) truncated to `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct TruncatedExponential {
    rate: f64,
    lo: f64,
    hi: f64,
    log_norm: f64,
}

impl TruncatedExponential {
    pub fn new(rate: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(rate > 0.0) || !(lo < hi) {
            return Err(Error::InvalidParams(
                "truncated exponential needs rate > 0 and lo < hi".into(),
            ));
        }
        // mass of rate·e^{-rate (x - lo)} on [lo, hi]
        let mass = -(-rate * (hi - lo)).exp_m1();
        Ok(Self {
            rate,
            lo,
            hi,
            log_norm: mass.ln(),
        })
    }

    pub fn mean(&self) -> f64 {
        let w = self.hi - self.lo;
        let e = (-self.rate * w).exp();
        self.lo + 1.0 / self.rate - w * e / (1.0 - e)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        -(-self.rate * (x - self.lo)).exp_m1() / self.log_norm.exp()
    }
}

impl LogDensity for TruncatedExponential {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let v = x[0];
        if v < self.lo || v > self.hi {
            return f64::NEG_INFINITY;
        }
        self.rate.ln() - self.rate * (v - self.lo) - self.log_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_unit_has_zero_gamma() {
        let o = DensityOracle::new(UniformBox::unit(1));
        assert_eq!(o.gamma(&Point::scalar(0.3)), 0.0);
        assert_eq!(o.logpdf(&Point::scalar(0.3)), 0.0);
    }

    #[test]
    fn gamma_is_floored_outside_support() {
        let o = DensityOracle::new(UniformBox::unit(1));
        let g = o.gamma(&Point::scalar(2.0));
        assert!(g.is_finite());
        assert!((g - (-DEFAULT_F_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn gamma_floor_applies_to_peaked_densities() {
        // N(0.5, 0.01²) has density far above 1 at its mode, so -ln f < 0
        let o = DensityOracle::new(Gaussian::new(vec![0.5], 0.01).unwrap());
        assert_eq!(o.gamma(&Point::scalar(0.5)), 0.0);
        let o = o.with_floors(1e-300, 0.25).unwrap();
        assert_eq!(o.gamma(&Point::scalar(0.5)), 0.25);
    }

    #[test]
    fn truncated_densities_integrate_to_one() {
        let tg = TruncatedGaussian::new(0.5, 0.15, 0.0, 1.0).unwrap();
        let te = TruncatedExponential::new(10.0, 0.0, 1.0).unwrap();
        let n = 200_000;
        let h = 1.0 / n as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            a += tg.log_pdf(&[x]).exp() * h;
            b += te.log_pdf(&[x]).exp() * h;
        }
        assert!((a - 1.0).abs() < 1e-6, "{a}");
        assert!((b - 1.0).abs() < 1e-6, "{b}");
        assert!((tg.cdf(0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn truncated_exponential_mean_matches_quadrature() {
        let te = TruncatedExponential::new(10.0, 0.0, 1.0).unwrap();
        let n = 200_000;
        let h = 1.0 / n as f64;
        let m: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                x * te.log_pdf(&[x]).exp() * h
            })
            .sum();
        assert!((m - te.mean()).abs() < 1e-8);
        assert!((te.mean() - 0.1).abs() < 1e-3);
    }

    #[test]
    fn closure_densities_are_accepted() {
        let o = DensityOracle::new(|x: &[f64]| -x[0]);
        assert_eq!(o.logpdf(&Point::scalar(2.0)), -2.0);
        assert_eq!(o.gamma(&Point::scalar(2.0)), 2.0);
    }
}
