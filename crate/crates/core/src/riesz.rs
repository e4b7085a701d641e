//! Weighted Riesz kernel, configuration energy and geometric diagnostics.
//!
//! The pair kernel is
//!
//! ```text
//! K(x, y) = ω(x, y) / ‖x − y‖^m,    ω(x, y) = exp(b^{−m/(2d)}),
//! b = max(α·γ(x)γ(y) + β·‖x − y‖, base_floor)
//! ```
//!
//! With `m = 40` the kernel leaves the double range for any realistic
//! separation, so every aggregate is evaluated in log space and the
//! `exp`-ed convenience wrappers may return `+inf`.

use std::cmp::Ordering;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::density::DensityOracle;
use crate::error::{Error, Result};
use crate::stats::log_sum_exp;

/// Critical value of the two-sided Kolmogorov–Smirnov test at level 0.05.
pub const KS_CRITICAL_005: f64 = 1.358;

/// A point of R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "point needs at least one coordinate".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    /// A one-dimensional point. Panics on a non-finite value.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate {x}");
        Self(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        euclid(&self.0, &other.0)
    }

    fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

#[inline]
pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Parameters of the weighted Riesz kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyParams {
    /// Riesz exponent.
    pub m: f64,
    /// Ambient dimension.
    pub d: usize,
    /// Weight coupling coefficient.
    pub alpha: f64,
    /// Local discrepancy coefficient.
    pub beta: f64,
    /// Lower clamp for the weight base.
    pub base_floor: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            m: 40.0,
            d: 1,
            alpha: -1.0,
            beta: 1.0,
            base_floor: 1e-8,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParams("d must be positive".into()));
        }
        if !(self.m > self.d as f64) || !self.m.is_finite() {
            return Err(Error::InvalidParams(format!(
                "need m > d, got m = {}, d = {}",
                self.m, self.d
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.base_floor > 0.0) || !self.base_floor.is_finite() {
            return Err(Error::InvalidParams(format!(
                "base_floor must be positive, got {}",
                self.base_floor
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParams("alpha must be finite".into()));
        }
        Ok(())
    }

    /// `ln ω` from the two γ values and the separation.
    #[inline]
    pub fn log_weight(&self, gamma_i: f64, gamma_j: f64, r: f64) -> f64 {
        let base = (self.alpha * (gamma_i * gamma_j) + self.beta * r).max(self.base_floor);
        base.powf(-self.m / (2.0 * self.d as f64))
    }

    /// `ln K` from the two γ values and the separation (`r > 0`).
    #[inline]
    pub fn log_kernel(&self, gamma_i: f64, gamma_j: f64, r: f64) -> f64 {
        self.log_weight(gamma_i, gamma_j, r) - self.m * r.ln()
    }
}

/// An ordered set of pairwise-distinct points sharing one dimension.
#[derive(Debug, Clone)]
pub struct Configuration {
    points: Vec<Point>,
    dist: OnceLock<Vec<f64>>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Configuration {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.dim();
            if points.iter().any(|p| p.dim() != d) {
                return Err(Error::InvalidInput("points have mixed dimensions".into()));
            }
            if points
                .iter()
                .any(|p| p.coords().iter().any(|c| !c.is_finite()))
            {
                return Err(Error::InvalidInput(
                    "non-finite coordinate in configuration".into(),
                ));
            }
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
            for w in order.windows(2) {
                if points[w[0]] == points[w[1]] {
                    return Err(Error::InvalidInput(format!(
                        "duplicate point {:?} at indices {} and {}",
                        points[w[0]].coords(),
                        w[0],
                        w[1]
                    )));
                }
            }
        }
        Ok(Self {
            points,
            dist: OnceLock::new(),
        })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        let pts = xs
            .iter()
            .map(|&x| Point::new(vec![x]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts)
    }

    /// Copy of this configuration with `p` appended.
    pub fn with_point(&self, p: Point) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.push(p);
        Self::new(pts)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Point::dim)
    }

    /// First coordinate of every point; the natural view for d = 1.
    pub fn scalars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.coords()[0]).collect()
    }

    /// Row-major n×n Euclidean distance matrix, computed on first use.
    pub fn pairwise_distances(&self) -> &[f64] {
        self.dist.get_or_init(|| {
            let n = self.points.len();
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let r = self.points[i].distance(&self.points[j]);
                    m[i * n + j] = r;
                    m[j * n + i] = r;
                }
            }
            m
        })
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let n = self.points.len();
        self.pairwise_distances()[i * n + j]
    }

    /// Indices ordered lexicographically by coordinates.
    fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| self.points[a].lex_cmp(&self.points[b]));
        order
    }
}

fn check_pair(xi: &Point, xj: &Point) -> Result<f64> {
    if xi.dim() != xj.dim() {
        return Err(Error::InvalidInput(
            "points have different dimensions".into(),
        ));
    }
    if xi
        .coords()
        .iter()
        .chain(xj.coords())
        .any(|c| !c.is_finite())
    {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    let r = xi.distance(xj);
    if r == 0.0 {
        return Err(Error::SingularKernel(
            xi.coords().to_vec(),
            xj.coords().to_vec(),
        ));
    }
    Ok(r)
}

/// `ln ω(x_i, x_j)`.
pub fn log_pair_weight(
    xi: &Point,
    xj: &Point,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    let r = check_pair(xi, xj)?;
    Ok(p.log_weight(density.gamma(xi), density.gamma(xj), r))
}

/// `ω(x_i, x_j)`; `+inf` once `ln ω` exceeds the double range.
pub fn pair_weight(
    xi: &Point,
    xj: &Point,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    log_pair_weight(xi, xj, density, p).map(f64::exp)
}

/// `ln K(x_i, x_j) = ln ω − m ln ‖x_i − x_j‖`.
pub fn log_pair_kernel(
    xi: &Point,
    xj: &Point,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    let r = check_pair(xi, xj)?;
    Ok(p.log_kernel(density.gamma(xi), density.gamma(xj), r))
}

pub fn pair_kernel(
    xi: &Point,
    xj: &Point,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    log_pair_kernel(xi, xj, density, p).map(f64::exp)
}

/// `ln Σ_{i<j} K(x_i, x_j)`, summed over lexicographically sorted points so
/// the result does not depend on the storage order.
pub fn log_energy_sum(
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    let n = config.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let order = config.canonical_order();
    let gammas: Vec<f64> = order
        .iter()
        .map(|&i| density.gamma(&config.points[i]))
        .collect();
    let mut terms = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let r = config.distance(order[a], order[b]);
            terms.push(p.log_kernel(gammas[a], gammas[b], r));
        }
    }
    Ok(log_sum_exp(&terms))
}

/// `ln E` where `E = {Σ_{i<j} K(x_i, x_j)}^{1/m}`.
pub fn log_total_energy(
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    Ok(log_energy_sum(config, density, p)? / p.m)
}

pub fn total_energy(
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    log_total_energy(config, density, p).map(f64::exp)
}

/// `ln Σ_i K(x_i, y)` given precomputed γ values for the configuration.
///
/// Returns `Ok(None)` when `y` coincides with one of the points.
pub(crate) fn log_potential_cached(
    y: &[f64],
    gamma_y: f64,
    points: &[Point],
    gammas: &[f64],
    p: &EnergyParams,
    scratch: &mut Vec<f64>,
) -> Option<f64> {
    scratch.clear();
    for (x, &g) in points.iter().zip(gammas) {
        let r = euclid(x.coords(), y);
        if r == 0.0 {
            return None;
        }
        scratch.push(p.log_kernel(g, gamma_y, r));
    }
    Some(log_sum_exp(scratch))
}

/// `ln Σ_i K(x_i, y)`: the log of the field felt at `y`.
pub fn log_potential_at(
    y: &Point,
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    if config.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if y.dim() != config.dim() {
        return Err(Error::InvalidInput(
            "candidate dimension differs from configuration".into(),
        ));
    }
    if y.coords().iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite candidate".into()));
    }
    let gammas: Vec<f64> = config.points.iter().map(|x| density.gamma(x)).collect();
    let mut scratch = Vec::with_capacity(config.len());
    log_potential_cached(
        y.coords(),
        density.gamma(y),
        &config.points,
        &gammas,
        p,
        &mut scratch,
    )
    .ok_or_else(|| {
        let hit = config
            .points
            .iter()
            .find(|x| *x == y)
            .expect("coincident point");
        Error::SingularKernel(hit.coords().to_vec(), y.coords().to_vec())
    })
}

pub fn potential_at(
    y: &Point,
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<f64> {
    log_potential_at(y, config, density, p).map(f64::exp)
}

/// Smallest pairwise distance.
pub fn min_separation(config: &Configuration) -> Result<f64> {
    let n = config.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    if config.dim() == 1 {
        let mut xs = config.scalars();
        xs.sort_by(f64::total_cmp);
        return Ok(xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min));
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.min(config.distance(i, j));
        }
    }
    Ok(best)
}

/// Largest distance from a mesh point to its nearest configuration point.
pub fn covering_radius(config: &Configuration, mesh: &[Point]) -> Result<f64> {
    if config.is_empty() || mesh.is_empty() {
        return Err(Error::InvalidInput(
            "covering radius needs a non-empty configuration and mesh".into(),
        ));
    }
    if mesh.iter().any(|q| q.dim() != config.dim()) {
        return Err(Error::InvalidInput(
            "mesh dimension differs from configuration".into(),
        ));
    }
    if config.dim() == 1 {
        let mut xs = config.scalars();
        xs.sort_by(f64::total_cmp);
        let worst = mesh
            .iter()
            .map(|q| {
                let v = q.coords()[0];
                let k = xs.partition_point(|&x| x < v);
                let right = xs.get(k).map_or(f64::INFINITY, |x| x - v);
                let left = if k > 0 { v - xs[k - 1] } else { f64::INFINITY };
                left.min(right)
            })
            .fold(0.0, f64::max);
        return Ok(worst);
    }
    Ok(mesh
        .iter()
        .map(|q| {
            config
                .points
                .iter()
                .map(|x| x.distance(q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

/// `n` equispaced mesh points on `[lo, hi]`.
pub fn line_mesh(lo: f64, hi: f64, n: usize) -> Vec<Point> {
    if n == 1 {
        return vec![Point::scalar(0.5 * (lo + hi))];
    }
    (0..n)
        .map(|i| Point::scalar(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Both forms of the pairwise-distance uniformity statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityStatistic {
    /// `(1/n) Σ_{i≠j} ‖x_i − x_j‖`
    pub raw: f64,
    /// Mean pairwise distance, `raw / (n − 1)`.
    pub mean_distance: f64,
}

pub fn uniformity_statistic(config: &Configuration) -> Result<UniformityStatistic> {
    let n = config.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    // Σ_{i<j} ‖x_i − x_j‖
    let half_sum = if config.dim() == 1 {
        let mut xs = config.scalars();
        xs.sort_by(f64::total_cmp);
        xs.iter()
            .enumerate()
            .map(|(k, x)| x * (2.0 * k as f64 - (n as f64 - 1.0)))
            .sum::<f64>()
    } else {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += config.distance(i, j);
            }
        }
        s
    };
    let raw = 2.0 * half_sum / n as f64;
    Ok(UniformityStatistic {
        raw,
        mean_distance: raw / (n as f64 - 1.0),
    })
}

/// Outcome of a one-sample Kolmogorov–Smirnov test at level 0.05.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Two-sided KS statistic of a sample against a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

fn ks_result(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let statistic = ks_statistic(sample, cdf);
    let critical = KS_CRITICAL_005 / (sample.len() as f64).sqrt();
    KsResult {
        statistic,
        critical,
        pass: statistic < critical,
    }
}

/// KS test of a one-dimensional configuration against `target_cdf`.
pub fn ks_uniformity_test(
    config: &Configuration,
    target_cdf: impl Fn(f64) -> f64,
) -> Result<KsResult> {
    if config.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if config.dim() != 1 {
        return Err(Error::UnsupportedDimension(config.dim()));
    }
    Ok(ks_result(&config.scalars(), target_cdf))
}

/// Per-coordinate KS tests for d ≥ 1, one marginal CDF per coordinate.
pub fn ks_uniformity_test_marginals(
    config: &Configuration,
    marginals: &[&dyn Fn(f64) -> f64],
) -> Result<Vec<KsResult>> {
    if config.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if marginals.len() != config.dim() {
        return Err(Error::UnsupportedDimension(config.dim()));
    }
    Ok(marginals
        .iter()
        .enumerate()
        .map(|(k, cdf)| {
            let col: Vec<f64> = config.points.iter().map(|p| p.coords()[k]).collect();
            ks_result(&col, cdf)
        })
        .collect())
}

/// Both sides of the energy lower bound, in logs:
/// `Σ_{i<j} K ≥ (1/(n−1)) Σ_{i<j} ‖x_i − x_j‖^{−(m+1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub log_energy_sum: f64,
    pub log_bound: f64,
    pub holds: bool,
}

pub fn energy_lower_bound(
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<LowerBoundCheck> {
    let lhs = log_energy_sum(config, density, p)?;
    let n = config.len();
    let order = config.canonical_order();
    let mut terms = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            terms.push(-(p.m + 1.0) * config.distance(order[a], order[b]).ln());
        }
    }
    let rhs = log_sum_exp(&terms) - ((n - 1) as f64).ln();
    Ok(LowerBoundCheck {
        log_energy_sum: lhs,
        log_bound: rhs,
        holds: lhs >= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Gaussian, UniformBox};

    fn uniform() -> DensityOracle {
        DensityOracle::new(UniformBox::unit(1))
    }

    #[test]
    fn weight_reduces_to_beta_r_for_flat_gamma() {
        let p = EnergyParams {
            m: 2.0,
            ..Default::default()
        };
        let w = pair_weight(&Point::scalar(0.0), &Point::scalar(1.0), &uniform(), &p).unwrap();
        assert!((w - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn weight_base_is_clamped() {
        let p = EnergyParams::default();
        // α γγ + β r = −4 + 0.5 < 0
        let lw = p.log_weight(2.0, 2.0, 0.5);
        assert_eq!(lw, p.base_floor.powf(-20.0));
        assert_eq!(lw.exp(), f64::INFINITY);
    }

    #[test]
    fn weight_from_standard_normal_gamma() {
        // reference values from a 50-digit evaluation of the closed form
        let dens = DensityOracle::new(Gaussian::standard(1));
        let (a, b) = (Point::scalar(0.0), Point::scalar(1.0));
        let p = EnergyParams::default();
        let lw = log_pair_weight(&a, &b, &dens, &p).unwrap();
        assert!((lw / 1e160 - 1.0).abs() < 1e-12, "{lw}");
        let p3 = EnergyParams {
            beta: 3.0,
            ..Default::default()
        };
        let w = pair_weight(&a, &b, &dens, &p3).unwrap();
        assert!((w - 1.000_025_767_072_470_7).abs() < 1e-15, "{w}");
    }

    #[test]
    fn kernel_with_unit_weight() {
        // β large and α = 0 drive ω → exp(0⁺) = 1
        let p = EnergyParams {
            m: 1.0,
            d: 1,
            alpha: 0.0,
            beta: 1e300,
            base_floor: 1e-8,
        };
        let lk = p.log_kernel(0.0, 0.0, 2.0);
        assert!((lk.exp() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_are_singular() {
        let p = EnergyParams::default();
        let e = pair_kernel(&Point::scalar(0.2), &Point::scalar(0.2), &uniform(), &p);
        assert!(matches!(e, Err(Error::SingularKernel(..))));
        let cfg = Configuration::from_scalars(&[0.2, 0.4]).unwrap();
        let e = potential_at(&Point::scalar(0.4), &cfg, &uniform(), &p);
        assert!(matches!(e, Err(Error::SingularKernel(..))));
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Configuration::from_scalars(&[0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn duplicate_points_rejected() {
        assert!(Configuration::from_scalars(&[0.1, 0.5, 0.1]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(EnergyParams::default().validate().is_ok());
        assert!(EnergyParams {
            m: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(EnergyParams {
            beta: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(EnergyParams {
            base_floor: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn two_point_energy_is_kernel_root() {
        let p = EnergyParams {
            m: 4.0,
            ..Default::default()
        };
        let cfg = Configuration::from_scalars(&[0.0, 0.5]).unwrap();
        let lk = log_pair_kernel(&Point::scalar(0.0), &Point::scalar(0.5), &uniform(), &p).unwrap();
        let le = log_total_energy(&cfg, &uniform(), &p).unwrap();
        assert!((le - lk / 4.0).abs() < 1e-14);
    }

    #[test]
    fn insufficient_points() {
        let p = EnergyParams::default();
        let one = Configuration::from_scalars(&[0.3]).unwrap();
        assert!(matches!(
            log_total_energy(&one, &uniform(), &p),
            Err(Error::InsufficientPoints { .. })
        ));
        assert!(matches!(
            min_separation(&one),
            Err(Error::InsufficientPoints { .. })
        ));
        assert!(matches!(
            uniformity_statistic(&one),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn single_source_potential() {
        let p = EnergyParams {
            m: 3.0,
            d: 1,
            alpha: 0.0,
            beta: 1e300,
            base_floor: 1e-8,
        };
        let cfg = Configuration::from_scalars(&[0.0]).unwrap();
        let v = potential_at(&Point::scalar(0.5), &cfg, &uniform(), &p).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_potential_exceeds_far_point() {
        let p = EnergyParams {
            m: 4.0,
            ..Default::default()
        };
        let cfg = Configuration::from_scalars(&[0.0, 1.0]).unwrap();
        let mid = log_potential_at(&Point::scalar(0.5), &cfg, &uniform(), &p).unwrap();
        // twice as far from both sources as the midpoint is
        let far = Point::new(vec![0.5]).unwrap();
        let cfg2 = Configuration::from_scalars(&[-0.5, 1.5]).unwrap();
        let far_v = log_potential_at(&far, &cfg2, &uniform(), &p).unwrap();
        assert!(mid > far_v);
    }

    #[test]
    fn separation_examples() {
        let cfg = Configuration::from_scalars(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(min_separation(&cfg).unwrap(), 0.5);
        let n = 11;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let cfg = Configuration::from_scalars(&xs).unwrap();
        assert!((min_separation(&cfg).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn covering_examples() {
        let mesh = line_mesh(0.0, 1.0, 1001);
        let cfg = Configuration::new(mesh.clone()).unwrap();
        assert_eq!(covering_radius(&cfg, &mesh).unwrap(), 0.0);
        let cfg = Configuration::from_scalars(&[0.0, 1.0]).unwrap();
        assert!((covering_radius(&cfg, &mesh).unwrap() - 0.5).abs() < 1e-12);
        assert!(covering_radius(&cfg, &[]).is_err());
        let n = 9;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let cfg = Configuration::from_scalars(&xs).unwrap();
        let rho = covering_radius(&cfg, &mesh).unwrap();
        assert!((rho - 1.0 / 16.0).abs() <= 1e-3);
    }

    #[test]
    fn covering_radius_2d_uses_brute_force() {
        let cfg = Configuration::new(vec![
            Point::new(vec![0.0, 0.0]).unwrap(),
            Point::new(vec![1.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let mesh = vec![Point::new(vec![1.0, 0.0]).unwrap()];
        assert!((covering_radius(&cfg, &mesh).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_points_unit_mean_distance() {
        let cfg = Configuration::from_scalars(&[0.0, 1.0]).unwrap();
        let u = uniformity_statistic(&cfg).unwrap();
        assert_eq!(u.mean_distance, 1.0);
        assert_eq!(u.raw, 1.0);
    }

    #[test]
    fn equispaced_mean_distance_tends_to_third() {
        let n = 2001;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let u = uniformity_statistic(&Configuration::from_scalars(&xs).unwrap()).unwrap();
        // exact value for the equispaced grid is (n + 1) / (3 (n − 1))
        assert!((u.mean_distance - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn ks_at_quantiles_and_at_a_point() {
        let n = 50;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_uniformity_test(&Configuration::from_scalars(&xs).unwrap(), |x| {
            x.clamp(0.0, 1.0)
        })
        .unwrap();
        assert!(r.statistic <= 0.5 / n as f64 + 1e-15);
        assert!(r.pass);

        // 100 copies of one location cannot form a configuration, so use the raw statistic
        let d = ks_statistic(&[0.5; 100], |x| x);
        assert!((d - 0.5).abs() < 1e-12);
        let d = ks_statistic(&[1e-9; 100], |x| x);
        assert!(d > 0.99);
        assert!(d >= KS_CRITICAL_005 / 10.0);
    }

    #[test]
    fn ks_requires_marginals_for_d_above_one() {
        let cfg = Configuration::new(vec![
            Point::new(vec![0.1, 0.2]).unwrap(),
            Point::new(vec![0.7, 0.4]).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            ks_uniformity_test(&cfg, |x| x),
            Err(Error::UnsupportedDimension(2))
        ));
        let id = |x: f64| x;
        let res = ks_uniformity_test_marginals(&cfg, &[&id, &id]).unwrap();
        assert_eq!(res.len(), 2);
    }

    #[test]
    fn lower_bound_on_small_uniform_set() {
        let cfg = Configuration::from_scalars(&[0.0, 0.3, 0.55, 1.0]).unwrap();
        let chk = energy_lower_bound(&cfg, &uniform(), &EnergyParams::default()).unwrap();
        assert!(chk.holds);
    }

    #[test]
    fn distance_cache_matches_direct() {
        let cfg = Configuration::from_scalars(&[0.0, 0.25, 0.9]).unwrap();
        assert_eq!(cfg.distance(0, 2), 0.9);
        assert_eq!(cfg.distance(2, 1), 0.65);
        assert_eq!(cfg.pairwise_distances().len(), 9);
    }
}
