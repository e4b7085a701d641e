//! Sequential greedy generation of Chebyshev particle configurations.
//!
//! One point is added per round. A fresh candidate pool is scored against
//! the current configuration and the candidate sitting in the deepest hole of
//! the potential field (minimal `ln Σ_i K(x_i, y)`) is proposed. The proposal
//! then has to pass the separation/relative-move acceptance rule; after
//! `max_retries` rejections the best candidate seen in the round is taken.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{DensityOracle, LogDensity};
use crate::error::{Error, Result};
use crate::riesz::{euclid, log_potential_cached, Configuration, EnergyParams, Point};
use crate::stats::{log_sum_exp, LN_2PI};

/// How candidates are laid out in each selection round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    /// `pool_size` uniform draws over the box.
    #[default]
    Uniform,
    /// `pool_size` equispaced points over `[lo, hi]`, d = 1 only.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_points: usize,
    pub pool_size: usize,
    pub max_retries: usize,
    pub seed: u64,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    /// 0 disables density refits; k > 0 refits after every k accepted points.
    pub refit_interval: usize,
    /// KDE bandwidth used by refits; 0 selects Silverman's rule.
    pub refit_bandwidth: f64,
    pub denom_epsilon: f64,
    pub pool: PoolKind,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_points: 200,
            pool_size: 512,
            max_retries: 32,
            seed: 0,
            domain_lo: vec![0.0],
            domain_hi: vec![1.0],
            refit_interval: 0,
            refit_bandwidth: 0.0,
            denom_epsilon: 1e-6,
            pool: PoolKind::Uniform,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::InvalidParams(format!(
                "n_points must be ≥ 2, got {}",
                self.n_points
            )));
        }
        if self.pool_size < 2 {
            return Err(Error::InvalidParams(format!(
                "pool_size must be ≥ 2, got {}",
                self.pool_size
            )));
        }
        if self.domain_lo.is_empty() || self.domain_lo.len() != self.domain_hi.len() {
            return Err(Error::InvalidParams(
                "domain bounds must have equal, non-zero length".into(),
            ));
        }
        if self
            .domain_lo
            .iter()
            .zip(&self.domain_hi)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::InvalidParams(
                "domain requires finite lo < hi per coordinate".into(),
            ));
        }
        if !(self.denom_epsilon > 0.0) {
            return Err(Error::InvalidParams(
                "denom_epsilon must be positive".into(),
            ));
        }
        if !(self.refit_bandwidth >= 0.0) {
            return Err(Error::InvalidParams(
                "refit_bandwidth must be non-negative".into(),
            ));
        }
        if self.pool == PoolKind::Grid && self.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain_lo.len()
    }

    fn draw_pool(&self, rng: &mut impl Rng) -> Vec<Point> {
        match self.pool {
            PoolKind::Uniform => (0..self.pool_size)
                .map(|_| {
                    let coords = self
                        .domain_lo
                        .iter()
                        .zip(&self.domain_hi)
                        .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                        .collect();
                    Point::new(coords).expect("finite box")
                })
                .collect(),
            PoolKind::Grid => {
                let (l, h) = (self.domain_lo[0], self.domain_hi[0]);
                let k = self.pool_size;
                (0..k)
                    .map(|i| Point::scalar(l + (h - l) * i as f64 / (k - 1) as f64))
                    .collect()
            }
        }
    }
}

/// Candidate nearest to the self-normalized importance estimate of `E_f[x]`
/// over a uniform pool on the box.
pub fn initial_point(density: &DensityOracle, cfg: &GeneratorConfig) -> Result<Point> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    initial_point_with(density, cfg, &mut rng)
}

fn initial_point_with(
    density: &DensityOracle,
    cfg: &GeneratorConfig,
    rng: &mut impl Rng,
) -> Result<Point> {
    let pool = cfg.draw_pool(rng);
    let logw: Vec<f64> = pool
        .iter()
        .map(|x| {
            let lf = density.logpdf(x);
            if lf.is_nan() {
                f64::NEG_INFINITY
            } else {
                lf
            }
        })
        .collect();
    let lse = log_sum_exp(&logw);
    if !lse.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let d = cfg.dim();
    let mut target = vec![0.0; d];
    for (x, lw) in pool.iter().zip(&logw) {
        let w = (lw - lse).exp();
        for (t, c) in target.iter_mut().zip(x.coords()) {
            *t += w * c;
        }
    }
    let nearest = pool
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            euclid(a.coords(), &target)
                .total_cmp(&euclid(b.coords(), &target))
                .then(ia.cmp(ib))
        })
        .map(|(_, p)| p.clone())
        .expect("pool is non-empty");
    Ok(nearest)
}

/// A candidate chosen in one selection round.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub point: Point,
    /// `ln Σ_i K(x_i, point)` against the configuration at selection time.
    pub log_potential: f64,
}

/// Lowest-potential candidate of a pool; ties go to the lowest pool index.
fn select_from_pool(
    pool: Vec<Point>,
    points: &[Point],
    gammas: &[f64],
    density: &DensityOracle,
    p: &EnergyParams,
) -> Result<Selection> {
    let mut scratch = Vec::with_capacity(points.len());
    let mut best: Option<Selection> = None;
    for y in pool {
        let gy = density.gamma(&y);
        let Some(lp) = log_potential_cached(y.coords(), gy, points, gammas, p, &mut scratch) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| lp < b.log_potential) {
            best = Some(Selection {
                point: y,
                log_potential: lp,
            });
        }
    }
    best.ok_or(Error::DegeneratePool)
}

/// One candidate round: draw a pool and return its minimal-potential member.
pub fn next_point(
    config: &Configuration,
    density: &DensityOracle,
    p: &EnergyParams,
    cfg: &GeneratorConfig,
    rng: &mut impl Rng,
) -> Result<Selection> {
    if config.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if config.dim() != cfg.dim() {
        return Err(Error::InvalidInput(
            "configuration dimension differs from the domain".into(),
        ));
    }
    let gammas: Vec<f64> = config.points().iter().map(|x| density.gamma(x)).collect();
    select_from_pool(cfg.draw_pool(rng), config.points(), &gammas, density, p)
}

/// Separation and relative-move test for a proposed point.
///
/// Accepts iff `‖x_next − x_prev‖ ≥ r_min` and
/// `‖x_next − x_prev‖ / (‖x_prev‖ + ε) ≥ u` with `u ~ U(0, 1)`.
/// Exactly one uniform is consumed per call.
pub fn accept_rule(
    x_next: &Point,
    x_prev: &Point,
    r_min: f64,
    cfg: &GeneratorConfig,
    rng: &mut impl Rng,
) -> bool {
    let u: f64 = rng.random();
    let step = x_next.distance(x_prev);
    if step < r_min {
        return false;
    }
    let norm = x_prev.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
    step / (norm + cfg.denom_epsilon) >= u
}

/// Per-point record emitted by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    /// `ln` potential at selection; NaN for the initial point.
    pub log_potential: f64,
    /// Minimum separation of the configuration once this point is added; NaN while n < 2.
    pub min_separation: f64,
    /// Candidate rounds used for this point.
    pub rounds: usize,
    /// Whether the retry budget ran out and the best candidate was forced in.
    pub forced: bool,
}

#[derive(Debug, Clone)]
pub struct Generation {
    pub config: Configuration,
    pub diagnostics: Vec<PointDiagnostics>,
}

impl Generation {
    pub fn forced_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.forced).count()
    }
}

/// Greedy generation of `cfg.n_points` points for `density`.
pub fn generate(
    density: &DensityOracle,
    p: &EnergyParams,
    cfg: &GeneratorConfig,
) -> Result<Generation> {
    p.validate()?;
    cfg.validate()?;
    if p.d != cfg.dim() {
        return Err(Error::InvalidParams(format!(
            "energy dimension {} differs from domain dimension {}",
            p.d,
            cfg.dim()
        )));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut density = density.clone();
    let x0 = initial_point_with(&density, cfg, &mut init_rng)?;
    let mut gammas = vec![density.gamma(&x0)];
    let mut points = vec![x0];
    let mut diagnostics = vec![PointDiagnostics {
        log_potential: f64::NAN,
        min_separation: f64::NAN,
        rounds: 0,
        forced: false,
    }];
    let mut r_min = f64::INFINITY;

    while points.len() < cfg.n_points {
        let mut best: Option<Selection> = None;
        let mut chosen: Option<Selection> = None;
        let mut rounds = 0;
        for _ in 0..=cfg.max_retries {
            rounds += 1;
            let cand = select_from_pool(cfg.draw_pool(&mut rng), &points, &gammas, &density, p)?;
            if best
                .as_ref()
                .is_none_or(|b| cand.log_potential < b.log_potential)
            {
                best = Some(cand.clone());
            }
            // the separation test needs two points to define r_min
            let prev = points.last().expect("non-empty");
            if points.len() < 2 || accept_rule(&cand.point, prev, r_min, cfg, &mut rng) {
                chosen = Some(cand);
                break;
            }
        }
        let forced = chosen.is_none();
        let sel = chosen.or(best).expect("at least one round ran");

        for x in &points {
            r_min = r_min.min(x.distance(&sel.point));
        }
        gammas.push(density.gamma(&sel.point));
        points.push(sel.point);
        diagnostics.push(PointDiagnostics {
            log_potential: sel.log_potential,
            min_separation: r_min,
            rounds,
            forced,
        });

        if cfg.refit_interval > 0
            && points.len() % cfg.refit_interval == 0
            && points.len() < cfg.n_points
        {
            let current = Configuration::new(points.clone())?;
            density = refit_density(&current, cfg.refit_bandwidth)?;
            gammas = points.iter().map(|x| density.gamma(x)).collect();
        }
    }

    Ok(Generation {
        config: Configuration::new(points)?,
        diagnostics,
    })
}

/// Isotropic Gaussian kernel density estimate.
#[derive(Debug, Clone)]
pub struct KernelDensity {
    centers: Vec<Vec<f64>>,
    bandwidth: f64,
    log_norm: f64,
}

impl KernelDensity {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

impl LogDensity for KernelDensity {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let inv = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let terms: Vec<f64> = self
            .centers
            .iter()
            .map(|c| {
                let sq: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                -sq * inv
            })
            .collect();
        log_sum_exp(&terms) - self.log_norm
    }
}

/// Silverman's rule of thumb, averaged over coordinates.
fn silverman_bandwidth(config: &Configuration) -> f64 {
    let n = config.len() as f64;
    let d = config.dim();
    let mut total = 0.0;
    for k in 0..d {
        let mut col: Vec<f64> = config.points().iter().map(|p| p.coords()[k]).collect();
        col.sort_by(f64::total_cmp);
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let q = |f: f64| {
            let pos = f * (n - 1.0);
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            col[lo] + (col[hi] - col[lo]) * (pos - lo as f64)
        };
        let iqr = (q(0.75) - q(0.25)) / 1.34;
        let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
        total += 0.9 * spread * n.powf(-0.2);
    }
    total / d as f64
}

/// Gaussian KDE over the configuration; `bandwidth = 0` selects Silverman's rule.
pub fn refit_density(config: &Configuration, bandwidth: f64) -> Result<DensityOracle> {
    if config.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: config.len(),
        });
    }
    if !(bandwidth >= 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidParams(format!(
            "bandwidth must be non-negative, got {bandwidth}"
        )));
    }
    let h = if bandwidth == 0.0 {
        silverman_bandwidth(config)
    } else {
        bandwidth
    };
    if !(h > 0.0) {
        return Err(Error::InternalConsistency(
            "selected a non-positive bandwidth".into(),
        ));
    }
    let d = config.dim() as f64;
    let n = config.len() as f64;
    let kde = KernelDensity {
        centers: config
            .points()
            .iter()
            .map(|p| p.coords().to_vec())
            .collect(),
        bandwidth: h,
        log_norm: n.ln() + d * (h.ln() + 0.5 * LN_2PI),
    };
    Ok(DensityOracle::new(kde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{TruncatedExponential, TruncatedGaussian, UniformBox};
    use crate::riesz::log_potential_at;

    fn uniform() -> DensityOracle {
        DensityOracle::new(UniformBox::unit(1))
    }

    #[test]
    fn config_validation() {
        assert!(GeneratorConfig::default().validate().is_ok());
        let bad = GeneratorConfig {
            n_points: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GeneratorConfig {
            domain_lo: vec![1.0],
            domain_hi: vec![0.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GeneratorConfig {
            domain_lo: vec![0.0, 0.0],
            domain_hi: vec![1.0, 1.0],
            pool: PoolKind::Grid,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn initial_point_uniform_is_central() {
        let cfg = GeneratorConfig {
            pool_size: 4096,
            seed: 3,
            ..Default::default()
        };
        let x = initial_point(&uniform(), &cfg).unwrap();
        assert!((x.coords()[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn initial_point_tracks_gaussian_mean() {
        let d = DensityOracle::new(TruncatedGaussian::new(0.5, 0.1, 0.0, 1.0).unwrap());
        for seed in 0..5 {
            let cfg = GeneratorConfig {
                pool_size: 4096,
                seed,
                ..Default::default()
            };
            let x = initial_point(&d, &cfg).unwrap();
            assert!((x.coords()[0] - 0.5).abs() < 0.05, "seed {seed}: {x:?}");
        }
    }

    #[test]
    fn initial_point_left_skewed() {
        let d = DensityOracle::new(TruncatedExponential::new(10.0, 0.0, 1.0).unwrap());
        let cfg = GeneratorConfig {
            pool_size: 4096,
            seed: 11,
            ..Default::default()
        };
        let x = initial_point(&d, &cfg).unwrap();
        assert!(x.coords()[0] < 0.3);
    }

    #[test]
    fn initial_point_degenerate_density() {
        let d = DensityOracle::new(|_: &[f64]| f64::NEG_INFINITY);
        let err = initial_point(&d, &GeneratorConfig::default());
        assert!(matches!(err, Err(Error::DegenerateDensity)));
    }

    #[test]
    fn next_point_between_two_sources() {
        let cfg = GeneratorConfig {
            pool_size: 512,
            ..Default::default()
        };
        let conf = Configuration::from_scalars(&[0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = next_point(&conf, &uniform(), &EnergyParams::default(), &cfg, &mut rng).unwrap();
        // expected uniform pool spacing is 1/512
        assert!((s.point.coords()[0] - 0.5).abs() < 4.0 / 512.0, "{s:?}");
    }

    #[test]
    fn next_point_on_grid_matches_exhaustive_scan() {
        let cfg = GeneratorConfig {
            pool_size: 1001,
            pool: PoolKind::Grid,
            ..Default::default()
        };
        let conf = Configuration::from_scalars(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let p = EnergyParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = next_point(&conf, &uniform(), &p, &cfg, &mut rng).unwrap();

        let mut best = (f64::INFINITY, 0.0);
        for i in 0..1001 {
            let y = i as f64 / 1000.0;
            if [0.0, 0.25, 0.5, 0.75, 1.0].contains(&y) {
                continue;
            }
            let lp = log_potential_at(&Point::scalar(y), &conf, &uniform(), &p).unwrap();
            if lp < best.0 {
                best = (lp, y);
            }
        }
        assert_eq!(s.point.coords()[0], best.1);
        assert_eq!(s.log_potential, best.0);
    }

    #[test]
    fn next_point_empty_pool() {
        let cfg = GeneratorConfig {
            pool_size: 2,
            pool: PoolKind::Grid,
            ..Default::default()
        };
        let conf = Configuration::from_scalars(&[0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = next_point(&conf, &uniform(), &EnergyParams::default(), &cfg, &mut rng);
        assert!(matches!(err, Err(Error::DegeneratePool)));
    }

    #[test]
    fn accept_rule_clauses() {
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let prev = Point::scalar(0.5);
        for _ in 0..100 {
            assert!(!accept_rule(
                &Point::scalar(0.52),
                &prev,
                0.05,
                &cfg,
                &mut rng
            ));
        }
        // step 0.6 over |x_prev| = 0.5 gives ratio > 1
        for _ in 0..100 {
            assert!(accept_rule(
                &Point::scalar(1.1),
                &prev,
                0.05,
                &cfg,
                &mut rng
            ));
        }
    }

    #[test]
    fn accept_rule_bernoulli_frequency() {
        let cfg = GeneratorConfig {
            denom_epsilon: 1e-12,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let prev = Point::scalar(0.4);
        let next = Point::scalar(0.6); // ratio 0.2 / 0.4 = 0.5
        let hits = (0..10_000)
            .filter(|_| accept_rule(&next, &prev, 0.01, &cfg, &mut rng))
            .count();
        let f = hits as f64 / 10_000.0;
        assert!((f - 0.5).abs() < 0.03, "{f}");
    }

    #[test]
    fn two_points_are_well_apart() {
        let cfg = GeneratorConfig {
            n_points: 2,
            seed: 1,
            ..Default::default()
        };
        let g = generate(&uniform(), &EnergyParams::default(), &cfg).unwrap();
        assert_eq!(g.config.len(), 2);
        assert!(g.config.distance(0, 1) > 0.3);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig {
            n_points: 40,
            seed: 77,
            ..Default::default()
        };
        let a = generate(&uniform(), &EnergyParams::default(), &cfg).unwrap();
        let b = generate(&uniform(), &EnergyParams::default(), &cfg).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(
            a.diagnostics
                .iter()
                .map(|d| d.log_potential.to_bits())
                .collect::<Vec<_>>(),
            b.diagnostics
                .iter()
                .map(|d| d.log_potential.to_bits())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn diagnostics_track_running_separation() {
        let cfg = GeneratorConfig {
            n_points: 30,
            seed: 4,
            ..Default::default()
        };
        let g = generate(&uniform(), &EnergyParams::default(), &cfg).unwrap();
        assert_eq!(g.diagnostics.len(), 30);
        assert!(g.diagnostics[0].log_potential.is_nan());
        let last = g.diagnostics.last().unwrap().min_separation;
        assert_eq!(last, crate::riesz::min_separation(&g.config).unwrap());
        for w in g.diagnostics[1..].windows(2) {
            assert!(w[1].min_separation <= w[0].min_separation);
        }
    }

    #[test]
    fn forced_acceptance_terminates() {
        // a grid pool repeats the same proposal, so rejections can only end by forcing
        let cfg = GeneratorConfig {
            n_points: 12,
            pool_size: 101,
            pool: PoolKind::Grid,
            max_retries: 2,
            domain_lo: vec![10.0],
            domain_hi: vec![11.0],
            seed: 2,
            ..Default::default()
        };
        let d = DensityOracle::new(UniformBox::new(vec![10.0], vec![11.0]).unwrap());
        let g = generate(&d, &EnergyParams::default(), &cfg).unwrap();
        assert_eq!(g.config.len(), 12);
        assert!(g.forced_count() > 0);
        assert!(g.diagnostics.iter().all(|d| d.rounds <= 3));
    }

    #[test]
    fn biased_density_packs_points_near_zero() {
        // f ∝ e^{-2x} on [0, 1]; γ vanishes on the left and grows to the right
        let d = DensityOracle::new(TruncatedExponential::new(2.0, 0.0, 1.0).unwrap());
        let cfg = GeneratorConfig {
            n_points: 50,
            seed: 8,
            ..Default::default()
        };
        let g = generate(&d, &EnergyParams::default(), &cfg).unwrap();
        let xs = g.config.scalars();
        let counts = [0.0, 0.25, 0.5, 0.75]
            .map(|a| xs.iter().filter(|&&x| x >= a && x < a + 0.25).count() as f64);
        let counts = [
            counts[0],
            counts[1],
            counts[2],
            counts[3] + xs.iter().filter(|&&x| x == 1.0).count() as f64,
        ];
        let te = TruncatedExponential::new(2.0, 0.0, 1.0).unwrap();
        let chi2 = |probs: [f64; 4]| -> f64 {
            counts
                .iter()
                .zip(probs)
                .map(|(o, p)| {
                    let e = p * 50.0;
                    (o - e) * (o - e) / e
                })
                .sum()
        };
        let f_probs = [0.0, 0.25, 0.5, 0.75].map(|a| te.cdf(a + 0.25) - te.cdf(a));
        let chi_f = chi2(f_probs);
        let chi_u = chi2([0.25; 4]);
        assert!(counts[0] + counts[1] > counts[2] + counts[3], "{counts:?}");
        assert!(
            chi_f < chi_u,
            "chi2 vs f {chi_f}, vs uniform {chi_u}, counts {counts:?}"
        );
    }

    #[test]
    fn refit_disabled_matches_plain_run() {
        let base = GeneratorConfig {
            n_points: 25,
            seed: 13,
            ..Default::default()
        };
        let a = generate(&uniform(), &EnergyParams::default(), &base).unwrap();
        let b = generate(
            &uniform(),
            &EnergyParams::default(),
            &GeneratorConfig {
                refit_interval: 0,
                refit_bandwidth: 0.3,
                ..base
            },
        )
        .unwrap();
        assert_eq!(a.config, b.config);
    }

    #[test]
    fn refit_enabled_still_yields_distinct_points() {
        let cfg = GeneratorConfig {
            n_points: 30,
            seed: 13,
            refit_interval: 10,
            ..Default::default()
        };
        let g = generate(&uniform(), &EnergyParams::default(), &cfg).unwrap();
        assert_eq!(g.config.len(), 30);
        assert!(crate::riesz::min_separation(&g.config).unwrap() > 0.0);
    }

    #[test]
    fn kde_mode_sits_on_cluster() {
        let mut xs: Vec<f64> = (0..20).map(|i| 0.7 + 0.001 * i as f64).collect();
        xs.extend([0.05, 0.3]);
        let conf = Configuration::from_scalars(&xs).unwrap();
        let h = 0.02;
        let kde = refit_density(&conf, h).unwrap();
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let v = kde.logpdf(&Point::scalar(x));
            if v > best {
                best = v;
                arg = x;
            }
        }
        assert!((arg - 0.7095).abs() < h, "{arg}");
    }

    #[test]
    fn kde_of_equispaced_set_is_flat_inside() {
        let n = 50;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let kde = refit_density(&Configuration::from_scalars(&xs).unwrap(), 0.0).unwrap();
        let vals: Vec<f64> = (0..=100)
            .map(|i| 0.25 + 0.5 * i as f64 / 100.0)
            .map(|x| kde.logpdf(&Point::scalar(x)).exp())
            .collect();
        let max = vals.iter().copied().fold(f64::MIN, f64::max);
        let min = vals.iter().copied().fold(f64::MAX, f64::min);
        assert!(max / min < 2.0);
    }

    #[test]
    fn kde_integrates_to_one() {
        let conf = Configuration::from_scalars(&[0.2, 0.4, 0.45, 0.9]).unwrap();
        let kde = refit_density(&conf, 0.05).unwrap();
        let n = 40_000;
        let (lo, hi) = (-1.0, 2.0);
        let h = (hi - lo) / n as f64;
        let s: f64 = (0..n)
            .map(|i| kde.logpdf(&Point::scalar(lo + (i as f64 + 0.5) * h)).exp() * h)
            .sum();
        assert!((s - 1.0).abs() < 1e-6, "{s}");
    }
}
