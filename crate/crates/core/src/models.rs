//! Scalar-state hidden Markov models: the linear Gaussian state space (LGSS)
//! model with its exact Kalman likelihood, and the stochastic volatility (SV)
//! model for log-returns.

use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{normal_logpdf, std_normal_cdf, LN_2PI};

/// Behavioral contract of a scalar-state HMM with Gaussian transitions.
pub trait StateSpaceModel: Send + Sync {
    fn init_sample(&self, rng: &mut dyn rand::RngCore) -> f64;
    fn init_logpdf(&self, x: f64) -> f64;
    /// Mean and standard deviation of `x_t | x_{t−1} = prev`.
    fn trans_moments(&self, prev: f64) -> (f64, f64);
    fn obs_logpdf(&self, y: f64, x: f64) -> f64;

    fn trans_sample(&self, prev: f64, rng: &mut dyn rand::RngCore) -> f64 {
        let (m, s) = self.trans_moments(prev);
        let z: f64 = rng.sample(StandardNormal);
        m + s * z
    }

    fn trans_logpdf(&self, next: f64, prev: f64) -> f64 {
        let (m, s) = self.trans_moments(prev);
        normal_logpdf(next, m, s)
    }

    /// Gaussian `p(x_t | x_{t−1}, y_t)` as (mean, sd), when available in closed form.
    fn optimal_proposal(&self, _prev: f64, _y: f64) -> Option<(f64, f64)> {
        None
    }
}

/// A parametric family of models with a prior, as seen by the MH chain.
pub trait ModelFamily: Send + Sync {
    type Model: StateSpaceModel;

    fn params_dim(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    /// `-inf` outside the prior support.
    fn prior_logpdf(&self, theta: &[f64]) -> f64;
    fn build(&self, theta: &[f64]) -> Result<Self::Model>;
}

/// Normal prior truncated to `(lo, hi)`, normalized. Infinite bounds are allowed
/// and appear as `null` in serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormalPrior {
    pub mean: f64,
    pub sd: f64,
    #[serde(with = "lower_bound", default = "neg_inf")]
    pub lo: f64,
    #[serde(with = "upper_bound", default = "pos_inf")]
    pub hi: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

macro_rules! optional_bound {
    ($name:ident, $missing:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_finite() {
                    s.serialize_some(v)
                } else {
                    s.serialize_none()
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($missing))
            }
        }
    };
}

optional_bound!(lower_bound, f64::NEG_INFINITY);
optional_bound!(upper_bound, f64::INFINITY);

impl TruncatedNormalPrior {
    pub fn new(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sd > 0.0) || !(lo < hi) {
            return Err(Error::InvalidParams(
                "prior needs sd > 0 and lo < hi".into(),
            ));
        }
        Ok(Self { mean, sd, lo, hi })
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Self {
            mean,
            sd,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    fn log_mass(&self) -> f64 {
        let a = if self.lo.is_finite() {
            std_normal_cdf((self.lo - self.mean) / self.sd)
        } else {
            0.0
        };
        let b = if self.hi.is_finite() {
            std_normal_cdf((self.hi - self.mean) / self.sd)
        } else {
            1.0
        };
        (b - a).ln()
    }

    /// Strictly inside `(lo, hi)`; the bounds themselves are outside the support.
    pub fn logpdf(&self, x: f64) -> f64 {
        if !(x > self.lo && x < self.hi) {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(x, self.mean, self.sd) - self.log_mass()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LgssParams {
    pub phi: f64,
    pub sigma_v: f64,
    pub sigma_o: f64,
}

impl Default for LgssParams {
    fn default() -> Self {
        Self {
            phi: 0.75,
            sigma_v: 1.0,
            sigma_o: 0.1,
        }
    }
}

impl LgssParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < 1.0) {
            return Err(Error::InvalidParams(format!(
                "|phi| must be < 1, got {}",
                self.phi
            )));
        }
        if !(self.sigma_v > 0.0) || !(self.sigma_o > 0.0) {
            return Err(Error::InvalidParams(
                "sigma_v and sigma_o must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// LGSS model `x_t = φ x_{t−1} + v_t`, `y_t = x_t + e_t` with a Gaussian
/// (possibly degenerate) initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lgss {
    pub params: LgssParams,
    pub x0_mean: f64,
    pub x0_var: f64,
}

impl Lgss {
    pub fn new(params: LgssParams, x0_mean: f64, x0_var: f64) -> Result<Self> {
        params.validate()?;
        if !(x0_var >= 0.0) {
            return Err(Error::InvalidParams("x0_var must be non-negative".into()));
        }
        Ok(Self {
            params,
            x0_mean,
            x0_var,
        })
    }
}

impl StateSpaceModel for Lgss {
    fn init_sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        if self.x0_var == 0.0 {
            return self.x0_mean;
        }
        let z: f64 = rng.sample(StandardNormal);
        self.x0_mean + self.x0_var.sqrt() * z
    }

    fn init_logpdf(&self, x: f64) -> f64 {
        if self.x0_var == 0.0 {
            return if x == self.x0_mean {
                0.0
            } else {
                f64::NEG_INFINITY
            };
        }
        normal_logpdf(x, self.x0_mean, self.x0_var.sqrt())
    }

    fn trans_moments(&self, prev: f64) -> (f64, f64) {
        (self.params.phi * prev, self.params.sigma_v)
    }

    fn obs_logpdf(&self, y: f64, x: f64) -> f64 {
        normal_logpdf(y, x, self.params.sigma_o)
    }

    fn optimal_proposal(&self, prev: f64, y: f64) -> Option<(f64, f64)> {
        Some(lgss_optimal_proposal(prev, y, &self.params))
    }
}

/// `p(x_t | x_{t−1}, y_t) = N(σ²(y/σ_o² + φ x_{t−1}/σ_v²), σ²)` with
/// `σ^{−2} = σ_v^{−2} + σ_o^{−2}`.
pub fn lgss_optimal_proposal(x_prev: f64, y: f64, p: &LgssParams) -> (f64, f64) {
    let prec_v = 1.0 / (p.sigma_v * p.sigma_v);
    let prec_o = 1.0 / (p.sigma_o * p.sigma_o);
    let var = 1.0 / (prec_v + prec_o);
    (var * (prec_o * y + prec_v * p.phi * x_prev), var.sqrt())
}

/// Simulated latent states and observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedData {
    pub states: Vec<f64>,
    pub obs: Vec<f64>,
}

/// Independent state/observation noise streams derived from one seed.
fn noise_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let state = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = state.clone();
    obs.set_stream(1);
    (state, obs)
}

pub fn lgss_simulate(t_len: usize, p: &LgssParams, x0: f64, seed: u64) -> Result<SimulatedData> {
    if t_len == 0 {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    p.validate()?;
    let (mut rs, mut ro) = noise_streams(seed);
    let mut x = x0;
    let mut states = Vec::with_capacity(t_len);
    let mut obs = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        let ev: f64 = rs.sample(StandardNormal);
        let eo: f64 = ro.sample(StandardNormal);
        x = p.phi * x + p.sigma_v * ev;
        states.push(x);
        obs.push(x + p.sigma_o * eo);
    }
    Ok(SimulatedData { states, obs })
}

/// Output of the exact Kalman recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanOutput {
    pub loglik: f64,
    pub filtered_means: Vec<f64>,
    pub filtered_vars: Vec<f64>,
}

pub fn kalman_filter(
    obs: &[f64],
    p: &LgssParams,
    x0_mean: f64,
    x0_var: f64,
) -> Result<KalmanOutput> {
    if obs.is_empty() {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    p.validate()?;
    let (q, r) = (p.sigma_v * p.sigma_v, p.sigma_o * p.sigma_o);
    let mut m = x0_mean;
    let mut v = x0_var;
    let mut loglik = 0.0;
    let mut filtered_means = Vec::with_capacity(obs.len());
    let mut filtered_vars = Vec::with_capacity(obs.len());
    for (t, &y) in obs.iter().enumerate() {
        let mp = p.phi * m;
        let vp = p.phi * p.phi * v + q;
        let s = vp + r;
        if !(vp > 0.0) || !(s > 0.0) {
            return Err(Error::InternalConsistency(format!(
                "non-positive predicted variance at t = {t}"
            )));
        }
        let innov = y - mp;
        loglik += -0.5 * (LN_2PI + s.ln() + innov * innov / s);
        let gain = vp / s;
        m = mp + gain * innov;
        v = (1.0 - gain) * vp;
        filtered_means.push(m);
        filtered_vars.push(v);
    }
    Ok(KalmanOutput {
        loglik,
        filtered_means,
        filtered_vars,
    })
}

pub fn kalman_loglik(obs: &[f64], p: &LgssParams, x0_mean: f64, x0_var: f64) -> Result<f64> {
    kalman_filter(obs, p, x0_mean, x0_var).map(|k| k.loglik)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvParams {
    pub mu: f64,
    pub persistence: f64,
    pub sigma_v: f64,
    pub tau: f64,
}

impl Default for SvParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            persistence: 0.95,
            sigma_v: 0.2,
            tau: 1.0,
        }
    }
}

impl SvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.persistence.abs() < 1.0) {
            return Err(Error::InvalidParams(format!(
                "|persistence| must be < 1, got {}",
                self.persistence
            )));
        }
        if !(self.sigma_v > 0.0) || !(self.tau > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParams(
                "need finite mu, sigma_v > 0 and tau > 0".into(),
            ));
        }
        Ok(())
    }

    fn stationary_sd(&self) -> f64 {
        self.sigma_v / (1.0 - self.persistence * self.persistence).sqrt()
    }
}

/// Stochastic volatility model with log-volatility state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sv {
    pub params: SvParams,
}

impl Sv {
    pub fn new(params: SvParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl StateSpaceModel for Sv {
    fn init_sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.params.mu + self.params.stationary_sd() * z
    }

    fn init_logpdf(&self, x: f64) -> f64 {
        normal_logpdf(x, self.params.mu, self.params.stationary_sd())
    }

    fn trans_moments(&self, prev: f64) -> (f64, f64) {
        let p = &self.params;
        (p.mu + p.persistence * (prev - p.mu), p.sigma_v)
    }

    fn obs_logpdf(&self, y: f64, x: f64) -> f64 {
        -0.5 * (LN_2PI + x + self.params.tau.ln() + y * y * (-x).exp() / self.params.tau)
    }
}

pub fn sv_simulate(t_len: usize, p: &SvParams, seed: u64) -> Result<SimulatedData> {
    if t_len == 0 {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    p.validate()?;
    let (mut rs, mut ro) = noise_streams(seed);
    let z0: f64 = rs.sample(StandardNormal);
    let mut x = p.mu + p.stationary_sd() * z0;
    let mut states = Vec::with_capacity(t_len);
    let mut obs = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        let ev: f64 = rs.sample(StandardNormal);
        let eo: f64 = ro.sample(StandardNormal);
        x = p.mu + p.persistence * (x - p.mu) + p.sigma_v * ev;
        states.push(x);
        obs.push((x.exp() * p.tau).sqrt() * eo);
    }
    Ok(SimulatedData { states, obs })
}

/// LGSS family with only φ free; σ_v, σ_o and the initial state are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LgssPhiFamily {
    pub sigma_v: f64,
    pub sigma_o: f64,
    pub x0_mean: f64,
    pub x0_var: f64,
    pub phi_prior: TruncatedNormalPrior,
}

impl Default for LgssPhiFamily {
    fn default() -> Self {
        Self {
            sigma_v: 1.0,
            sigma_o: 0.1,
            x0_mean: 0.0,
            x0_var: 0.0,
            phi_prior: TruncatedNormalPrior {
                mean: 0.75,
                sd: 0.5,
                lo: -1.0,
                hi: 1.0,
            },
        }
    }
}

impl LgssPhiFamily {
    pub fn params(&self, phi: f64) -> LgssParams {
        LgssParams {
            phi,
            sigma_v: self.sigma_v,
            sigma_o: self.sigma_o,
        }
    }
}

impl ModelFamily for LgssPhiFamily {
    type Model = Lgss;

    fn params_dim(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["phi".into()]
    }

    fn prior_logpdf(&self, theta: &[f64]) -> f64 {
        let phi = theta[0];
        if !(phi.abs() < 1.0) {
            return f64::NEG_INFINITY;
        }
        self.phi_prior.logpdf(phi)
    }

    fn build(&self, theta: &[f64]) -> Result<Lgss> {
        Lgss::new(self.params(theta[0]), self.x0_mean, self.x0_var)
    }
}

/// SV family over (μ, persistence, σ_v) with τ fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvFamily {
    pub tau: f64,
    pub mu_prior: TruncatedNormalPrior,
    pub persistence_prior: TruncatedNormalPrior,
    pub sigma_v_prior: TruncatedNormalPrior,
}

impl Default for SvFamily {
    fn default() -> Self {
        Self {
            tau: 1.0,
            mu_prior: TruncatedNormalPrior::normal(0.0, 1.0),
            persistence_prior: TruncatedNormalPrior {
                mean: 0.95,
                sd: 0.05,
                lo: -1.0,
                hi: 1.0,
            },
            sigma_v_prior: TruncatedNormalPrior {
                mean: 0.2,
                sd: 0.03,
                lo: 0.0,
                hi: f64::INFINITY,
            },
        }
    }
}

impl ModelFamily for SvFamily {
    type Model = Sv;

    fn params_dim(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into(), "persistence".into(), "sigma_v".into()]
    }

    fn prior_logpdf(&self, theta: &[f64]) -> f64 {
        self.mu_prior.logpdf(theta[0])
            + self.persistence_prior.logpdf(theta[1])
            + self.sigma_v_prior.logpdf(theta[2])
    }

    fn build(&self, theta: &[f64]) -> Result<Sv> {
        Sv::new(SvParams {
            mu: theta[0],
            persistence: theta[1],
            sigma_v: theta[2],
            tau: self.tau,
        })
    }
}

/// `y_t = ln(p_t / p_{t−1})`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if let Some(row) = prices.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidData {
            row,
            msg: format!("price must be positive, got {}", prices[row]),
        });
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceRow {
    pub date: NaiveDate,
    pub close: f64,
}

/// Parse a `date,close` CSV. Rows are numbered from 1 after the header.
pub fn parse_price_csv(text: &str) -> Result<Vec<PriceRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::InvalidData {
            row: 0,
            msg: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["date", "close"] {
        return Err(Error::InvalidData {
            row: 0,
            msg: format!(
                "expected header `date,close`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows: Vec<PriceRow> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let i = k + 1;
        let rec = rec.map_err(|e| Error::InvalidData {
            row: i,
            msg: e.to_string(),
        })?;
        let date =
            NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::InvalidData {
                row: i,
                msg: format!("bad date `{}`: {e}", &rec[0]),
            })?;
        let close: f64 = rec[1].parse().map_err(|e| Error::InvalidData {
            row: i,
            msg: format!("bad close `{}`: {e}", &rec[1]),
        })?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(Error::InvalidData {
                row: i,
                msg: format!("close must be positive, got {close}"),
            });
        }
        if let Some(prev) = rows.last() {
            if date <= prev.date {
                return Err(Error::InvalidData {
                    row: i,
                    msg: format!("date {date} is not after {}", prev.date),
                });
            }
        }
        rows.push(PriceRow { date, close });
    }
    Ok(rows)
}

pub fn read_price_csv(path: &Path) -> Result<Vec<PriceRow>> {
    parse_price_csv(&std::fs::read_to_string(path)?)
}
