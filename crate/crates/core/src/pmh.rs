//! Pseudo-marginal particle Metropolis–Hastings over model parameters.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{kalman_loglik, LgssPhiFamily, ModelFamily};
use crate::smc::{filter_loglik, FilterConfig};
use crate::stats::{mean, sample_variance};

/// Something the chain can evaluate: a prior and a (possibly noisy) log-likelihood.
pub trait LikelihoodTarget: Send + Sync {
    fn params_dim(&self) -> usize;
    fn prior_logpdf(&self, theta: &[f64]) -> f64;
    /// Log-likelihood at `theta`; `seed` drives any internal randomness.
    fn loglik(&self, theta: &[f64], seed: u64) -> Result<f64>;
}

/// Particle-filter likelihood estimate for a model family.
pub struct PseudoMarginal<'a, F: ModelFamily> {
    pub family: &'a F,
    pub obs: &'a [f64],
    pub filter: FilterConfig,
}

impl<F: ModelFamily> LikelihoodTarget for PseudoMarginal<'_, F>
where
    F::Model: crate::models::StateSpaceModel,
{
    fn params_dim(&self) -> usize {
        self.family.params_dim()
    }

    fn prior_logpdf(&self, theta: &[f64]) -> f64 {
        self.family.prior_logpdf(theta)
    }

    fn loglik(&self, theta: &[f64], seed: u64) -> Result<f64> {
        if self.obs.is_empty() {
            return Ok(0.0);
        }
        let model = self.family.build(theta)?;
        filter_loglik(&model, self.obs, &self.filter.with_seed(seed))
    }
}

/// Exact Kalman log-likelihood in place of the particle estimate.
pub struct KalmanOracle<'a> {
    pub family: &'a LgssPhiFamily,
    pub obs: &'a [f64],
}

impl LikelihoodTarget for KalmanOracle<'_> {
    fn params_dim(&self) -> usize {
        1
    }

    fn prior_logpdf(&self, theta: &[f64]) -> f64 {
        self.family.prior_logpdf(theta)
    }

    fn loglik(&self, theta: &[f64], _seed: u64) -> Result<f64> {
        if self.obs.is_empty() {
            return Ok(0.0);
        }
        let p = self.family.params(theta[0]);
        kalman_loglik(self.obs, &p, self.family.x0_mean, self.family.x0_var)
    }
}

#[derive(Debug, Clone)]
pub struct PmhConfig {
    pub iterations: usize,
    /// `None` discards the first 20% of iterations.
    pub burn_in: Option<usize>,
    pub step_sizes: Vec<f64>,
    pub init_params: Vec<f64>,
    pub seed: u64,
}

impl PmhConfig {
    pub fn resolved_burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 5)
    }

    pub fn validate(&self, params_dim: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParams("iterations must be positive".into()));
        }
        if self.resolved_burn_in() >= self.iterations {
            return Err(Error::InvalidParams(format!(
                "burn_in {} must be below iterations {}",
                self.resolved_burn_in(),
                self.iterations
            )));
        }
        if self.step_sizes.len() != params_dim || self.init_params.len() != params_dim {
            return Err(Error::InvalidParams(format!(
                "expected {params_dim} step sizes and initial values, got {} and {}",
                self.step_sizes.len(),
                self.init_params.len()
            )));
        }
        if self
            .step_sizes
            .iter()
            .any(|h| !(*h > 0.0) || !h.is_finite())
        {
            return Err(Error::InvalidParams(
                "step sizes must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmhTrace {
    pub params: Vec<Vec<f64>>,
    pub logliks: Vec<f64>,
    pub accepted: Vec<bool>,
    /// Iterations whose proposal made the filter degenerate (treated as rejections).
    pub degenerate: Vec<usize>,
}

impl PmhTrace {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Chain of parameter `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.params.iter().map(|p| p[j]).collect()
    }
}

/// Gaussian random walk `θ′_j = θ_j + h_j z_j`.
pub fn propose_params(theta: &[f64], step_sizes: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    debug_assert_eq!(theta.len(), step_sizes.len());
    theta
        .iter()
        .zip(step_sizes)
        .map(|(t, h)| t + h * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `min(0, new − old)` with `−∞` whenever the proposal leaves the prior support.
pub fn acceptance_log_ratio(
    loglik_new: f64,
    logprior_new: f64,
    loglik_old: f64,
    logprior_old: f64,
) -> f64 {
    if logprior_new == f64::NEG_INFINITY || loglik_new == f64::NEG_INFINITY || loglik_new.is_nan() {
        return f64::NEG_INFINITY;
    }
    ((loglik_new + logprior_new) - (loglik_old + logprior_old)).min(0.0)
}

/// Filter seed for iteration `k`; iteration 0 is the initial state.
pub fn iteration_seed(master: u64, k: usize) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(k as u64 + 1);
    r.next_u64()
}

/// Run a chain against any likelihood target. One trace row per iteration.
pub fn run_chain_with<L: LikelihoodTarget + ?Sized>(
    target: &L,
    cfg: &PmhConfig,
) -> Result<PmhTrace> {
    cfg.validate(target.params_dim())?;
    let mut theta = cfg.init_params.clone();
    let mut lp = target.prior_logpdf(&theta);
    if !lp.is_finite() {
        return Err(Error::InvalidParams(format!(
            "initial parameters {theta:?} outside prior support"
        )));
    }
    let mut ll = target.loglik(&theta, iteration_seed(cfg.seed, 0))?;
    if !ll.is_finite() {
        return Err(Error::InvalidParams(
            "initial log-likelihood is not finite".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = PmhTrace {
        params: Vec::with_capacity(cfg.iterations),
        logliks: Vec::with_capacity(cfg.iterations),
        accepted: Vec::with_capacity(cfg.iterations),
        degenerate: Vec::new(),
    };
    for k in 0..cfg.iterations {
        let prop = propose_params(&theta, &cfg.step_sizes, &mut rng);
        let u: f64 = rng.random();
        let lp_new = target.prior_logpdf(&prop);
        let ll_new = if lp_new == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            match target.loglik(&prop, iteration_seed(cfg.seed, k + 1)) {
                Ok(v) => v,
                Err(Error::FilterDegeneracy { .. }) => {
                    trace.degenerate.push(k);
                    f64::NEG_INFINITY
                }
                Err(e) => return Err(e),
            }
        };
        let accept = u.ln() < acceptance_log_ratio(ll_new, lp_new, ll, lp);
        if accept {
            theta = prop;
            lp = lp_new;
            ll = ll_new;
        }
        trace.params.push(theta.clone());
        trace.logliks.push(ll);
        trace.accepted.push(accept);
    }
    Ok(trace)
}

/// Pseudo-marginal chain for `family` on `obs`, using `filter` for p̂(y|θ).
pub fn run_chain<F>(
    family: &F,
    obs: &[f64],
    filter: &FilterConfig,
    cfg: &PmhConfig,
) -> Result<PmhTrace>
where
    F: ModelFamily,
    F::Model: crate::models::StateSpaceModel,
{
    run_chain_with(
        &PseudoMarginal {
            family,
            obs,
            filter: filter.clone(),
        },
        cfg,
    )
}

/// Sample autocorrelation up to `max_lag`, normalised by the biased variance.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let k = series.len();
    if max_lag == 0 || k <= max_lag {
        return Err(Error::InvalidInput(format!(
            "need more than {max_lag} samples, got {k}"
        )));
    }
    let m = mean(series);
    let centred: Vec<f64> = series.iter().map(|s| s - m).collect();
    let v = centred.iter().map(|c| c * c).sum::<f64>() / k as f64;
    if !(v > 0.0) {
        return Err(Error::UndefinedAcf);
    }
    Ok((0..=max_lag)
        .map(|l| {
            let s: f64 = centred[..k - l]
                .iter()
                .zip(&centred[l..])
                .map(|(a, b)| a * b)
                .sum();
            s / ((k - l) as f64 * v)
        })
        .collect())
}

/// ACF as a lag → value map, convenient for JSON output.
pub fn acf_map(series: &[f64], max_lag: usize) -> Result<BTreeMap<usize, f64>> {
    Ok(acf(series, max_lag)?.into_iter().enumerate().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub acceptance_rate: f64,
}

/// Moments and acceptance rate over the rows after `burn_in`.
pub fn posterior_summary(trace: &PmhTrace, burn_in: usize) -> Result<PosteriorSummary> {
    if trace.len() < burn_in + 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 post-burn-in samples, have {}",
            trace.len().saturating_sub(burn_in)
        )));
    }
    let p = trace.params[0].len();
    let (mut mu, mut var) = (Vec::with_capacity(p), Vec::with_capacity(p));
    for j in 0..p {
        let col: Vec<f64> = trace.params[burn_in..].iter().map(|r| r[j]).collect();
        mu.push(mean(&col));
        var.push(sample_variance(&col));
    }
    let kept = &trace.accepted[burn_in..];
    let rate = kept.iter().filter(|&&a| a).count() as f64 / kept.len() as f64;
    Ok(PosteriorSummary {
        mean: mu,
        variance: var,
        acceptance_rate: rate,
    })
}
