//! Particle filter with bootstrap, optimal and Chebyshev-particle proposals.
//!
//! The Chebyshev proposal uses a fixed set of standard-normal nodes
//! `z_0 … z_{N′−1}` (a greedy uniform configuration pushed through Φ⁻¹).
//! Slot `i` at each step is placed at `mean + sd · z_{i mod N′}` where
//! (mean, sd) are the model's optimal-proposal moments for the slot's
//! ancestor when available, and the transition moments otherwise. The
//! importance density in the weight is the matching Gaussian.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{generate, GeneratorConfig};
use crate::density::{DensityOracle, UniformBox};
use crate::error::{Error, Result};
use crate::models::StateSpaceModel;
use crate::riesz::EnergyParams;
use crate::stats::{log_sum_exp, normal_logpdf, std_normal_quantile};

/// Smallest representable natural log, used in place of `ln 0`.
pub const LOG_FLOOR: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalMode {
    Bootstrap,
    Optimal,
    Chebyshev,
}

/// Standard-normal nodes derived from a Chebyshev particle configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSupport {
    uniforms: Vec<f64>,
    nodes: Vec<f64>,
}

impl ChebyshevSupport {
    /// Build from points in the open unit interval.
    pub fn from_uniforms(uniforms: Vec<f64>) -> Result<Self> {
        if uniforms.is_empty() || uniforms.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
            return Err(Error::InvalidInput(
                "Chebyshev uniforms must lie in (0, 1) and be non-empty".into(),
            ));
        }
        let nodes = uniforms.iter().map(|&u| std_normal_quantile(u)).collect();
        Ok(Self { uniforms, nodes })
    }

    /// Build from standard-normal nodes directly.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput(
                "Chebyshev nodes must be finite and non-empty".into(),
            ));
        }
        let uniforms = nodes
            .iter()
            .map(|&z| crate::stats::std_normal_cdf(z))
            .collect();
        Ok(Self { uniforms, nodes })
    }

    pub fn uniforms(&self) -> &[f64] {
        &self.uniforms
    }

    /// Node for slot `i` after a shift of the uniform set by `shift` (mod 1).
    #[inline]
    pub fn shifted_node(&self, i: usize, shift: f64) -> f64 {
        let k = chebyshev_index(i, self.uniforms.len());
        if shift == 0.0 {
            return self.nodes[k];
        }
        let u = (self.uniforms[k] + shift)
            .fract()
            .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        std_normal_quantile(u)
    }

    /// Generate `n_cheb` uniform Chebyshev particles on `[1/(2N′), 1 − 1/(2N′)]`
    /// and map them through the standard normal quantile function. Node order
    /// is generation order, so any prefix is itself a well-spread set.
    pub fn standard_normal(
        n_cheb: usize,
        energy: &EnergyParams,
        generator: &GeneratorConfig,
    ) -> Result<Self> {
        if n_cheb < 2 {
            return Err(Error::InvalidParams(
                "need at least 2 Chebyshev particles".into(),
            ));
        }
        let margin = 0.5 / n_cheb as f64;
        let cfg = GeneratorConfig {
            n_points: n_cheb,
            domain_lo: vec![margin],
            domain_hi: vec![1.0 - margin],
            ..generator.clone()
        };
        let energy = EnergyParams { d: 1, ..*energy };
        let density = DensityOracle::new(UniformBox::new(vec![margin], vec![1.0 - margin])?);
        let g = generate(&density, &energy, &cfg)?;
        Self::from_uniforms(g.config.scalars())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Slot `i` is served by Chebyshev node `i mod n_cheb`.
#[inline]
pub fn chebyshev_index(i: usize, n_cheb: usize) -> usize {
    i % n_cheb
}

/// How the Chebyshev set is randomized at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftPolicy {
    /// The same nodes at every step.
    Fixed,
    /// One uniform shift (mod 1) per step shared by all slots.
    PerStep,
    /// An independent shift per step for each block of `N′` consecutive slots.
    #[default]
    PerBlock,
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub cheb_set: Option<Arc<ChebyshevSupport>>,
    pub proposal_mode: ProposalMode,
    pub shift: ShiftPolicy,
    pub seed: u64,
    /// Resample only when ESS < threshold · N. `None` resamples every step.
    pub ess_threshold: Option<f64>,
}

impl FilterConfig {
    pub fn new(n_particles: usize, proposal_mode: ProposalMode, seed: u64) -> Self {
        Self {
            n_particles,
            cheb_set: None,
            proposal_mode,
            shift: ShiftPolicy::default(),
            seed,
            ess_threshold: None,
        }
    }

    pub fn chebyshev(n_particles: usize, cheb_set: Arc<ChebyshevSupport>, seed: u64) -> Self {
        Self {
            n_particles,
            cheb_set: Some(cheb_set),
            proposal_mode: ProposalMode::Chebyshev,
            shift: ShiftPolicy::default(),
            seed,
            ess_threshold: None,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidParams(format!(
                "need N ≥ 2 particles, got {}",
                self.n_particles
            )));
        }
        if self.proposal_mode == ProposalMode::Chebyshev
            && self.cheb_set.as_ref().is_none_or(|c| c.is_empty())
        {
            return Err(Error::InvalidParams(
                "chebyshev mode requires a non-empty Chebyshev set".into(),
            ));
        }
        if let Some(th) = self.ess_threshold {
            if !(0.0..=1.0).contains(&th) {
                return Err(Error::InvalidParams(format!(
                    "ess_threshold must lie in [0, 1], got {th}"
                )));
            }
        }
        Ok(())
    }
}

/// Full record of a filter run; index `t` refers to observation `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub particles: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub ancestors: Vec<Vec<usize>>,
    pub loglik_increments: Vec<f64>,
    pub ess: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub state_means: Vec<f64>,
    pub loglik: f64,
    pub system: ParticleSystem,
}

/// I.i.d. multinomial ancestor draws with `P(a = j) = weights[j]`.
pub fn resample_multinomial(weights: &[f64], rng: &mut impl Rng) -> Result<Vec<usize>> {
    let n = weights.len();
    if n == 0 {
        return Err(Error::Contract(
            "cannot resample an empty weight vector".into(),
        ));
    }
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &w in weights {
        if !(w >= 0.0) {
            return Err(Error::Contract(format!("negative or NaN weight {w}")));
        }
        acc += w;
        cum.push(acc);
    }
    if (acc - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("weights sum to {acc}, not 1")));
    }
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            cum.partition_point(|&c| c <= u).min(n - 1)
        })
        .collect())
}

/// Moments of the proposal used in optimal/Chebyshev mode for a given ancestor.
#[inline]
fn adapted_moments<M: StateSpaceModel + ?Sized>(model: &M, prev: f64, y: f64) -> (f64, f64) {
    model
        .optimal_proposal(prev, y)
        .unwrap_or_else(|| model.trans_moments(prev))
}

#[inline]
fn clean(logw: f64) -> f64 {
    if logw.is_nan() {
        f64::NEG_INFINITY
    } else {
        logw
    }
}

/// Propagation and weighting with explicit per-slot standard-normal noise.
///
/// `noise[i]` is slot `i`'s standard-normal draw in bootstrap and optimal
/// modes, and the uniform shift applied to its Chebyshev node in Chebyshev
/// mode (missing entries mean no shift). Returns `(new_states, log_unnormalized_weights)`.
pub fn propagate_with_noise<M: StateSpaceModel + ?Sized>(
    prev_states: &[f64],
    ancestors: &[usize],
    noise: &[f64],
    y: f64,
    model: &M,
    cfg: &FilterConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ancestors.len();
    if ancestors.iter().any(|&a| a >= prev_states.len()) {
        return Err(Error::Contract("ancestor index out of range".into()));
    }
    if !y.is_finite() {
        return Err(Error::InvalidInput(format!(
            "observation must be finite, got {y}"
        )));
    }
    let mut xs = Vec::with_capacity(n);
    let mut lw = Vec::with_capacity(n);
    match cfg.proposal_mode {
        ProposalMode::Bootstrap => {
            for i in 0..n {
                let (m, s) = model.trans_moments(prev_states[ancestors[i]]);
                let x = m + s * noise[i];
                xs.push(x);
                lw.push(clean(model.obs_logpdf(y, x)));
            }
        }
        ProposalMode::Optimal => {
            for i in 0..n {
                let prev = prev_states[ancestors[i]];
                let (m, s) = model.optimal_proposal(prev, y).ok_or_else(|| {
                    Error::InvalidParams("model has no closed-form optimal proposal".into())
                })?;
                let x = m + s * noise[i];
                xs.push(x);
                lw.push(clean(
                    model.trans_logpdf(x, prev) + model.obs_logpdf(y, x) - normal_logpdf(x, m, s),
                ));
            }
        }
        ProposalMode::Chebyshev => {
            let support = cfg.cheb_set.as_ref().ok_or_else(|| {
                Error::InvalidParams("chebyshev mode requires a Chebyshev set".into())
            })?;
            for i in 0..n {
                let prev = prev_states[ancestors[i]];
                let (m, s) = adapted_moments(model, prev, y);
                let shift = noise.get(i).copied().unwrap_or(0.0);
                let x = m + s * support.shifted_node(i, shift);
                xs.push(x);
                let lq = normal_logpdf(x, m, s);
                let w = if lq == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    model.trans_logpdf(x, prev) + model.obs_logpdf(y, x) - lq
                };
                lw.push(clean(w));
            }
        }
    }
    Ok((xs, lw))
}

/// One propagation step drawing its own noise from `rng`.
pub fn propagate<M: StateSpaceModel + ?Sized>(
    prev_states: &[f64],
    ancestors: &[usize],
    y: f64,
    model: &M,
    cfg: &FilterConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ancestors.len();
    let noise: Vec<f64> = match cfg.proposal_mode {
        ProposalMode::Chebyshev => {
            let n_cheb = cfg.cheb_set.as_ref().map_or(1, |c| c.len());
            match cfg.shift {
                ShiftPolicy::Fixed => vec![0.0; n],
                ShiftPolicy::PerStep => vec![rng.random::<f64>(); n],
                ShiftPolicy::PerBlock => {
                    let shifts: Vec<f64> = (0..n.div_ceil(n_cheb)).map(|_| rng.random()).collect();
                    (0..n).map(|i| shifts[i / n_cheb]).collect()
                }
            }
        }
        _ => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
    };
    propagate_with_noise(prev_states, ancestors, &noise, y, model, cfg)
}

/// Each time step draws from its own ChaCha stream of the filter seed.
fn step_rng(base: &ChaCha8Rng, t: usize) -> ChaCha8Rng {
    let mut r = base.clone();
    r.set_stream(t as u64);
    r.set_word_pos(0);
    r
}

fn run<M: StateSpaceModel + ?Sized>(
    model: &M,
    obs: &[f64],
    cfg: &FilterConfig,
    record: bool,
) -> Result<(Vec<f64>, f64, Option<ParticleSystem>)> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(Error::InvalidInput(
            "filter needs at least one observation".into(),
        ));
    }
    let n = cfg.n_particles;
    let t_len = obs.len();
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut rng0 = step_rng(&base, 0);
    let mut states: Vec<f64> = (0..n).map(|_| model.init_sample(&mut rng0)).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut ess_prev = n as f64;
    let identity: Vec<usize> = (0..n).collect();

    let mut means = Vec::with_capacity(t_len);
    let mut loglik = 0.0;
    let mut system = record.then(|| ParticleSystem {
        particles: Vec::with_capacity(t_len),
        weights: Vec::with_capacity(t_len),
        ancestors: Vec::with_capacity(t_len),
        loglik_increments: Vec::with_capacity(t_len),
        ess: Vec::with_capacity(t_len),
    });

    for (t, &y) in obs.iter().enumerate() {
        let mut rng = step_rng(&base, t + 1);
        let resample = match cfg.ess_threshold {
            None => true,
            Some(th) => ess_prev < th * n as f64,
        };
        let ancestors = if resample {
            resample_multinomial(&weights, &mut rng)?
        } else {
            identity.clone()
        };
        let (xs, mut lw) = propagate(&states, &ancestors, y, model, cfg, &mut rng)?;

        let increment = if resample {
            log_sum_exp(&lw) - (n as f64).ln()
        } else {
            for (l, w) in lw.iter_mut().zip(&weights) {
                *l += w.ln();
            }
            log_sum_exp(&lw)
        };
        if !(increment > f64::NEG_INFINITY) || increment.is_nan() {
            return Err(Error::FilterDegeneracy { t });
        }
        let norm = log_sum_exp(&lw);
        weights = lw.iter().map(|l| (l - norm).exp()).collect();
        let mean = xs.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>();
        ess_prev = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        loglik += increment;
        means.push(mean);
        if let Some(sys) = system.as_mut() {
            sys.particles.push(xs.clone());
            sys.weights.push(weights.clone());
            sys.ancestors.push(ancestors);
            sys.loglik_increments.push(increment);
            sys.ess.push(ess_prev);
        }
        states = xs;
    }
    Ok((means, loglik, system))
}

/// Run the filter over `obs`; deterministic given `cfg.seed`.
///
/// `state_means[t]` is the weighted particle mean after assimilating `obs[t]`
/// and `loglik` is `Σ_t ln( (1/N) Σ_i w_t^i )`.
pub fn filter_run<M: StateSpaceModel + ?Sized>(
    model: &M,
    obs: &[f64],
    cfg: &FilterConfig,
) -> Result<FilterOutput> {
    let (state_means, loglik, system) = run(model, obs, cfg, true)?;
    Ok(FilterOutput {
        state_means,
        loglik,
        system: system.expect("recorded"),
    })
}

/// Likelihood estimate only, without keeping the particle history.
pub fn filter_loglik<M: StateSpaceModel + ?Sized>(
    model: &M,
    obs: &[f64],
    cfg: &FilterConfig,
) -> Result<f64> {
    run(model, obs, cfg, false).map(|(_, ll, _)| ll)
}

/// `(ln mean|x̂ − x|, ln mean (x̂ − x)²)`, floored at [`LOG_FLOOR`].
pub fn filtering_metrics(state_means: &[f64], reference: &[f64]) -> Result<(f64, f64)> {
    if state_means.len() != reference.len() || state_means.is_empty() {
        return Err(Error::InvalidInput(
            "state_means and reference need equal, non-zero length".into(),
        ));
    }
    let n = state_means.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (a, b) in state_means.iter().zip(reference) {
        let e = a - b;
        abs += e.abs();
        sq += e * e;
    }
    let floor_ln = |v: f64| {
        if v > 0.0 {
            v.ln().max(LOG_FLOOR)
        } else {
            LOG_FLOOR
        }
    };
    Ok((floor_ln(abs / n), floor_ln(sq / n)))
}

/// Weighted quantile of one time step's particle cloud.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= q {
            return values[i];
        }
    }
    values[*idx.last().expect("non-empty")]
}
