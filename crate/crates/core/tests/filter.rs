use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use riesz_smc::models::{kalman_filter, kalman_loglik, lgss_simulate, Lgss, LgssParams};
use riesz_smc::smc::{filter_loglik, filtering_metrics, FilterConfig, ShiftPolicy};
use riesz_smc::stats::{mean, sample_variance};
use riesz_smc::{filter_run, ChebyshevSupport, EnergyParams, GeneratorConfig, ProposalMode};

fn reference_params() -> LgssParams {
    LgssParams {
        phi: 0.75,
        sigma_v: 1.0,
        sigma_o: 0.1,
    }
}

fn cheb_set(n: usize) -> Arc<ChebyshevSupport> {
    Arc::new(
        ChebyshevSupport::standard_normal(n, &EnergyParams::default(), &GeneratorConfig::default())
            .unwrap(),
    )
}

// Dense T-dimensional Gaussian marginal of y_{1:T}.
fn dense_loglik(obs: &[f64], p: &LgssParams, m0: f64, v0: f64) -> f64 {
    let t = obs.len();
    let mut cov = DMatrix::<f64>::zeros(t, t);
    let mut mu = DVector::<f64>::zeros(t);
    for s in 1..=t {
        mu[s - 1] = p.phi.powi(s as i32) * m0;
        for u in 1..=t {
            let mut c = p.phi.powi((s + u) as i32) * v0;
            for k in 1..=s.min(u) {
                c += p.sigma_v * p.sigma_v * p.phi.powi((s + u - 2 * k) as i32);
            }
            if s == u {
                c += p.sigma_o * p.sigma_o;
            }
            cov[(s - 1, u - 1)] = c;
        }
    }
    let chol = cov.cholesky().expect("positive definite");
    let resid = DVector::from_column_slice(obs) - mu;
    let z = chol.l().solve_lower_triangular(&resid).unwrap();
    let logdet: f64 = (0..t).map(|i| chol.l()[(i, i)].ln()).sum::<f64>() * 2.0;
    -0.5 * (t as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + z.norm_squared())
}

#[test]
fn kalman_matches_dense_gaussian() {
    let cases = [
        (reference_params(), 0.0, 0.0),
        (reference_params(), 0.5, 2.0),
        (
            LgssParams {
                phi: -0.9,
                sigma_v: 0.3,
                sigma_o: 1.5,
            },
            -1.0,
            0.25,
        ),
    ];
    for (k, (p, m0, v0)) in cases.iter().enumerate() {
        for t in 1..=8 {
            let obs = lgss_simulate(t, p, *m0, 40 + k as u64).unwrap().obs;
            let a = kalman_loglik(&obs, p, *m0, *v0).unwrap();
            let b = dense_loglik(&obs, p, *m0, *v0);
            assert!((a - b).abs() < 1e-8, "case {k} T={t}: {a} vs {b}");
        }
    }
}

fn likelihood_ratios(cfg: &FilterConfig, t_len: usize, seeds: u64) -> (Vec<f64>, f64) {
    let p = reference_params();
    let obs = lgss_simulate(t_len, &p, 0.0, 2024).unwrap().obs;
    let exact = kalman_loglik(&obs, &p, 0.0, 0.0).unwrap();
    let model = Lgss::new(p, 0.0, 0.0).unwrap();
    let r = (0..seeds)
        .map(|s| (filter_loglik(&model, &obs, &cfg.with_seed(s)).unwrap() - exact).exp())
        .collect();
    (r, exact)
}

fn assert_unbiased(ratios: &[f64], label: &str) {
    let m = mean(ratios);
    let se = (sample_variance(ratios) / ratios.len() as f64).sqrt();
    assert!(
        (m - 1.0).abs() < 3.0 * se.max(1e-12),
        "{label}: mean ratio {m}, se {se}"
    );
}

#[test]
fn optimal_filter_likelihood_is_unbiased() {
    let cfg = FilterConfig::new(500, ProposalMode::Optimal, 0);
    let (r, _) = likelihood_ratios(&cfg, 50, 50);
    assert_unbiased(&r, "optimal");
}

#[test]
fn chebyshev_filter_likelihood_is_unbiased() {
    let cfg = FilterConfig::chebyshev(500, cheb_set(200), 0);
    let (r, _) = likelihood_ratios(&cfg, 50, 50);
    assert_unbiased(&r, "chebyshev");
}

#[test]
fn long_series_loglik_stays_close_to_kalman() {
    let p = reference_params();
    let obs = lgss_simulate(250, &p, 0.0, 11).unwrap().obs;
    let exact = kalman_loglik(&obs, &p, 0.0, 0.0).unwrap();
    let model = Lgss::new(p, 0.0, 0.0).unwrap();
    let diffs: Vec<f64> = (0..20)
        .map(|s| {
            let cfg = FilterConfig::new(1000, ProposalMode::Optimal, s);
            filter_loglik(&model, &obs, &cfg).unwrap() - exact
        })
        .collect();
    assert!(diffs.iter().all(|d| d.abs() < 2.0), "{diffs:?}");
    assert!(mean(&diffs).abs() < 0.5);
}

#[test]
fn optimal_proposal_has_smaller_weight_variance() {
    let p = reference_params();
    let model = Lgss::new(p, 0.0, 0.0).unwrap();
    let mut wins = 0;
    for s in 0..20 {
        let obs = lgss_simulate(250, &p, 0.0, 300 + s).unwrap().obs;
        let spread = |mode| {
            let out = filter_run(&model, &obs, &FilterConfig::new(100, mode, s)).unwrap();
            let v: Vec<f64> = out
                .system
                .weights
                .iter()
                .map(|w| sample_variance(w))
                .collect();
            mean(&v)
        };
        if spread(ProposalMode::Optimal) < spread(ProposalMode::Bootstrap) {
            wins += 1;
        }
    }
    assert!(wins >= 18, "{wins} wins");
}

#[test]
fn optimal_loglik_varies_less_than_bootstrap() {
    let p = reference_params();
    let obs = lgss_simulate(100, &p, 0.0, 5).unwrap().obs;
    let model = Lgss::new(p, 0.0, 0.0).unwrap();
    let var = |mode| {
        let v: Vec<f64> = (0..20)
            .map(|s| filter_loglik(&model, &obs, &FilterConfig::new(500, mode, s)).unwrap())
            .collect();
        sample_variance(&v)
    };
    assert!(var(ProposalMode::Optimal) < var(ProposalMode::Bootstrap));
}

#[test]
fn chebyshev_means_track_kalman() {
    let p = reference_params();
    let obs = lgss_simulate(250, &p, 0.0, 3).unwrap().obs;
    let k = kalman_filter(&obs, &p, 0.0, 0.0).unwrap();
    let model = Lgss::new(p, 0.0, 0.0).unwrap();
    let set = cheb_set(200);
    let mse = |n| {
        let out = filter_run(&model, &obs, &FilterConfig::chebyshev(n, set.clone(), 1)).unwrap();
        filtering_metrics(&out.state_means, &k.filtered_means)
            .unwrap()
            .1
    };
    let (small, large) = (mse(20), mse(1000));
    assert!(large < small - 1.0, "{small} -> {large}");
}

#[test]
fn filter_is_deterministic_under_seed() {
    let p = reference_params();
    let obs = lgss_simulate(30, &p, 0.0, 8).unwrap().obs;
    let model = Lgss::new(p, 0.0, 0.0).unwrap();
    let set = cheb_set(50);
    for cfg in [
        FilterConfig::new(64, ProposalMode::Bootstrap, 4),
        FilterConfig::new(64, ProposalMode::Optimal, 4),
        FilterConfig::chebyshev(64, set, 4),
    ] {
        let a = filter_run(&model, &obs, &cfg).unwrap();
        let b = filter_run(&model, &obs, &cfg).unwrap();
        assert_eq!(a, b);
        let c = filter_run(&model, &obs, &cfg.with_seed(5)).unwrap();
        assert_ne!(a.system, c.system);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_are_normalized(seed in any::<u64>(), n in 2usize..80, mode in 0usize..4) {
        let p = reference_params();
        let obs = lgss_simulate(20, &p, 0.0, seed).unwrap().obs;
        let model = Lgss::new(p, 0.0, 0.0).unwrap();
        let cfg = match mode {
            0 => FilterConfig::new(n, ProposalMode::Bootstrap, seed),
            1 => FilterConfig::new(n, ProposalMode::Optimal, seed),
            2 => FilterConfig::chebyshev(n, cheb_set(16), seed),
            _ => FilterConfig {
                shift: ShiftPolicy::Fixed,
                ..FilterConfig::chebyshev(n, cheb_set(16), seed)
            },
        };
        let out = filter_run(&model, &obs, &cfg).unwrap();
        for w in &out.system.weights {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
        }
        prop_assert!(out.loglik.is_finite());
    }
}
