use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{ensure, Context};
use chrono::{Datelike, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use riesz_smc::chebyshev::generate;
use riesz_smc::density::{Gaussian, TruncatedExponential, TruncatedGaussian, UniformBox};
use riesz_smc::export::{
    configuration_table, simulated_table, trace_table, write_json, Cell, SummaryFile, Table,
};
use riesz_smc::models::{
    kalman_filter, lgss_simulate, log_returns, read_price_csv, sv_simulate, LgssPhiFamily,
    ModelFamily, PriceRow, SvParams,
};
use riesz_smc::pmh::{acf, posterior_summary, run_chain, PmhConfig, PmhTrace, PosteriorSummary};
use riesz_smc::riesz::{
    covering_radius, ks_uniformity_test, ks_uniformity_test_marginals, line_mesh, log_total_energy,
    min_separation, Point,
};
use riesz_smc::smc::{
    filter_run, filtering_metrics, weighted_quantile, ChebyshevSupport, FilterConfig,
};
use riesz_smc::stats::{mean, ols_slope, sample_variance};
use riesz_smc::{Configuration, DensityOracle, GeneratorConfig};

use crate::config::{DensitySpec, Experiment, ExperimentConfig};

pub const THREADS_ENV: &str = "RIESZ_SMC_THREADS";

/// Worker cap from `RIESZ_SMC_THREADS`: `Some(0)` means run sequentially.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
}

/// Order-preserving map over independent tasks, honouring the thread cap.
pub fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match thread_cap() {
        Some(0) => items.into_iter().map(f).collect(),
        cap => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = cap {
                builder = builder.num_threads(n);
            }
            match builder.build() {
                Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
                Err(_) => items.into_iter().map(f).collect(),
            }
        }
    }
}

/// Summary of one experiment run, mirrored in the emitted files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Report {
    QqUniformity(QqReport),
    LgssFilterTable(FilterTableReport),
    LgssPmh(PmhReport),
    SvRealData(SvReport),
    ChebGenerate(GenerateReport),
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    cfg.validate(experiment)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut echo = cfg.clone();
    echo.experiment = Some(experiment);
    write_json(&cfg.out_dir.join("config.json"), &echo)?;
    Ok(match experiment {
        Experiment::QqUniformity => Report::QqUniformity(run_qq_uniformity(cfg)?),
        Experiment::LgssFilterTable => Report::LgssFilterTable(run_lgss_filter_table(cfg)?),
        Experiment::LgssPmh => Report::LgssPmh(run_lgss_pmh(cfg)?),
        Experiment::SvRealData => Report::SvRealData(run_sv_real_data(cfg)?),
        Experiment::ChebGenerate => Report::ChebGenerate(run_cheb_generate(cfg)?),
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    (mean(values), sample_variance(values).sqrt())
}

fn cheb_support(cfg: &ExperimentConfig) -> anyhow::Result<Arc<ChebyshevSupport>> {
    let generator = GeneratorConfig {
        seed: cfg.filter.cheb_seed,
        ..cfg.generator.clone()
    };
    Ok(Arc::new(ChebyshevSupport::standard_normal(
        cfg.filter.n_cheb,
        &cfg.energy,
        &generator,
    )?))
}

fn filter_config(
    cfg: &ExperimentConfig,
    support: &Arc<ChebyshevSupport>,
    n: usize,
    seed: u64,
) -> FilterConfig {
    FilterConfig {
        n_particles: n,
        cheb_set: Some(support.clone()),
        proposal_mode: cfg.filter.proposal_mode,
        shift: cfg.filter.shift,
        seed,
        ess_threshold: cfg.filter.ess_threshold,
    }
}

// qq-uniformity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqSize {
    pub n: usize,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub ks_pass: bool,
    pub qq_slope: f64,
    pub min_separation: f64,
    pub forced: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqReport {
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    pub sizes: Vec<QqSize>,
}

pub fn run_qq_uniformity(cfg: &ExperimentConfig) -> anyhow::Result<QqReport> {
    let seed = cfg.seeds[0];
    let (lo, hi) = (cfg.generator.domain_lo[0], cfg.generator.domain_hi[0]);
    let density = DensityOracle::new(UniformBox::new(vec![lo], vec![hi])?);
    let runs = par_map(
        cfg.qq_sizes.clone(),
        |n| -> anyhow::Result<(QqSize, Table)> {
            let gen_cfg = GeneratorConfig {
                n_points: n,
                seed,
                ..cfg.generator.clone()
            };
            let g = generate(&density, &cfg.energy, &gen_cfg)?;
            let mut sample = g.config.scalars();
            sample.sort_by(f64::total_cmp);
            let theory: Vec<f64> = (0..n)
                .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
                .collect();
            let ks = ks_uniformity_test(&g.config, |x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0))?;
            let mut table = Table::new(["theoretical_quantile", "sample_quantile"]);
            for (t, s) in theory.iter().zip(&sample) {
                table.push(vec![Cell::Real(*t), Cell::Real(*s)]);
            }
            let size = QqSize {
                n,
                ks_statistic: ks.statistic,
                ks_critical: ks.critical,
                ks_pass: ks.pass,
                qq_slope: ols_slope(&theory, &sample),
                min_separation: min_separation(&g.config)?,
                forced: g.forced_count(),
            };
            Ok((size, table))
        },
    );
    let mut sizes = Vec::new();
    for r in runs {
        let (size, table) = r?;
        table.write(&cfg.out_dir.join(format!("qq_{}.csv", size.n)))?;
        sizes.push(size);
    }
    let report = QqReport {
        seed,
        lo,
        hi,
        sizes,
    };
    write_json(&cfg.out_dir.join("uniformity.json"), &report)?;
    Ok(report)
}

// cheb-generate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub min_separation: f64,
    pub covering_radius: f64,
    /// Mesh points per axis used for the covering radius.
    pub mesh_per_axis: usize,
    pub log_energy: f64,
    /// Per-coordinate KS statistics against the target marginals.
    pub ks_statistic: Option<Vec<f64>>,
    pub forced: usize,
}

/// Tensor grid over a box with `per_axis` points per coordinate.
pub fn grid_mesh(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Point> {
    if lo.len() == 1 {
        return line_mesh(lo[0], hi[0], per_axis);
    }
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| {
            (0..per_axis)
                .map(|k| a + (b - a) * k as f64 / (per_axis - 1) as f64)
                .collect()
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .map(|c| Point::new(c).expect("finite mesh"))
        .collect()
}

type Cdf = Box<dyn Fn(f64) -> f64 + Send + Sync>;

fn target_density(cfg: &ExperimentConfig) -> anyhow::Result<(DensityOracle, Option<Vec<Cdf>>)> {
    let lo = cfg.generator.domain_lo.clone();
    let hi = cfg.generator.domain_hi.clone();
    Ok(match &cfg.density {
        DensitySpec::Uniform => {
            let cdfs = lo
                .iter()
                .zip(&hi)
                .map(|(&a, &b)| Box::new(move |x: f64| ((x - a) / (b - a)).clamp(0.0, 1.0)) as Cdf)
                .collect();
            (DensityOracle::new(UniformBox::new(lo, hi)?), Some(cdfs))
        }
        DensitySpec::Gaussian { mean, sd } => {
            ensure!(
                mean.len() == lo.len(),
                "gaussian mean has the wrong dimension"
            );
            (DensityOracle::new(Gaussian::new(mean.clone(), *sd)?), None)
        }
        DensitySpec::TruncatedGaussian { mean, sd } => {
            ensure!(lo.len() == 1, "truncated gaussian is one-dimensional");
            let d = TruncatedGaussian::new(*mean, *sd, lo[0], hi[0])?;
            let c = d.clone();
            (
                DensityOracle::new(d),
                Some(vec![Box::new(move |x| c.cdf(x)) as Cdf]),
            )
        }
        DensitySpec::TruncatedExponential { rate } => {
            ensure!(lo.len() == 1, "truncated exponential is one-dimensional");
            let d = TruncatedExponential::new(*rate, lo[0], hi[0])?;
            let c = d.clone();
            (
                DensityOracle::new(d),
                Some(vec![Box::new(move |x| c.cdf(x)) as Cdf]),
            )
        }
    })
}

pub fn run_cheb_generate(cfg: &ExperimentConfig) -> anyhow::Result<GenerateReport> {
    let seed = cfg.seeds[0];
    let gen_cfg = GeneratorConfig {
        seed,
        ..cfg.generator.clone()
    };
    let (density, cdfs) = target_density(cfg)?;
    let g = generate(&density, &cfg.energy, &gen_cfg)?;
    let dim = g.config.dim();
    let per_axis = ((cfg.mesh_points as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let mesh = grid_mesh(&gen_cfg.domain_lo, &gen_cfg.domain_hi, per_axis);
    let ks_statistic = match cdfs {
        Some(c) => {
            let refs: Vec<&dyn Fn(f64) -> f64> = c
                .iter()
                .map(|b| b.as_ref() as &dyn Fn(f64) -> f64)
                .collect();
            Some(
                ks_uniformity_test_marginals(&g.config, &refs)?
                    .iter()
                    .map(|k| k.statistic)
                    .collect(),
            )
        }
        None => None,
    };
    let report = GenerateReport {
        n: g.config.len(),
        dim,
        seed,
        min_separation: min_separation(&g.config)?,
        covering_radius: covering_radius(&g.config, &mesh)?,
        mesh_per_axis: per_axis,
        log_energy: log_total_energy(&g.config, &density, &cfg.energy)?,
        ks_statistic,
        forced: g.forced_count(),
    };
    configuration_table(&g).write(&cfg.out_dir.join("configuration.csv"))?;
    write_json(&cfg.out_dir.join("diagnostics.json"), &report)?;
    Ok(report)
}

/// Recompute the covering radius of a configuration CSV written by `cheb-generate`.
pub fn covering_radius_from_csv(
    path: &Path,
    lo: &[f64],
    hi: &[f64],
    per_axis: usize,
) -> anyhow::Result<f64> {
    let t = Table::read(path)?;
    let dim = lo.len();
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            t.column(&format!("coord_{k}"))
                .context("missing coordinate column")
        })
        .collect::<anyhow::Result<_>>()?;
    let points = (0..t.rows.len())
        .map(|i| Point::new(cols.iter().map(|c| c[i]).collect()))
        .collect::<riesz_smc::Result<Vec<_>>>()?;
    Ok(covering_radius(
        &Configuration::new(points)?,
        &grid_mesh(lo, hi, per_axis),
    )?)
}

// lgss-filter-table

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTableRow {
    pub n: usize,
    pub log_bias_mean: f64,
    pub log_bias_sd: f64,
    pub log_mse_mean: f64,
    pub log_mse_sd: f64,
    pub valid_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTableReport {
    pub rows: Vec<FilterTableRow>,
    pub failures: Vec<String>,
}

pub fn run_lgss_filter_table(cfg: &ExperimentConfig) -> anyhow::Result<FilterTableReport> {
    let support = cheb_support(cfg)?;
    let lg = &cfg.lgss;
    let mut data = Vec::new();
    for &seed in &cfg.seeds {
        let sim = lgss_simulate(lg.t_len, &lg.params, lg.x0, seed)?;
        let kalman = kalman_filter(&sim.obs, &lg.params, lg.x0, 0.0)?;
        simulated_table(&sim).write(&cfg.out_dir.join(format!("data_s{seed}.csv")))?;
        data.push((seed, sim, kalman));
    }
    let model = riesz_smc::models::Lgss::new(lg.params, lg.x0, 0.0)?;
    let cells: Vec<(usize, usize)> = (0..data.len())
        .flat_map(|d| lg.table_particles.iter().map(move |&n| (d, n)))
        .collect();
    let results = par_map(cells.clone(), |(d, n)| {
        let (seed, sim, kalman) = &data[d];
        filter_run(&model, &sim.obs, &filter_config(cfg, &support, n, *seed))
            .and_then(|out| filtering_metrics(&out.state_means, &kalman.filtered_means))
    });

    let mut runs = Table::new(["seed", "N", "log_bias", "log_mse", "status"]);
    let mut by_n: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut failures = Vec::new();
    for ((d, n), r) in cells.into_iter().zip(results) {
        let seed = data[d].0;
        match r {
            Ok((b, m)) => {
                runs.push(vec![
                    Cell::Int(seed as i64),
                    Cell::from(n),
                    Cell::Real(b),
                    Cell::Real(m),
                    Cell::Text("ok".into()),
                ]);
                let e = by_n.entry(n).or_default();
                e.0.push(b);
                e.1.push(m);
            }
            Err(e) => {
                runs.push(vec![
                    Cell::Int(seed as i64),
                    Cell::from(n),
                    Cell::Real(f64::NAN),
                    Cell::Real(f64::NAN),
                    Cell::Text(format!("invalid: {e}")),
                ]);
                by_n.entry(n).or_default();
                failures.push(format!("seed {seed}, N {n}: {e}"));
            }
        }
    }
    let mut table = Table::new([
        "N",
        "log_bias_mean",
        "log_bias_sd",
        "log_mse_mean",
        "log_mse_sd",
        "valid_runs",
    ]);
    let mut rows = Vec::new();
    for &n in &lg.table_particles {
        let (b, m) = by_n.get(&n).cloned().unwrap_or_default();
        let (bm, bs) = mean_sd(&b);
        let (mm, ms) = mean_sd(&m);
        table.push(vec![
            Cell::from(n),
            Cell::Real(bm),
            Cell::Real(bs),
            Cell::Real(mm),
            Cell::Real(ms),
            Cell::from(b.len()),
        ]);
        rows.push(FilterTableRow {
            n,
            log_bias_mean: bm,
            log_bias_sd: bs,
            log_mse_mean: mm,
            log_mse_sd: ms,
            valid_runs: b.len(),
        });
    }
    runs.write(&cfg.out_dir.join("table1_runs.csv"))?;
    table.write(&cfg.out_dir.join("table1.csv"))?;
    Ok(FilterTableReport { rows, failures })
}

// lgss-pmh

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub n: usize,
    pub posterior_mean: f64,
    pub posterior_mean_sd: f64,
    pub posterior_variance: f64,
    pub posterior_variance_sd: f64,
    pub acceptance_rate: f64,
    pub valid_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRun {
    pub step: f64,
    pub n: usize,
    pub seed: u64,
    pub summary: SummaryFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmhReport {
    pub table_step: f64,
    pub rows: Vec<PosteriorRow>,
    pub step_runs: Vec<StepRun>,
    pub failures: Vec<String>,
}

fn step_label(h: f64) -> String {
    format!("{h}")
}

fn summary_file(
    trace: &PmhTrace,
    burn_in: usize,
    max_lag: usize,
    column: usize,
) -> anyhow::Result<(PosteriorSummary, SummaryFile)> {
    let s = posterior_summary(trace, burn_in)?;
    let col = trace.column(column);
    let acf_map: BTreeMap<usize, f64> = match acf(&col[burn_in..], max_lag) {
        Ok(v) => v.into_iter().enumerate().collect(),
        Err(riesz_smc::Error::UndefinedAcf) => BTreeMap::new(),
        Err(e) => return Err(e.into()),
    };
    let file = SummaryFile {
        posterior_mean: s.mean.clone(),
        posterior_variance: s.variance.clone(),
        acceptance_rate: s.acceptance_rate,
        acf: acf_map,
    };
    Ok((s, file))
}

fn acf_table(acf: &BTreeMap<usize, f64>) -> Table {
    let mut t = Table::new(["lag", "acf"]);
    for (&lag, &v) in acf {
        t.push(vec![Cell::from(lag), Cell::Real(v)]);
    }
    t
}

pub fn run_lgss_pmh(cfg: &ExperimentConfig) -> anyhow::Result<PmhReport> {
    let support = cheb_support(cfg)?;
    let lg = &cfg.lgss;
    let family = LgssPhiFamily {
        sigma_v: lg.params.sigma_v,
        sigma_o: lg.params.sigma_o,
        x0_mean: lg.x0,
        x0_var: 0.0,
        phi_prior: lg.phi_prior,
    };
    let mut data = BTreeMap::new();
    for &seed in &cfg.seeds {
        let sim = lgss_simulate(lg.t_len, &lg.params, lg.x0, seed)?;
        simulated_table(&sim).write(&cfg.out_dir.join(format!("data_s{seed}.csv")))?;
        data.insert(seed, sim.obs);
    }

    // (seed, N, step) cells, deduplicated across the table and the step comparison
    let mut cells: Vec<(u64, usize, u64)> = Vec::new();
    for &seed in &cfg.seeds {
        for &n in &lg.pmh_particles {
            cells.push((seed, n, lg.table_step.to_bits()));
        }
    }
    for &h in &lg.steps {
        cells.push((cfg.seeds[0], lg.steps_particles, h.to_bits()));
    }
    cells.sort_unstable();
    cells.dedup();

    let burn_in = cfg.pmh.burn_in.unwrap_or(cfg.pmh.iterations / 5);
    let results = par_map(cells.clone(), |(seed, n, hb)| -> anyhow::Result<PmhTrace> {
        let pmh = PmhConfig {
            iterations: cfg.pmh.iterations,
            burn_in: Some(burn_in),
            step_sizes: vec![f64::from_bits(hb)],
            init_params: vec![lg.init_phi],
            seed,
        };
        Ok(run_chain(
            &family,
            &data[&seed],
            &filter_config(cfg, &support, n, seed),
            &pmh,
        )?)
    });

    let trace_dir = cfg.out_dir.join("traces");
    let mut done: BTreeMap<(u64, usize, u64), (PosteriorSummary, SummaryFile)> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut runs = Table::new([
        "seed",
        "N",
        "step",
        "posterior_mean",
        "posterior_variance",
        "acceptance_rate",
        "status",
    ]);
    for (key @ (seed, n, hb), r) in cells.into_iter().zip(results) {
        let h = f64::from_bits(hb);
        let outcome = r.and_then(|trace| {
            trace_table(&trace)
                .write(&trace_dir.join(format!("lgss_s{seed}_n{n}_h{}.csv", step_label(h))))?;
            summary_file(&trace, burn_in, cfg.pmh.max_lag, 0)
        });
        match outcome {
            Ok((s, file)) => {
                runs.push(vec![
                    Cell::Int(seed as i64),
                    Cell::from(n),
                    Cell::Real(h),
                    Cell::Real(s.mean[0]),
                    Cell::Real(s.variance[0]),
                    Cell::Real(s.acceptance_rate),
                    Cell::Text("ok".into()),
                ]);
                done.insert(key, (s, file));
            }
            Err(e) => {
                runs.push(vec![
                    Cell::Int(seed as i64),
                    Cell::from(n),
                    Cell::Real(h),
                    Cell::Real(f64::NAN),
                    Cell::Real(f64::NAN),
                    Cell::Real(f64::NAN),
                    Cell::Text(format!("failed: {e}")),
                ]);
                failures.push(format!("seed {seed}, N {n}, h {h}: {e}"));
            }
        }
    }
    runs.write(&cfg.out_dir.join("table2_runs.csv"))?;

    let mut table = Table::new([
        "N",
        "posterior_mean",
        "posterior_mean_sd",
        "posterior_variance",
        "posterior_variance_sd",
        "acceptance_rate",
        "valid_runs",
    ]);
    let mut rows = Vec::new();
    for &n in &lg.pmh_particles {
        let hits: Vec<&PosteriorSummary> = cfg
            .seeds
            .iter()
            .filter_map(|&s| done.get(&(s, n, lg.table_step.to_bits())).map(|v| &v.0))
            .collect();
        let means: Vec<f64> = hits.iter().map(|s| s.mean[0]).collect();
        let vars: Vec<f64> = hits.iter().map(|s| s.variance[0]).collect();
        let accs: Vec<f64> = hits.iter().map(|s| s.acceptance_rate).collect();
        let (mm, msd) = mean_sd(&means);
        let (vm, vsd) = mean_sd(&vars);
        let acc = if accs.is_empty() {
            f64::NAN
        } else {
            mean(&accs)
        };
        table.push(vec![
            Cell::from(n),
            Cell::Real(mm),
            Cell::Real(msd),
            Cell::Real(vm),
            Cell::Real(vsd),
            Cell::Real(acc),
            Cell::from(hits.len()),
        ]);
        rows.push(PosteriorRow {
            n,
            posterior_mean: mm,
            posterior_mean_sd: msd,
            posterior_variance: vm,
            posterior_variance_sd: vsd,
            acceptance_rate: acc,
            valid_runs: hits.len(),
        });
    }
    table.write(&cfg.out_dir.join("table2.csv"))?;

    let mut step_runs = Vec::new();
    for &h in &lg.steps {
        let key = (cfg.seeds[0], lg.steps_particles, h.to_bits());
        if let Some((_, file)) = done.get(&key) {
            acf_table(&file.acf).write(&cfg.out_dir.join(format!("acf_h{}.csv", step_label(h))))?;
            write_json(
                &cfg.out_dir.join(format!("summary_h{}.json", step_label(h))),
                file,
            )?;
            step_runs.push(StepRun {
                step: h,
                n: lg.steps_particles,
                seed: cfg.seeds[0],
                summary: file.clone(),
            });
        }
    }
    Ok(PmhReport {
        table_step: lg.table_step,
        rows,
        step_runs,
        failures,
    })
}

// sv-real-data

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvSeedRun {
    pub seed: u64,
    pub summary: SummaryFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvReport {
    pub param_names: Vec<String>,
    pub n_prices: usize,
    pub n_returns: usize,
    pub posterior_mean: Vec<f64>,
    pub runs: Vec<SvSeedRun>,
    /// True when every volatility band is finite with positive width.
    pub bands_finite: bool,
    pub failures: Vec<String>,
}

/// Rows inside the inclusive `[start, end]` window.
pub fn select_window(
    rows: Vec<PriceRow>,
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
) -> Vec<PriceRow> {
    rows.into_iter()
        .filter(|r| start.is_none_or(|s| r.date >= s) && end.is_none_or(|e| r.date <= e))
        .collect()
}

pub fn run_sv_real_data(cfg: &ExperimentConfig) -> anyhow::Result<SvReport> {
    let path = cfg
        .data_path
        .as_ref()
        .context("sv-real-data needs data_path")?;
    let rows = select_window(read_price_csv(path)?, cfg.sv.start_date, cfg.sv.end_date);
    ensure!(
        rows.len() >= 3,
        "only {} price rows inside the date window",
        rows.len()
    );
    let closes: Vec<f64> = rows.iter().map(|r| r.close).collect();
    let returns: Vec<f64> = log_returns(&closes)?
        .into_iter()
        .map(|r| r * cfg.sv.return_scale)
        .collect();
    let support = cheb_support(cfg)?;
    let family = cfg.sv.family;
    let names = family.param_names();
    let n = cfg.filter.n_particles;
    let burn_in = cfg.pmh.burn_in.unwrap_or(cfg.pmh.iterations / 5);

    let results = par_map(cfg.seeds.clone(), |seed| -> anyhow::Result<PmhTrace> {
        let pmh = PmhConfig {
            iterations: cfg.pmh.iterations,
            burn_in: Some(burn_in),
            step_sizes: cfg.sv.step_sizes.clone(),
            init_params: cfg.sv.init_params.clone(),
            seed,
        };
        Ok(run_chain(
            &family,
            &returns,
            &filter_config(cfg, &support, n, seed),
            &pmh,
        )?)
    });

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut first: Option<(u64, PmhTrace, PosteriorSummary)> = None;
    for (&seed, r) in cfg.seeds.iter().zip(results) {
        let outcome = r.and_then(|trace| {
            trace_table(&trace).write(&cfg.out_dir.join(format!("trace_s{seed}.csv")))?;
            let (s, file) = summary_file(&trace, burn_in, cfg.pmh.max_lag, 1)?;
            Ok((trace, s, file))
        });
        match outcome {
            Ok((trace, s, file)) => {
                write_json(&cfg.out_dir.join(format!("summary_s{seed}.json")), &file)?;
                runs.push(SvSeedRun {
                    seed,
                    summary: file,
                });
                if first.is_none() {
                    first = Some((seed, trace, s));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let (seed, trace, summary) = first.context("every SV chain failed")?;

    for (j, name) in names.iter().enumerate() {
        let col = trace.column(j);
        if let Ok(v) = acf(&col[burn_in..], cfg.pmh.max_lag) {
            acf_table(&v.into_iter().enumerate().collect())
                .write(&cfg.out_dir.join(format!("acf_{name}.csv")))?;
        }
    }

    let model = family.build(&summary.mean)?;
    let out = filter_run(&model, &returns, &filter_config(cfg, &support, n, seed))?;
    let mut vol = Table::new(["t", "y", "logvol_mean", "logvol_lo", "logvol_hi"]);
    let mut bands_finite = true;
    for (t, &y) in returns.iter().enumerate() {
        let xs = &out.system.particles[t];
        let ws = &out.system.weights[t];
        let lo = weighted_quantile(xs, ws, 0.025);
        let hi = weighted_quantile(xs, ws, 0.975);
        bands_finite &= lo.is_finite() && hi.is_finite() && hi > lo;
        vol.push(vec![
            Cell::from(t),
            Cell::Real(y),
            Cell::Real(out.state_means[t]),
            Cell::Real(lo),
            Cell::Real(hi),
        ]);
    }
    vol.write(&cfg.out_dir.join("volatility.csv"))?;

    let p = names.len();
    let posterior_mean: Vec<f64> = (0..p)
        .map(|j| {
            mean(
                &runs
                    .iter()
                    .map(|r| r.summary.posterior_mean[j])
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let report = SvReport {
        param_names: names,
        n_prices: rows.len(),
        n_returns: returns.len(),
        posterior_mean,
        runs,
        bands_finite,
        failures,
    };
    write_json(&cfg.out_dir.join("posterior.json"), &report)?;
    Ok(report)
}

/// Price path on business days whose scaled log-returns follow the SV model.
/// `scale` plays the role of `return_scale`: the model observation is
/// `scale * ln(close_t / close_{t-1})`.
pub fn synthetic_prices(
    n_rows: usize,
    params: &SvParams,
    seed: u64,
    start: NaiveDate,
    first_close: f64,
    scale: f64,
) -> anyhow::Result<Vec<PriceRow>> {
    ensure!(scale > 0.0, "scale must be positive");
    ensure!(n_rows >= 2, "need at least two rows");
    let sim = sv_simulate(n_rows - 1, params, seed)?;
    let mut date = start;
    let mut close = first_close;
    let mut rows = Vec::with_capacity(n_rows);
    for k in 0..n_rows {
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date.succ_opt().context("date overflow")?;
        }
        if k > 0 {
            close *= (sim.obs[k - 1] / scale).exp();
        }
        rows.push(PriceRow { date, close });
        date = date.succ_opt().context("date overflow")?;
    }
    Ok(rows)
}

pub fn price_csv(rows: &[PriceRow]) -> String {
    let mut s = String::from("date,close\n");
    for r in rows {
        s.push_str(&format!("{},{:.6}\n", r.date.format("%Y-%m-%d"), r.close));
    }
    s
}
