use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use riesz_smc::models::{LgssParams, SvFamily, TruncatedNormalPrior};
use riesz_smc::smc::{ProposalMode, ShiftPolicy};
use riesz_smc::{EnergyParams, GeneratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QqUniformity,
    LgssFilterTable,
    LgssPmh,
    SvRealData,
    ChebGenerate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::QqUniformity => "qq-uniformity",
            Experiment::LgssFilterTable => "lgss-filter-table",
            Experiment::LgssPmh => "lgss-pmh",
            Experiment::SvRealData => "sv-real-data",
            Experiment::ChebGenerate => "cheb-generate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    pub n_particles: usize,
    /// Size N′ of the Chebyshev set.
    pub n_cheb: usize,
    pub proposal_mode: ProposalMode,
    pub shift: ShiftPolicy,
    pub ess_threshold: Option<f64>,
    /// Seed of the candidate pool used to build the Chebyshev set.
    pub cheb_seed: u64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            n_particles: 200,
            n_cheb: 200,
            proposal_mode: ProposalMode::Chebyshev,
            shift: ShiftPolicy::PerBlock,
            ess_threshold: None,
            cheb_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmhSettings {
    pub iterations: usize,
    /// Defaults to 20% of `iterations`.
    pub burn_in: Option<usize>,
    pub max_lag: usize,
}

impl Default for PmhSettings {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: Some(1000),
            max_lag: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LgssSettings {
    pub params: LgssParams,
    pub t_len: usize,
    pub x0: f64,
    pub phi_prior: TruncatedNormalPrior,
    pub init_phi: f64,
    /// Particle counts for the filtering-accuracy table.
    pub table_particles: Vec<usize>,
    /// Particle counts for the posterior table.
    pub pmh_particles: Vec<usize>,
    /// Random-walk step used for the posterior table.
    pub table_step: f64,
    /// Step sizes for the mixing comparison runs.
    pub steps: Vec<f64>,
    /// Particle count for the mixing comparison runs.
    pub steps_particles: usize,
}

impl Default for LgssSettings {
    fn default() -> Self {
        Self {
            params: LgssParams::default(),
            t_len: 250,
            x0: 0.0,
            phi_prior: TruncatedNormalPrior {
                mean: 0.75,
                sd: 0.5,
                lo: -1.0,
                hi: 1.0,
            },
            init_phi: 0.75,
            table_particles: vec![10, 20, 50, 100, 200, 500, 1000],
            pmh_particles: vec![10, 20, 50, 100, 200, 500],
            table_step: 0.1,
            steps: vec![0.05, 0.1, 0.5],
            steps_particles: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvSettings {
    pub family: SvFamily,
    /// Initial (mu, persistence, sigma_v).
    pub init_params: Vec<f64>,
    pub step_sizes: Vec<f64>,
    /// Multiplier applied to log-returns before inference (100 gives percent returns).
    pub return_scale: f64,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
}

impl Default for SvSettings {
    fn default() -> Self {
        Self {
            family: SvFamily::default(),
            init_params: vec![0.0, 0.9, 0.2],
            step_sizes: vec![0.1, 0.02, 0.02],
            return_scale: 100.0,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 2),
            end_date: NaiveDate::from_ymd_opt(2016, 1, 2),
        }
    }
}

/// Target density for `cheb-generate`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Uniform over the generator's domain box.
    #[default]
    Uniform,
    Gaussian {
        mean: Vec<f64>,
        sd: f64,
    },
    TruncatedGaussian {
        mean: f64,
        sd: f64,
    },
    TruncatedExponential {
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub energy: EnergyParams,
    pub generator: GeneratorConfig,
    pub density: DensitySpec,
    pub filter: FilterSettings,
    pub pmh: PmhSettings,
    pub lgss: LgssSettings,
    pub sv: SvSettings,
    /// Set sizes for the quantile comparison.
    pub qq_sizes: Vec<usize>,
    /// Mesh resolution for covering radius (per axis when d > 1).
    pub mesh_points: usize,
    pub data_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            energy: EnergyParams::default(),
            generator: GeneratorConfig::default(),
            density: DensitySpec::default(),
            filter: FilterSettings::default(),
            pmh: PmhSettings::default(),
            lgss: LgssSettings::default(),
            sv: SvSettings::default(),
            qq_sizes: vec![40, 120, 200],
            mesh_points: 10_001,
            data_path: None,
            out_dir: PathBuf::from("out"),
            seeds: (0..10).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Load a config file. A relative `data_path` resolves against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg =
            Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let (Some(data), Some(dir)) = (cfg.data_path.as_mut(), path.parent()) {
            if data.is_relative() {
                *data = dir.join(&*data);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self, experiment: Experiment) -> anyhow::Result<()> {
        if let Some(e) = self.experiment {
            ensure!(
                e == experiment,
                "config is for `{}` but `{}` was requested",
                e.name(),
                experiment.name()
            );
        }
        ensure!(!self.seeds.is_empty(), "at least one seed is required");
        self.energy.validate()?;
        self.generator.validate()?;
        ensure!(self.mesh_points >= 2, "mesh_points must be at least 2");
        match experiment {
            Experiment::QqUniformity => {
                ensure!(self.energy.d == 1, "qq-uniformity needs d = 1");
                ensure!(
                    !self.qq_sizes.is_empty() && self.qq_sizes.iter().all(|&n| n >= 2),
                    "qq_sizes must be ≥ 2"
                );
            }
            Experiment::LgssFilterTable => {
                self.check_filter()?;
                self.lgss.params.validate()?;
                ensure!(self.lgss.t_len > 0, "lgss.t_len must be positive");
                ensure!(
                    self.lgss.table_particles.iter().all(|&n| n >= 2),
                    "particle counts must be ≥ 2"
                );
            }
            Experiment::LgssPmh => {
                self.check_filter()?;
                self.check_pmh()?;
                self.lgss.params.validate()?;
                ensure!(self.lgss.t_len > 0, "lgss.t_len must be positive");
                ensure!(
                    self.lgss.pmh_particles.iter().all(|&n| n >= 2),
                    "particle counts must be ≥ 2"
                );
                ensure!(
                    self.lgss.steps_particles >= 2,
                    "steps_particles must be ≥ 2"
                );
                ensure!(
                    self.lgss.table_step > 0.0 && self.lgss.steps.iter().all(|&h| h > 0.0),
                    "step sizes must be positive"
                );
            }
            Experiment::SvRealData => {
                self.check_filter()?;
                self.check_pmh()?;
                ensure!(
                    self.filter.proposal_mode != ProposalMode::Optimal,
                    "the SV model has no optimal proposal"
                );
                let Some(path) = &self.data_path else {
                    bail!("sv-real-data needs data_path")
                };
                ensure!(path.exists(), "data file {} does not exist", path.display());
                ensure!(
                    self.sv.init_params.len() == 3 && self.sv.step_sizes.len() == 3,
                    "SV needs 3 initial values and 3 step sizes"
                );
                ensure!(
                    self.sv.return_scale > 0.0 && self.sv.return_scale.is_finite(),
                    "return_scale must be positive"
                );
                ensure!(
                    self.sv.step_sizes.iter().all(|&h| h > 0.0),
                    "step sizes must be positive"
                );
            }
            Experiment::ChebGenerate => {
                ensure!(
                    self.generator.dim() == self.energy.d,
                    "generator domain has dimension {} but energy.d = {}",
                    self.generator.dim(),
                    self.energy.d
                );
            }
        }
        Ok(())
    }

    fn check_filter(&self) -> anyhow::Result<()> {
        ensure!(
            self.filter.n_particles >= 2,
            "filter.n_particles must be ≥ 2"
        );
        ensure!(self.filter.n_cheb >= 2, "filter.n_cheb must be ≥ 2");
        if let Some(th) = self.filter.ess_threshold {
            ensure!(
                (0.0..=1.0).contains(&th),
                "ess_threshold must lie in [0, 1]"
            );
        }
        Ok(())
    }

    fn check_pmh(&self) -> anyhow::Result<()> {
        ensure!(self.pmh.iterations > 0, "pmh.iterations must be positive");
        let burn = self.pmh.burn_in.unwrap_or(self.pmh.iterations / 5);
        ensure!(
            burn + 2 <= self.pmh.iterations,
            "burn_in must leave at least 2 samples"
        );
        ensure!(self.pmh.max_lag >= 1, "max_lag must be positive");
        ensure!(
            self.pmh.iterations - burn > self.pmh.max_lag,
            "max_lag must be below the post-burn-in length"
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let cfg =
            ExperimentConfig::from_json(r#"{"experiment":"lgss-pmh","pmh":{"iterations":100}}"#)
                .unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::LgssPmh));
        assert_eq!(cfg.pmh.iterations, 100);
        assert_eq!(cfg.pmh.max_lag, 50);
        assert_eq!(cfg.lgss.params.phi, 0.75);
        assert_eq!(cfg.seeds.len(), 10);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"filter":{"n_particle":3}}"#).is_err());
    }

    #[test]
    fn mismatched_experiment_is_rejected() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment":"qq-uniformity"}"#).unwrap();
        assert!(cfg.validate(Experiment::QqUniformity).is_ok());
        assert!(cfg.validate(Experiment::LgssPmh).is_err());
    }

    #[test]
    fn sv_requires_existing_data() {
        let cfg =
            ExperimentConfig::from_json(r#"{"data_path":"/nonexistent/prices.csv"}"#).unwrap();
        assert!(cfg.validate(Experiment::SvRealData).is_err());
    }

    #[test]
    fn pmh_lag_must_fit() {
        let cfg =
            ExperimentConfig::from_json(r#"{"pmh":{"iterations":60,"burn_in":10,"max_lag":50}}"#)
                .unwrap();
        assert!(cfg.validate(Experiment::LgssPmh).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
