//! Run configuration file (TOML). Every section is optional; unknown keys
//! are rejected. Relative paths resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fame_core::curriculum::CurriculumConfig;
use fame_core::estimation::EstimatorConfig;
use fame_core::harness::{Disturbance, SweepSpec};
use fame_core::model::ArmConfig;
use fame_core::policy::{ControlConfig, ObsScales};
use fame_core::reward::{RewardShaping, WeightTable};
use fame_core::sampling::{DomainRandRanges, ForceSampleConfig, DEFAULT_KAPPA};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Robot description; the bundled model when absent.
    pub model: Option<PathBuf>,
    /// Weight manifest.
    pub weights: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub reward: RewardSection,
    pub observation: ObsScales,
    pub control: ControlConfig,
    pub sampling: SamplingSection,
    pub curriculum: CurriculumConfig,
    pub sweep: SweepSpec,
    pub estimator: EstimatorConfig,
    pub episode: EpisodeSection,
    pub training: TrainingSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSection {
    /// Per-term weight overrides keyed by term name.
    pub weights: BTreeMap<String, f64>,
    pub shaping: RewardShaping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub kappa: f64,
    pub force: ForceSampleConfig,
    pub domain_randomization: DomainRandRanges,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            force: ForceSampleConfig::default(),
            domain_randomization: DomainRandRanges::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeSection {
    pub preset: ArmConfig,
    pub h_cmd: f64,
    pub dt: f64,
    pub horizon: f64,
    pub rho_a: f64,
    pub disturbance: Disturbance,
    /// Lag of the kinematic stand-in plant (s).
    pub plant_time_constant: f64,
    pub episodes: usize,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self {
            preset: ArmConfig::C1,
            h_cmd: 0.9,
            dt: fame_core::policy::CONTROL_DT,
            horizon: 10.0,
            rho_a: 0.0,
            disturbance: Disturbance::None,
            plant_time_constant: 0.05,
            episodes: 1,
        }
    }
}

/// PPO settings of the training setup. Parsed and checked, never used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub optimizer: String,
    pub learning_rate: f64,
    pub schedule: String,
    pub gamma: f64,
    pub lam: f64,
    pub clip_param: f64,
    pub value_loss_coef: f64,
    pub use_clipped_value_loss: bool,
    pub entropy_coef: f64,
    pub desired_kl: f64,
    pub max_grad_norm: f64,
    pub num_learning_epochs: u32,
    pub num_mini_batches: u32,
    pub init_noise_std: f64,
    pub actor_hidden_dims: Vec<usize>,
    pub critic_hidden_dims: Vec<usize>,
    pub activation: String,
    pub symmetry_scale: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            schedule: "adaptive".into(),
            gamma: 0.99,
            lam: 0.95,
            clip_param: 0.2,
            value_loss_coef: 1.0,
            use_clipped_value_loss: true,
            entropy_coef: 0.01,
            desired_kl: 0.01,
            max_grad_norm: 1.0,
            num_learning_epochs: 5,
            num_mini_batches: 4,
            init_noise_std: 1.0,
            actor_hidden_dims: vec![512, 256, 256],
            critic_hidden_dims: vec![512, 256, 256],
            activation: "elu".into(),
            symmetry_scale: 1.0,
        }
    }
}

impl TrainingSection {
    fn validate(&self) -> Result<(), CliError> {
        let unit = |name: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(CliError::validation(format!("training.{name} = {v} must lie in [0, 1]")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("lam", self.lam)?;
        unit("clip_param", self.clip_param)?;
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("max_grad_norm", self.max_grad_norm),
            ("init_noise_std", self.init_noise_std),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::validation(format!("training.{name} = {v} must be > 0")));
            }
        }
        for (name, v) in [
            ("value_loss_coef", self.value_loss_coef),
            ("entropy_coef", self.entropy_coef),
            ("desired_kl", self.desired_kl),
            ("symmetry_scale", self.symmetry_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::validation(format!("training.{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.model, &mut cfg.weights, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for p in [&self.model, &self.weights].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::input(format!("{}: file not found", p.display())));
            }
        }
        self.reward_weights()?;
        self.reward.shaping.validate()?;
        let o = &self.observation;
        if o.command.iter().chain([&o.h_cmd, &o.ang_vel, &o.dof_pos, &o.dof_vel, &o.lin_vel]).any(|v| !v.is_finite()) {
            return Err(CliError::validation("observation scales must be finite"));
        }
        self.control.validate()?;
        if !(self.sampling.kappa.is_finite() && self.sampling.kappa > 0.0) {
            return Err(CliError::validation(format!("sampling.kappa = {} must be > 0", self.sampling.kappa)));
        }
        self.sampling.force.validate()?;
        self.sampling.domain_randomization.validate()?;
        self.curriculum.validate()?;
        self.sweep.validate()?;
        self.estimator.validate()?;
        let e = &self.episode;
        if !(e.h_cmd.is_finite() && e.h_cmd > 0.0) {
            return Err(CliError::validation(format!("episode.h_cmd = {} must be > 0", e.h_cmd)));
        }
        if !(0.0..=1.0).contains(&e.rho_a) {
            return Err(CliError::validation(format!("episode.rho_a = {} must lie in [0, 1]", e.rho_a)));
        }
        if !(e.plant_time_constant.is_finite() && e.plant_time_constant >= 0.0) {
            return Err(CliError::validation("episode.plant_time_constant must be >= 0"));
        }
        self.training.validate()
    }

    pub fn reward_weights(&self) -> Result<WeightTable, CliError> {
        Ok(WeightTable::with_overrides(&self.reward.weights)?)
    }
}
