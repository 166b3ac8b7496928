use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imu::SimConfig;
use crate::pipeline::TrainConfig;

use super::read_to_string;

/// Settings of the evaluation harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Log-spaced averaging times per decade on the Allan curve.
    pub allan_points_per_decade: usize,
    /// Arclength samples used before trajectory alignment.
    pub resample_points: usize,
    /// Fixed-wavelet baseline run next to the selector.
    pub baseline_wavelet: String,
    /// Train and report a second arm with the regularizers switched off.
    pub crm_ablation: bool,
    /// A window counts as well selected when its denoising MSE is within this
    /// factor of the best bank member.
    pub selection_tolerance: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            allan_points_per_decade: 10,
            resample_points: crate::metrics::DEFAULT_RESAMPLE,
            baseline_wavelet: "db4".into(),
            crm_ablation: true,
            selection_tolerance: 1.1,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.allan_points_per_decade == 0 {
            return Err(Error::Config("evaluation.allan_points_per_decade must be positive".into()));
        }
        if self.resample_points < 3 {
            return Err(Error::Config("evaluation.resample_points must be at least 3".into()));
        }
        if !(self.selection_tolerance.is_finite() && self.selection_tolerance >= 1.0) {
            return Err(Error::Config("evaluation.selection_tolerance must be at least 1".into()));
        }
        crate::wavelet::WaveletBasis::<f64>::by_name(&self.baseline_wavelet)
            .map_err(|_| Error::Config(format!("evaluation.baseline_wavelet `{}` is not in the bank", self.baseline_wavelet)))?;
        Ok(())
    }
}

/// Default locations; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Everything a run needs, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seed of the simulated dataset and static capture.
    pub seed: u64,
    pub simulator: SimConfig,
    pub train: TrainConfig,
    pub evaluation: EvalConfig,
    pub paths: PathsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            simulator: SimConfig::default(),
            train: TrainConfig::default(),
            evaluation: EvalConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

/// File name of the resolved configuration inside every output directory.
pub const RESOLVED_CONFIG: &str = "config.toml";

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.simulator.validate()?;
        self.train.validate()?;
        self.evaluation.validate()?;
        if self.simulator.window_len < self.train.model.min_window {
            return Err(Error::Config(format!(
                "simulator.window_len {} is shorter than train.model.min_window {}",
                self.simulator.window_len, self.train.model.min_window
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }

    /// Writes the resolved configuration into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(RESOLVED_CONFIG), self.to_toml_string()?)?;
        Ok(())
    }
}
