//! Training of the wavelet selector through the guidance tasks, and
//! inference-time enhancement with the selected wavelet.

mod enhance;
mod train;

use serde::{Deserialize, Serialize};

pub use enhance::{
    enhance_hard, enhance_soft, enhance_stream, enhance_with_weights, oracle_selection, select, select_stream, static_enhance,
    window_starts, BankDenoiser,
};
pub use train::{loss_and_gradients, prepare, prepare_all, train, train_prepared, training_step, PreparedWindow, StepLosses, Trainer};

use crate::error::{Error, Result};
use crate::model::ArchConfig;
use crate::wavelet::{DenoiseConfig, BANK_SIZES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub grad_clip: f64,
    pub lambda_disp: f64,
    pub lambda_sparse: f64,
    pub lambda_encode: f64,
    /// Truncation threshold relative to the largest activation.
    pub epsilon_truncation: f64,
    pub bank_size: usize,
    pub crm_enabled: bool,
    pub seed: u64,
    pub model: ArchConfig,
    pub denoise: DenoiseConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            batch_size: 16,
            learning_rate: 0.01,
            momentum: 0.9,
            grad_clip: 5.0,
            lambda_disp: 1.0,
            lambda_sparse: 0.01,
            lambda_encode: 0.1,
            epsilon_truncation: 0.05,
            bank_size: 16,
            crm_enabled: true,
            seed: 0,
            model: ArchConfig::default(),
            denoise: DenoiseConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("learning_rate", self.learning_rate),
            ("momentum", self.momentum),
            ("grad_clip", self.grad_clip),
            ("lambda_disp", self.lambda_disp),
            ("lambda_sparse", self.lambda_sparse),
            ("lambda_encode", self.lambda_encode),
            ("epsilon_truncation", self.epsilon_truncation),
        ];
        if let Some((name, v)) = rates.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("train.{name} must be finite and nonnegative, got {v}")));
        }
        if self.momentum >= 1.0 || self.epsilon_truncation >= 1.0 {
            return Err(Error::Config("train.momentum and train.epsilon_truncation must be below 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if !BANK_SIZES.contains(&self.bank_size) {
            return Err(Error::Config(format!("train.bank_size must be one of 5, 10, 16, got {}", self.bank_size)));
        }
        self.model.validate()
    }

    /// Regularizer weights actually applied.
    pub fn effective_lambdas(&self) -> (f64, f64) {
        if self.crm_enabled {
            (self.lambda_sparse, self.lambda_encode)
        } else {
            (0.0, 0.0)
        }
    }
}

/// Per-epoch training summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub total_loss: f64,
    pub l_attitude: f64,
    pub l_disp: f64,
    pub r_sparse: f64,
    pub r_encode: f64,
    pub s2: f64,
    pub top1_mass: f64,
    /// Mean margin over samples whose selection matches the denoising oracle;
    /// NaN-free: zero when no sample was selected correctly.
    pub fsm_score: f64,
    pub selection_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// `S_2(W)` of the untrained model.
    pub initial_s2: f64,
}

impl TrainReport {
    pub const CSV_HEADER: &'static str =
        "epoch,total_loss,l_attitude,l_disp,r_sparse,r_encode,s2,top1_mass,fsm_score,selection_accuracy";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                e.epoch,
                e.total_loss,
                e.l_attitude,
                e.l_disp,
                e.r_sparse,
                e.r_encode,
                e.s2,
                e.top1_mass,
                e.fsm_score,
                e.selection_accuracy
            ));
        }
        s
    }
}
