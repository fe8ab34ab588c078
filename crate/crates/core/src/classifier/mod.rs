//! Spectrogram CNN with motion-vector fusion, trained from scratch in f64.
//!
//! Each enabled sensor modality gets its own conv stack (accelerometer axes
//! are input channels). Stack outputs are pooled, concatenated with the
//! motion vector and fed to one hidden dense layer and a linear output.

pub mod ablation;
pub mod input;
pub mod layers;
mod model;
mod train;

use serde::{Deserialize, Serialize};

use crate::protocol::Violation;
use crate::{Error, Result};

pub use ablation::{run_ablation, AblationCell, AblationReport, Modality};
pub use input::{pad_batch, Grid, InputReduction, ModelInput};
pub use model::{
    build_model, forward, forward_trace, loss_and_gradients, ClassifierModel, ConvLayer, DenseLayer, ForwardTrace,
    Gradients, InputShapes, StackShape, Standardizer,
};
pub use train::{evaluate, train, Evaluation, Trained};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlockSpec {
    pub out_channels: usize,
    /// `[time, freq]`, odd.
    pub kernel: [usize; 2],
    /// `[time, freq]` max-pool window.
    pub pool: [usize; 2],
}

impl ConvBlockSpec {
    pub fn new(out_channels: usize, kernel: [usize; 2], pool: [usize; 2]) -> Self {
        ConvBlockSpec {
            out_channels,
            kernel,
            pool,
        }
    }
}

/// How a conv stack's final activation is reduced to a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Mean over time and frequency, one value per channel.
    Global,
    /// Mean over time only, keeping the frequency axis.
    TimeOnly,
}

/// Granularity of the input standardizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// One mean and scale per channel; keeps the relative level of bins.
    PerChannel,
    /// One mean and scale per (channel, bin).
    PerBin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    ConcatBeforeDense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub conv_blocks: Vec<ConvBlockSpec>,
    pub dense_hidden: usize,
    pub num_classes: usize,
    pub fusion: Fusion,
    pub pooling: Pooling,
    pub normalization: Normalization,
    pub audio_input: InputReduction,
    pub accel_input: InputReduction,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            conv_blocks: Vec::new(),
            dense_hidden: 256,
            num_classes: 23,
            fusion: Fusion::ConcatBeforeDense,
            pooling: Pooling::TimeOnly,
            normalization: Normalization::PerChannel,
            audio_input: InputReduction {
                time_pool: 8,
                freq_pool: 2,
                max_bins: Some(256),
            },
            accel_input: InputReduction {
                time_pool: 2,
                freq_pool: 2,
                max_bins: Some(128),
            },
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Two 3×3 conv blocks (8 and 16 channels, 2×2 max-pool) with global
    /// average pooling and a 64-unit hidden layer.
    pub fn cnn() -> Self {
        ModelConfig {
            conv_blocks: vec![
                ConvBlockSpec::new(8, [3, 3], [2, 2]),
                ConvBlockSpec::new(16, [3, 3], [2, 2]),
            ],
            dense_hidden: 64,
            pooling: Pooling::Global,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.num_classes < 2 {
            v.push(Violation::new("num_classes", "must be at least 2"));
        }
        if self.dense_hidden == 0 {
            v.push(Violation::new("dense_hidden", "must be positive"));
        }
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if b.out_channels == 0 {
                v.push(Violation::new("conv_blocks", format!("block {i} has zero output channels")));
            }
            if b.kernel.iter().any(|&k| k % 2 == 0) {
                v.push(Violation::new("conv_blocks", format!("block {i} kernel must be odd")));
            }
            if b.pool.contains(&0) {
                v.push(Violation::new("conv_blocks", format!("block {i} pool must be positive")));
            }
        }
        for (name, r) in [("audio_input", &self.audio_input), ("accel_input", &self.accel_input)] {
            if r.time_pool == 0 || r.freq_pool == 0 || r.max_bins == Some(0) {
                v.push(Violation::new(name, "pool sizes and max_bins must be positive"));
            }
        }
        v
    }

    pub(crate) fn check(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation {
                what: "model config",
                violations,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.epochs == 0 {
            v.push(Violation::new("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            v.push(Violation::new("batch_size", "must be positive"));
        }
        // Zero is allowed: it is the null-step configuration.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            v.push(Violation::new("learning_rate", "must be finite and non-negative"));
        }
        v
    }
}
