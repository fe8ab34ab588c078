//! Conversion of feature tensors into compact model inputs.

use serde::{Deserialize, Serialize};

use crate::features::{FeatureTensor, Spectrogram};

/// Fixed average-pooling applied to a spectrogram before the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputReduction {
    /// Frames averaged per input row (ceil mode).
    pub time_pool: usize,
    /// Bins averaged per input column (ceil mode).
    pub freq_pool: usize,
    /// Keep only the lowest `max_bins` bins before pooling.
    pub max_bins: Option<usize>,
}

impl Default for InputReduction {
    fn default() -> Self {
        InputReduction {
            time_pool: 1,
            freq_pool: 1,
            max_bins: None,
        }
    }
}

impl InputReduction {
    pub fn output_bins(&self, bins: usize) -> usize {
        self.max_bins.map_or(bins, |m| m.min(bins)).div_ceil(self.freq_pool.max(1))
    }

    pub fn output_frames(&self, frames: usize) -> usize {
        frames.div_ceil(self.time_pool.max(1))
    }

    fn reduce_into(&self, s: &Spectrogram, out: &mut Vec<f64>) {
        let bins = self.max_bins.map_or(s.bins, |m| m.min(s.bins));
        let (tp, fp) = (self.time_pool.max(1), self.freq_pool.max(1));
        let (ot, of) = (s.frames.div_ceil(tp), bins.div_ceil(fp));
        for t in 0..ot {
            let rows = t * tp..((t + 1) * tp).min(s.frames);
            for f in 0..of {
                let cols = f * fp..((f + 1) * fp).min(bins);
                let mut acc = 0.0;
                for r in rows.clone() {
                    acc += s.frame(r)[cols.clone()].iter().sum::<f64>();
                }
                out.push(acc / (rows.len() * cols.len()) as f64);
            }
        }
    }
}

/// Multi-channel time × frequency grid with a frame mask: frames at or beyond
/// `valid` are padding and never reach the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub channels: usize,
    pub frames: usize,
    pub bins: usize,
    pub valid: usize,
    /// `[channel][frame][bin]`
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(channels: usize, frames: usize, bins: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), channels * frames * bins, "grid data length");
        Grid {
            channels,
            frames,
            bins,
            valid: frames,
            data,
        }
    }

    /// Build from per-channel spectrograms of equal shape.
    pub fn from_spectrograms(specs: &[&Spectrogram], reduction: &InputReduction) -> Self {
        let frames = reduction.output_frames(specs[0].frames);
        let bins = reduction.output_bins(specs[0].bins);
        let mut data = Vec::with_capacity(specs.len() * frames * bins);
        for s in specs {
            reduction.reduce_into(s, &mut data);
        }
        Grid::new(specs.len(), frames, bins, data)
    }

    /// Zero-pad to `frames` total frames, keeping the mask.
    pub fn padded_to(&self, frames: usize) -> Grid {
        if frames <= self.frames {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.channels * frames * self.bins);
        for c in 0..self.channels {
            let s = c * self.frames * self.bins;
            data.extend_from_slice(&self.data[s..s + self.frames * self.bins]);
            data.extend(std::iter::repeat_n(0.0, (frames - self.frames) * self.bins));
        }
        Grid {
            channels: self.channels,
            frames,
            bins: self.bins,
            valid: self.valid,
            data,
        }
    }

    /// The valid frames only, `[channel][frame][bin]`.
    pub fn valid_data(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.channels * self.valid * self.bins);
        for c in 0..self.channels {
            let s = c * self.frames * self.bins;
            out.extend_from_slice(&self.data[s..s + self.valid * self.bins]);
        }
        out
    }
}

/// One classifier example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInput {
    pub audio: Option<Grid>,
    pub accel: Option<Grid>,
    pub motion: Option<Vec<f64>>,
    pub label: usize,
    /// Stable identity used to order training data independently of input
    /// order.
    pub key: String,
}

impl ModelInput {
    /// Reduce a feature tensor with the model's input reductions.
    pub fn from_features(
        ft: &FeatureTensor,
        audio: &InputReduction,
        accel: &InputReduction,
        key: impl Into<String>,
    ) -> Self {
        ModelInput {
            audio: ft
                .audio_spec
                .as_ref()
                .map(|s| Grid::from_spectrograms(&[s], audio)),
            accel: ft.accel_spec.as_ref().map(|a| {
                Grid::from_spectrograms(&[&a.axes[0], &a.axes[1], &a.axes[2]], accel)
            }),
            motion: ft.motion_vec.clone(),
            label: ft.label,
            key: key.into(),
        }
    }

    /// Drop the modalities that are switched off.
    pub fn restricted(&self, audio: bool, accel: bool, motion: bool) -> ModelInput {
        ModelInput {
            audio: if audio { self.audio.clone() } else { None },
            accel: if accel { self.accel.clone() } else { None },
            motion: if motion { self.motion.clone() } else { None },
            label: self.label,
            key: self.key.clone(),
        }
    }
}

/// Pad every grid in the batch to the batch's longest frame count.
pub fn pad_batch(batch: &[ModelInput]) -> Vec<ModelInput> {
    let max = |sel: fn(&ModelInput) -> Option<&Grid>| batch.iter().filter_map(sel).map(|g| g.frames).max().unwrap_or(0);
    let (ma, mc) = (max(|m| m.audio.as_ref()), max(|m| m.accel.as_ref()));
    batch
        .iter()
        .map(|m| ModelInput {
            audio: m.audio.as_ref().map(|g| g.padded_to(ma)),
            accel: m.accel.as_ref().map(|g| g.padded_to(mc)),
            ..m.clone()
        })
        .collect()
}
