//! Model-ready features: log power spectrograms, reference-microphone spectral
//! subtraction, per-axis acceleration spectrograms and the motion vector.

use serde::{Deserialize, Serialize};

use crate::dsp::{self, PowerSpectrum};
use crate::error::{Error, Result};
use crate::fabricsim::MultimodalRecording;
use crate::protocol::{ProtocolSpec, SweepCondition, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => dsp::hann(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Audio frame length in samples.
    pub frame_length: usize,
    /// Audio hop in samples.
    pub hop: usize,
    pub accel_frame_length: usize,
    pub accel_hop: usize,
    pub window: Window,
    pub log_floor: f64,
    pub use_audio: bool,
    pub use_accel: bool,
    pub use_motion: bool,
    /// Subtract the reference-microphone spectrum from the contact spectrum.
    pub denoise: bool,
    pub over_subtraction: f64,
    /// Lower bound of the denoised linear power.
    pub spectral_floor: f64,
    /// Append normalized force to the motion vector.
    pub motion_includes_force: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame_length: 1024,
            hop: 256,
            accel_frame_length: 256,
            accel_hop: 64,
            window: Window::Hann,
            log_floor: 1e-10,
            use_audio: true,
            use_accel: true,
            use_motion: true,
            denoise: true,
            over_subtraction: 2.0,
            spectral_floor: 1e-6,
            motion_includes_force: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.frame_length == 0 || self.hop == 0 || self.hop > self.frame_length {
            out.push(Violation::new("hop", "must satisfy 0 < hop <= frame_length"));
        }
        if self.accel_frame_length == 0 || self.accel_hop == 0 || self.accel_hop > self.accel_frame_length {
            out.push(Violation::new(
                "accel_hop",
                "must satisfy 0 < accel_hop <= accel_frame_length",
            ));
        }
        if !(self.log_floor > 0.0) {
            out.push(Violation::new("log_floor", "must be > 0"));
        }
        if !self.use_audio && !self.use_accel {
            out.push(Violation::new(
                "use_audio/use_accel",
                "at least one signal modality must be enabled",
            ));
        }
        if !(self.over_subtraction >= 1.0) {
            out.push(Violation::new("over_subtraction", "must be >= 1"));
        }
        if !(self.spectral_floor >= 0.0) {
            out.push(Violation::new("spectral_floor", "must be >= 0"));
        }
        out
    }

    fn check(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation {
                what: "feature config",
                violations,
            })
        }
    }
}

/// Row-major frames × bins matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.data[frame * self.bins + bin]
    }

    pub fn frame(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Spectrogram {
        Spectrogram {
            frames: self.frames,
            bins: self.bins,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Per-bin mean over frames.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for f in 0..self.frames {
            for (o, v) in out.iter_mut().zip(self.frame(f)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v /= self.frames.max(1) as f64);
        out
    }
}

/// Number of full frames in a signal of `n` samples.
pub fn frame_count(n: usize, frame_length: usize, hop: usize) -> usize {
    if n < frame_length {
        0
    } else {
        1 + (n - frame_length) / hop
    }
}

/// Windowed short-time power spectrogram (linear, one-sided, Parseval
/// normalized: the bins of a frame sum to the windowed frame energy).
pub fn power_spectrogram(signal: &[f64], frame_length: usize, hop: usize, window: Window) -> Result<Spectrogram> {
    if frame_length == 0 || hop == 0 {
        return Err(Error::Input("frame_length and hop must be > 0".into()));
    }
    if signal.len() < frame_length {
        return Err(Error::Input(format!(
            "signal of {} samples is shorter than one {frame_length}-sample frame",
            signal.len()
        )));
    }
    let frames = frame_count(signal.len(), frame_length, hop);
    let mut ps = PowerSpectrum::new(frame_length);
    let bins = ps.bins();
    let w = window.coefficients(frame_length);
    let mut data = vec![0.0; frames * bins];
    for (f, out) in data.chunks_exact_mut(bins).enumerate() {
        ps.compute(&signal[f * hop..f * hop + frame_length], &w, out);
    }
    Ok(Spectrogram { frames, bins, data })
}

/// `ln(power + log_floor)` of the audio-parameter spectrogram.
pub fn stft_log_spectrogram(signal: &[f64], config: &FeatureConfig) -> Result<Spectrogram> {
    let p = power_spectrogram(signal, config.frame_length, config.hop, config.window)?;
    Ok(to_log(&p, config.log_floor))
}

pub fn to_log(linear: &Spectrogram, log_floor: f64) -> Spectrogram {
    linear.map(|v| (v + log_floor).ln())
}

/// Subtract `over_subtraction` times the per-bin time-median of the reference
/// spectrogram from the contact spectrogram, flooring at `spectral_floor`.
pub fn spectral_subtract(
    contact: &Spectrogram,
    reference: &Spectrogram,
    over_subtraction: f64,
    spectral_floor: f64,
) -> Result<Spectrogram> {
    if contact.frames != reference.frames || contact.bins != reference.bins {
        return Err(Error::Input(format!(
            "contact {}x{} and reference {}x{} spectrograms differ in shape",
            contact.frames, contact.bins, reference.frames, reference.bins
        )));
    }
    if !(over_subtraction >= 1.0) {
        return Err(Error::Input(format!("over_subtraction {over_subtraction} must be >= 1")));
    }
    let noise = reference_estimate(reference);
    let mut data = Vec::with_capacity(contact.data.len());
    for f in 0..contact.frames {
        for (c, n) in contact.frame(f).iter().zip(&noise) {
            data.push((c - over_subtraction * n).max(spectral_floor));
        }
    }
    Ok(Spectrogram {
        frames: contact.frames,
        bins: contact.bins,
        data,
    })
}

/// Per-bin median over frames.
pub fn reference_estimate(reference: &Spectrogram) -> Vec<f64> {
    let mut column = vec![0.0; reference.frames];
    (0..reference.bins)
        .map(|b| {
            for (f, c) in column.iter_mut().enumerate() {
                *c = reference.get(f, b);
            }
            dsp::median(&mut column)
        })
        .collect()
}

/// Per-axis log spectrograms of a triaxial acceleration stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelSpectrogram {
    pub axes: [Spectrogram; 3],
}

impl AccelSpectrogram {
    pub fn frames(&self) -> usize {
        self.axes[0].frames
    }

    pub fn bins(&self) -> usize {
        self.axes[0].bins
    }

    /// Value at (frame, bin, axis).
    pub fn get(&self, frame: usize, bin: usize, axis: usize) -> f64 {
        self.axes[axis].get(frame, bin)
    }
}

pub fn accel_features(accel: &[Vec<f64>; 3], config: &FeatureConfig) -> Result<AccelSpectrogram> {
    let axis = |a: &[f64]| -> Result<Spectrogram> {
        let p = power_spectrogram(a, config.accel_frame_length, config.accel_hop, config.window)?;
        Ok(to_log(&p, config.log_floor))
    };
    Ok(AccelSpectrogram {
        axes: [axis(&accel[0])?, axis(&accel[1])?, axis(&accel[2])?],
    })
}

fn normalize(value: f64, range: Option<(f64, f64)>) -> f64 {
    match range {
        Some((lo, hi)) if hi > lo => (value - lo) / (hi - lo),
        // A single-valued range carries no information.
        _ => 0.0,
    }
}

/// One-hot direction, then speed and force scaled to `[0, 1]` over the
/// protocol ranges. Length `direction_count + 2`.
pub fn motion_vector(condition: &SweepCondition, protocol: &ProtocolSpec) -> Result<Vec<f64>> {
    motion_vector_with(condition, protocol, true)
}

pub fn motion_vector_with(
    condition: &SweepCondition,
    protocol: &ProtocolSpec,
    include_force: bool,
) -> Result<Vec<f64>> {
    if !condition.is_consistent_with(protocol) {
        return Err(Error::Input(format!(
            "condition {} is not part of the protocol grid",
            condition.slug()
        )));
    }
    let mut v = vec![0.0; protocol.direction_count];
    v[condition.direction_index] = 1.0;
    v.push(normalize(condition.speed, protocol.speed_range()));
    if include_force {
        v.push(normalize(condition.force, protocol.force_range()));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTensor {
    pub audio_spec: Option<Spectrogram>,
    pub accel_spec: Option<AccelSpectrogram>,
    pub motion_vec: Option<Vec<f64>>,
    /// Clothing class index.
    pub label: usize,
    pub condition: SweepCondition,
}

fn crop(signal: &[f32], window: (f64, f64), rate: u32) -> Vec<f64> {
    let fs = f64::from(rate);
    let a = ((window.0 * fs).round() as usize).min(signal.len());
    let b = ((window.1 * fs).round() as usize).clamp(a, signal.len());
    signal[a..b].iter().map(|&v| f64::from(v)).collect()
}

/// Run the enabled extractors on the plateau segment of a recording.
pub fn assemble_example(
    recording: &MultimodalRecording,
    config: &FeatureConfig,
    protocol: &ProtocolSpec,
    label: usize,
) -> Result<FeatureTensor> {
    config.check()?;
    let window = recording
        .plateau_window()
        .ok_or_else(|| Error::Input("recording has no plateau phase".into()))?;
    let head = &recording.head;

    let audio_spec = if config.use_audio {
        let contact = crop(&recording.audio_contact, window, head.audio_sample_rate);
        let spec = if config.denoise {
            let reference = crop(&recording.audio_reference, window, head.audio_sample_rate);
            let c = power_spectrogram(&contact, config.frame_length, config.hop, config.window)?;
            let r = power_spectrogram(&reference, config.frame_length, config.hop, config.window)?;
            let clean = spectral_subtract(&c, &r, config.over_subtraction, config.spectral_floor)?;
            to_log(&clean, config.log_floor)
        } else {
            stft_log_spectrogram(&contact, config)?
        };
        Some(spec)
    } else {
        None
    };

    let accel_spec = if config.use_accel {
        let axes = [0, 1, 2].map(|i| crop(&recording.accel[i], window, head.accel_sample_rate));
        Some(accel_features(&axes, config)?)
    } else {
        None
    };

    let motion_vec = if config.use_motion {
        Some(motion_vector_with(
            &recording.condition,
            protocol,
            config.motion_includes_force,
        )?)
    } else {
        None
    };

    Ok(FeatureTensor {
        audio_spec,
        accel_spec,
        motion_vec,
        label,
        condition: recording.condition.clone(),
    })
}

/// Linear power spectrogram of the plateau contact audio, reference-subtracted
/// when `config.denoise` is set.
pub fn plateau_audio_power(recording: &MultimodalRecording, config: &FeatureConfig) -> Result<Spectrogram> {
    config.check()?;
    let window = recording
        .plateau_window()
        .ok_or_else(|| Error::Input("recording has no plateau phase".into()))?;
    let rate = recording.head.audio_sample_rate;
    let contact = crop(&recording.audio_contact, window, rate);
    let c = power_spectrogram(&contact, config.frame_length, config.hop, config.window)?;
    if !config.denoise {
        return Ok(c);
    }
    let reference = crop(&recording.audio_reference, window, rate);
    let r = power_spectrogram(&reference, config.frame_length, config.hop, config.window)?;
    spectral_subtract(&c, &r, config.over_subtraction, config.spectral_floor)
}

/// A spectral peak must exceed the median bin by this factor to count.
pub const PEAK_OVER_MEDIAN: f64 = 10.0;

/// Frequency in Hz of the strongest non-DC bin of the time-averaged plateau
/// spectrum, or `None` if it does not stand out from the noise floor.
pub fn dominant_frequency(recording: &MultimodalRecording, config: &FeatureConfig) -> Result<Option<f64>> {
    let spec = plateau_audio_power(recording, config)?;
    let mean = spec.mean_spectrum();
    let Some(peak) = dsp::peak_bin(&mean) else {
        return Ok(None);
    };
    let mut sorted = mean.clone();
    let median = dsp::median(&mut sorted);
    if !(mean[peak] > PEAK_OVER_MEDIAN * median) {
        return Ok(None);
    }
    let fs = f64::from(recording.head.audio_sample_rate);
    Ok(Some(peak as f64 * fs / config.frame_length as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::enumerate_conditions;
    use std::f64::consts::PI;

    #[test]
    fn bin_centred_sine_peaks_in_its_bin() {
        let cfg = FeatureConfig::default();
        let rate = 16_000.0;
        let bin = 40usize;
        let f = bin as f64 * rate / cfg.frame_length as f64;
        let x: Vec<f64> = (0..8000).map(|i| (2.0 * PI * f * i as f64 / rate).sin()).collect();
        let s = stft_log_spectrogram(&x, &cfg).unwrap();
        assert_eq!(s.bins, 513);
        assert_eq!(s.frames, 1 + (8000 - 1024) / 256);
        for fr in 0..s.frames {
            assert_eq!(dsp::peak_bin(s.frame(fr)), Some(bin));
        }
    }

    #[test]
    fn silence_is_log_floor() {
        let cfg = FeatureConfig::default();
        let s = stft_log_spectrogram(&vec![0.0; 2048], &cfg).unwrap();
        assert!(s.data.iter().all(|&v| v == cfg.log_floor.ln()));
    }

    #[test]
    fn short_signal_is_input_error() {
        let cfg = FeatureConfig::default();
        assert!(matches!(
            stft_log_spectrogram(&[0.0; 100], &cfg),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn subtraction_of_identical_stationary_spectra_hits_floor() {
        let row = [1.0, 5.0, 0.25, 3.0];
        let s = Spectrogram {
            frames: 3,
            bins: 4,
            data: row.repeat(3),
        };
        let out = spectral_subtract(&s, &s, 1.0, 1e-10).unwrap();
        assert!(out.data.iter().all(|&v| v == 1e-10));
    }

    #[test]
    fn subtraction_of_zero_reference_is_identity() {
        let s = Spectrogram {
            frames: 2,
            bins: 3,
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let zero = s.map(|_| 0.0);
        assert_eq!(spectral_subtract(&s, &zero, 2.0, 0.0).unwrap(), s);
    }

    #[test]
    fn subtraction_shape_mismatch() {
        let a = Spectrogram { frames: 2, bins: 3, data: vec![0.0; 6] };
        let b = Spectrogram { frames: 3, bins: 2, data: vec![0.0; 6] };
        assert!(matches!(spectral_subtract(&a, &b, 1.0, 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn reference_estimate_is_time_median() {
        let s = Spectrogram {
            frames: 3,
            bins: 2,
            data: vec![1.0, 10.0, 100.0, 20.0, 2.0, 30.0],
        };
        assert_eq!(reference_estimate(&s), vec![2.0, 20.0]);
    }

    #[test]
    fn motion_vector_extremes() {
        let p = ProtocolSpec::default();
        let conds = enumerate_conditions(&p).unwrap();
        let v = motion_vector(&conds[0], &p).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn motion_vector_mid_grid() {
        let p = ProtocolSpec::default();
        let c = enumerate_conditions(&p)
            .unwrap()
            .into_iter()
            .find(|c| c.direction_index == 3 && c.speed_index == 2 && c.force == 1.0)
            .unwrap();
        let v = motion_vector(&c, &p).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[3], 1.0);
        assert_eq!(v.iter().take(8).sum::<f64>(), 1.0);
        assert!((v[8] - 0.5).abs() < 1e-15);
        assert_eq!(v[9], 1.0);
        assert_eq!(motion_vector_with(&c, &p, false).unwrap().len(), 9);
    }

    #[test]
    fn motion_vector_single_speed_is_zero() {
        let p = ProtocolSpec {
            speeds: vec![50.0],
            ..ProtocolSpec::default()
        };
        let c = enumerate_conditions(&p).unwrap().remove(0);
        assert_eq!(motion_vector(&c, &p).unwrap()[8], 0.0);
    }

    #[test]
    fn motion_vector_rejects_foreign_condition() {
        let p = ProtocolSpec::default();
        let mut c = enumerate_conditions(&p).unwrap().remove(0);
        c.speed = 55.0;
        assert!(matches!(motion_vector(&c, &p), Err(Error::Input(_))));
    }

    #[test]
    fn motion_only_config_rejected() {
        let cfg = FeatureConfig {
            use_audio: false,
            use_accel: false,
            ..FeatureConfig::default()
        };
        assert_eq!(cfg.validate().len(), 1);
    }
}
