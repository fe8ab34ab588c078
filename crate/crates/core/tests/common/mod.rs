#![allow(dead_code)]

use tactile_core::fabricsim::{synthesize_sweep_with, AmbientNoiseSpec, FabricProfile, SynthConfig, Tone};
use tactile_core::features::{plateau_audio_power, FeatureConfig};
use tactile_core::motion::{plan_trajectory, AttachmentGeometry};
use tactile_core::protocol::{SensorHeadSpec, SweepCondition};

pub const TONE_HZ: f64 = 440.0;
/// Band over which excitation energy loss is measured.
pub const EXCITATION_BAND_HZ: (f64, f64) = (50.0, 2500.0);

#[derive(Debug, Clone, Copy)]
pub struct NoiseCancelling {
    /// Tone-bin power before over after subtraction, in dB.
    pub tone_attenuation_db: f64,
    /// Excitation-band energy of the clean recording over that of the
    /// denoised noisy one, in dB. Positive means energy was lost.
    pub band_loss_db: f64,
    /// Clean tone-bin power below the tone's own contribution, in dB. Small
    /// values mean the texture itself has a spectral line in the tone bin.
    pub tone_over_texture_db: f64,
}

impl NoiseCancelling {
    /// The tone bin is dominated by the tone rather than by texture.
    pub fn tone_bin_is_clear(&self) -> bool {
        self.tone_over_texture_db >= 20.0
    }
}

/// Record the same sweep twice, once with a 440 Hz tone on top of the default
/// ambient and once in silence, and compare spectra.
pub fn noise_cancelling(profile: &FabricProfile, condition: &SweepCondition, tone_amplitude: f64, seed: u64) -> NoiseCancelling {
    let head = SensorHeadSpec::default();
    let traj = plan_trajectory(condition, &AttachmentGeometry::default(), &head, 0.1).unwrap();
    let mut ambient = AmbientNoiseSpec::default();
    ambient.tones.push(Tone {
        freq: TONE_HZ,
        amplitude: tone_amplitude,
    });
    let cfg = SynthConfig::default();
    let noisy = synthesize_sweep_with(profile, &traj, &head, &ambient, seed, &cfg).unwrap();
    let clean = synthesize_sweep_with(profile, &traj, &head, &AmbientNoiseSpec::silent(), seed, &cfg).unwrap();

    let features = FeatureConfig::default();
    let raw_cfg = FeatureConfig {
        denoise: false,
        ..features.clone()
    };
    let raw = plateau_audio_power(&noisy, &raw_cfg).unwrap().mean_spectrum();
    let den = plateau_audio_power(&noisy, &features).unwrap().mean_spectrum();
    let reference = plateau_audio_power(&clean, &raw_cfg).unwrap().mean_spectrum();

    let bin_hz = f64::from(head.audio_sample_rate) / features.frame_length as f64;
    let tone_bin = (TONE_HZ / bin_hz).round() as usize;
    let lo = (EXCITATION_BAND_HZ.0 / bin_hz).ceil() as usize;
    let hi = (EXCITATION_BAND_HZ.1 / bin_hz).floor() as usize;
    // Keep the tone's main lobe out of the broadband measurement.
    let band = (lo..=hi).filter(|b| b.abs_diff(tone_bin) > 3);
    let (mut e_clean, mut e_den) = (0.0, 0.0);
    for b in band {
        e_clean += reference[b];
        e_den += den[b];
    }
    NoiseCancelling {
        tone_attenuation_db: 10.0 * (raw[tone_bin] / den[tone_bin]).log10(),
        band_loss_db: 10.0 * (e_clean / e_den).log10(),
        tone_over_texture_db: 10.0 * ((raw[tone_bin] - reference[tone_bin]).max(0.0) / reference[tone_bin]).log10(),
    }
}
