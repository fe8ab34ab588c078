use std::f64::consts::PI;

use tactile_core::dsp;
use tactile_core::fabricsim::{
    excitation, make_fabric_bank, surface_height, synthesize_sweep_with, AmbientNoiseSpec, DriveVibration,
    FabricBankRanges, FabricProfile, MultimodalRecording, SynthConfig, Tone,
};
use tactile_core::features::{dominant_frequency, FeatureConfig};
use tactile_core::motion::{plan_trajectory, AttachmentGeometry, Phase, Trajectory};
use tactile_core::protocol::{enumerate_conditions, ProtocolSpec, SensorHeadSpec, SweepCondition};

const FS: f64 = 16_000.0;
const FRAME: usize = 1024;
const BIN_HZ: f64 = FS / FRAME as f64;

fn default_condition(direction_index: usize, speed_index: usize, force_index: usize) -> SweepCondition {
    enumerate_conditions(&ProtocolSpec::default())
        .unwrap()
        .into_iter()
        .find(|c| c.direction_index == direction_index && c.speed_index == speed_index && c.force_index == force_index)
        .unwrap()
}

fn with_speed(mut c: SweepCondition, speed: f64) -> SweepCondition {
    c.speed = speed;
    c
}

fn plan(c: &SweepCondition) -> Trajectory {
    plan_trajectory(c, &AttachmentGeometry::default(), &SensorHeadSpec::default(), 0.1).unwrap()
}

fn quiet(profile: &FabricProfile, traj: &Trajectory, seed: u64) -> MultimodalRecording {
    synthesize_sweep_with(
        profile,
        traj,
        &SensorHeadSpec::default(),
        &AmbientNoiseSpec::silent(),
        seed,
        &SynthConfig::noise_free(),
    )
    .unwrap()
}

fn plateau_audio(rec: &MultimodalRecording) -> Vec<f64> {
    let (t0, t1) = rec.plateau_window().unwrap();
    let a = (t0 * FS).round() as usize;
    let b = (t1 * FS).round() as usize;
    rec.audio_contact[a..b].iter().map(|&v| f64::from(v)).collect()
}

/// Independent peak finder: direct DFT magnitude of the whole plateau,
/// scanned on a 1 Hz grid.
fn dft_peak_hz(x: &[f64], max_hz: f64) -> f64 {
    let mut best = (0.0, 0.0);
    let mut f = 5.0;
    while f <= max_hz {
        let w = 2.0 * PI * f / FS;
        let (mut re, mut im) = (0.0, 0.0);
        for (n, &v) in x.iter().enumerate() {
            re += v * (w * n as f64).cos();
            im -= v * (w * n as f64).sin();
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (f, p);
        }
        f += 1.0;
    }
    best.0
}

fn no_denoise() -> FeatureConfig {
    FeatureConfig {
        denoise: false,
        ..FeatureConfig::default()
    }
}

#[test]
fn grating_at_100_mm_per_s_sings_at_100_hz() {
    let profile = FabricProfile::grating("g", 1.0, 1.0, 5.0);
    let c = with_speed(default_condition(0, 4, 1), 100.0);
    let rec = quiet(&profile, &plan(&c), 1);
    let f = dominant_frequency(&rec, &no_denoise()).unwrap().unwrap();
    assert!((f - 100.0).abs() <= BIN_HZ, "{f}");
    let oracle = dft_peak_hz(&plateau_audio(&rec), 400.0);
    assert!((oracle - 100.0).abs() <= 1.0, "{oracle}");
}

fn fit_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn peak_tracks_speed_over_wavelength_in_both_principal_directions() {
    let (warp, weft) = (0.1, 0.15);
    let profile = FabricProfile::grating("aniso", warp, weft, 5.0);
    let protocol = ProtocolSpec::default();
    let mut by_direction = Vec::new();
    for (dir, lambda) in [(0, warp), (2, weft)] {
        let mut peaks = Vec::new();
        for (si, &v) in protocol.speeds.iter().enumerate() {
            let rec = quiet(&profile, &plan(&default_condition(dir, si, 1)), 3);
            let f = dominant_frequency(&rec, &no_denoise()).unwrap().unwrap();
            assert!((f - v / lambda).abs() <= BIN_HZ, "dir {dir} v {v}: {f} vs {}", v / lambda);
            peaks.push(f);
        }
        let r2 = fit_r2(&protocol.speeds, &peaks);
        assert!(r2 >= 0.99, "R² {r2}");
        by_direction.push(peaks);
    }
    // Anisotropy: the two directions differ by the wavelength ratio.
    for (a, b) in by_direction[0].iter().zip(&by_direction[1]) {
        assert!((a * warp / weft - b).abs() <= BIN_HZ, "{a} {b}");
    }
}

#[test]
fn reference_channel_is_independent_of_the_excitation() {
    let profile = make_fabric_bank(1, 4).remove(0);
    let traj = plan(&default_condition(1, 2, 0));
    let cfg = SynthConfig::default();
    let rec = synthesize_sweep_with(
        &profile,
        &traj,
        &SensorHeadSpec::default(),
        &AmbientNoiseSpec::default(),
        5,
        &cfg,
    )
    .unwrap();
    let e = excitation(&profile, &traj, 16_000);
    let reference: Vec<f64> = rec.audio_reference.iter().map(|&v| f64::from(v)).collect();
    let r = dsp::correlation(&reference, &e);
    assert!(r.abs() < 0.05, "{r}");
}

#[test]
fn doubling_force_doubles_excitation_rms() {
    let mut profile = FabricProfile::grating("g", 0.2, 0.3, 4.0);
    profile.force_exponent = 1.0;
    let mut low = default_condition(3, 2, 0);
    let mut high = low.clone();
    low.force = 0.5;
    high.force = 1.0;
    let a = quiet(&profile, &plan(&low), 9);
    let b = quiet(&profile, &plan(&high), 9);
    let ratio = dsp::rms(&plateau_audio(&b)) / dsp::rms(&plateau_audio(&a));
    assert!((ratio - 2.0).abs() <= 0.1, "{ratio}");
}

#[test]
fn zero_velocity_leaves_only_noise() {
    let profile = make_fabric_bank(1, 2).remove(0);
    let mut traj = plan(&default_condition(0, 0, 0));
    let rest = traj.samples[0].position;
    for s in &mut traj.samples {
        s.velocity = [0.0, 0.0];
        s.position = rest;
        s.phase = Phase::Plateau;
    }
    let rec = synthesize_sweep_with(
        &profile,
        &traj,
        &SensorHeadSpec::default(),
        &AmbientNoiseSpec::default(),
        4,
        &SynthConfig::default(),
    )
    .unwrap();
    assert_eq!(rec.audio_contact, rec.audio_reference);
    let noise = SynthConfig::default().sensor_noise.accel;
    for axis in &rec.accel {
        let x: Vec<f64> = axis.iter().map(|&v| f64::from(v)).collect();
        let r = dsp::rms(&x);
        assert!((r - noise).abs() < 0.1 * noise, "{r}");
    }
}

#[test]
fn synthesis_is_deterministic_and_streams_align() {
    let profile = make_fabric_bank(3, 1).remove(2);
    let traj = plan(&default_condition(5, 3, 1));
    let head = SensorHeadSpec::default();
    let run = |seed| {
        synthesize_sweep_with(&profile, &traj, &head, &AmbientNoiseSpec::default(), seed, &SynthConfig::default())
            .unwrap()
    };
    let a = run(77);
    assert_eq!(a, run(77));
    assert_ne!(a.audio_contact, run(78).audio_contact);
    assert!(a.validate().is_empty());
    let t = traj.duration();
    assert!((a.audio_contact.len() as f64 - t * 16_000.0).abs() <= 1.0);
    assert!((a.accel[0].len() as f64 - t * 1_000.0).abs() <= 1.0);
    assert!((a.force.len() as f64 - t * 100.0).abs() <= 1.0);
}

#[test]
fn sampled_height_profile_has_the_warp_period() {
    let mut profile = FabricProfile::grating("g", 0.37, 1.0, 3.0);
    profile.weft_amplitude = 0.0;
    let step = 0.01;
    let n = 4096;
    let line: Vec<f64> = (0..n).map(|i| surface_height(&profile, [i as f64 * step, 0.3], 0)).collect();
    let power = dsp::power_spectrum(&line);
    let k = dsp::peak_bin(&power).unwrap();
    // Parabolic interpolation around the peak bin.
    let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
    let frac = 0.5 * (a - c) / (a - 2.0 * b + c);
    let cycles_per_mm = (k as f64 + frac) / (n as f64 * step);
    let period = 1.0 / cycles_per_mm;
    assert!((period - 0.37).abs() < 0.01 * 0.37, "{period}");
}

#[test]
fn default_bank_pairs_each_weave_with_its_coarser_twin() {
    let bank = make_fabric_bank(23, 0);
    assert_eq!(bank.len(), 23);
    assert_eq!(bank, make_fabric_bank(23, 0));
    let other = make_fabric_bank(23, 1);
    assert!(serde_json::to_string(&bank).unwrap() != serde_json::to_string(&other).unwrap());
    let scales = FabricBankRanges::default().thread_scales;
    assert_eq!(scales, vec![1.0, 2.0]);
    for pair in bank.chunks(2).filter(|p| p.len() == 2) {
        let (fine, coarse) = (&pair[0], &pair[1]);
        assert_eq!(coarse.warp_wavelength, 2.0 * fine.warp_wavelength);
        assert_eq!(coarse.weft_wavelength, 2.0 * fine.weft_wavelength);
        assert_eq!(coarse.roughness_corner_freq, fine.roughness_corner_freq / 2.0);
        assert_eq!(coarse.warp_amplitude, fine.warp_amplitude);
        assert_eq!(coarse.tip_resonance_freq, fine.tip_resonance_freq);
        assert_eq!(coarse.audio_coupling, fine.audio_coupling);
    }
    let head = SensorHeadSpec::default();
    assert!(bank.iter().all(|p| p.validate(&head).is_empty()));
}

#[test]
fn coarse_twin_at_double_speed_excites_the_same_signal() {
    let ranges = FabricBankRanges {
        roughness_noise_level: (0.0, 0.0),
        ..FabricBankRanges::default()
    };
    let bank = tactile_core::fabricsim::make_fabric_bank_with(2, 3, &ranges);
    let slow = plan(&with_speed(default_condition(1, 0, 1), 40.0));
    let fast = plan(&with_speed(default_condition(1, 0, 1), 80.0));
    let fine = plateau_audio(&quiet(&bank[0], &slow, 0));
    let coarse = plateau_audio(&quiet(&bank[1], &fast, 0));
    let f_fine = dft_peak_hz(&fine, 4000.0);
    let f_coarse = dft_peak_hz(&coarse, 4000.0);
    assert!((f_fine - f_coarse).abs() <= 2.0, "{f_fine} {f_coarse}");
    let ratio = dsp::rms(&coarse) / dsp::rms(&fine);
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn sessions_touch_different_patches() {
    let profile = make_fabric_bank(1, 5).remove(0);
    let traj = plan(&default_condition(0, 1, 0));
    let cfg = SynthConfig {
        sensor_noise: SynthConfig::noise_free().sensor_noise,
        contact_gain_jitter: 0.0,
        ..SynthConfig::default()
    };
    let head = SensorHeadSpec::default();
    let silent = AmbientNoiseSpec::silent();
    let a = synthesize_sweep_with(&profile, &traj, &head, &silent, 1, &cfg).unwrap();
    let b = synthesize_sweep_with(&profile, &traj, &head, &silent, 2, &cfg).unwrap();
    assert_ne!(a.audio_contact, b.audio_contact);
    let fixed = SynthConfig { patch_jitter: 0.0, ..cfg };
    let c = synthesize_sweep_with(&profile, &traj, &head, &silent, 1, &fixed).unwrap();
    let d = synthesize_sweep_with(&profile, &traj, &head, &silent, 2, &fixed).unwrap();
    assert_eq!(c.audio_contact, d.audio_contact);
}

#[test]
fn drive_vibration_appears_in_the_accelerometer_at_speed_over_pitch() {
    let flat = FabricProfile::grating("flat", 1.0, 1.0, 0.0);
    let cfg = SynthConfig {
        drive_vibration: DriveVibration {
            pitch: 1.0,
            amplitude: 0.05,
        },
        ..SynthConfig::noise_free()
    };
    let c = with_speed(default_condition(2, 0, 0), 60.0);
    let rec = synthesize_sweep_with(&flat, &plan(&c), &SensorHeadSpec::default(), &AmbientNoiseSpec::silent(), 0, &cfg)
        .unwrap();
    let (t0, t1) = rec.plateau_window().unwrap();
    let z: Vec<f64> = rec.accel[2][(t0 * 1000.0) as usize..(t1 * 1000.0) as usize]
        .iter()
        .map(|&v| f64::from(v))
        .collect();
    let power = dsp::power_spectrum(&z);
    let k = dsp::peak_bin(&power).unwrap();
    let hz = k as f64 * 1000.0 / z.len() as f64;
    assert!((hz - 60.0).abs() <= 1000.0 / z.len() as f64, "{hz}");
    // The contact microphone does not hear it.
    assert!(rec.audio_contact.iter().all(|&v| v == 0.0));
}

#[test]
fn ambient_tone_reaches_both_microphones_identically() {
    let profile = FabricProfile::grating("flat", 1.0, 1.0, 0.0);
    let ambient = AmbientNoiseSpec {
        broadband_level: 0.0,
        tones: vec![Tone {
            freq: 440.0,
            amplitude: 0.1,
        }],
        fixed_realization: false,
    };
    let rec = synthesize_sweep_with(
        &profile,
        &plan(&default_condition(0, 0, 0)),
        &SensorHeadSpec::default(),
        &ambient,
        3,
        &SynthConfig::noise_free(),
    )
    .unwrap();
    assert_eq!(rec.audio_contact, rec.audio_reference);
}
