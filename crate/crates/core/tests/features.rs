mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tactile_core::fabricsim::{make_fabric_bank, synthesize_sweep, AmbientNoiseSpec, MultimodalRecording};
use tactile_core::features::{
    accel_features, assemble_example, frame_count, motion_vector, power_spectrogram, FeatureConfig, Window,
};
use tactile_core::motion::{plan_trajectory, AttachmentGeometry};
use tactile_core::protocol::{enumerate_conditions, ProtocolSpec, SensorHeadSpec, SweepCondition};
use tactile_core::Error;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// One-sided power of a windowed frame by direct summation.
fn dft_power(frame: &[f64], window: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, (&x, &w)) in frame.iter().zip(window).enumerate() {
                let phi = 2.0 * PI * (k * i) as f64 / n as f64;
                re += x * w * phi.cos();
                im -= x * w * phi.sin();
            }
            let p = (re * re + im * im) / n as f64;
            if k == 0 || k == n / 2 {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

#[test]
fn frame_power_matches_direct_dft_and_parseval() {
    let x = noise(1024 + 3 * 256, 1);
    let s = power_spectrogram(&x, 1024, 256, Window::Hann).unwrap();
    assert_eq!(s.frames, 4);
    let w: Vec<f64> = (0..1024).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / 1024.0).cos()).collect();
    for f in 0..s.frames {
        let frame = &x[f * 256..f * 256 + 1024];
        let oracle = dft_power(frame, &w);
        for (a, b) in s.frame(f).iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        let energy: f64 = frame.iter().zip(&w).map(|(x, w)| (x * w).powi(2)).sum();
        let total: f64 = s.frame(f).iter().sum();
        assert!((total - energy).abs() <= 0.01 * energy, "{total} vs {energy}");
    }
}

#[test]
fn odd_frame_length_parseval() {
    let x = noise(999, 2);
    let s = power_spectrogram(&x, 333, 333, Window::Hann).unwrap();
    let w = Window::Hann.coefficients(333);
    for f in 0..s.frames {
        let frame = &x[f * 333..(f + 1) * 333];
        let energy: f64 = frame.iter().zip(&w).map(|(x, w)| (x * w).powi(2)).sum();
        let total: f64 = s.frame(f).iter().sum();
        assert!((total - energy).abs() <= 0.01 * energy);
    }
}

#[test]
fn frame_count_formula() {
    for (n, l, h, want) in [(1023, 1024, 256, 0), (1024, 1024, 256, 1), (1279, 1024, 256, 1), (1280, 1024, 256, 2)] {
        assert_eq!(frame_count(n, l, h), want);
    }
    let s = power_spectrogram(&noise(16_000, 3), 1024, 256, Window::Hann).unwrap();
    assert_eq!(s.frames, 1 + (16_000 - 1024) / 256);
    assert_eq!(s.bins, 513);
}

#[test]
fn accel_energy_stays_on_its_axis() {
    let cfg = FeatureConfig::default();
    let x: Vec<f64> = (0..4000).map(|i| (2.0 * PI * 150.0 * i as f64 / 2000.0).sin()).collect();
    let a = accel_features(&[vec![0.0; 4000], x, vec![0.0; 4000]], &cfg).unwrap();
    let floor = cfg.log_floor.ln();
    assert_eq!(a.bins(), cfg.accel_frame_length / 2 + 1);
    for f in 0..a.frames() {
        for b in 0..a.bins() {
            assert_eq!(a.get(f, b, 0), floor);
            assert_eq!(a.get(f, b, 2), floor);
        }
        // 150 Hz at 2 kHz with 256-point frames sits at bin 19.2.
        let peak = (0..a.bins()).max_by(|&i, &j| a.get(f, i, 1).total_cmp(&a.get(f, j, 1))).unwrap();
        assert_eq!(peak, 19);
    }
}

fn recording(c: &SweepCondition, seed: u64) -> MultimodalRecording {
    let profile = &make_fabric_bank(1, 4)[0];
    let head = SensorHeadSpec::default();
    let traj = plan_trajectory(c, &AttachmentGeometry::default(), &head, 0.1).unwrap();
    synthesize_sweep(profile, &traj, &head, &AmbientNoiseSpec::default(), seed).unwrap()
}

#[test]
fn plateau_frames_depend_on_speed_not_direction() {
    let protocol = ProtocolSpec::default();
    let cfg = FeatureConfig::default();
    let conditions = enumerate_conditions(&protocol).unwrap();
    for speed_index in 0..protocol.speeds.len() {
        let shapes: Vec<_> = conditions
            .iter()
            .filter(|c| c.speed_index == speed_index && c.force_index == 0)
            .map(|c| {
                let t = assemble_example(&recording(c, 0), &cfg, &protocol, 0).unwrap();
                let a = t.audio_spec.unwrap();
                let x = t.accel_spec.unwrap();
                (a.frames, a.bins, x.frames(), x.bins())
            })
            .collect();
        assert_eq!(shapes.len(), 8);
        assert!(shapes.iter().all(|s| *s == shapes[0]), "{shapes:?}");
        // Plateau of a 100 mm stroke with 0.1 s ramps lasts 100/v - 0.1 s.
        let v = protocol.speeds[speed_index];
        let samples = ((100.0 / v - 0.1) * 16_000.0).round() as usize;
        assert!(shapes[0].0.abs_diff(frame_count(samples, 1024, 256)) <= 1);
    }
}

#[test]
fn feature_flags_select_modalities() {
    let protocol = ProtocolSpec::default();
    let c = &enumerate_conditions(&protocol).unwrap()[5];
    let rec = recording(c, 1);
    let full = assemble_example(&rec, &FeatureConfig::default(), &protocol, 7).unwrap();
    assert!(full.audio_spec.is_some() && full.accel_spec.is_some());
    assert_eq!(full.motion_vec.as_deref(), Some(&motion_vector(c, &protocol).unwrap()[..]));
    assert_eq!(full.label, 7);
    assert_eq!(&full.condition, c);

    let audio_only = FeatureConfig {
        use_accel: false,
        use_motion: false,
        ..FeatureConfig::default()
    };
    let t = assemble_example(&rec, &audio_only, &protocol, 0).unwrap();
    assert!(t.audio_spec.is_some() && t.accel_spec.is_none() && t.motion_vec.is_none());
    assert_eq!(t.audio_spec, full.audio_spec);

    let no_force = FeatureConfig {
        motion_includes_force: false,
        ..FeatureConfig::default()
    };
    let t = assemble_example(&rec, &no_force, &protocol, 0).unwrap();
    assert_eq!(t.motion_vec.unwrap().len(), 9);

    let raw = FeatureConfig {
        denoise: false,
        ..FeatureConfig::default()
    };
    assert_ne!(assemble_example(&rec, &raw, &protocol, 0).unwrap().audio_spec, full.audio_spec);

    let nothing = FeatureConfig {
        use_audio: false,
        use_accel: false,
        ..FeatureConfig::default()
    };
    assert!(matches!(
        assemble_example(&rec, &nothing, &protocol, 0),
        Err(Error::Validation { .. })
    ));
}

#[test]
fn motion_vector_encodes_each_condition_uniquely() {
    let protocol = ProtocolSpec::default();
    let conditions = enumerate_conditions(&protocol).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for c in &conditions {
        let v = motion_vector(c, &protocol).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[c.direction_index], 1.0);
        assert_eq!(v[..8].iter().sum::<f64>(), 1.0);
        assert!(v[8..].iter().all(|x| (0.0..=1.0).contains(x)));
        seen.insert(v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
    // Repetitions share a vector.
    assert_eq!(seen.len(), 8 * 5 * 2);
}

#[test]
fn reference_subtraction_removes_a_440_hz_tone() {
    let bank = make_fabric_bank(23, 0);
    let conditions = enumerate_conditions(&ProtocolSpec::default()).unwrap();
    let mut checked = 0;
    for (i, p) in bank.iter().enumerate().step_by(4) {
        for c in conditions.iter().step_by(13) {
            let r = common::noise_cancelling(p, c, 0.05, i as u64);
            assert!(r.band_loss_db < 3.0, "{} {}: {r:?}", p.id, c.slug());
            if r.tone_bin_is_clear() {
                assert!(r.tone_attenuation_db >= 20.0, "{} {}: {r:?}", p.id, c.slug());
                checked += 1;
            }
        }
    }
    assert!(checked >= 30);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_scales_with_amplitude_squared(seed in any::<u64>(), a in 0.01f64..100.0) {
        let x = noise(2048, seed);
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        let px = power_spectrogram(&x, 512, 128, Window::Hann).unwrap();
        let py = power_spectrogram(&y, 512, 128, Window::Hann).unwrap();
        for (p, q) in px.data.iter().zip(&py.data) {
            prop_assert!((q - a * a * p).abs() <= 1e-9 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn frame_count_matches_spectrogram(n in 64usize..5000, l in 16usize..64, h in 1usize..16) {
        let h = h.min(l);
        let s = power_spectrogram(&vec![0.0; n], l, h, Window::Hann).unwrap();
        prop_assert_eq!(s.frames, frame_count(n, l, h));
        prop_assert!((s.frames - 1) * h + l <= n);
        prop_assert!(s.frames * h + l > n);
    }
}
