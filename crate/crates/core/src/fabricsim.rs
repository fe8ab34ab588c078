//! Synthetic fabric oracle.
//!
//! A fabric is a height field over the garment plane: a warp grating along x,
//! a weft grating along y and band-limited isotropic roughness. Sliding the
//! tip over it excites `e(t) = (F / 1 N)^force_exponent * d/dt h(p(t))`
//! (µm/s). The contact microphone hears `e` through a second-order tip
//! resonance plus ambient noise; the reference microphone hears the same
//! ambient realization only. The accelerometer sees `e` low-passed to its own
//! rate, projected on the sweep direction in-plane and scaled by the fabric's
//! coupling on the normal axis, plus white sensor noise.
//!
//! All synthesis constants here are modelling choices, not measurements.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dsp::{self, Biquad};
use crate::error::{Error, Result};
use crate::motion::{Phase, Trajectory};
use crate::protocol::{ClothingItem, MaterialClass, SensorHeadSpec, SweepCondition, Violation};
use crate::seed;

/// Number of random plane waves in the roughness field.
const ROUGHNESS_COMPONENTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabricProfile {
    pub id: String,
    /// mm, grating period along x
    pub warp_wavelength: f64,
    /// mm, grating period along y
    pub weft_wavelength: f64,
    /// µm
    pub warp_amplitude: f64,
    /// µm
    pub weft_amplitude: f64,
    /// µm RMS
    pub roughness_noise_level: f64,
    /// cycles/mm
    pub roughness_corner_freq: f64,
    pub force_exponent: f64,
    /// Hz
    pub tip_resonance_freq: f64,
    pub tip_resonance_q: f64,
    /// (m/s²) per (µm/s) of excitation on the normal axis
    pub accel_coupling: f64,
    /// audio amplitude per (µm/s) of excitation
    pub audio_coupling: f64,
    /// Seeds the roughness field; part of the fabric, not of a sweep.
    pub texture_seed: u64,
}

impl FabricProfile {
    /// A noise-free grating with unit couplings and a high tip resonance.
    pub fn grating(id: &str, warp_wavelength: f64, weft_wavelength: f64, amplitude: f64) -> Self {
        FabricProfile {
            id: id.to_string(),
            warp_wavelength,
            weft_wavelength,
            warp_amplitude: amplitude,
            weft_amplitude: amplitude,
            roughness_noise_level: 0.0,
            roughness_corner_freq: 1.0,
            force_exponent: 1.0,
            tip_resonance_freq: 1200.0,
            tip_resonance_q: 5.0,
            accel_coupling: 1e-4,
            audio_coupling: 1e-5,
            texture_seed: 0,
        }
    }

    pub fn validate(&self, head: &SensorHeadSpec) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &str, rule: &str| {
            if !ok {
                out.push(Violation::new(field, rule));
            }
        };
        check(self.warp_wavelength > 0.0, "warp_wavelength", "must be > 0");
        check(self.weft_wavelength > 0.0, "weft_wavelength", "must be > 0");
        check(self.warp_amplitude >= 0.0, "warp_amplitude", "must be >= 0");
        check(self.weft_amplitude >= 0.0, "weft_amplitude", "must be >= 0");
        check(
            self.roughness_noise_level >= 0.0,
            "roughness_noise_level",
            "must be >= 0",
        );
        check(
            self.roughness_corner_freq > 0.0,
            "roughness_corner_freq",
            "must be > 0",
        );
        check(
            (0.5..=1.5).contains(&self.force_exponent),
            "force_exponent",
            "must lie in [0.5, 1.5]",
        );
        check(
            self.tip_resonance_freq > 0.0 && self.tip_resonance_freq < head.audio_nyquist(),
            "tip_resonance_freq",
            "must lie in (0, audio Nyquist)",
        );
        check(self.tip_resonance_q > 0.0, "tip_resonance_q", "must be > 0");
        check(self.accel_coupling >= 0.0, "accel_coupling", "must be >= 0");
        check(self.audio_coupling >= 0.0, "audio_coupling", "must be >= 0");
        out
    }

    /// Catalogue entry for this fabric. Material and weave tags are derived
    /// deterministically from the bank index and grating geometry.
    pub fn clothing_item(&self, index: usize) -> ClothingItem {
        let material_class = match index % 4 {
            0 => MaterialClass::Cotton,
            1 => MaterialClass::Polyester,
            2 => MaterialClass::Wool,
            _ => MaterialClass::Other("blend".to_string()),
        };
        let ratio = self.warp_wavelength / self.weft_wavelength;
        let weave = if (0.8..1.25).contains(&ratio) {
            "plain"
        } else if ratio < 1.0 {
            "twill"
        } else {
            "rib"
        };
        ClothingItem {
            id: self.id.clone(),
            display_name: format!("synthetic {} #{:02}", material_class, index),
            material_class,
            weave: weave.to_string(),
            thickness: Some(0.3 + 0.05 * (self.warp_amplitude + self.weft_amplitude)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PlaneWave {
    /// cycles/mm
    k: [f64; 2],
    phase: f64,
    /// µm
    amplitude: f64,
}

/// Evaluable height field of one fabric.
#[derive(Debug, Clone)]
pub struct SurfaceTexture {
    warp: (f64, f64),
    weft: (f64, f64),
    roughness: Vec<PlaneWave>,
}

impl SurfaceTexture {
    pub fn new(profile: &FabricProfile, noise_field_seed: u64) -> Self {
        let mut roughness = Vec::new();
        if profile.roughness_noise_level > 0.0 {
            let mut rng = seed::rng(noise_field_seed);
            // Equal-power plane waves with wave vectors uniform over the disc
            // |k| <= corner: flat, isotropic, band-limited.
            let amplitude = profile.roughness_noise_level * (2.0 / ROUGHNESS_COMPONENTS as f64).sqrt();
            for _ in 0..ROUGHNESS_COMPONENTS {
                let r = profile.roughness_corner_freq * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                roughness.push(PlaneWave {
                    k: [r * theta.cos(), r * theta.sin()],
                    phase: 2.0 * PI * rng.random::<f64>(),
                    amplitude,
                });
            }
        }
        SurfaceTexture {
            warp: (profile.warp_amplitude, 2.0 * PI / profile.warp_wavelength),
            weft: (profile.weft_amplitude, 2.0 * PI / profile.weft_wavelength),
            roughness,
        }
    }

    /// Height in µm at `p` (mm).
    pub fn height(&self, p: [f64; 2]) -> f64 {
        let mut h = self.warp.0 * (self.warp.1 * p[0]).sin() + self.weft.0 * (self.weft.1 * p[1]).sin();
        for w in &self.roughness {
            h += w.amplitude * (2.0 * PI * (w.k[0] * p[0] + w.k[1] * p[1]) + w.phase).sin();
        }
        h
    }

    /// Spatial gradient in µm/mm at `p`.
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let gx = self.warp.0 * self.warp.1 * (self.warp.1 * p[0]).cos();
        let gy = self.weft.0 * self.weft.1 * (self.weft.1 * p[1]).cos();
        let mut g = [gx, gy];
        for w in &self.roughness {
            let c = w.amplitude * 2.0 * PI * (2.0 * PI * (w.k[0] * p[0] + w.k[1] * p[1]) + w.phase).cos();
            g[0] += c * w.k[0];
            g[1] += c * w.k[1];
        }
        g
    }
}

/// Height of the fabric surface in µm at `position` (mm).
pub fn surface_height(profile: &FabricProfile, position: [f64; 2], noise_field_seed: u64) -> f64 {
    SurfaceTexture::new(profile, noise_field_seed).height(position)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    /// Hz
    pub freq: f64,
    pub amplitude: f64,
}

/// Room noise heard identically by both microphones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmbientNoiseSpec {
    /// White Gaussian RMS level.
    pub broadband_level: f64,
    pub tones: Vec<Tone>,
    /// Use the same ambient realization for every sweep instead of deriving
    /// it from the sweep seed.
    pub fixed_realization: bool,
}

impl Default for AmbientNoiseSpec {
    fn default() -> Self {
        AmbientNoiseSpec {
            broadband_level: 0.005,
            tones: vec![Tone {
                freq: 120.0,
                amplitude: 0.01,
            }],
            fixed_realization: false,
        }
    }
}

impl AmbientNoiseSpec {
    pub fn silent() -> Self {
        AmbientNoiseSpec {
            broadband_level: 0.0,
            tones: Vec::new(),
            fixed_realization: false,
        }
    }

    pub fn validate(&self, head: &SensorHeadSpec) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.broadband_level >= 0.0) {
            out.push(Violation::new("ambient.broadband_level", "must be >= 0"));
        }
        for t in &self.tones {
            if !(t.amplitude >= 0.0) {
                out.push(Violation::new("ambient.tones.amplitude", "must be >= 0"));
            }
            if !(t.freq > 0.0 && t.freq < head.audio_nyquist()) {
                out.push(Violation::new(
                    "ambient.tones.freq",
                    format!("{} Hz must lie in (0, audio Nyquist)", t.freq),
                ));
            }
        }
        out
    }
}

/// Periodic vibration of the motion stage, felt by the accelerometer on all
/// three axes at `|v| / pitch` Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveVibration {
    /// mm of travel per vibration cycle
    pub pitch: f64,
    /// m/s²
    pub amplitude: f64,
}

impl Default for DriveVibration {
    fn default() -> Self {
        DriveVibration {
            pitch: 1.0,
            amplitude: 0.05,
        }
    }
}

/// White Gaussian sensor noise, standard deviation per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorNoise {
    /// m/s² per axis
    pub accel: f64,
    /// N
    pub force: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        SensorNoise {
            accel: 0.1,
            force: 0.01,
        }
    }
}

/// Synthesis knobs that are not properties of a fabric or of the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sensor_noise: SensorNoise,
    pub drive_vibration: DriveVibration,
    /// In-plane accelerometer gain relative to the normal axis.
    pub tangential_gain: f64,
    /// Side length in pixels of the rendered surface patch; 0 disables it.
    pub image_size: usize,
    /// mm per pixel of the rendered patch.
    pub image_pixel_pitch: f64,
    /// Each session touches a different patch of the garment: the texture is
    /// shifted by a per-session offset uniform in `[0, patch_jitter)²` mm.
    pub patch_jitter: f64,
    /// Standard deviation of a per-session log-normal contact gain applied to
    /// the excitation (garment fit and tension vary between sessions).
    pub contact_gain_jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sensor_noise: SensorNoise::default(),
            drive_vibration: DriveVibration::default(),
            tangential_gain: 0.5,
            image_size: 32,
            image_pixel_pitch: 0.05,
            patch_jitter: 20.0,
            contact_gain_jitter: 0.3,
        }
    }
}

impl SynthConfig {
    /// No sensor noise and no image; for exact physics checks.
    pub fn noise_free() -> Self {
        SynthConfig {
            sensor_noise: SensorNoise {
                accel: 0.0,
                force: 0.0,
            },
            drive_vibration: DriveVibration {
                amplitude: 0.0,
                ..DriveVibration::default()
            },
            image_size: 0,
            patch_jitter: 0.0,
            contact_gain_jitter: 0.0,
            ..SynthConfig::default()
        }
    }
}

/// Motion trace sample as stored alongside the sensor streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f32,
    pub position: [f32; 2],
    pub velocity: [f32; 2],
    pub force_setpoint: f32,
    pub phase: Phase,
}

impl TraceSample {
    /// Floats per sample in the flat stream encoding.
    pub const WIDTH: usize = 7;
}

/// Convert a planned trajectory to its stored trace.
pub fn trace_of(traj: &Trajectory) -> Vec<TraceSample> {
    traj.samples
        .iter()
        .map(|s| TraceSample {
            t: s.t as f32,
            position: [s.position[0] as f32, s.position[1] as f32],
            velocity: [s.velocity[0] as f32, s.velocity[1] as f32],
            force_setpoint: s.force_setpoint as f32,
            phase: s.phase,
        })
        .collect()
}

/// One sweep's time-aligned sensor streams and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodalRecording {
    pub head: SensorHeadSpec,
    pub audio_contact: Vec<f32>,
    pub audio_reference: Vec<f32>,
    /// x, y, z axes, each at the accelerometer rate.
    pub accel: [Vec<f32>; 3],
    pub force: Vec<f32>,
    pub motion_trace: Vec<TraceSample>,
    pub condition: SweepCondition,
    pub clothing_id: String,
    pub surface_image: Option<Vec<u8>>,
    pub rng_seed: u64,
}

/// Expected stream length for a window of `duration` seconds.
pub fn stream_len(duration: f64, rate: u32) -> usize {
    (duration * f64::from(rate)).round() as usize
}

impl MultimodalRecording {
    /// Duration of the recording window in seconds (from the motion trace).
    pub fn duration(&self) -> f64 {
        self.motion_trace.len() as f64 / f64::from(self.head.control_tick_rate)
    }

    /// Plateau window `[t0, t1)` in seconds.
    pub fn plateau_window(&self) -> Option<(f64, f64)> {
        let tick = 1.0 / f64::from(self.head.control_tick_rate);
        let first = self.motion_trace.iter().position(|s| s.phase == Phase::Plateau)?;
        let last = self.motion_trace.iter().rposition(|s| s.phase == Phase::Plateau)?;
        Some((first as f64 * tick, (last + 1) as f64 * tick))
    }

    /// Check that every stream covers the same window within one sample.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let t = self.duration();
        let h = &self.head;
        let mut check = |field: &str, len: usize, rate: u32| {
            let want = stream_len(t, rate);
            if len.abs_diff(want) > 1 {
                out.push(Violation::new(
                    field,
                    format!("{len} samples, expected {want} for {t} s at {rate} Hz"),
                ));
            }
        };
        check("audio_contact", self.audio_contact.len(), h.audio_sample_rate);
        check("audio_reference", self.audio_reference.len(), h.audio_sample_rate);
        for (axis, a) in ["accel.x", "accel.y", "accel.z"].iter().zip(&self.accel) {
            check(axis, a.len(), h.accel_sample_rate);
        }
        check("force", self.force.len(), h.force_sample_rate);
        if self.clothing_id.is_empty() {
            out.push(Violation::new("clothing_id", "must not be empty"));
        }
        out
    }
}

/// Synthesize with the default [`SynthConfig`].
pub fn synthesize_sweep(
    profile: &FabricProfile,
    traj: &Trajectory,
    head: &SensorHeadSpec,
    ambient: &AmbientNoiseSpec,
    seed: u64,
) -> Result<MultimodalRecording> {
    synthesize_sweep_with(profile, traj, head, ambient, seed, &SynthConfig::default())
}

/// Noise-free excitation `e(t)` at the audio rate, in µm/s.
pub fn excitation(profile: &FabricProfile, traj: &Trajectory, audio_rate: u32) -> Vec<f64> {
    excitation_at(profile, traj, audio_rate, [0.0, 0.0])
}

/// [`excitation`] over the texture shifted by `offset` mm.
pub fn excitation_at(profile: &FabricProfile, traj: &Trajectory, audio_rate: u32, offset: [f64; 2]) -> Vec<f64> {
    let texture = SurfaceTexture::new(profile, profile.texture_seed);
    let s = &traj.samples;
    let dt = traj.tick();
    let n = stream_len(traj.duration(), audio_rate);
    let fs = f64::from(audio_rate);
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let k = ((t / dt).floor() as usize).min(s.len() - 1);
            let tau = t - k as f64 * dt;
            let cur = &s[k];
            let next_v = s.get(k + 1).map_or(cur.velocity, |x| x.velocity);
            // Velocity is linear between ticks; position is its integral.
            let dv = [(next_v[0] - cur.velocity[0]) / dt, (next_v[1] - cur.velocity[1]) / dt];
            let v = [cur.velocity[0] + dv[0] * tau, cur.velocity[1] + dv[1] * tau];
            let p = [
                cur.position[0] + cur.velocity[0] * tau + 0.5 * dv[0] * tau * tau,
                cur.position[1] + cur.velocity[1] * tau + 0.5 * dv[1] * tau * tau,
            ];
            if v == [0.0, 0.0] || cur.force_setpoint <= 0.0 {
                return 0.0;
            }
            let g = texture.gradient([p[0] + offset[0], p[1] + offset[1]]);
            cur.force_setpoint.powf(profile.force_exponent) * (g[0] * v[0] + g[1] * v[1])
        })
        .collect()
}

pub fn synthesize_sweep_with(
    profile: &FabricProfile,
    traj: &Trajectory,
    head: &SensorHeadSpec,
    ambient: &AmbientNoiseSpec,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<MultimodalRecording> {
    let mut problems = head.validate(None);
    problems.extend(profile.validate(head));
    problems.extend(ambient.validate(head));
    if !problems.is_empty() {
        return Err(Error::Validation {
            what: "synthesis inputs",
            violations: problems,
        });
    }
    if traj.tick_rate != head.control_tick_rate {
        return Err(Error::Config(format!(
            "trajectory tick rate {} Hz does not match head control tick rate {} Hz",
            traj.tick_rate, head.control_tick_rate
        )));
    }
    if head.audio_sample_rate % head.accel_sample_rate != 0 {
        return Err(Error::Config(format!(
            "audio rate {} Hz must be an integer multiple of accel rate {} Hz",
            head.audio_sample_rate, head.accel_sample_rate
        )));
    }
    if traj.samples.is_empty() {
        return Err(Error::Config("trajectory has no samples".into()));
    }
    let dt = traj.tick();
    if traj
        .samples
        .iter()
        .enumerate()
        .any(|(k, s)| (s.t - k as f64 * dt).abs() > 1e-9)
    {
        return Err(Error::Config(
            "trajectory samples are not on the control-tick grid".into(),
        ));
    }

    let duration = traj.duration();
    let fs = f64::from(head.audio_sample_rate);
    let mut session_rng = seed::rng(seed::derive_str(seed, "session"));
    let offset = [
        cfg.patch_jitter * session_rng.random::<f64>(),
        cfg.patch_jitter * session_rng.random::<f64>(),
    ];
    let gain = (cfg.contact_gain_jitter * gaussian(1.0).sample(&mut session_rng)).exp();
    let mut e = excitation_at(profile, traj, head.audio_sample_rate, offset);
    if gain != 1.0 {
        e.iter_mut().for_each(|x| *x *= gain);
    }
    let n_audio = e.len();

    let ambient_seed = if ambient.fixed_realization {
        seed::derive_str(0, "ambient")
    } else {
        seed::derive_str(seed, "ambient")
    };
    let ambient_signal = render_ambient(ambient, n_audio, fs, ambient_seed);

    let mut tip = Biquad::resonant_lowpass(profile.tip_resonance_freq, profile.tip_resonance_q, fs);
    let audio_contact: Vec<f32> = e
        .iter()
        .zip(&ambient_signal)
        .map(|(&x, &a)| (profile.audio_coupling * tip.process(x) + a) as f32)
        .collect();
    let audio_reference: Vec<f32> = ambient_signal.iter().map(|&a| a as f32).collect();

    let factor = (head.audio_sample_rate / head.accel_sample_rate) as usize;
    let n_accel = stream_len(duration, head.accel_sample_rate);
    let e_low = dsp::decimate(&e, factor, n_accel);
    let u = traj.condition.direction_unit();
    let gains = [
        cfg.tangential_gain * u[0],
        cfg.tangential_gain * u[1],
        1.0,
    ];
    let drive = drive_signal(&cfg.drive_vibration, traj, n_accel, f64::from(head.accel_sample_rate));
    let mut accel_rng = seed::rng(seed::derive_str(seed, "accel"));
    let accel_noise = gaussian(cfg.sensor_noise.accel);
    let accel = gains.map(|g| {
        e_low
            .iter()
            .zip(&drive)
            .map(|(&x, &d)| (profile.accel_coupling * g * x + d + accel_noise.sample(&mut accel_rng)) as f32)
            .collect::<Vec<f32>>()
    });

    let n_force = stream_len(duration, head.force_sample_rate);
    let mut force_rng = seed::rng(seed::derive_str(seed, "force"));
    let force_noise = gaussian(cfg.sensor_noise.force);
    let force_rate = f64::from(head.force_sample_rate);
    let force = (0..n_force)
        .map(|j| {
            let t = j as f64 / force_rate;
            let k = ((t / dt).floor() as usize).min(traj.samples.len() - 1);
            (traj.samples[k].force_setpoint + force_noise.sample(&mut force_rng)) as f32
        })
        .collect();

    let surface_image = (cfg.image_size > 0).then(|| {
        let center = traj
            .samples
            .get(traj.samples.len() / 2)
            .map_or([0.0, 0.0], |s| s.position);
        render_surface_patch(profile, center, cfg.image_size, cfg.image_pixel_pitch)
    });

    Ok(MultimodalRecording {
        head: head.clone(),
        audio_contact,
        audio_reference,
        accel,
        force,
        motion_trace: trace_of(traj),
        condition: traj.condition.clone(),
        clothing_id: profile.id.clone(),
        surface_image,
        rng_seed: seed,
    })
}

fn drive_signal(spec: &DriveVibration, traj: &Trajectory, n: usize, fs: f64) -> Vec<f64> {
    if spec.amplitude == 0.0 || !(spec.pitch > 0.0) {
        return vec![0.0; n];
    }
    let dt = traj.tick();
    let mut phase = 0.0_f64;
    (0..n)
        .map(|j| {
            let k = ((j as f64 / fs / dt).floor() as usize).min(traj.samples.len() - 1);
            let v = traj.samples[k].velocity;
            let out = spec.amplitude * phase.sin();
            phase += 2.0 * PI * v[0].hypot(v[1]) / spec.pitch / fs;
            out
        })
        .collect()
}

/// Zero-mean normal sampler; a zero level yields exact zeros.
struct Gaussian(Option<Normal<f64>>);

impl Gaussian {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.0.as_ref().map_or(0.0, |d| d.sample(rng))
    }
}

fn gaussian(std_dev: f64) -> Gaussian {
    Gaussian((std_dev > 0.0).then(|| Normal::new(0.0, std_dev).expect("finite std dev")))
}

fn render_ambient(spec: &AmbientNoiseSpec, n: usize, fs: f64, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let phases: Vec<f64> = spec
        .tones
        .iter()
        .map(|_| 2.0 * PI * rng.random::<f64>())
        .collect();
    let broadband = gaussian(spec.broadband_level);
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let tones: f64 = spec
                .tones
                .iter()
                .zip(&phases)
                .map(|(tone, ph)| tone.amplitude * (2.0 * PI * tone.freq * t + ph).sin())
                .sum();
            tones + broadband.sample(&mut rng)
        })
        .collect()
}

/// Row-major grayscale patch of the height field centred on `center`.
pub fn render_surface_patch(
    profile: &FabricProfile,
    center: [f64; 2],
    size: usize,
    pitch: f64,
) -> Vec<u8> {
    let texture = SurfaceTexture::new(profile, profile.texture_seed);
    let span = profile.warp_amplitude + profile.weft_amplitude + 3.0 * profile.roughness_noise_level;
    let half = size as f64 / 2.0;
    let mut out = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let p = [
                center[0] + (col as f64 - half) * pitch,
                center[1] + (row as f64 - half) * pitch,
            ];
            let h = texture.height(p);
            let v = if span > 0.0 { 0.5 + 0.5 * h / span } else { 0.5 };
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

/// Parameter ranges a fabric bank is drawn from.
///
/// Wavelengths are log-uniform, everything else uniform. Each draw is a weave
/// that enters the bank once per entry of `thread_scales`: the same
/// construction stretched to a coarser thread count, `h_s(p) = h(p/s)`, sharing
/// material properties (tip resonance, couplings, force response).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FabricBankRanges {
    pub wavelength: (f64, f64),
    pub amplitude: (f64, f64),
    pub roughness_noise_level: (f64, f64),
    pub roughness_corner_freq: (f64, f64),
    pub force_exponent: (f64, f64),
    pub tip_resonance_freq: (f64, f64),
    pub tip_resonance_q: (f64, f64),
    pub accel_coupling: (f64, f64),
    pub audio_coupling: (f64, f64),
    pub thread_scales: Vec<f64>,
}

impl Default for FabricBankRanges {
    fn default() -> Self {
        FabricBankRanges {
            wavelength: (0.03, 0.09),
            amplitude: (2.0, 6.0),
            roughness_noise_level: (0.2, 0.5),
            roughness_corner_freq: (1.0, 6.0),
            force_exponent: (0.8, 1.2),
            tip_resonance_freq: (1200.0, 1600.0),
            tip_resonance_q: (3.0, 5.0),
            accel_coupling: (4e-5, 6e-5),
            audio_coupling: (5e-6, 8e-6),
            thread_scales: vec![1.0, 2.0],
        }
    }
}

/// Default bank size: one synthetic profile per garment in the reference set.
pub const DEFAULT_BANK_SIZE: usize = 23;

/// Draw `count` pairwise-distinct fabric profiles with the default ranges.
pub fn make_fabric_bank(count: usize, seed: u64) -> Vec<FabricProfile> {
    make_fabric_bank_with(count, seed, &FabricBankRanges::default())
}

pub fn make_fabric_bank_with(count: usize, seed: u64, ranges: &FabricBankRanges) -> Vec<FabricProfile> {
    let mut rng = seed::rng(seed::derive_str(seed, "fabric-bank"));
    let mut bank: Vec<FabricProfile> = Vec::with_capacity(count);
    let uniform = |rng: &mut rand_chacha::ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let log_uniform = |rng: &mut rand_chacha::ChaCha8Rng, (lo, hi): (f64, f64)| {
        (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
    };
    let scales: &[f64] = if ranges.thread_scales.is_empty() { &[1.0] } else { &ranges.thread_scales };
    while bank.len() < count {
        let weave = FabricProfile {
            id: String::new(),
            warp_wavelength: log_uniform(&mut rng, ranges.wavelength),
            weft_wavelength: log_uniform(&mut rng, ranges.wavelength),
            warp_amplitude: uniform(&mut rng, ranges.amplitude),
            weft_amplitude: uniform(&mut rng, ranges.amplitude),
            roughness_noise_level: uniform(&mut rng, ranges.roughness_noise_level),
            roughness_corner_freq: uniform(&mut rng, ranges.roughness_corner_freq),
            force_exponent: uniform(&mut rng, ranges.force_exponent),
            tip_resonance_freq: uniform(&mut rng, ranges.tip_resonance_freq),
            tip_resonance_q: uniform(&mut rng, ranges.tip_resonance_q),
            accel_coupling: uniform(&mut rng, ranges.accel_coupling),
            audio_coupling: uniform(&mut rng, ranges.audio_coupling),
            texture_seed: rng.random(),
        };
        let same_params = |a: &FabricProfile, b: &FabricProfile| {
            FabricProfile { id: String::new(), ..a.clone() } == FabricProfile { id: String::new(), ..b.clone() }
        };
        for &s in scales {
            if bank.len() == count {
                break;
            }
            let profile = FabricProfile {
                id: format!("fabric-{:02}", bank.len()),
                warp_wavelength: weave.warp_wavelength * s,
                weft_wavelength: weave.weft_wavelength * s,
                roughness_corner_freq: weave.roughness_corner_freq / s,
                ..weave.clone()
            };
            if !bank.iter().any(|b| same_params(b, &profile)) {
                bank.push(profile);
            }
        }
    }
    bank
}
