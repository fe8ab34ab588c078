//! Recording protocol grid and the domain types shared across the pipeline.
//!
//! Units follow a fixed convention: positions and lengths in mm, speeds in
//! mm/s, forces in N, angles in radians, sample rates in Hz. Direction index
//! 0 points along the rig +x axis and indices increase counter-clockwise.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single broken rule, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// The direction × speed × force grid swept over every garment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSpec {
    pub direction_count: usize,
    /// Plateau speeds in mm/s, strictly increasing.
    pub speeds: Vec<f64>,
    /// Normal-force setpoints in N, strictly increasing.
    pub forces: Vec<f64>,
    /// Stroke length in mm.
    pub stroke_length: f64,
    pub repetitions_per_condition: usize,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        ProtocolSpec {
            direction_count: 8,
            speeds: vec![20.0, 40.0, 60.0, 80.0, 100.0],
            forces: vec![0.5, 1.0],
            stroke_length: 100.0,
            repetitions_per_condition: 1,
        }
    }
}

impl ProtocolSpec {
    /// Number of conditions the grid expands to.
    pub fn condition_count(&self) -> usize {
        self.direction_count * self.speeds.len() * self.forces.len() * self.repetitions_per_condition
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_protocol(self)
    }

    pub fn speed_range(&self) -> Option<(f64, f64)> {
        Some((*self.speeds.first()?, *self.speeds.last()?))
    }

    pub fn force_range(&self) -> Option<(f64, f64)> {
        Some((*self.forces.first()?, *self.forces.last()?))
    }
}

fn check_increasing_positive(field: &str, values: &[f64], out: &mut Vec<Violation>) {
    if values.is_empty() {
        out.push(Violation::new(field, "must not be empty"));
        return;
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        out.push(Violation::new(field, "all values must be finite and > 0"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        out.push(Violation::new(field, "values must be strictly increasing"));
    }
}

/// Check every [`ProtocolSpec`] invariant. Empty iff the protocol is valid.
pub fn validate_protocol(protocol: &ProtocolSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if protocol.direction_count == 0 {
        out.push(Violation::new("direction_count", "must be >= 1"));
    }
    check_increasing_positive("speeds", &protocol.speeds, &mut out);
    check_increasing_positive("forces", &protocol.forces, &mut out);
    if !(protocol.stroke_length.is_finite() && protocol.stroke_length > 0.0) {
        out.push(Violation::new("stroke_length", "must be finite and > 0"));
    }
    if protocol.repetitions_per_condition == 0 {
        out.push(Violation::new("repetitions_per_condition", "must be >= 1"));
    }
    out
}

/// One cell of the protocol grid with its physical values resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCondition {
    pub direction_index: usize,
    pub direction_count: usize,
    pub direction_angle: f64,
    pub speed_index: usize,
    pub speed: f64,
    pub force_index: usize,
    pub force: f64,
    pub repetition: usize,
    pub stroke_length: f64,
}

impl SweepCondition {
    /// Stable directory name: `d<dir>_s<speedidx>_f<forceidx>_r<rep>`.
    pub fn slug(&self) -> String {
        format!(
            "d{}_s{}_f{}_r{}",
            self.direction_index, self.speed_index, self.force_index, self.repetition
        )
    }

    /// Unit vector of the sweep direction in the rig frame.
    pub fn direction_unit(&self) -> [f64; 2] {
        direction_unit(self.direction_angle)
    }

    /// Position of this condition in lexicographic grid order.
    pub fn grid_index(&self, protocol: &ProtocolSpec) -> usize {
        let reps = protocol.repetitions_per_condition;
        let forces = protocol.forces.len();
        let speeds = protocol.speeds.len();
        ((self.direction_index * speeds + self.speed_index) * forces + self.force_index) * reps
            + self.repetition
    }

    /// True when the indices and resolved values agree with `protocol`.
    pub fn is_consistent_with(&self, protocol: &ProtocolSpec) -> bool {
        self.direction_count == protocol.direction_count
            && self.direction_index < protocol.direction_count
            && protocol.speeds.get(self.speed_index) == Some(&self.speed)
            && protocol.forces.get(self.force_index) == Some(&self.force)
            && self.repetition < protocol.repetitions_per_condition
            && self.direction_angle == direction_angle(self.direction_index, self.direction_count)
    }
}

/// Angle of direction `index` out of `count` uniformly spaced directions.
pub fn direction_angle(index: usize, count: usize) -> f64 {
    index as f64 * (2.0 * PI / count as f64)
}

/// `(cos a, sin a)` with round-off residue below 1e-12 snapped to zero, so the
/// principal directions are exact axis vectors.
pub fn direction_unit(angle: f64) -> [f64; 2] {
    let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    [snap(angle.cos()), snap(angle.sin())]
}

/// Expand the protocol into its ordered condition list.
///
/// Order is lexicographic over (direction, speed, force, repetition).
pub fn enumerate_conditions(protocol: &ProtocolSpec) -> Result<Vec<SweepCondition>> {
    let violations = validate_protocol(protocol);
    if !violations.is_empty() {
        return Err(Error::Validation {
            what: "protocol",
            violations,
        });
    }
    let mut out = Vec::with_capacity(protocol.condition_count());
    for direction_index in 0..protocol.direction_count {
        let direction_angle = direction_angle(direction_index, protocol.direction_count);
        for (speed_index, &speed) in protocol.speeds.iter().enumerate() {
            for (force_index, &force) in protocol.forces.iter().enumerate() {
                for repetition in 0..protocol.repetitions_per_condition {
                    out.push(SweepCondition {
                        direction_index,
                        direction_count: protocol.direction_count,
                        direction_angle,
                        speed_index,
                        speed,
                        force_index,
                        force,
                        repetition,
                        stroke_length: protocol.stroke_length,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialClass {
    Cotton,
    Polyester,
    Wool,
    Other(String),
}

impl fmt::Display for MaterialClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaterialClass::Cotton => f.write_str("cotton"),
            MaterialClass::Polyester => f.write_str("polyester"),
            MaterialClass::Wool => f.write_str("wool"),
            MaterialClass::Other(label) => write!(f, "other({label})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClothingItem {
    pub id: String,
    pub display_name: String,
    pub material_class: MaterialClass,
    pub weave: String,
    /// mm
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<f64>,
}

/// Check a list of clothing items: unique ids and positive thickness.
pub fn validate_items(items: &[ClothingItem]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for item in items {
        if item.id.is_empty() {
            out.push(Violation::new("clothing_items.id", "must not be empty"));
        }
        if !seen.insert(item.id.as_str()) {
            out.push(Violation::new(
                "clothing_items.id",
                format!("duplicate id `{}`", item.id),
            ));
        }
        if let Some(t) = item.thickness {
            if !(t > 0.0) {
                out.push(Violation::new(
                    "clothing_items.thickness",
                    format!("item `{}` thickness must be > 0", item.id),
                ));
            }
        }
    }
    out
}

/// Sensor head: contact + reference microphone, triaxial accelerometer and a
/// load cell on a rubber fingertip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorHeadSpec {
    pub audio_sample_rate: u32,
    pub accel_sample_rate: u32,
    pub force_sample_rate: u32,
    pub control_tick_rate: u32,
    pub tip_material: String,
}

impl SensorHeadSpec {
    /// Contact and reference microphones.
    pub const MICROPHONE_CHANNELS: usize = 2;
    pub const ACCEL_AXES: usize = 3;

    /// Check rates, optionally against the highest frequency that will be
    /// synthesized into the audio stream.
    pub fn validate(&self, highest_audio_freq: Option<f64>) -> Vec<Violation> {
        let mut out = Vec::new();
        for (field, rate) in [
            ("audio_sample_rate", self.audio_sample_rate),
            ("accel_sample_rate", self.accel_sample_rate),
            ("force_sample_rate", self.force_sample_rate),
            ("control_tick_rate", self.control_tick_rate),
        ] {
            if rate == 0 {
                out.push(Violation::new(field, "must be > 0"));
            }
        }
        if let Some(f) = highest_audio_freq {
            if f64::from(self.audio_sample_rate) < 2.0 * f {
                out.push(Violation::new(
                    "audio_sample_rate",
                    format!("must be >= 2 x highest synthesized frequency ({f} Hz)"),
                ));
            }
        }
        out
    }

    pub fn audio_nyquist(&self) -> f64 {
        f64::from(self.audio_sample_rate) / 2.0
    }
}

impl Default for SensorHeadSpec {
    fn default() -> Self {
        SensorHeadSpec {
            audio_sample_rate: 16_000,
            accel_sample_rate: 1_000,
            force_sample_rate: 100,
            control_tick_rate: 1_000,
            tip_material: "urethane rubber".to_string(),
        }
    }
}
