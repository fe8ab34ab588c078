//! Sweep trajectory planning.
//!
//! A sweep is a straight stroke centred on the attachment area with a
//! trapezoidal speed profile: approach (at rest, no force), linear ramp up,
//! constant-speed plateau, symmetric ramp down, retract. Samples are emitted
//! on the control-tick grid and every phase boundary falls on a tick, so the
//! velocity is piecewise linear between samples and the emitted positions are
//! its exact integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{SensorHeadSpec, SweepCondition};

/// Clearance required beyond the stroke length inside the attachment.
pub const STROKE_MARGIN_MM: f64 = 10.0;

/// Rectangular garment attachment area in the rig frame (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttachmentGeometry {
    pub width: f64,
    pub height: f64,
    pub center: [f64; 2],
}

impl Default for AttachmentGeometry {
    fn default() -> Self {
        AttachmentGeometry {
            width: 160.0,
            height: 160.0,
            center: [80.0, 80.0],
        }
    }
}

impl AttachmentGeometry {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        const EPS: f64 = 1e-9;
        (p[0] - self.center[0]).abs() <= self.width / 2.0 + EPS
            && (p[1] - self.center[1]).abs() <= self.height / 2.0 + EPS
    }

    /// Whether a stroke of this length fits in every direction with margin.
    pub fn admits_stroke(&self, stroke_length: f64) -> bool {
        self.width > 0.0
            && self.height > 0.0
            && self.width.min(self.height) >= stroke_length + STROKE_MARGIN_MM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Approach,
    RampUp,
    Plateau,
    RampDown,
    Retract,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Approach,
        Phase::RampUp,
        Phase::Plateau,
        Phase::RampDown,
        Phase::Retract,
    ];

    /// Tip is pressed into the garment.
    pub fn is_contact(self) -> bool {
        matches!(self, Phase::RampUp | Phase::Plateau | Phase::RampDown)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Phase> {
        Phase::ALL.get(usize::from(code)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// s
    pub t: f64,
    /// mm
    pub position: [f64; 2],
    /// mm/s
    pub velocity: [f64; 2],
    /// N
    pub force_setpoint: f64,
    pub phase: Phase,
}

impl TrajectorySample {
    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub condition: SweepCondition,
    pub tick_rate: u32,
}

impl Trajectory {
    pub fn tick(&self) -> f64 {
        1.0 / f64::from(self.tick_rate)
    }

    /// Length of the recording window covered by the samples, in seconds.
    /// Each sample holds for one tick.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.tick()
    }

    /// Sample index range `[start, end)` of a phase, if present.
    pub fn phase_range(&self, phase: Phase) -> Option<(usize, usize)> {
        let start = self.samples.iter().position(|s| s.phase == phase)?;
        let len = self.samples[start..]
            .iter()
            .take_while(|s| s.phase == phase)
            .count();
        Some((start, start + len))
    }

    /// Time window `[t0, t1)` of the plateau phase.
    pub fn plateau_window(&self) -> Option<(f64, f64)> {
        let (a, b) = self.phase_range(Phase::Plateau)?;
        Some((self.samples[a].t, self.samples[b - 1].t + self.tick()))
    }

    /// Net displacement from the first contact sample to the first sample
    /// after contact ends.
    pub fn contact_displacement(&self) -> [f64; 2] {
        let first = self.samples.iter().position(|s| s.phase.is_contact());
        let last = self.samples.iter().rposition(|s| s.phase.is_contact());
        match (first, last) {
            (Some(a), Some(b)) => {
                let end = self.samples.get(b + 1).unwrap_or(&self.samples[b]);
                [
                    end.position[0] - self.samples[a].position[0],
                    end.position[1] - self.samples[a].position[1],
                ]
            }
            _ => [0.0, 0.0],
        }
    }
}

/// Timing of the non-ramp phases and the ramp itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// s
    pub ramp_time: f64,
    /// s, tip settles onto the garment at rest
    pub approach_time: f64,
    /// s, tip lifts at rest
    pub retract_time: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            ramp_time: 0.1,
            approach_time: 0.05,
            retract_time: 0.05,
        }
    }
}

/// Plan a sweep with the default approach/retract timing.
pub fn plan_trajectory(
    condition: &SweepCondition,
    geometry: &AttachmentGeometry,
    head: &SensorHeadSpec,
    ramp_time: f64,
) -> Result<Trajectory> {
    let cfg = PlannerConfig {
        ramp_time,
        ..PlannerConfig::default()
    };
    plan_trajectory_with(condition, geometry, head, &cfg)
}

fn ticks(duration: f64, rate: f64) -> usize {
    (duration * rate).round().max(0.0) as usize
}

pub fn plan_trajectory_with(
    condition: &SweepCondition,
    geometry: &AttachmentGeometry,
    head: &SensorHeadSpec,
    cfg: &PlannerConfig,
) -> Result<Trajectory> {
    let v = condition.speed;
    let stroke = condition.stroke_length;
    let ramp_time = cfg.ramp_time;
    if !(ramp_time > 0.0 && ramp_time.is_finite()) {
        return Err(Error::Config(format!("ramp_time must be > 0, got {ramp_time}")));
    }
    if !(v > 0.0 && stroke > 0.0) {
        return Err(Error::Config(format!(
            "speed and stroke must be > 0 (speed {v}, stroke {stroke})"
        )));
    }
    if head.control_tick_rate == 0 {
        return Err(Error::Config("control_tick_rate must be > 0".into()));
    }
    if !(geometry.width > 0.0 && geometry.height > 0.0) {
        return Err(Error::Geometry(format!(
            "attachment {} x {} mm must have positive size",
            geometry.width, geometry.height
        )));
    }
    if v * ramp_time >= stroke / 2.0 {
        return Err(Error::InfeasibleProfile {
            speed: v,
            ramp_time,
            stroke_length: stroke,
        });
    }

    let rate = f64::from(head.control_tick_rate);
    let dt = 1.0 / rate;
    let n_ramp = ticks(ramp_time, rate).max(1);
    let n_approach = ticks(cfg.approach_time, rate).max(1);
    let n_retract = ticks(cfg.retract_time, rate).max(1);
    let t_ramp = n_ramp as f64 * dt;
    let d_ramp = 0.5 * v * t_ramp;
    let n_plateau = ticks((stroke - 2.0 * d_ramp) / v, rate);
    if n_plateau == 0 {
        return Err(Error::InfeasibleProfile {
            speed: v,
            ramp_time,
            stroke_length: stroke,
        });
    }
    let t_plateau = n_plateau as f64 * dt;
    let travel = 2.0 * d_ramp + v * t_plateau;

    let u = condition.direction_unit();
    let start = [
        geometry.center[0] - 0.5 * travel * u[0],
        geometry.center[1] - 0.5 * travel * u[1],
    ];
    let end = [
        geometry.center[0] + 0.5 * travel * u[0],
        geometry.center[1] + 0.5 * travel * u[1],
    ];
    if !geometry.contains(start) || !geometry.contains(end) {
        return Err(Error::Geometry(format!(
            "a {stroke} mm stroke at {:.4} rad does not fit a {} x {} mm attachment",
            condition.direction_angle, geometry.width, geometry.height
        )));
    }

    let accel = v / t_ramp;
    let total = n_approach + 2 * n_ramp + n_plateau + n_retract;
    let mut samples = Vec::with_capacity(total);
    let b_up = n_approach;
    let b_plateau = b_up + n_ramp;
    let b_down = b_plateau + n_plateau;
    let b_retract = b_down + n_ramp;
    for k in 0..total {
        let (phase, speed, dist) = if k < b_up {
            (Phase::Approach, 0.0, 0.0)
        } else if k < b_plateau {
            let tau = (k - b_up) as f64 * dt;
            (Phase::RampUp, accel * tau, 0.5 * accel * tau * tau)
        } else if k < b_down {
            let tau = (k - b_plateau) as f64 * dt;
            (Phase::Plateau, v, d_ramp + v * tau)
        } else if k < b_retract {
            let tau = (k - b_down) as f64 * dt;
            (
                Phase::RampDown,
                v - accel * tau,
                d_ramp + v * t_plateau + v * tau - 0.5 * accel * tau * tau,
            )
        } else {
            (Phase::Retract, 0.0, travel)
        };
        let force_setpoint = if phase.is_contact() {
            condition.force
        } else {
            0.0
        };
        samples.push(TrajectorySample {
            t: k as f64 * dt,
            position: [start[0] + dist * u[0], start[1] + dist * u[1]],
            velocity: [speed * u[0], speed * u[1]],
            force_setpoint,
            phase,
        });
    }

    Ok(Trajectory {
        samples,
        condition: condition.clone(),
        tick_rate: head.control_tick_rate,
    })
}

/// A broken trajectory invariant at the first offending sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryViolation {
    pub index: usize,
    pub rule: TrajectoryRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryRule {
    TickSpacing,
    PhaseOrder,
    EmptyPlateau,
    PlateauSpeed,
    PlateauDirection,
    ForceSetpoint,
    OutOfBounds,
}

/// Relative plateau speed tolerance.
pub const PLATEAU_SPEED_TOLERANCE: f64 = 0.01;

/// Check every trajectory invariant; one violation per broken rule, at its
/// first offending index. Empty iff valid.
pub fn validate_trajectory(
    traj: &Trajectory,
    geometry: &AttachmentGeometry,
) -> Vec<TrajectoryViolation> {
    let mut out = Vec::new();
    let mut flag = |rule: TrajectoryRule, index: Option<usize>| {
        if let Some(index) = index {
            out.push(TrajectoryViolation { index, rule });
        }
    };
    let s = &traj.samples;
    let dt = traj.tick();
    let c = &traj.condition;
    let u = c.direction_unit();

    flag(
        TrajectoryRule::TickSpacing,
        if traj.tick_rate == 0 {
            Some(0)
        } else {
            (1..s.len()).find(|&i| {
                let gap = s[i].t - s[i - 1].t;
                !(gap > 0.0 && (gap - dt).abs() <= 1e-9)
            })
        },
    );
    flag(
        TrajectoryRule::PhaseOrder,
        (1..s.len()).find(|&i| s[i].phase < s[i - 1].phase),
    );
    flag(
        TrajectoryRule::EmptyPlateau,
        (!s.iter().any(|x| x.phase == Phase::Plateau)).then_some(0),
    );
    let plateau = || s.iter().enumerate().filter(|(_, x)| x.phase == Phase::Plateau);
    flag(
        TrajectoryRule::PlateauSpeed,
        plateau()
            .find(|(_, x)| (x.speed() - c.speed).abs() > PLATEAU_SPEED_TOLERANCE * c.speed)
            .map(|(i, _)| i),
    );
    flag(
        TrajectoryRule::PlateauDirection,
        plateau()
            .find(|(_, x)| {
                let cross = x.velocity[0] * u[1] - x.velocity[1] * u[0];
                let dot = x.velocity[0] * u[0] + x.velocity[1] * u[1];
                cross.abs() > 1e-12 * x.speed().max(1.0) || dot <= 0.0
            })
            .map(|(i, _)| i),
    );
    flag(
        TrajectoryRule::ForceSetpoint,
        s.iter().position(|x| {
            let want = if x.phase.is_contact() { c.force } else { 0.0 };
            x.force_setpoint != want
        }),
    );
    flag(
        TrajectoryRule::OutOfBounds,
        s.iter().position(|x| !geometry.contains(x.position)),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{enumerate_conditions, ProtocolSpec};

    fn cond(dir: usize, speed: f64) -> SweepCondition {
        let p = ProtocolSpec::default();
        let mut c = enumerate_conditions(&p)
            .unwrap()
            .into_iter()
            .find(|c| c.direction_index == dir)
            .unwrap();
        c.speed = speed;
        c
    }

    fn plan(dir: usize, speed: f64) -> Trajectory {
        plan_trajectory(
            &cond(dir, speed),
            &AttachmentGeometry::default(),
            &SensorHeadSpec::default(),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn trapezoid_100mm_per_s() {
        let t = plan(0, 100.0);
        let (a, b) = t.phase_range(Phase::Plateau).unwrap();
        assert_eq!(b - a, 900);
        let (t0, t1) = t.plateau_window().unwrap();
        assert!((t1 - t0 - 0.9).abs() < 1e-9);
        // Ramp distance from integrating the emitted velocity (trapezoid rule).
        let (r0, r1) = t.phase_range(Phase::RampUp).unwrap();
        let dt = t.tick();
        let ramp_dist: f64 = (r0..r1)
            .map(|i| 0.5 * (t.samples[i].speed() + t.samples[i + 1].speed()) * dt)
            .sum();
        assert!((ramp_dist - 5.0).abs() < 1e-9, "{ramp_dist}");
        let plateau_dist: f64 = (a..b)
            .map(|i| 0.5 * (t.samples[i].speed() + t.samples[i + 1].speed()) * dt)
            .sum();
        assert!((plateau_dist - 90.0).abs() < 1e-9, "{plateau_dist}");
    }

    #[test]
    fn plateau_velocity_axis_convention() {
        let t0 = plan(0, 100.0);
        let (a, _) = t0.phase_range(Phase::Plateau).unwrap();
        assert_eq!(t0.samples[a].velocity, [100.0, 0.0]);
        let t4 = plan(4, 100.0);
        let (a, _) = t4.phase_range(Phase::Plateau).unwrap();
        assert_eq!(t4.samples[a].velocity, [-100.0, 0.0]);
    }

    #[test]
    fn contact_displacement_is_stroke_length() {
        for speed in [20.0, 33.0, 60.0, 77.0, 100.0] {
            let t = plan(3, speed);
            let d = t.contact_displacement();
            let step = speed * t.tick();
            assert!((d[0].hypot(d[1]) - 100.0).abs() <= step, "speed {speed}");
        }
    }

    #[test]
    fn planner_output_validates() {
        let t = plan(1, 60.0);
        assert!(validate_trajectory(&t, &AttachmentGeometry::default()).is_empty());
    }

    #[test]
    fn injected_position_fault() {
        let mut t = plan(2, 60.0);
        t.samples[17].position = [1000.0, 0.0];
        let v = validate_trajectory(&t, &AttachmentGeometry::default());
        assert_eq!(
            v,
            vec![TrajectoryViolation {
                index: 17,
                rule: TrajectoryRule::OutOfBounds
            }]
        );
    }

    #[test]
    fn injected_speed_fault() {
        let mut t = plan(0, 60.0);
        let (a, _) = t.phase_range(Phase::Plateau).unwrap();
        t.samples[a + 5].velocity = [63.0, 0.0];
        let v = validate_trajectory(&t, &AttachmentGeometry::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, TrajectoryRule::PlateauSpeed);
        assert_eq!(v[0].index, a + 5);
    }

    #[test]
    fn injected_direction_and_force_faults() {
        let mut t = plan(0, 60.0);
        let (a, _) = t.phase_range(Phase::Plateau).unwrap();
        t.samples[a].velocity = [60.0, 0.5];
        t.samples[0].force_setpoint = 1.0;
        let rules: Vec<_> = validate_trajectory(&t, &AttachmentGeometry::default())
            .into_iter()
            .map(|v| v.rule)
            .collect();
        assert_eq!(
            rules,
            vec![TrajectoryRule::PlateauDirection, TrajectoryRule::ForceSetpoint]
        );
    }

    #[test]
    fn infeasible_profile() {
        let err = plan_trajectory(
            &cond(0, 600.0),
            &AttachmentGeometry::default(),
            &SensorHeadSpec::default(),
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleProfile { .. }));
    }

    #[test]
    fn stroke_must_fit() {
        let small = AttachmentGeometry {
            width: 50.0,
            height: 200.0,
            center: [0.0, 0.0],
        };
        let err = plan_trajectory(&cond(0, 50.0), &small, &SensorHeadSpec::default(), 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
        // Along y it fits.
        assert!(plan_trajectory(&cond(2, 50.0), &small, &SensorHeadSpec::default(), 0.1).is_ok());
        assert!(!small.admits_stroke(100.0));
        assert!(AttachmentGeometry::default().admits_stroke(100.0));
    }

    #[test]
    fn phase_codes_round_trip() {
        for p in Phase::ALL {
            assert_eq!(Phase::from_code(p.code()), Some(p));
        }
        assert_eq!(Phase::from_code(9), None);
    }
}
