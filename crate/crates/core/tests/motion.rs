use proptest::prelude::*;

use tactile_core::motion::{
    plan_trajectory, plan_trajectory_with, validate_trajectory, AttachmentGeometry, Phase, PlannerConfig, Trajectory,
};
use tactile_core::protocol::{direction_angle, enumerate_conditions, ProtocolSpec, SensorHeadSpec, SweepCondition};
use tactile_core::Error;

fn condition(direction_index: usize, direction_count: usize, speed: f64, stroke_length: f64) -> SweepCondition {
    SweepCondition {
        direction_index,
        direction_count,
        direction_angle: direction_angle(direction_index, direction_count),
        speed_index: 0,
        speed,
        force_index: 0,
        force: 1.0,
        repetition: 0,
        stroke_length,
    }
}

/// The kinematic acceptance properties, checked directly from the samples.
fn check_kinematics(traj: &Trajectory, geometry: &AttachmentGeometry) {
    let c = &traj.condition;
    let u = c.direction_unit();
    let dt = traj.tick();
    let plateau: Vec<_> = traj.samples.iter().filter(|s| s.phase == Phase::Plateau).collect();
    assert!(!plateau.is_empty());
    for s in &plateau {
        assert!((s.speed() - c.speed).abs() <= 0.01 * c.speed, "plateau speed {}", s.speed());
        // Exact direction: velocity is a positive multiple of the unit vector.
        let cross = s.velocity[0] * u[1] - s.velocity[1] * u[0];
        assert!(cross.abs() <= 1e-12 * c.speed, "cross {cross}");
        assert!(s.velocity[0] * u[0] + s.velocity[1] * u[1] > 0.0);
    }
    let d = traj.contact_displacement();
    let travelled = d[0].hypot(d[1]);
    assert!(
        (travelled - c.stroke_length).abs() <= c.speed * dt + 1e-9,
        "displacement {travelled} vs stroke {}",
        c.stroke_length
    );
    assert!(traj.samples.iter().all(|s| geometry.contains(s.position)));
    for w in traj.samples.windows(2) {
        assert!((w[1].t - w[0].t - dt).abs() < 1e-9);
    }
    assert!(validate_trajectory(traj, geometry).is_empty());
}

#[test]
fn every_default_condition_meets_the_kinematic_criteria() {
    let protocol = ProtocolSpec::default();
    let geometry = AttachmentGeometry::default();
    let head = SensorHeadSpec::default();
    let conditions = enumerate_conditions(&protocol).unwrap();
    assert_eq!(conditions.len(), 80);
    for c in &conditions {
        let traj = plan_trajectory(c, &geometry, &head, 0.1).unwrap();
        check_kinematics(&traj, &geometry);
    }
}

#[test]
fn plateau_of_fastest_default_sweep() {
    // 100 mm/s, 100 mm stroke, 0.1 s ramps: 5 mm per ramp, 90 mm plateau in 0.9 s.
    let c = condition(0, 8, 100.0, 100.0);
    let traj = plan_trajectory(&c, &AttachmentGeometry::default(), &SensorHeadSpec::default(), 0.1).unwrap();
    let (t0, t1) = traj.plateau_window().unwrap();
    assert!((t1 - t0 - 0.9).abs() < 1e-9);
    let ramp: f64 = traj
        .samples
        .iter()
        .filter(|s| s.phase == Phase::RampUp)
        .map(|s| s.speed() * traj.tick())
        .sum();
    assert!((ramp - 5.0).abs() <= 100.0 * traj.tick());
}

#[test]
fn principal_directions_are_axis_aligned() {
    let head = SensorHeadSpec::default();
    let geometry = AttachmentGeometry::default();
    let east = plan_trajectory(&condition(0, 8, 50.0, 100.0), &geometry, &head, 0.1).unwrap();
    let west = plan_trajectory(&condition(4, 8, 50.0, 100.0), &geometry, &head, 0.1).unwrap();
    let v = |t: &Trajectory| t.samples.iter().find(|s| s.phase == Phase::Plateau).unwrap().velocity;
    assert_eq!(v(&east), [50.0, 0.0]);
    assert_eq!(v(&west), [-50.0, 0.0]);
}

#[test]
fn infeasible_profiles_and_geometry_are_rejected() {
    let head = SensorHeadSpec::default();
    let geometry = AttachmentGeometry::default();
    // 600 mm/s · 0.1 s = 60 mm of ramp on a 100 mm stroke.
    assert!(matches!(
        plan_trajectory(&condition(0, 8, 600.0, 100.0), &geometry, &head, 0.1),
        Err(Error::InfeasibleProfile { .. })
    ));
    assert!(matches!(
        plan_trajectory(&condition(0, 8, 50.0, 170.0), &geometry, &head, 0.1),
        Err(Error::Geometry(_))
    ));
    let tiny = AttachmentGeometry {
        width: 0.0,
        ..AttachmentGeometry::default()
    };
    assert!(matches!(
        plan_trajectory(&condition(0, 8, 50.0, 100.0), &tiny, &head, 0.1),
        Err(Error::Geometry(_))
    ));
}

#[test]
fn corrupted_plateau_is_flagged() {
    let geometry = AttachmentGeometry::default();
    let mut traj = plan_trajectory(&condition(2, 8, 60.0, 100.0), &geometry, &SensorHeadSpec::default(), 0.1).unwrap();
    let i = traj.samples.iter().position(|s| s.phase == Phase::Plateau).unwrap() + 3;
    traj.samples[i].velocity[1] *= 1.05;
    let rules: Vec<_> = validate_trajectory(&traj, &geometry).into_iter().map(|v| v.rule).collect();
    assert!(rules.contains(&tactile_core::motion::TrajectoryRule::PlateauSpeed));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planned_trajectories_satisfy_invariants(
        direction_count in 1usize..16,
        dir_frac in 0.0f64..1.0,
        speed in 5.0f64..150.0,
        stroke in 20.0f64..140.0,
        ramp_time in 0.02f64..0.3,
        approach_time in 0.0f64..0.2,
    ) {
        let dir = ((dir_frac * direction_count as f64) as usize).min(direction_count - 1);
        let c = condition(dir, direction_count, speed, stroke);
        let geometry = AttachmentGeometry::default();
        let cfg = PlannerConfig { ramp_time, approach_time, retract_time: approach_time };
        match plan_trajectory_with(&c, &geometry, &SensorHeadSpec::default(), &cfg) {
            Ok(traj) => check_kinematics(&traj, &geometry),
            Err(Error::InfeasibleProfile { .. }) => prop_assert!(speed * ramp_time >= stroke / 2.0 - speed / 1000.0),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
