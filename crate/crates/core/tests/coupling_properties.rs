use std::f64::consts::FRAC_PI_4;

use nalgebra::DVector;
use undulate::coupling::{PairVariant, RobotSetup, SchoolSpec};
use undulate::model::{GaitSignal, PlatformParams, Pose, RobotParams};
use undulate::reduced;
use undulate::sim::integrate::{solve, FnSystem, IntegratorSpec};
use undulate::sim::scenario::{run_scenario, school_gait, Scenario, Setup, Variant, SCHOOL_SPACING};
use undulate::sim::trajectory::Trajectory;

fn run(setup: Setup, horizon: f64, interval: f64, integrator: IntegratorSpec) -> Trajectory {
    let scenario = Scenario {
        name: "test".into(),
        description: String::new(),
        horizon,
        output_interval: interval,
        integrator,
        variants: vec![Variant {
            label: "v".into(),
            setup,
        }],
    };
    run_scenario(&scenario).unwrap().variants.remove(0).trajectory
}

fn school(spec: SchoolSpec) -> Setup {
    Setup::School {
        platform_mass: spec.platform.mass,
        platform_velocity: spec.platform_velocity,
        robots: spec.robots,
    }
}

fn tight() -> IntegratorSpec {
    IntegratorSpec::adaptive(1e-12, 1e-12)
}

#[test]
fn every_pair_variant_keeps_zero_momentum() {
    let params = RobotParams::asymmetric_reference();
    for v in PairVariant::ALL {
        let spec = v.school(params, school_gait(), SCHOOL_SPACING, 1.0);
        let traj = run(school(spec), 4.0 * std::f64::consts::PI, 0.1, IntegratorSpec::adaptive(1e-11, 1e-11));
        assert!(traj.max_momentum_norm() < 1e-9, "{}: {}", v.label(), traj.max_momentum_norm());
    }
}

#[test]
fn common_drift_only_translates_the_platform() {
    let params = RobotParams::asymmetric_reference();
    let rest = PairVariant::Synchronized.school(params, school_gait(), SCHOOL_SPACING, 1.0);
    let drift = [0.7, -0.4];
    let moving = SchoolSpec {
        platform_velocity: drift,
        ..rest.clone()
    };
    let a = run(school(rest), 10.0, 0.1, tight());
    let b = run(school(moving), 10.0, 0.1, tight());
    assert_eq!(a.len(), b.len());
    let mut worst: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let n = sa.state.q.len();
        // platform-relative coordinates coincide
        for k in 0..n - 2 {
            worst = worst.max((sa.state.q[k] - sb.state.q[k]).abs());
        }
        let [xa, ya] = sa.state.platform_position();
        let [xb, yb] = sb.state.platform_position();
        worst = worst.max((xb - xa - drift[0] * sa.t).abs());
        worst = worst.max((yb - ya - drift[1] * sa.t).abs());
    }
    assert!(worst < 1e-8, "worst gap {worst:e}");
}

/// Stationary-ground path of one robot from the regularized reduced flow.
fn reduced_path(params: &RobotParams, gait: GaitSignal, horizon: f64, interval: f64) -> Vec<[f64; 3]> {
    let mut flow = FnSystem(|t: f64, y: &DVector<f64>| {
        let j = gait.eval(t);
        Ok(DVector::from_row_slice(&reduced::regularized_rates(j.angle, j.rate, y[0], y[3], params)))
    });
    solve(&mut flow, DVector::zeros(4), 0.0, horizon, &tight(), Some(interval))
        .unwrap()
        .into_iter()
        .map(|(_, y)| [y[1], y[2], y[3]])
        .collect()
}

#[test]
fn heavy_platform_approaches_fixed_ground() {
    let params = RobotParams::asymmetric_reference();
    let gait = GaitSignal::cosine(FRAC_PI_4, 1.0);
    let (horizon, interval) = (4.0 * std::f64::consts::PI, 0.1);
    let oracle = reduced_path(&params, gait, horizon, interval);
    let gaps: Vec<f64> = [1e2, 1e4, 1e6]
        .iter()
        .map(|&m| {
            let spec = SchoolSpec::new(
                vec![RobotSetup::gait(params, Pose::default(), gait)],
                PlatformParams::free(m),
            );
            let traj = run(school(spec), horizon, interval, tight());
            traj.samples
                .iter()
                .zip(&oracle)
                .map(|(s, o)| {
                    let p = s.state.pose(0);
                    (p.x - o[0]).abs().max((p.y - o[1]).abs()).max((p.theta - o[2]).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 1e-4, "{gaps:?}");
}

#[test]
fn identical_robots_move_as_translates() {
    let params = RobotParams::asymmetric_reference();
    let spec = PairVariant::Synchronized.school(params, school_gait(), SCHOOL_SPACING, 1.0);
    let traj = run(school(spec), 16.0 * std::f64::consts::PI, 0.1, IntegratorSpec::adaptive(1e-11, 1e-11));
    let (a, b) = (traj.robot_path(0), traj.robot_path(1));
    let offset = [b[0][0] - a[0][0], b[0][1] - a[0][1]];
    for (s, (pa, pb)) in traj.samples.iter().zip(a.iter().zip(&b)) {
        assert!((pb[0] - pa[0] - offset[0]).abs() < 1e-9);
        assert!((pb[1] - pa[1] - offset[1]).abs() < 1e-9);
        assert!((s.state.pose(0).theta - s.state.pose(1).theta).abs() < 1e-9);
        assert!((s.state.alpha(0) - s.state.alpha(1)).abs() < 1e-12);
    }
}

#[test]
fn rotating_the_start_rotates_the_run() {
    let params = RobotParams::asymmetric_reference();
    let base = PairVariant::TurnedLeft.school(params, school_gait(), SCHOOL_SPACING, 1.0);
    let phi: f64 = 0.7;
    let (s, c) = phi.sin_cos();
    let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
    let mut turned = base.clone();
    for r in &mut turned.robots {
        let [x, y] = rot([r.pose.x, r.pose.y]);
        r.pose = Pose::new(x, y, r.pose.theta + phi);
    }
    let horizon = 4.0 * std::f64::consts::PI;
    let a = run(school(base), horizon, 0.1, tight());
    let b = run(school(turned), horizon, 0.1, tight());
    let mut worst: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        for r in 0..2 {
            let (pa, pb) = (sa.state.pose(r), sb.state.pose(r));
            let [x, y] = rot([pa.x, pa.y]);
            worst = worst.max((pb.x - x).abs()).max((pb.y - y).abs());
            worst = worst.max((pb.theta - pa.theta - phi).abs());
        }
        let [x, y] = rot(sa.state.platform_position());
        let [xb, yb] = sb.state.platform_position();
        worst = worst.max((xb - x).abs()).max((yb - y).abs());
    }
    assert!(worst < 1e-9, "worst gap {worst:e}");
}

#[test]
fn heading_partner_curves_robot_one() {
    let params = RobotParams::asymmetric_reference();
    let curvature = |v: PairVariant| {
        let spec = v.school(params, school_gait(), SCHOOL_SPACING, 1.0);
        let traj = run(school(spec), 16.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI / 64.0, IntegratorSpec::adaptive(1e-10, 1e-10));
        undulate::coupling::displacement_report(&traj, 0).unwrap().chord_deviation(64)
    };
    for v in [PairVariant::TurnedLeft, PairVariant::TurnedRight] {
        assert!(curvature(v) > 0.02, "{}", v.label());
    }
}
