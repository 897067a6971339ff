//! Heading control of a passive robot through platform acceleration.
//!
//! The heading acceleration is affine in the platform acceleration, so three
//! engine solves recover its drift and input gains exactly. A feedback-
//! linearizing law then commands the heading acceleration and a regularized
//! minimum-norm allocation turns that command into a platform acceleration.
//! Only the heading is regulated; there is one effective input channel.

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, EngineInput};
use crate::error::{Error, Result};
use crate::model::{wrap_angle, FullState, PlatformMode, Pose, ROBOT_DOF};

/// `θ̈ = drift + gain_x·Ẍ + gain_y·Ÿ` at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeadingAffineModel {
    pub drift: f64,
    pub gain_x: f64,
    pub gain_y: f64,
}

impl HeadingAffineModel {
    pub fn predict(&self, ax: f64, ay: f64) -> f64 {
        self.drift + self.gain_x * ax + self.gain_y * ay
    }

    /// `c_x² + c_y²`.
    pub fn gain_sq(&self) -> f64 {
        self.gain_x * self.gain_x + self.gain_y * self.gain_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingGains {
    /// Rate gain [1/s].
    pub d1: f64,
    /// Angle gain [1/s²].
    pub d2: f64,
    /// Allocation regularizer added to `c_x² + c_y²`.
    pub epsilon: f64,
}

impl Default for TrackingGains {
    fn default() -> Self {
        Self {
            d1: 2.0,
            d2: 1.0,
            epsilon: 1e-6,
        }
    }
}

impl TrackingGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.d1.is_finite() && self.d1 > 0.0) {
            return Err(Error::param("gains.d1", format!("must be positive, got {}", self.d1)));
        }
        if !(self.d2.is_finite() && self.d2 > 0.0) {
            return Err(Error::param("gains.d2", format!("must be positive, got {}", self.d2)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::param(
                "gains.epsilon",
                format!("must be non-negative, got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    /// Smallest decay rate among the roots of `s² + d1 s + d2`.
    pub fn slowest_decay_rate(&self) -> f64 {
        let disc = self.d1 * self.d1 - 4.0 * self.d2;
        if disc >= 0.0 {
            0.5 * (self.d1 - disc.sqrt())
        } else {
            0.5 * self.d1
        }
    }
}

/// Desired heading with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeadingTarget {
    pub angle: f64,
    pub rate: f64,
    pub accel: f64,
}

pub trait HeadingReference {
    fn at(&self, t: f64) -> HeadingTarget;
}

impl<F: Fn(f64) -> HeadingTarget> HeadingReference for F {
    fn at(&self, t: f64) -> HeadingTarget {
        self(t)
    }
}

/// Closed-form heading references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadingProfile {
    /// `offset + rate·t`.
    Ramp { offset: f64, rate: f64 },
    /// `offset + rate·t + amplitude·sin(ω t + phase)`.
    Sine {
        offset: f64,
        rate: f64,
        amplitude: f64,
        angular_frequency: f64,
        phase: f64,
    },
}

impl HeadingReference for HeadingProfile {
    fn at(&self, t: f64) -> HeadingTarget {
        match *self {
            HeadingProfile::Ramp { offset, rate } => HeadingTarget {
                angle: offset + rate * t,
                rate,
                accel: 0.0,
            },
            HeadingProfile::Sine {
                offset,
                rate,
                amplitude,
                angular_frequency: w,
                phase,
            } => {
                let (s, c) = (w * t + phase).sin_cos();
                HeadingTarget {
                    angle: offset + rate * t + amplitude * s,
                    rate: rate + amplitude * w * c,
                    accel: -amplitude * w * w * s,
                }
            }
        }
    }
}

fn heading_index(config: &EngineConfig, robot: usize) -> Result<usize> {
    if robot >= config.robot_count() {
        return Err(Error::RobotIndex {
            index: robot,
            count: config.robot_count(),
        });
    }
    if config.platform().mode != PlatformMode::Accelerated {
        return Err(Error::param(
            "platform.mode",
            "heading control needs an accelerated platform",
        ));
    }
    Ok(ROBOT_DOF * robot + 3)
}

/// Affine model of the robot's heading acceleration from three engine solves.
pub fn heading_accel_probe(
    config: &EngineConfig,
    state: &FullState,
    t: f64,
    robot: usize,
) -> Result<HeadingAffineModel> {
    let k = heading_index(config, robot)?;
    let solve = |ax: f64, ay: f64| -> Result<f64> {
        let out = config.constrained_accel(&state.q, &state.v, t, &EngineInput::platform(ax, ay))?;
        Ok(out.accel[k])
    };
    let drift = solve(0.0, 0.0)?;
    Ok(HeadingAffineModel {
        drift,
        gain_x: solve(1.0, 0.0)? - drift,
        gain_y: solve(0.0, 1.0)? - drift,
    })
}

/// Coordinates in which the controller allocates the platform acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFrame {
    /// `(Ẍ, Ÿ)` directly.
    #[default]
    Inertial,
    /// Rate of the platform velocity resolved along the robot's heading frame.
    /// Zero input keeps that resolved velocity fixed, so the inertial
    /// velocity turns with the robot.
    Body,
}

/// Inertial platform acceleration for a body-frame rate `b`:
/// `R(θ)·b + θ̇·J·V`, with `J` the quarter turn and `V` the platform velocity.
pub fn body_to_inertial(state: &FullState, robot: usize, b: [f64; 2]) -> [f64; 2] {
    let k = ROBOT_DOF * robot + 3;
    let (s, c) = state.q[k].sin_cos();
    let w = state.v[k];
    let n = state.v.len();
    let (vx, vy) = (state.v[n - 2], state.v[n - 1]);
    [c * b[0] - s * b[1] - w * vy, s * b[0] + c * b[1] + w * vx]
}

/// Heading model with respect to the body-frame platform input.
pub fn body_frame_probe(
    config: &EngineConfig,
    state: &FullState,
    t: f64,
    robot: usize,
) -> Result<HeadingAffineModel> {
    let k = heading_index(config, robot)?;
    let solve = |b: [f64; 2]| -> Result<f64> {
        let [ax, ay] = body_to_inertial(state, robot, b);
        let out = config.constrained_accel(&state.q, &state.v, t, &EngineInput::platform(ax, ay))?;
        Ok(out.accel[k])
    };
    let drift = solve([0.0, 0.0])?;
    Ok(HeadingAffineModel {
        drift,
        gain_x: solve([1.0, 0.0])? - drift,
        gain_y: solve([0.0, 1.0])? - drift,
    })
}

/// `θ̈_d − d1(θ̇ − θ̇_d) − d2(θ − θ_d)` on unwrapped angles.
pub fn commanded_heading_accel(
    theta: f64,
    theta_rate: f64,
    target: &HeadingTarget,
    gains: &TrackingGains,
) -> f64 {
    target.accel - gains.d1 * (theta_rate - target.rate) - gains.d2 * (theta - target.angle)
}

/// Regularized minimum-norm platform acceleration producing `u` along the gains.
pub fn allocate_platform_accel(u: f64, model: &HeadingAffineModel, epsilon: f64) -> Result<[f64; 2]> {
    let denom = model.gain_sq() + epsilon;
    if denom == 0.0 {
        return Err(Error::ZeroControlEffectiveness);
    }
    Ok([u * model.gain_x / denom, u * model.gain_y / denom])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub platform_accel: [f64; 2],
    pub model: HeadingAffineModel,
    pub commanded: f64,
    pub u_theta: f64,
}

/// Probe, command, cancel the drift, allocate.
pub fn controller_step(
    config: &EngineConfig,
    state: &FullState,
    t: f64,
    target: &HeadingTarget,
    gains: &TrackingGains,
    robot: usize,
    frame: InputFrame,
) -> Result<ControlOutput> {
    let model = match frame {
        InputFrame::Inertial => heading_accel_probe(config, state, t, robot)?,
        InputFrame::Body => body_frame_probe(config, state, t, robot)?,
    };
    let k = ROBOT_DOF * robot + 3;
    let commanded = commanded_heading_accel(state.q[k], state.v[k], target, gains);
    let u_theta = commanded - model.drift;
    let allocated = allocate_platform_accel(u_theta, &model, gains.epsilon)?;
    let platform_accel = match frame {
        InputFrame::Inertial => allocated,
        InputFrame::Body => body_to_inertial(state, robot, allocated),
    };
    Ok(ControlOutput {
        platform_accel,
        model,
        commanded,
        u_theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    /// Advance once the robot is within `radius` of the target.
    PositionTol,
    /// Advance once the heading error is below `heading_tol`, after `min_dwell` seconds on the target.
    HeadingTol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSettings {
    /// Platform-frame points, visited in order.
    pub targets: Vec<[f64; 2]>,
    pub mode: SwitchMode,
    pub radius: f64,
    pub heading_tol: f64,
    pub min_dwell: f64,
    /// Time constant of the reference prefilter.
    pub filter_time_constant: f64,
}

impl WaypointSettings {
    pub fn new(targets: Vec<[f64; 2]>) -> Self {
        Self {
            targets,
            mode: SwitchMode::PositionTol,
            radius: 1.0,
            heading_tol: 0.05,
            min_dwell: 2.0,
            filter_time_constant: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::param("waypoints.targets", "at least one target is required"));
        }
        if self.targets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("waypoints.targets", "must be finite"));
        }
        let positive = [
            ("waypoints.radius", self.radius),
            ("waypoints.heading_tol", self.heading_tol),
            ("waypoints.filter_time_constant", self.filter_time_constant),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.min_dwell.is_finite() && self.min_dwell >= 0.0) {
            return Err(Error::param("waypoints.min_dwell", "must be non-negative"));
        }
        Ok(())
    }
}

/// Direction angle from `from` to `to`, in `(−π, π]`.
pub fn direction_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// Picks the active target and turns it into a desired heading.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSupervisor {
    settings: WaypointSettings,
    active: usize,
    activated_at: f64,
    /// Heading held after the last target is reached.
    final_heading: Option<f64>,
    switch_times: Vec<f64>,
}

impl WaypointSupervisor {
    pub fn new(settings: WaypointSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            settings,
            active: 0,
            activated_at: 0.0,
            final_heading: None,
            switch_times: Vec::new(),
        })
    }

    pub fn settings(&self) -> &WaypointSettings {
        &self.settings
    }

    /// Index of the active target; equals the target count once all are reached.
    pub fn active(&self) -> usize {
        self.active
    }

    pub fn finished(&self) -> bool {
        self.active >= self.settings.targets.len()
    }

    /// Times at which the supervisor advanced.
    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    /// Geometric desired heading, unwrapped to lie within π of `near`.
    pub fn desired_heading(&self, position: [f64; 2], near: f64) -> f64 {
        let raw = match self.settings.targets.get(self.active) {
            Some(&target) => direction_angle(position, target),
            None => self.final_heading.unwrap_or(near),
        };
        near + wrap_angle(raw - near)
    }

    /// Advances past every target that satisfies the switching rule. Returns
    /// true if the active target changed.
    pub fn update(&mut self, t: f64, pose: Pose) -> bool {
        let position = [pose.x, pose.y];
        let mut advanced = false;
        while let Some(&target) = self.settings.targets.get(self.active) {
            let dist = (target[0] - position[0]).hypot(target[1] - position[1]);
            let reached = dist == 0.0
                || match self.settings.mode {
                    SwitchMode::PositionTol => dist < self.settings.radius,
                    SwitchMode::HeadingTol => {
                        let error = wrap_angle(pose.theta - direction_angle(position, target));
                        t - self.activated_at >= self.settings.min_dwell
                            && error.abs() < self.settings.heading_tol
                    }
                };
            if !reached {
                break;
            }
            self.final_heading = Some(if dist == 0.0 {
                pose.theta
            } else {
                direction_angle(position, target)
            });
            self.active += 1;
            self.activated_at = t;
            self.switch_times.push(t);
            advanced = true;
        }
        advanced
    }
}

/// Critically damped second-order prefilter that smooths the geometric heading
/// into a reference with continuous rate and bounded acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFilter {
    pub time_constant: f64,
}

impl ReferenceFilter {
    /// Filter output `(r, ṙ, r̈)` for input `target`.
    pub fn output(&self, r: f64, r_rate: f64, target: f64) -> HeadingTarget {
        let w = 1.0 / self.time_constant;
        HeadingTarget {
            angle: r,
            rate: r_rate,
            accel: w * w * (target - r) - 2.0 * w * r_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::engine::RobotSlot;
    use crate::model::{PlatformParams, RobotParams};

    fn passive() -> EngineConfig {
        EngineConfig::new(
            vec![RobotSlot::passive(RobotParams::asymmetric_reference().with_spring(1.0))],
            PlatformParams::accelerated(),
        )
        .unwrap()
    }

    /// Admissible state with the given joint angle and random rates.
    fn state_at(config: &EngineConfig, alpha: f64, rng: &mut impl Rng) -> FullState {
        let mut s = FullState::zeros(1);
        s.q[0] = alpha;
        s.q[3] = rng.gen_range(-PI..PI);
        for k in 0..6 {
            s.v[k] = rng.gen_range(-1.0..1.0);
        }
        s.v = config.project_velocities(&s.q, &s.v).unwrap();
        s
    }

    #[test]
    fn rest_straight_has_no_drift() {
        let config = passive();
        let model = heading_accel_probe(&config, &FullState::zeros(1), 0.0, 0).unwrap();
        assert_eq!(model.drift, 0.0);
    }

    #[test]
    fn heading_acceleration_is_affine() {
        let config = passive();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let alpha = rng.gen_range(-2.5..2.5);
            let s = state_at(&config, alpha, &mut rng);
            let model = heading_accel_probe(&config, &s, 0.0, 0).unwrap();
            let (a, b) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let engine = config
                .constrained_accel(&s.q, &s.v, 0.0, &EngineInput::platform(a, b))
                .unwrap()
                .accel[3];
            let predicted = model.predict(a, b);
            assert!((predicted - engine).abs() <= 1e-9 * engine.abs().max(1.0));
        }
    }

    #[test]
    fn straightened_robot_has_weaker_authority() {
        let config = passive();
        let at = |alpha: f64| {
            let mut s = FullState::zeros(1);
            s.q[0] = alpha;
            heading_accel_probe(&config, &s, 0.0, 0).unwrap().gain_sq().sqrt()
        };
        assert!(at(0.0) < at(FRAC_PI_4));
    }

    #[test]
    fn probe_requires_accelerated_platform() {
        let config = EngineConfig::new(
            vec![RobotSlot::passive(RobotParams::asymmetric_reference())],
            PlatformParams::stationary(),
        )
        .unwrap();
        assert!(heading_accel_probe(&config, &FullState::zeros(1), 0.0, 0).is_err());
        assert!(matches!(
            heading_accel_probe(&passive(), &FullState::zeros(1), 0.0, 1),
            Err(Error::RobotIndex { .. })
        ));
    }

    #[test]
    fn command_examples() {
        let gains = TrackingGains::default();
        let target = HeadingTarget { angle: 1.0, rate: 0.5, accel: 0.25 };
        assert_eq!(commanded_heading_accel(1.0, 0.5, &target, &gains), 0.25);
        let still = HeadingTarget { angle: 0.0, rate: 0.0, accel: 0.0 };
        assert_abs_diff_eq!(commanded_heading_accel(0.3, 0.0, &still, &gains), -gains.d2 * 0.3);
    }

    #[test]
    fn allocation_examples() {
        let m = |x, y| HeadingAffineModel { drift: 0.0, gain_x: x, gain_y: y };
        assert_eq!(allocate_platform_accel(2.0, &m(1.0, 0.0), 0.0).unwrap(), [2.0, 0.0]);
        assert_eq!(allocate_platform_accel(1.0, &m(1.0, 1.0), 0.0).unwrap(), [0.5, 0.5]);
        assert_eq!(allocate_platform_accel(7.0, &m(0.0, 0.0), 1e-6).unwrap(), [0.0, 0.0]);
        assert!(matches!(
            allocate_platform_accel(1.0, &m(0.0, 0.0), 0.0),
            Err(Error::ZeroControlEffectiveness)
        ));
    }

    proptest! {
        #[test]
        fn allocation_is_minimal_norm(
            u in -10.0..10.0f64,
            cx in -5.0..5.0f64,
            cy in -5.0..5.0f64,
            s in -10.0..10.0f64,
        ) {
            prop_assume!(cx * cx + cy * cy > 1e-6);
            let model = HeadingAffineModel { drift: 0.0, gain_x: cx, gain_y: cy };
            let [a, b] = allocate_platform_accel(u, &model, 0.0).unwrap();
            prop_assert!((cx * a + cy * b - u).abs() < 1e-9 * (1.0 + u.abs()));
            // every other solution is (a, b) + s·(−c_y, c_x)
            let (a2, b2) = (a - s * cy, b + s * cx);
            prop_assert!(a * a + b * b <= a2 * a2 + b2 * b2 + 1e-12);
        }
    }

    #[test]
    fn on_reference_at_rest_needs_no_input() {
        let config = passive();
        let out = controller_step(
            &config,
            &FullState::zeros(1),
            0.0,
            &HeadingTarget::default(),
            &TrackingGains::default(),
            0,
            InputFrame::Inertial,
        )
        .unwrap();
        assert_eq!(out.platform_accel, [0.0, 0.0]);
    }

    #[test]
    fn exact_cancellation_without_regularization() {
        let config = passive();
        let gains = TrackingGains { epsilon: 0.0, ..TrackingGains::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = state_at(&config, rng.gen_range(0.2..1.5), &mut rng);
            let target = HeadingTarget { angle: rng.gen_range(-1.0..1.0), rate: 1.0, accel: 0.3 };
            let out = controller_step(&config, &s, 0.0, &target, &gains, 0, InputFrame::Inertial).unwrap();
            let [ax, ay] = out.platform_accel;
            let achieved = config
                .constrained_accel(&s.q, &s.v, 0.0, &EngineInput::platform(ax, ay))
                .unwrap()
                .accel[3];
            assert!((achieved - out.commanded).abs() < 1e-9 * (1.0 + out.commanded.abs()));
        }
    }

    #[test]
    fn regularization_bias_matches_affine_prediction() {
        let config = passive();
        let gains = TrackingGains { epsilon: 0.05, ..TrackingGains::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = state_at(&config, FRAC_PI_3, &mut rng);
        let target = HeadingTarget { angle: 0.4, rate: 1.0, accel: 0.0 };
        let out = controller_step(&config, &s, 0.0, &target, &gains, 0, InputFrame::Inertial).unwrap();
        let [ax, ay] = out.platform_accel;
        let achieved = config
            .constrained_accel(&s.q, &s.v, 0.0, &EngineInput::platform(ax, ay))
            .unwrap()
            .accel[3];
        let c2 = out.model.gain_sq();
        let expected = out.commanded * c2 / (c2 + gains.epsilon) + out.model.drift * gains.epsilon / (c2 + gains.epsilon);
        assert!((achieved - expected).abs() < 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn gains_validation() {
        assert!(TrackingGains::default().validate().is_ok());
        assert!(TrackingGains { d1: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrackingGains { d2: -1.0, ..Default::default() }.validate().is_err());
        assert!(TrackingGains { epsilon: -1e-3, ..Default::default() }.validate().is_err());
        assert_abs_diff_eq!(TrackingGains::default().slowest_decay_rate(), 1.0);
    }

    fn central(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let h = 1e-5;
        (f(t + h) - f(t - h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn sine_profile_derivatives(t in -20.0..20.0f64, amp in 0.0..2.0f64, w in 0.1..3.0f64, phase in -PI..PI) {
            let p = HeadingProfile::Sine { offset: 0.2, rate: 0.1, amplitude: amp, angular_frequency: w, phase };
            let r = p.at(t);
            prop_assert!((central(|s| p.at(s).angle, t) - r.rate).abs() < 1e-6);
            prop_assert!((central(|s| p.at(s).rate, t) - r.accel).abs() < 1e-6);
        }
    }

    #[test]
    fn ramp_profile() {
        let p = HeadingProfile::Ramp { offset: 0.0, rate: 1.0 };
        assert_eq!(p.at(3.0), HeadingTarget { angle: 3.0, rate: 1.0, accel: 0.0 });
    }

    fn targets() -> Vec<[f64; 2]> {
        vec![[-15.0, -15.0], [-15.0, -30.0], [0.0, -60.0]]
    }

    #[test]
    fn waypoint_directions() {
        let sup = WaypointSupervisor::new(WaypointSettings::new(targets())).unwrap();
        assert_abs_diff_eq!(sup.desired_heading([0.0, 0.0], 0.0), -3.0 * FRAC_PI_4);
        let last = WaypointSupervisor::new(WaypointSettings::new(vec![[0.0, -60.0]])).unwrap();
        assert_abs_diff_eq!(last.desired_heading([0.0, 0.0], 0.0), -FRAC_PI_2);
    }

    #[test]
    fn desired_heading_unwraps_near_current() {
        let sup = WaypointSupervisor::new(WaypointSettings::new(targets())).unwrap();
        let h = sup.desired_heading([0.0, 0.0], 4.0 * PI);
        assert_abs_diff_eq!(h, 4.0 * PI - 3.0 * FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn sitting_on_target_advances_in_both_modes() {
        for mode in [SwitchMode::PositionTol, SwitchMode::HeadingTol] {
            let mut settings = WaypointSettings::new(targets());
            settings.mode = mode;
            settings.radius = 1e-3;
            let mut sup = WaypointSupervisor::new(settings).unwrap();
            assert!(sup.update(0.0, Pose::new(-15.0, -15.0, 2.0)));
            assert_eq!(sup.active(), 1);
        }
    }

    #[test]
    fn position_mode_switching() {
        let mut sup = WaypointSupervisor::new(WaypointSettings::new(targets())).unwrap();
        assert!(!sup.update(1.0, Pose::new(-10.0, -10.0, 0.0)));
        assert!(sup.update(2.0, Pose::new(-14.5, -14.6, 0.0)));
        assert_eq!(sup.active(), 1);
        assert!(sup.update(3.0, Pose::new(-15.0, -29.5, 0.0)));
        assert!(sup.update(4.0, Pose::new(0.2, -59.5, 0.0)));
        assert!(sup.finished());
        assert_eq!(sup.switch_times(), &[2.0, 3.0, 4.0]);
        // holds the last direction afterwards
        let held = sup.desired_heading([5.0, 5.0], 0.0);
        assert_abs_diff_eq!(held, direction_angle([0.2, -59.5], [0.0, -60.0]));
    }

    #[test]
    fn heading_mode_needs_dwell_and_alignment() {
        let mut settings = WaypointSettings::new(targets());
        settings.mode = SwitchMode::HeadingTol;
        let mut sup = WaypointSupervisor::new(settings).unwrap();
        let aligned = Pose::new(0.0, 0.0, -3.0 * FRAC_PI_4);
        assert!(!sup.update(1.0, aligned));
        assert!(!sup.update(2.5, Pose::new(0.0, 0.0, 0.0)));
        assert!(sup.update(2.5, aligned));
        assert_eq!(sup.active(), 1);
    }

    #[test]
    fn empty_waypoints_rejected() {
        assert!(WaypointSupervisor::new(WaypointSettings::new(vec![])).is_err());
    }

    #[test]
    fn reference_filter_rest_point() {
        let f = ReferenceFilter { time_constant: 0.1 };
        assert_eq!(f.output(1.0, 0.0, 1.0).accel, 0.0);
        assert_abs_diff_eq!(f.output(0.0, 0.0, 1.0).accel, 100.0);
    }
}
