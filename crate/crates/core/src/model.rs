//! Physical parameters, states and gait signals shared by every other module.
//!
//! Lengths are full link lengths with the wheel (and the link's center of mass)
//! at the midpoint. Inertias are taken about that point.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub mass: f64,
    pub length: f64,
    pub inertia: f64,
}

impl LinkParams {
    pub fn new(mass: f64, length: f64, inertia: f64) -> Self {
        Self {
            mass,
            length,
            inertia,
        }
    }

    /// Link whose inertia is `mass * length^2 / 4`.
    pub fn quarter_inertia(mass: f64, length: f64) -> Self {
        Self::new(mass, length, mass * length * length / 4.0)
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        for (name, value) in [
            ("mass", self.mass),
            ("length", self.length),
            ("inertia", self.inertia),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(
                    format!("{prefix}.{name}"),
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub head: LinkParams,
    pub tail: LinkParams,
    /// Torsional joint stiffness; zero for a directly actuated joint.
    #[serde(default)]
    pub spring_stiffness: f64,
}

impl RobotParams {
    pub fn new(head: LinkParams, tail: LinkParams, spring_stiffness: f64) -> Self {
        Self {
            head,
            tail,
            spring_stiffness,
        }
    }

    /// Two-to-one robot: head twice the tail's mass and length, `J = m λ² / 4` per link.
    pub fn asymmetric_reference() -> Self {
        Self::new(
            LinkParams::quarter_inertia(2.0, 2.0),
            LinkParams::quarter_inertia(1.0, 1.0),
            0.0,
        )
    }

    /// Unit links front and back.
    pub fn symmetric_reference() -> Self {
        let link = LinkParams::quarter_inertia(1.0, 1.0);
        Self::new(link, link, 0.0)
    }

    pub fn with_spring(mut self, stiffness: f64) -> Self {
        self.spring_stiffness = stiffness;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.head == self.tail
    }

    pub fn total_mass(&self) -> f64 {
        self.head.mass + self.tail.mass
    }

    pub fn validate(&self) -> Result<()> {
        self.head.validate("head")?;
        self.tail.validate("tail")?;
        if !(self.spring_stiffness.is_finite() && self.spring_stiffness >= 0.0) {
            return Err(Error::param(
                "spring_stiffness",
                format!("must be non-negative, got {}", self.spring_stiffness),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformMode {
    Stationary,
    Free,
    Accelerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformParams {
    /// Only meaningful for [`PlatformMode::Free`].
    pub mass: f64,
    pub mode: PlatformMode,
}

impl PlatformParams {
    pub fn stationary() -> Self {
        Self {
            mass: 0.0,
            mode: PlatformMode::Stationary,
        }
    }

    pub fn free(mass: f64) -> Self {
        Self {
            mass,
            mode: PlatformMode::Free,
        }
    }

    pub fn accelerated() -> Self {
        Self {
            mass: 0.0,
            mode: PlatformMode::Accelerated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == PlatformMode::Free && !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::param(
                "platform.mass",
                format!("a free platform needs positive mass, got {}", self.mass),
            ));
        }
        Ok(())
    }
}

/// Parameters that passed validation, with the symmetry predicate cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedParams {
    pub robot: RobotParams,
    pub platform: PlatformParams,
    pub symmetric: bool,
}

pub fn validate_params(robot: RobotParams, platform: PlatformParams) -> Result<CheckedParams> {
    robot.validate()?;
    platform.validate()?;
    Ok(CheckedParams {
        robot,
        platform,
        symmetric: robot.is_symmetric(),
    })
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Shape-plus-momentum description of one robot on a stationary platform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    /// Joint angle, head heading minus tail heading, in `(-π, π]`.
    pub alpha: f64,
    /// Nonholonomic momentum. Not a forward-motion coordinate where `sin α = 0`.
    pub momentum: f64,
    pub x: f64,
    pub y: f64,
    /// Tail heading relative to the platform axes, unwrapped.
    pub theta: f64,
}

impl ReducedState {
    pub fn new(alpha: f64, momentum: f64, x: f64, y: f64, theta: f64) -> Self {
        Self {
            alpha: wrap_angle(alpha),
            momentum,
            x,
            y,
            theta,
        }
    }
}

/// Platform-relative pose of one robot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }
}

/// Number of generalized coordinates per robot: `(α, x, y, θ)`.
pub const ROBOT_DOF: usize = 4;

/// Generalized coordinates and velocities for `N` robots plus the platform.
///
/// Layout: robot `i` occupies `[4i, 4i+4)` as `(α, x, y, θ)` relative to the
/// platform, followed by the inertial platform displacement `(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
}

impl FullState {
    pub fn zeros(robots: usize) -> Self {
        let n = dof(robots);
        Self {
            q: DVector::zeros(n),
            v: DVector::zeros(n),
        }
    }

    pub fn robot_count(&self) -> usize {
        (self.q.len() - 2) / ROBOT_DOF
    }

    pub fn alpha(&self, robot: usize) -> f64 {
        self.q[ROBOT_DOF * robot]
    }

    pub fn pose(&self, robot: usize) -> Pose {
        let b = ROBOT_DOF * robot;
        Pose::new(self.q[b + 1], self.q[b + 2], self.q[b + 3])
    }

    pub fn set_pose(&mut self, robot: usize, pose: Pose) {
        let b = ROBOT_DOF * robot;
        self.q[b + 1] = pose.x;
        self.q[b + 2] = pose.y;
        self.q[b + 3] = pose.theta;
    }

    /// `(α̇, ẋ, ẏ, θ̇)` of one robot.
    pub fn robot_rates(&self, robot: usize) -> [f64; 4] {
        let b = ROBOT_DOF * robot;
        [self.v[b], self.v[b + 1], self.v[b + 2], self.v[b + 3]]
    }

    pub fn platform_position(&self) -> [f64; 2] {
        let b = self.q.len() - 2;
        [self.q[b], self.q[b + 1]]
    }

    pub fn platform_velocity(&self) -> [f64; 2] {
        let b = self.v.len() - 2;
        [self.v[b], self.v[b + 1]]
    }

    /// Packs `(q, v)` into one vector for the integrator.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.q.len();
        DVector::from_fn(2 * n, |i, _| if i < n { self.q[i] } else { self.v[i - n] })
    }

    pub fn from_vector(y: &DVector<f64>, robots: usize) -> Self {
        let n = dof(robots);
        Self {
            q: y.rows(0, n).into_owned(),
            v: y.rows(n, n).into_owned(),
        }
    }
}

/// Total generalized coordinates for `robots` robots plus the platform.
pub fn dof(robots: usize) -> usize {
    ROBOT_DOF * robots + 2
}

/// Joint angle with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMotion {
    pub angle: f64,
    pub rate: f64,
    pub accel: f64,
}

/// `α(t) = bias + amplitude · cos(angular_frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitSignal {
    pub amplitude: f64,
    pub angular_frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub bias: f64,
}

impl GaitSignal {
    pub fn new(amplitude: f64, angular_frequency: f64, phase: f64, bias: f64) -> Self {
        Self {
            amplitude,
            angular_frequency,
            phase,
            bias,
        }
    }

    pub fn cosine(amplitude: f64, angular_frequency: f64) -> Self {
        Self::new(amplitude, angular_frequency, 0.0, 0.0)
    }

    /// The same gait half a cycle later, i.e. the mirrored stroke.
    pub fn half_cycle_shifted(self) -> Self {
        Self {
            phase: self.phase + PI,
            ..self
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.angular_frequency
    }

    pub fn eval(&self, t: f64) -> JointMotion {
        let w = self.angular_frequency;
        let (s, c) = (w * t + self.phase).sin_cos();
        JointMotion {
            angle: self.bias + self.amplitude * c,
            rate: -self.amplitude * w * s,
            accel: -self.amplitude * w * w * c,
        }
    }
}

pub fn gait_eval(gait: &GaitSignal, t: f64) -> JointMotion {
    gait.eval(t)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn reference_params_validate() {
        let checked =
            validate_params(RobotParams::asymmetric_reference(), PlatformParams::free(1.0))
                .unwrap();
        assert!(!checked.symmetric);
        assert_eq!(checked.robot.head.inertia, 2.0);
        assert_eq!(checked.robot.tail.inertia, 0.25);

        let sym = validate_params(
            RobotParams::symmetric_reference(),
            PlatformParams::stationary(),
        )
        .unwrap();
        assert!(sym.symmetric);
    }

    #[test]
    fn zero_tail_length_is_named() {
        let mut robot = RobotParams::asymmetric_reference();
        robot.tail.length = 0.0;
        let err = validate_params(robot, PlatformParams::stationary()).unwrap_err();
        match err {
            Error::InvalidParameter { field, .. } => assert_eq!(field, "tail.length"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn negative_stiffness_and_massless_free_platform_rejected() {
        let robot = RobotParams::asymmetric_reference().with_spring(-1.0);
        let err = validate_params(robot, PlatformParams::stationary()).unwrap_err();
        assert!(err.to_string().contains("spring_stiffness"));

        let err = validate_params(
            RobotParams::asymmetric_reference(),
            PlatformParams::free(0.0),
        )
        .unwrap_err();
        assert!(err.to_string().contains("platform.mass"));
        // an accelerated platform ignores its mass
        validate_params(
            RobotParams::asymmetric_reference(),
            PlatformParams::accelerated(),
        )
        .unwrap();
    }

    #[test]
    fn validation_is_idempotent() {
        let once =
            validate_params(RobotParams::asymmetric_reference(), PlatformParams::free(1.0))
                .unwrap();
        let twice = validate_params(once.robot, once.platform).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn gait_examples() {
        let gait = GaitSignal::cosine(FRAC_PI_4, 1.0);
        let m = gait.eval(0.0);
        assert_eq!((m.angle, m.rate, m.accel), (FRAC_PI_4, 0.0, -FRAC_PI_4));

        let m = gait.eval(PI / 2.0);
        assert_abs_diff_eq!(m.angle, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.rate, -FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(m.accel, 0.0, epsilon = 1e-15);

        let m = gait.half_cycle_shifted().eval(0.0);
        assert_abs_diff_eq!(m.angle, -FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(m.rate, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.accel, FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        let r = ReducedState::new(2.0 * PI + 0.1, 0.0, 0.0, 0.0, 7.0);
        assert_abs_diff_eq!(r.alpha, 0.1, epsilon = 1e-12);
        assert_eq!(r.theta, 7.0);
    }

    #[test]
    fn full_state_packing() {
        let mut s = FullState::zeros(2);
        s.set_pose(1, Pose::new(1.0, 2.0, 3.0));
        s.v[9] = -4.0;
        let back = FullState::from_vector(&s.to_vector(), 2);
        assert_eq!(back, s);
        assert_eq!(back.robot_count(), 2);
        assert_eq!(back.pose(1), Pose::new(1.0, 2.0, 3.0));
        assert_eq!(back.platform_velocity(), [0.0, -4.0]);
    }

    fn central(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn gait_derivatives_match_finite_differences(
            amplitude in 0.05f64..1.5,
            omega in 0.2f64..3.0,
            phase in -PI..PI,
            bias in -1.0f64..1.0,
            t in 0.0f64..50.0,
        ) {
            let g = GaitSignal::new(amplitude, omega, phase, bias);
            let h = 1e-6;
            let rate = g.eval(t).rate;
            let accel = g.eval(t).accel;
            let fd_rate = central(|s| g.eval(s).angle, t, h);
            let fd_accel = central(|s| g.eval(s).rate, t, h);
            // absolute floor handles zero crossings of the derivative
            let scale = amplitude * omega * omega.max(1.0);
            prop_assert!((fd_rate - rate).abs() <= 1e-6 * rate.abs() + 1e-8 * scale);
            prop_assert!((fd_accel - accel).abs() <= 1e-6 * accel.abs() + 1e-8 * scale * omega);
        }
    }
}
