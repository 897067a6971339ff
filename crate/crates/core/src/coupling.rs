//! Several robots sharing one translating platform.
//!
//! Each robot's coordinates are relative to the platform; the platform's
//! inertial displacement closes the coordinate list. Momentum exchange with the
//! platform is not imposed separately: the engine integrates the whole system
//! and total momentum is monitored as a diagnostic.

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, EngineInput, RobotSlot};
use crate::error::{Error, Result};
use crate::model::{FullState, GaitSignal, PlatformMode, PlatformParams, Pose, RobotParams, ROBOT_DOF};
use crate::sim::trajectory::Trajectory;

/// How a robot's joint moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveSetup {
    Gait { gait: GaitSignal },
    /// Spring-loaded joint released at the given angle and rate.
    Passive { alpha: f64, alpha_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSetup {
    pub params: RobotParams,
    /// Initial pose relative to the platform.
    pub pose: Pose,
    pub drive: DriveSetup,
}

impl RobotSetup {
    pub fn gait(params: RobotParams, pose: Pose, gait: GaitSignal) -> Self {
        Self {
            params,
            pose,
            drive: DriveSetup::Gait { gait },
        }
    }

    pub fn passive(params: RobotParams, pose: Pose, alpha: f64) -> Self {
        Self {
            params,
            pose,
            drive: DriveSetup::Passive {
                alpha,
                alpha_rate: 0.0,
            },
        }
    }

    fn slot(&self) -> RobotSlot {
        match self.drive {
            DriveSetup::Gait { gait } => RobotSlot::gait(self.params, gait),
            DriveSetup::Passive { .. } => RobotSlot::passive(self.params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolSpec {
    pub robots: Vec<RobotSetup>,
    pub platform: PlatformParams,
    /// Initial inertial platform velocity, shared by every robot at rest relative to it.
    #[serde(default)]
    pub platform_velocity: [f64; 2],
}

impl SchoolSpec {
    pub fn new(robots: Vec<RobotSetup>, platform: PlatformParams) -> Self {
        Self {
            robots,
            platform,
            platform_velocity: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.robots.is_empty() {
            return Err(Error::param("robots", "at least one robot is required"));
        }
        self.platform.validate()?;
        if self.platform.mode == PlatformMode::Stationary && self.platform_velocity != [0.0, 0.0] {
            return Err(Error::param(
                "platform_velocity",
                "a stationary platform cannot move",
            ));
        }
        for (i, robot) in self.robots.iter().enumerate() {
            let finite = [robot.pose.x, robot.pose.y, robot.pose.theta]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::param(format!("robots[{i}].pose"), "must be finite"));
            }
        }
        Ok(())
    }
}

/// Assembles the coupled system. Gait-driven joints become prescribed coordinates.
pub fn build_school(spec: &SchoolSpec) -> Result<EngineConfig> {
    spec.validate()?;
    EngineConfig::new(spec.robots.iter().map(RobotSetup::slot).collect(), spec.platform)
}

/// Initial state at `t = 0`: poses and joint angles from the `SchoolSpec`, every robot at
/// rest relative to the platform apart from its joint rate, then projected onto
/// the constraints.
pub fn initial_state(config: &EngineConfig, spec: &SchoolSpec) -> Result<FullState> {
    let n = spec.robots.len();
    if config.robot_count() != n {
        return Err(Error::RobotIndex {
            index: n,
            count: config.robot_count(),
        });
    }
    let mut state = FullState::zeros(n);
    for (i, robot) in spec.robots.iter().enumerate() {
        state.set_pose(i, robot.pose);
        let b = ROBOT_DOF * i;
        let (alpha, rate) = match robot.drive {
            DriveSetup::Gait { gait } => {
                let m = gait.eval(0.0);
                (m.angle, m.rate)
            }
            DriveSetup::Passive { alpha, alpha_rate } => (alpha, alpha_rate),
        };
        state.q[b] = alpha;
        state.v[b] = rate;
    }
    let p = state.v.len() - 2;
    state.v[p] = spec.platform_velocity[0];
    state.v[p + 1] = spec.platform_velocity[1];
    config.sync_prescribed(0.0, &mut state);
    state.v = config.project_velocities(&state.q, &state.v)?;
    Ok(state)
}

/// Platform velocity resolved along and across a robot's heading.
pub fn platform_frame_velocities(theta: f64, xd: f64, yd: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (xd * c + yd * s, -xd * s + yd * c)
}

/// Time derivative of `(q, v)` for an unforced system.
pub fn coupled_rates(config: &EngineConfig, state: &FullState, t: f64) -> Result<FullState> {
    let solved = config.constrained_accel(&state.q, &state.v, t, &EngineInput::default())?;
    Ok(FullState {
        q: state.v.clone(),
        v: solved.accel,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementReport {
    /// Platform-relative wheel positions, one per sample.
    pub path: Vec<[f64; 2]>,
    /// Distance between the first and last positions.
    pub net_displacement: f64,
    /// Final minus initial heading.
    pub heading_change: f64,
}

impl DisplacementReport {
    pub fn displacement(&self) -> [f64; 2] {
        match (self.path.first(), self.path.last()) {
            (Some(a), Some(b)) => [b[0] - a[0], b[1] - a[1]],
            _ => [0.0, 0.0],
        }
    }

    /// Largest distance from the start–end chord over every `stride`-th point,
    /// relative to the chord length. Zero for a degenerate chord.
    pub fn chord_deviation(&self, stride: usize) -> f64 {
        let stride = stride.max(1);
        let [dx, dy] = self.displacement();
        let len = dx.hypot(dy);
        if len == 0.0 {
            return 0.0;
        }
        let start = self.path[0];
        self.path
            .iter()
            .step_by(stride)
            .map(|p| ((p[0] - start[0]) * dy - (p[1] - start[1]) * dx).abs() / len)
            .fold(0.0, f64::max)
            / len
    }
}

pub fn displacement_report(trajectory: &Trajectory, robot: usize) -> Result<DisplacementReport> {
    if robot >= trajectory.robots {
        return Err(Error::RobotIndex {
            index: robot,
            count: trajectory.robots,
        });
    }
    let path = trajectory.robot_path(robot);
    let heading = trajectory.theta(robot);
    let net_displacement = match (path.first(), path.last()) {
        (Some(a), Some(b)) => (b[0] - a[0]).hypot(b[1] - a[1]),
        _ => 0.0,
    };
    let heading_change = match (heading.first(), heading.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    Ok(DisplacementReport {
        path,
        net_displacement,
        heading_change,
    })
}

/// Pose of a second robot placed `spacing` to the left of `pose`.
pub fn beside(pose: Pose, spacing: f64) -> Pose {
    let (s, c) = pose.theta.sin_cos();
    Pose::new(pose.x - spacing * s, pose.y + spacing * c, pose.theta)
}

/// The four two-robot arrangements used to show how one robot's motion bends
/// the other's path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairVariant {
    /// Same heading, same gait.
    Synchronized,
    /// Same heading, gait half a cycle out of phase.
    Mirrored,
    /// Second robot turned a quarter turn left.
    TurnedLeft,
    /// Second robot turned a quarter turn right, gait out of phase.
    TurnedRight,
}

impl PairVariant {
    pub const ALL: [PairVariant; 4] = [
        PairVariant::Synchronized,
        PairVariant::Mirrored,
        PairVariant::TurnedLeft,
        PairVariant::TurnedRight,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PairVariant::Synchronized => "synchronized",
            PairVariant::Mirrored => "mirrored",
            PairVariant::TurnedLeft => "turned_left",
            PairVariant::TurnedRight => "turned_right",
        }
    }

    /// Two-robot school with the first robot at the origin heading along +x.
    pub fn school(
        self,
        params: RobotParams,
        gait: GaitSignal,
        spacing: f64,
        platform_mass: f64,
    ) -> SchoolSpec {
        let first = Pose::new(0.0, 0.0, 0.0);
        let side = beside(first, spacing);
        let quarter = std::f64::consts::FRAC_PI_2;
        let (theta, second_gait) = match self {
            PairVariant::Synchronized => (0.0, gait),
            PairVariant::Mirrored => (0.0, gait.half_cycle_shifted()),
            PairVariant::TurnedLeft => (quarter, gait),
            PairVariant::TurnedRight => (-quarter, gait.half_cycle_shifted()),
        };
        SchoolSpec::new(
            vec![
                RobotSetup::gait(params, first, gait),
                RobotSetup::gait(params, Pose::new(side.x, side.y, theta), second_gait),
            ],
            PlatformParams::free(platform_mass),
        )
    }
}
