use crate::engine::EngineConfig;
use crate::model::{FullState, ReducedState, ROBOT_DOF};
use crate::reduced;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub kinetic: f64,
    pub potential: f64,
    /// Total inertial momentum `(P_X, P_Y)`.
    pub momentum: [f64; 2],
    /// Largest normalized velocity-constraint violation.
    pub constraint_residual: f64,
}

impl Diagnostics {
    pub fn evaluate(config: &EngineConfig, state: &FullState) -> Self {
        let energy = config.energy(&state.q, &state.v);
        Self {
            kinetic: energy.kinetic,
            potential: energy.potential,
            momentum: config.system_momentum(&state.q, &state.v),
            constraint_residual: config.constraint_residual(&state.q, &state.v),
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.kinetic + self.potential
    }

    pub fn momentum_norm(&self) -> f64 {
        self.momentum[0].hypot(self.momentum[1])
    }
}

/// Heading-controller internals at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlSample {
    pub theta_d: f64,
    pub u_theta: f64,
    pub c_x: f64,
    pub c_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: FullState,
    pub diagnostics: Diagnostics,
    pub control: Option<ControlSample>,
}

/// Samples of one run on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: String,
    pub robots: usize,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(label: impl Into<String>, robots: usize) -> Self {
        Self {
            label: label.into(),
            robots,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whether rows carry controller columns. Decided by the first sample.
    pub fn has_control(&self) -> bool {
        self.samples.first().is_some_and(|s| s.control.is_some())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// One coordinate of `q` across all samples.
    pub fn coordinate(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.q[index]).collect()
    }

    pub fn alpha(&self, robot: usize) -> Vec<f64> {
        self.coordinate(ROBOT_DOF * robot)
    }

    pub fn theta(&self, robot: usize) -> Vec<f64> {
        self.coordinate(ROBOT_DOF * robot + 3)
    }

    /// Platform-relative wheel positions of one robot.
    pub fn robot_path(&self, robot: usize) -> Vec<[f64; 2]> {
        self.samples
            .iter()
            .map(|s| {
                let p = s.state.pose(robot);
                [p.x, p.y]
            })
            .collect()
    }

    pub fn platform_path(&self) -> Vec<[f64; 2]> {
        self.samples
            .iter()
            .map(|s| s.state.platform_position())
            .collect()
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.diagnostics.constraint_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_momentum_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.diagnostics.momentum_norm())
            .fold(0.0, f64::max)
    }

    /// Reduced coordinates of one robot at one sample, where the momentum chart is defined.
    pub fn reduced_state(
        &self,
        config: &EngineConfig,
        sample: usize,
        robot: usize,
    ) -> Option<ReducedState> {
        let s = self.samples.get(sample)?;
        let slot = config.robots().get(robot)?;
        let [ad, xd, yd, td] = s.state.robot_rates(robot);
        let alpha = s.state.alpha(robot);
        let pose = s.state.pose(robot);
        let p = reduced::nonholonomic_momentum(alpha, pose.theta, [ad, xd, yd, td], &slot.params)
            .ok()?;
        Some(ReducedState::new(alpha, p, pose.x, pose.y, pose.theta))
    }
}
