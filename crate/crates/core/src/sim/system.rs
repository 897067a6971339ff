//! Engine-backed right-hand sides for the integrator.

use nalgebra::DVector;

use crate::control::{
    controller_step, ControlOutput, HeadingProfile, HeadingReference, HeadingTarget,
    InputFrame, ReferenceFilter, TrackingGains, WaypointSupervisor,
};
use crate::engine::{EngineConfig, EngineInput};
use crate::error::Result;
use crate::model::{dof, FullState};
use crate::sim::integrate::OdeSystem;
use crate::sim::trajectory::{ControlSample, Diagnostics, Sample};

fn split(y: &DVector<f64>, robots: usize) -> FullState {
    FullState::from_vector(&y.rows(0, 2 * dof(robots)).into_owned(), robots)
}

fn write_back(y: &mut DVector<f64>, state: &FullState) {
    let n = state.q.len();
    y.rows_mut(0, n).copy_from(&state.q);
    y.rows_mut(n, n).copy_from(&state.v);
}

/// Post-step resync of prescribed coordinates plus optional velocity projection.
fn restore(config: &EngineConfig, projection: bool, t: f64, y: &mut DVector<f64>) -> Result<()> {
    let mut state = split(y, config.robot_count());
    config.sync_prescribed(t, &mut state);
    if projection {
        state.v = config.project_velocities(&state.q, &state.v)?;
    }
    write_back(y, &state);
    Ok(())
}

/// Gait-driven or passive robots on a stationary or free platform.
pub struct OpenLoop {
    pub config: EngineConfig,
    pub projection: bool,
}

impl OdeSystem for OpenLoop {
    fn rates(&mut self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        let state = split(y, self.config.robot_count());
        let accel = self
            .config
            .constrained_accel(&state.q, &state.v, t, &EngineInput::default())?
            .accel;
        Ok(FullState { q: state.v, v: accel }.to_vector())
    }

    fn after_step(&mut self, t: f64, y: &mut DVector<f64>) -> Result<()> {
        restore(&self.config, self.projection, t, y)
    }
}

/// Where the heading reference comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    Profile(HeadingProfile),
    /// Geometric heading to the active target, smoothed by a prefilter whose
    /// state `(r, ṙ)` trails the engine state in the integration vector.
    Waypoints {
        supervisor: WaypointSupervisor,
        filter: ReferenceFilter,
    },
}

/// Passive robot on an accelerated platform under heading feedback.
pub struct ClosedLoop {
    pub config: EngineConfig,
    pub gains: TrackingGains,
    pub reference: ReferenceSource,
    pub frame: InputFrame,
    pub projection: bool,
}

impl ClosedLoop {
    /// Length of the integration vector.
    pub fn state_len(&self) -> usize {
        let base = 2 * self.config.dof();
        match self.reference {
            ReferenceSource::Profile(_) => base,
            ReferenceSource::Waypoints { .. } => base + 2,
        }
    }

    /// Integration vector for an engine state. The prefilter starts at the
    /// robot's heading with zero rate.
    pub fn initial_vector(&self, state: &FullState) -> DVector<f64> {
        let mut y = DVector::zeros(self.state_len());
        write_back(&mut y, state);
        if let ReferenceSource::Waypoints { .. } = self.reference {
            let n = 2 * self.config.dof();
            y[n] = state.pose(0).theta;
        }
        y
    }

    /// Reference at `(t, y)` and the prefilter rates, if any.
    fn target(&self, t: f64, y: &DVector<f64>, state: &FullState) -> (HeadingTarget, Option<[f64; 2]>) {
        match &self.reference {
            ReferenceSource::Profile(p) => (p.at(t), None),
            ReferenceSource::Waypoints { supervisor, filter } => {
                let n = 2 * self.config.dof();
                let (r, rd) = (y[n], y[n + 1]);
                let pose = state.pose(0);
                let geometric = supervisor.desired_heading([pose.x, pose.y], r);
                let target = filter.output(r, rd, geometric);
                (target, Some([rd, target.accel]))
            }
        }
    }

    /// Controller output and reference at one point of the integration vector.
    pub fn evaluate(&self, t: f64, y: &DVector<f64>) -> Result<(ControlOutput, HeadingTarget)> {
        let state = split(y, self.config.robot_count());
        let (target, _) = self.target(t, y, &state);
        let out = controller_step(&self.config, &state, t, &target, &self.gains, 0, self.frame)?;
        Ok((out, target))
    }

    pub fn supervisor(&self) -> Option<&WaypointSupervisor> {
        match &self.reference {
            ReferenceSource::Waypoints { supervisor, .. } => Some(supervisor),
            ReferenceSource::Profile(_) => None,
        }
    }
}

impl OdeSystem for ClosedLoop {
    fn rates(&mut self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        let state = split(y, self.config.robot_count());
        let (target, filter_rates) = self.target(t, y, &state);
        let out = controller_step(&self.config, &state, t, &target, &self.gains, 0, self.frame)?;
        let [ax, ay] = out.platform_accel;
        let accel = self
            .config
            .constrained_accel(&state.q, &state.v, t, &EngineInput::platform(ax, ay))?
            .accel;
        let mut rates = DVector::zeros(y.len());
        write_back(&mut rates, &FullState { q: state.v, v: accel });
        if let Some([a, b]) = filter_rates {
            let n = 2 * self.config.dof();
            rates[n] = a;
            rates[n + 1] = b;
        }
        Ok(rates)
    }

    fn after_step(&mut self, t: f64, y: &mut DVector<f64>) -> Result<()> {
        restore(&self.config, self.projection, t, y)?;
        if let ReferenceSource::Waypoints { supervisor, .. } = &mut self.reference {
            let state = split(y, self.config.robot_count());
            supervisor.update(t, state.pose(0));
        }
        Ok(())
    }
}

/// Sample with diagnostics for an engine state.
pub fn sample(config: &EngineConfig, t: f64, state: FullState, control: Option<ControlSample>) -> Sample {
    Sample {
        t,
        diagnostics: Diagnostics::evaluate(config, &state),
        state,
        control,
    }
}

/// Splits an integration vector into the engine state.
pub fn engine_state(config: &EngineConfig, y: &DVector<f64>) -> FullState {
    split(y, config.robot_count())
}
