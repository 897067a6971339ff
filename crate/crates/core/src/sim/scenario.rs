//! Named, file-backed simulation setups and their runner.
//!
//! A scenario holds one or more variants sharing a horizon, output cadence and
//! integrator. Every built-in is exportable as a TOML file and reloads to an
//! identical value.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{
    HeadingProfile, InputFrame, ReferenceFilter, TrackingGains, WaypointSettings, WaypointSupervisor,
};
use crate::coupling::{self, PairVariant, RobotSetup, SchoolSpec};
use crate::engine::{EngineConfig, RobotSlot};
use crate::error::{Error, Result};
use crate::model::{FullState, GaitSignal, PlatformParams, Pose, RobotParams};
use crate::reduced;
use crate::sim::integrate::{integrate, IntegratorSpec, OdeSystem, Stats};
use crate::sim::system::{engine_state, sample, ClosedLoop, OpenLoop, ReferenceSource};
use crate::sim::trajectory::{ControlSample, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlTask {
    /// Track a closed-form heading.
    Heading { profile: HeadingProfile },
    /// Head for each target in turn.
    Waypoints { waypoints: WaypointSettings },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlledSetup {
    /// Passive robot; its spring stiffness loads the joint.
    pub robot: RobotParams,
    pub pose: Pose,
    pub alpha: f64,
    #[serde(default)]
    pub alpha_rate: f64,
    /// Initial speed of the tail wheel along the heading, relative to the platform.
    #[serde(default)]
    pub forward_speed: f64,
    /// Initial rate along the roll field (the heading rate when the joint is still).
    #[serde(default)]
    pub roll_rate: f64,
    /// Initial inertial platform velocity.
    #[serde(default)]
    pub platform_velocity: [f64; 2],
    pub gains: TrackingGains,
    /// Coordinates of the allocated platform input.
    #[serde(default)]
    pub input_frame: InputFrame,
    pub task: ControlTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case")]
pub enum Setup {
    /// Robots on fixed ground.
    Stationary { robots: Vec<RobotSetup> },
    /// Robots on a free platform of the given mass.
    School {
        platform_mass: f64,
        #[serde(default)]
        platform_velocity: [f64; 2],
        robots: Vec<RobotSetup>,
    },
    /// One passive robot steered by accelerating the platform.
    Controlled(ControlledSetup),
}

impl Setup {
    fn school_spec(&self) -> Option<SchoolSpec> {
        match self {
            Setup::Stationary { robots } => {
                Some(SchoolSpec::new(robots.clone(), PlatformParams::stationary()))
            }
            Setup::School {
                platform_mass,
                platform_velocity,
                robots,
            } => Some(SchoolSpec {
                robots: robots.clone(),
                platform: PlatformParams::free(*platform_mass),
                platform_velocity: *platform_velocity,
            }),
            Setup::Controlled(_) => None,
        }
    }

    pub fn robot_count(&self) -> usize {
        match self {
            Setup::Stationary { robots } | Setup::School { robots, .. } => robots.len(),
            Setup::Controlled(_) => 1,
        }
    }

    /// Engine configuration and initial state.
    pub fn build(&self) -> Result<(EngineConfig, FullState)> {
        if let Some(spec) = self.school_spec() {
            let config = coupling::build_school(&spec)?;
            let state = coupling::initial_state(&config, &spec)?;
            return Ok((config, state));
        }
        let Setup::Controlled(c) = self else {
            unreachable!("open-loop setups handled above")
        };
        c.gains.validate()?;
        if let ControlTask::Waypoints { waypoints } = &c.task {
            waypoints.validate()?;
        }
        let config = EngineConfig::new(vec![RobotSlot::passive(c.robot)], PlatformParams::accelerated())?;
        let mut state = FullState::zeros(1);
        state.q[0] = c.alpha;
        state.v[0] = c.alpha_rate;
        state.set_pose(0, c.pose);
        state.v[1] = c.forward_speed * c.pose.theta.cos();
        state.v[2] = c.forward_speed * c.pose.theta.sin();
        if c.roll_rate != 0.0 {
            let roll = reduced::roll_field(c.alpha, c.pose.theta, &c.robot)?;
            for (k, r) in roll.iter().enumerate().skip(1) {
                state.v[k] += c.roll_rate * r;
            }
        }
        state.v[4] = c.platform_velocity[0];
        state.v[5] = c.platform_velocity[1];
        state.v = config.project_velocities(&state.q, &state.v)?;
        Ok((config, state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub setup: Setup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Run length [s].
    pub horizon: f64,
    /// Sample spacing of the recorded trajectory [s].
    pub output_interval: f64,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    pub variants: Vec<Variant>,
}

/// Names of the built-in scenarios.
pub const BUILTIN_NAMES: [&str; 6] = [
    "fig3_school",
    "fig4_variants",
    "fig5_spring",
    "fig6_circle",
    "fig7_snake",
    "fig8_waypoints",
];

/// Lateral spacing of side-by-side robots: twice the head length.
pub const SCHOOL_SPACING: f64 = 4.0;

/// Gait cycles covered by the school scenarios.
pub const SCHOOL_CYCLES: f64 = 8.0;

/// Samples per gait cycle in the school scenarios.
pub const SAMPLES_PER_CYCLE: usize = 64;

pub fn school_gait() -> GaitSignal {
    GaitSignal::cosine(FRAC_PI_4, 1.0)
}

/// Tighter than the default so the momentum diagnostic stays below 1e-9.
fn school_integrator() -> IntegratorSpec {
    IntegratorSpec::adaptive(1e-11, 1e-11)
}

fn school_setup(spec: SchoolSpec) -> Setup {
    Setup::School {
        platform_mass: spec.platform.mass,
        platform_velocity: spec.platform_velocity,
        robots: spec.robots,
    }
}

fn spring_robot() -> RobotParams {
    RobotParams::asymmetric_reference().with_spring(1.0)
}

fn controlled(alpha: f64, roll_rate: f64, task: ControlTask) -> Setup {
    Setup::Controlled(ControlledSetup {
        robot: spring_robot(),
        pose: Pose::new(0.0, 0.0, 0.0),
        alpha,
        alpha_rate: 0.0,
        forward_speed: 0.0,
        roll_rate,
        platform_velocity: [0.0, 0.0],
        gains: TrackingGains::default(),
        input_frame: InputFrame::Inertial,
        task,
    })
}

fn single(label: &str, setup: Setup) -> Vec<Variant> {
    vec![Variant {
        label: label.to_string(),
        setup,
    }]
}

impl Scenario {
    pub fn builtin(name: &str) -> Result<Self> {
        let params = RobotParams::asymmetric_reference();
        let gait = school_gait();
        let cycles = SCHOOL_CYCLES * gait.period();
        let cadence = gait.period() / SAMPLES_PER_CYCLE as f64;
        let scenario = match name {
            "fig3_school" => Scenario {
                name: name.into(),
                description: "Two robots side by side on a free platform, same gait, from rest.".into(),
                horizon: cycles,
                output_interval: cadence,
                integrator: school_integrator(),
                variants: single(
                    "synchronized",
                    school_setup(PairVariant::Synchronized.school(params, gait, SCHOOL_SPACING, 1.0)),
                ),
            },
            "fig4_variants" => Scenario {
                name: name.into(),
                description: "Robot 1 with a partner that is in phase, out of phase, or turned a quarter turn.".into(),
                horizon: cycles,
                output_interval: cadence,
                integrator: school_integrator(),
                variants: PairVariant::ALL
                    .iter()
                    .map(|v| Variant {
                        label: v.label().into(),
                        setup: school_setup(v.school(params, gait, SCHOOL_SPACING, 1.0)),
                    })
                    .collect(),
            },
            "fig5_spring" => Scenario {
                name: name.into(),
                description: "Spring-loaded passive joint released from a bent rest state on fixed ground.".into(),
                horizon: 100.0,
                output_interval: 0.05,
                integrator: IntegratorSpec::default(),
                variants: single(
                    "spring",
                    Setup::Stationary {
                        robots: vec![RobotSetup::passive(spring_robot(), Pose::new(0.0, 0.0, 0.0), FRAC_PI_3)],
                    },
                ),
            },
            "fig6_circle" => Scenario {
                name: name.into(),
                description: "Heading driven along a unit-rate ramp by platform acceleration.".into(),
                horizon: 40.0,
                output_interval: 0.02,
                // about five times the steps a healthy 40 s closed-loop run takes
                integrator: IntegratorSpec {
                    max_steps: 30_000,
                    ..IntegratorSpec::default()
                },
                variants: single(
                    "circle",
                    controlled(
                        FRAC_PI_3,
                        1.0,
                        ControlTask::Heading {
                            profile: HeadingProfile::Ramp { offset: 0.0, rate: 1.0 },
                        },
                    ),
                ),
            },
            "fig7_snake" => Scenario {
                name: name.into(),
                description: "Heading driven along a sinusoid by platform acceleration.".into(),
                horizon: 40.0,
                output_interval: 0.02,
                integrator: IntegratorSpec::default(),
                variants: single(
                    "snake",
                    controlled(
                        FRAC_PI_3,
                        0.0,
                        ControlTask::Heading {
                            profile: HeadingProfile::Sine {
                                offset: 0.0,
                                rate: 0.0,
                                amplitude: 0.5,
                                angular_frequency: 1.0,
                                phase: 0.0,
                            },
                        },
                    ),
                ),
            },
            "fig8_waypoints" => Scenario {
                name: name.into(),
                description: "Point-to-point navigation through three targets.".into(),
                horizon: 150.0,
                output_interval: 0.05,
                integrator: IntegratorSpec::default(),
                variants: single(
                    "waypoints",
                    controlled(
                        FRAC_PI_3,
                        0.0,
                        ControlTask::Waypoints {
                            waypoints: WaypointSettings::new(vec![
                                [-15.0, -15.0],
                                [-15.0, -30.0],
                                [0.0, -60.0],
                            ]),
                        },
                    ),
                ),
            },
            _ => {
                return Err(Error::UnknownScenario {
                    name: name.into(),
                    available: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
                })
            }
        };
        Ok(scenario)
    }

    pub fn builtins() -> Vec<Scenario> {
        BUILTIN_NAMES
            .iter()
            .map(|n| Scenario::builtin(n).expect("built-in names are valid"))
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Checks everything that can be checked without integrating.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::param("name", "must not be empty"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
            return Err(Error::param(
                "output_interval",
                format!("must be positive, got {}", self.output_interval),
            ));
        }
        self.integrator.validate()?;
        if self.variants.is_empty() {
            return Err(Error::param("variants", "at least one variant is required"));
        }
        for variant in &self.variants {
            variant.setup.build().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                    field: format!("variants[{}].{field}", variant.label),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Same scenario with integrator tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            integrator: self.integrator.tightened(factor),
            ..self.clone()
        }
    }
}

/// Result of integrating one variant.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub config: EngineConfig,
    pub trajectory: Trajectory,
    pub stats: Stats,
    /// Supervisor switching times, for waypoint tasks.
    pub switch_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub name: String,
    pub variants: Vec<VariantRun>,
}

impl ScenarioRun {
    pub fn primary(&self) -> &VariantRun {
        &self.variants[0]
    }

    pub fn variant(&self, label: &str) -> Option<&VariantRun> {
        self.variants.iter().find(|v| v.trajectory.label == label)
    }
}

/// Integrates every variant of the scenario in order.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun> {
    scenario.validate()?;
    let variants = scenario
        .variants
        .iter()
        .map(|v| run_variant(scenario, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioRun {
        name: scenario.name.clone(),
        variants,
    })
}

pub fn run_variant(scenario: &Scenario, variant: &Variant) -> Result<VariantRun> {
    match run_variant_recorded(scenario, variant)? {
        (run, None) => Ok(run),
        (_, Some(err)) => Err(err),
    }
}

/// Like [`run_variant`], but a numerical failure during integration still
/// returns the samples recorded up to it, with the error alongside.
/// Setup errors are returned as `Err`.
pub fn run_variant_recorded(scenario: &Scenario, variant: &Variant) -> Result<(VariantRun, Option<Error>)> {
    let (config, state) = variant.setup.build()?;
    let mut trajectory = Trajectory::new(&variant.label, config.robot_count());
    let spec = scenario.integrator;
    let interval = Some(scenario.output_interval);

    match &variant.setup {
        Setup::Controlled(c) => {
            let reference = match &c.task {
                ControlTask::Heading { profile } => ReferenceSource::Profile(*profile),
                ControlTask::Waypoints { waypoints } => ReferenceSource::Waypoints {
                    supervisor: WaypointSupervisor::new(waypoints.clone())?,
                    filter: ReferenceFilter {
                        time_constant: waypoints.filter_time_constant,
                    },
                },
            };
            let mut system = ClosedLoop {
                config: config.clone(),
                gains: c.gains,
                reference,
                frame: c.input_frame,
                projection: spec.projection,
            };
            let mut y0 = system.initial_vector(&state);
            system.after_step(0.0, &mut y0)?;
            let outcome = integrate(&mut system, y0, 0.0, scenario.horizon, &spec, interval, |sys, t, y| {
                let (out, target) = sys.evaluate(t, y)?;
                let control = ControlSample {
                    theta_d: target.angle,
                    u_theta: out.u_theta,
                    c_x: out.model.gain_x,
                    c_y: out.model.gain_y,
                };
                trajectory
                    .samples
                    .push(sample(&config, t, engine_state(&config, y), Some(control)));
                Ok(())
            });
            let switch_times = system
                .supervisor()
                .map(|s| s.switch_times().to_vec())
                .unwrap_or_default();
            Ok(finish(config, trajectory, outcome, switch_times))
        }
        _ => {
            let mut system = OpenLoop {
                config: config.clone(),
                projection: spec.projection,
            };
            let outcome = integrate(&mut system, state.to_vector(), 0.0, scenario.horizon, &spec, interval, |_, t, y| {
                trajectory.samples.push(sample(&config, t, engine_state(&config, y), None));
                Ok(())
            });
            Ok(finish(config, trajectory, outcome, Vec::new()))
        }
    }
}

fn finish(
    config: EngineConfig,
    trajectory: Trajectory,
    outcome: Result<Stats>,
    switch_times: Vec<f64>,
) -> (VariantRun, Option<Error>) {
    let (stats, failure) = match outcome {
        Ok(stats) => (stats, None),
        Err(e) => (Stats::default(), Some(e)),
    };
    let run = VariantRun {
        config,
        trajectory,
        stats,
        switch_times,
    };
    (run, failure)
}

/// Heading wrapped to `[0, 2π)` for display.
pub fn display_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}
