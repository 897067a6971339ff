//! Cross-check of the reduced model against the constrained engine.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::model::{GaitSignal, Pose, RobotParams};
use crate::reduced;
use crate::sim::integrate::{solve, FnSystem, IntegratorSpec};
use crate::sim::scenario::Setup;
use crate::sim::system::{engine_state, OpenLoop};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonSettings {
    pub params: RobotParams,
    pub gait: GaitSignal,
    pub horizon: f64,
    /// Momentum is compared only where `|sin α| > exclusion`.
    pub exclusion: f64,
    pub output_interval: f64,
    pub integrator: IntegratorSpec,
}

impl ComparisonSettings {
    /// Reference robot with a gait held away from the straight configuration.
    pub fn oracle_default() -> Self {
        Self {
            params: RobotParams::asymmetric_reference(),
            gait: GaitSignal::new(0.3, 1.0, 0.0, FRAC_PI_2),
            horizon: 10.0,
            exclusion: 0.05,
            output_interval: 0.01,
            integrator: IntegratorSpec::adaptive(1e-12, 1e-12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Sup-norm gaps in `(x, y, θ, α)`.
    pub pose_gap: [f64; 4],
    /// Sup-norm gap in `p` on the compared samples.
    pub momentum_gap: f64,
    /// Largest `|p|` of the reduced model on the compared samples.
    pub momentum_scale: f64,
    pub samples: usize,
    pub momentum_samples: usize,
}

impl ComparisonReport {
    pub fn max_pose_gap(&self) -> f64 {
        self.pose_gap.iter().copied().fold(0.0, f64::max)
    }

    /// Momentum gap relative to the momentum scale; zero when neither model moves.
    pub fn relative_momentum_gap(&self) -> f64 {
        if self.momentum_scale > 0.0 {
            self.momentum_gap / self.momentum_scale
        } else {
            self.momentum_gap
        }
    }
}

/// Integrates one gait-driven robot on fixed ground twice, through the
/// reduced `(μ, x, y, θ)` flow and through the engine, on a shared output grid.
pub fn compare_reduced_engine(settings: &ComparisonSettings) -> Result<ComparisonReport> {
    let ComparisonSettings {
        params,
        gait,
        horizon,
        exclusion,
        output_interval,
        integrator,
    } = *settings;
    let setup = Setup::Stationary {
        robots: vec![crate::coupling::RobotSetup::gait(params, Pose::default(), gait)],
    };
    let (config, state) = setup.build()?;

    let mut engine = OpenLoop {
        config: config.clone(),
        projection: integrator.projection,
    };
    let engine_path = solve(&mut engine, state.to_vector(), 0.0, horizon, &integrator, Some(output_interval))?;

    let pose = state.pose(0);
    let mu0 = reduced::scaled_momentum(state.alpha(0), pose.theta, state.robot_rates(0), &params);
    let mut flow = FnSystem(|t: f64, y: &DVector<f64>| {
        let joint = gait.eval(t);
        Ok(DVector::from_row_slice(&reduced::regularized_rates(
            joint.angle,
            joint.rate,
            y[0],
            y[3],
            &params,
        )))
    });
    let y0 = DVector::from_vec(vec![mu0, pose.x, pose.y, pose.theta]);
    let reduced_path = solve(&mut flow, y0, 0.0, horizon, &integrator, Some(output_interval))?;

    let mut report = ComparisonReport {
        pose_gap: [0.0; 4],
        momentum_gap: 0.0,
        momentum_scale: 0.0,
        samples: engine_path.len().min(reduced_path.len()),
        momentum_samples: 0,
    };
    for ((t, ye), (_, yr)) in engine_path.iter().zip(&reduced_path) {
        let s = engine_state(&config, ye);
        let p = s.pose(0);
        let alpha = s.alpha(0);
        let joint = gait.eval(*t).angle;
        let gaps = [p.x - yr[1], p.y - yr[2], p.theta - yr[3], alpha - joint];
        for (acc, g) in report.pose_gap.iter_mut().zip(gaps) {
            *acc = acc.max(g.abs());
        }
        let sin = joint.sin();
        if sin.abs() > exclusion {
            let p_engine = reduced::nonholonomic_momentum(alpha, p.theta, s.robot_rates(0), &params)?;
            let p_reduced = yr[0] / sin;
            report.momentum_gap = report.momentum_gap.max((p_engine - p_reduced).abs());
            report.momentum_scale = report.momentum_scale.max(p_reduced.abs());
            report.momentum_samples += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_gait_gives_zero_gap() {
        let settings = ComparisonSettings {
            gait: GaitSignal::new(0.0, 1.0, 0.0, FRAC_PI_2),
            horizon: 2.0,
            ..ComparisonSettings::oracle_default()
        };
        let r = compare_reduced_engine(&settings).unwrap();
        assert_eq!(r.max_pose_gap(), 0.0);
        assert_eq!(r.momentum_gap, 0.0);
    }

    #[test]
    fn symmetric_robot_keeps_zero_momentum_in_both_models() {
        let settings = ComparisonSettings {
            params: RobotParams::symmetric_reference(),
            horizon: 3.0,
            ..ComparisonSettings::oracle_default()
        };
        let r = compare_reduced_engine(&settings).unwrap();
        assert!(r.momentum_scale < 1e-12, "{r:?}");
        assert!(r.momentum_gap < 1e-10, "{r:?}");
        assert!(r.max_pose_gap() < 1e-8, "{r:?}");
    }
}
