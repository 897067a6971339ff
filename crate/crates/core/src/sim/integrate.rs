//! Explicit Runge–Kutta time stepping.
//!
//! `Rk45Adaptive` is the Dormand–Prince 5(4) pair with an elementary step
//! controller. Steps are clipped so that every output time is hit exactly;
//! [`OdeSystem::after_step`] runs once per accepted step and may modify the
//! state (velocity projection, prescribed-coordinate resync, supervisor
//! switching).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn rates(&mut self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>>;

    fn after_step(&mut self, _t: f64, _y: &mut DVector<f64>) -> Result<()> {
        Ok(())
    }
}

/// Plain right-hand side without a post-step hook.
pub struct FnSystem<F>(pub F);

impl<F> OdeSystem for FnSystem<F>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    fn rates(&mut self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        (self.0)(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub method: Method,
    /// Fixed step for `rk4_fixed`; initial step hint otherwise.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Post-step velocity projection onto the constraints.
    pub projection: bool,
    /// Upper bound on the adaptive step.
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    /// Cap on attempted steps, so a run that stiffens without bound fails
    /// instead of stalling.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_step() -> f64 {
    0.1
}

fn default_max_steps() -> usize {
    100_000
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            step: 1e-2,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            projection: true,
            max_step: default_max_step(),
            max_steps: default_max_steps(),
        }
    }
}

impl IntegratorSpec {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            step,
            ..Self::default()
        }
    }

    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Same spec with both tolerances divided by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            step: if self.method == Method::Rk4Fixed {
                self.step / factor.powf(0.25)
            } else {
                self.step
            },
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(
                    format!("integrator.{name}"),
                    format!("must be positive, got {v}"),
                ))
            }
        };
        positive("step", self.step)?;
        positive("max_step", self.max_step)?;
        if self.max_steps == 0 {
            return Err(Error::param("integrator.max_steps", "must be at least 1"));
        }
        if self.method == Method::Rk45Adaptive {
            positive("abs_tol", self.abs_tol)?;
            positive("rel_tol", self.rel_tol)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One classical fourth-order step.
pub fn rk4_step<S: OdeSystem + ?Sized>(
    system: &mut S,
    t: f64,
    y: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let k1 = system.rates(t, y)?;
    let k2 = system.rates(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = system.rates(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = system.rates(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Step-size controller safety factor. The error norm is the max norm.
const SAFETY: f64 = 0.8;

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Fifth-order solution and the scaled error norm of one trial step.
fn dopri_trial<S: OdeSystem + ?Sized>(
    system: &mut S,
    t: f64,
    y: &DVector<f64>,
    h: f64,
    spec: &IntegratorSpec,
) -> Result<(DVector<f64>, f64)> {
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    for stage in 0..7 {
        let mut yi = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = A[stage][j];
            if a != 0.0 {
                yi.axpy(h * a, kj, 1.0);
            }
        }
        k.push(system.rates(t + C[stage] * h, &yi)?);
    }
    let mut y5 = y.clone();
    let mut err = DVector::zeros(y.len());
    for (i, ki) in k.iter().enumerate() {
        y5.axpy(h * B5[i], ki, 1.0);
        err.axpy(h * (B5[i] - B4[i]), ki, 1.0);
    }
    let norm = err
        .iter()
        .zip(y.iter().zip(y5.iter()))
        .map(|(e, (a, b))| (e / (spec.abs_tol + spec.rel_tol * a.abs().max(b.abs()))).abs())
        .fold(0.0, f64::max);
    Ok((y5, norm))
}

/// Integrates from `t0` to `t1`, calling `observe` at `t0`, at every multiple
/// of `output_interval` and at `t1`. With no interval, every accepted step is
/// observed. The observer sees the system after its post-step hook.
// negated comparisons also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn integrate<S, O>(
    system: &mut S,
    y0: DVector<f64>,
    t0: f64,
    t1: f64,
    spec: &IntegratorSpec,
    output_interval: Option<f64>,
    mut observe: O,
) -> Result<Stats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(&S, f64, &DVector<f64>) -> Result<()>,
{
    spec.validate()?;
    if !(t1 > t0) {
        return Err(Error::param("horizon", format!("t1 = {t1} must exceed t0 = {t0}")));
    }
    if let Some(dt) = output_interval {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("output_interval", format!("must be positive, got {dt}")));
        }
    }

    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0;
    observe(system, t, &y)?;

    let mut next_output = 1usize;
    let output_time = |k: usize| match output_interval {
        Some(dt) => (t0 + k as f64 * dt).min(t1),
        None => t1,
    };
    let mut h = spec.step.min(spec.max_step);
    let min_step = 1e-13 * (t1 - t0).abs().max(1.0);

    while t < t1 {
        if stats.accepted + stats.rejected >= spec.max_steps {
            return Err(Error::StepBudgetExhausted {
                t,
                steps: spec.max_steps,
            });
        }
        let target = output_time(next_output);
        let room = target - t;
        let (step, clipped) = if h >= room { (room, true) } else { (h, false) };

        let (y_new, accepted, next_h) = match spec.method {
            Method::Rk4Fixed => {
                stats.evaluations += 4;
                (rk4_step(system, t, &y, step)?, true, spec.step)
            }
            Method::Rk45Adaptive => {
                stats.evaluations += 7;
                let (y5, err) = dopri_trial(system, t, &y, step, spec)?;
                let factor = if !err.is_finite() {
                    0.2
                } else if err == 0.0 {
                    5.0
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                let proposal = (step * factor).min(spec.max_step);
                if err <= 1.0 {
                    // keep the unclipped step size going forward
                    let carry = if clipped { proposal.max(h) } else { proposal };
                    (y5, true, carry.min(spec.max_step))
                } else {
                    (y5, false, proposal)
                }
            }
        };

        if !accepted {
            stats.rejected += 1;
            h = next_h;
            if !(h >= min_step) {
                return Err(Error::StepSizeUnderflow {
                    t,
                    state_norm: y.norm(),
                });
            }
            continue;
        }

        stats.accepted += 1;
        t = if clipped { target } else { t + step };
        y = y_new;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        system.after_step(t, &mut y)?;
        h = next_h;

        if clipped {
            observe(system, t, &y)?;
            next_output += 1;
        } else if output_interval.is_none() {
            observe(system, t, &y)?;
        }
    }
    Ok(stats)
}

/// Collects `(t, y)` samples.
pub fn solve<S: OdeSystem + ?Sized>(
    system: &mut S,
    y0: DVector<f64>,
    t0: f64,
    t1: f64,
    spec: &IntegratorSpec,
    output_interval: Option<f64>,
) -> Result<Vec<(f64, DVector<f64>)>> {
    let mut out = Vec::new();
    integrate(system, y0, t0, t1, spec, output_interval, |_, t, y| {
        out.push((t, y.clone()));
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_relative_eq;

    use super::*;

    fn growth() -> FnSystem<impl FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>> {
        FnSystem(|_t: f64, y: &DVector<f64>| Ok(y.clone()))
    }

    fn oscillator() -> FnSystem<impl FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>> {
        FnSystem(|_t: f64, y: &DVector<f64>| Ok(DVector::from_vec(vec![y[1], -y[0]])))
    }

    #[test]
    fn rk4_constant_state() {
        let mut sys = FnSystem(|_t: f64, y: &DVector<f64>| Ok(DVector::zeros(y.len())));
        let y = DVector::from_vec(vec![1.5, -2.0]);
        assert_eq!(rk4_step(&mut sys, 0.0, &y, 0.3).unwrap(), y);
    }

    #[test]
    fn rk4_single_exponential_step() {
        let y = rk4_step(&mut growth(), 0.0, &DVector::from_vec(vec![1.0]), 0.1).unwrap();
        assert!((y[0] - 0.1f64.exp()).abs() < 1e-7);
        assert!((y[0] - 1.105170918).abs() < 1e-7);
    }

    #[test]
    fn rk4_global_order_is_four() {
        let err = |h: f64| {
            let out = solve(
                &mut growth(),
                DVector::from_vec(vec![1.0]),
                0.0,
                1.0,
                &IntegratorSpec::rk4(h),
                None,
            )
            .unwrap();
            (out.last().unwrap().1[0] - 1f64.exp()).abs()
        };
        let hs = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = hs.iter().map(|&h| err(h)).collect();
        for w in 0..2 {
            let slope = (errs[w] / errs[w + 1]).ln() / (hs[w] / hs[w + 1]).ln();
            assert!((slope - 4.0).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn adaptive_oscillator_keeps_energy() {
        let spec = IntegratorSpec {
            projection: false,
            ..IntegratorSpec::adaptive(1e-12, 1e-9)
        };
        let out = solve(
            &mut oscillator(),
            DVector::from_vec(vec![1.0, 0.0]),
            0.0,
            200.0 * PI,
            &spec,
            None,
        )
        .unwrap();
        let y = &out.last().unwrap().1;
        let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((energy - 0.5).abs() / 0.5 < 1e-7, "drift {:e}", (energy - 0.5).abs() / 0.5);
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn adaptive_self_convergence() {
        let run = |tol: f64| {
            let out = solve(
                &mut oscillator(),
                DVector::from_vec(vec![1.0, 0.0]),
                0.0,
                10.0,
                &IntegratorSpec::adaptive(tol, tol),
                None,
            )
            .unwrap();
            out.last().unwrap().1.clone()
        };
        let loose = run(1e-6);
        let tight = run(1e-7);
        assert!((loose - tight).norm() < 10.0 * 1e-6);
    }

    #[test]
    fn output_grid_is_hit_exactly() {
        let out = solve(
            &mut oscillator(),
            DVector::from_vec(vec![1.0, 0.0]),
            0.0,
            1.0,
            &IntegratorSpec::default(),
            Some(0.25),
        )
        .unwrap();
        let times: Vec<f64> = out.iter().map(|(t, _)| *t).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn underflow_is_reported() {
        // finite-time blow-up at t = 1
        let mut sys = FnSystem(|_t: f64, y: &DVector<f64>| Ok(y.map(|v| v * v)));
        let err = solve(
            &mut sys,
            DVector::from_vec(vec![1.0]),
            0.0,
            2.0,
            &IntegratorSpec::default(),
            None,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::StepSizeUnderflow { .. } | Error::NonFinite { .. }
        ));
    }

    #[test]
    fn step_budget_stops_the_run() {
        let mut sys = FnSystem(|_t: f64, y: &DVector<f64>| Ok(-y));
        let spec = IntegratorSpec {
            max_steps: 10,
            ..IntegratorSpec::rk4(1e-3)
        };
        let err = solve(&mut sys, DVector::from_vec(vec![1.0]), 0.0, 1.0, &spec, None).unwrap_err();
        assert!(matches!(err, Error::StepBudgetExhausted { steps: 10, .. }));
    }

    #[test]
    fn bad_specs_rejected() {
        let spec = IntegratorSpec {
            abs_tol: 0.0,
            ..IntegratorSpec::default()
        };
        assert!(spec.validate().is_err());
        assert!(IntegratorSpec::rk4(-1.0).validate().is_err());
        let r = solve(&mut oscillator(), DVector::zeros(2), 1.0, 1.0, &IntegratorSpec::default(), None);
        assert!(r.is_err());
    }
}
