//! Closed-form model of one robot on a stationary platform.
//!
//! Configuration is `(α, x, y, θ)`: joint angle, tail wheel position and tail
//! heading. Admissible velocities are spanned by the roll field (rolling along
//! a circular arc at fixed `α`) and the scissor field (flexing from rest).
//! The momentum `p` is the pairing of the kinetic momentum with the roll
//! field; together with a prescribed `α(t)` it determines the motion.
//!
//! The `(α, p)` chart is singular where `sin α = 0`: the roll field and `p`
//! both carry a `1 / sin α`. The scaled momentum `μ = p sin α` is regular
//! there and is what [`regularized_rates`] integrates.

use crate::error::{Error, Result};
use crate::model::{GaitSignal, ReducedState, RobotParams};

/// `|sin α|` below which the singular chart quantities are refused.
pub const SINGULAR_GUARD: f64 = 1e-9;

/// Scalar functions of the joint angle that appear in the momentum equation
/// and the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    /// Normalizer of the scissor field, `2 (4 sin²α + (λ_h + λ_t cos α)²)`.
    pub delta: f64,
    /// Coefficient of `p α̇` in the momentum equation.
    pub momentum_gain: f64,
    /// Coefficient of `α̇²`; zero for a front-to-back symmetric robot.
    pub asymmetry_gain: f64,
    /// Generalized inertia; strictly positive away from the folded
    /// configuration of a robot with equal link lengths.
    pub inertia: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCovectors {
    /// No lateral slip of the tail wheel.
    pub tail: [f64; 4],
    /// No lateral slip of the head wheel.
    pub head: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFields {
    pub roll: [f64; 4],
    pub scissor: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRates {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Time derivative of `(p, x, y, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedRates {
    pub momentum: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

pub fn pairing(covector: &[f64; 4], vector: &[f64; 4]) -> f64 {
    covector.iter().zip(vector).map(|(a, b)| a * b).sum()
}

/// Pairing after scaling the covector to unit Euclidean norm.
pub fn normalized_pairing(covector: &[f64; 4], vector: &[f64; 4]) -> f64 {
    let norm = covector.iter().map(|c| c * c).sum::<f64>().sqrt();
    pairing(covector, vector) / norm
}

fn lever(alpha: f64, p: &RobotParams) -> f64 {
    p.head.length + p.tail.length * alpha.cos()
}

fn check_chart(alpha: f64, context: &'static str) -> Result<f64> {
    let s = alpha.sin();
    if s.abs() < SINGULAR_GUARD {
        return Err(Error::SingularConfiguration {
            context,
            sin_alpha: s.abs(),
        });
    }
    Ok(s)
}

pub fn coefficients(alpha: f64, params: &RobotParams) -> CoefficientSet {
    let (mh, lh, jh) = (params.head.mass, params.head.length, params.head.inertia);
    let (mt, lt, jt) = (params.tail.mass, params.tail.length, params.tail.inertia);
    let c = alpha.cos();
    let c2 = (2.0 * alpha).cos();
    let m = mh + mt;

    let delta = 4.0 + 2.0 * lh * lh + lt * lt + 4.0 * lh * lt * c + (lt * lt - 4.0) * c2;
    let momentum_gain = -4.0 * m * (2.0 * (lh * lh + lt * lt) * c + lh * lt * (3.0 + c2));
    let asymmetry_gain = -8.0 * m * (jt * lh * lh - jh * lt * lt) * c
        + lh * lt
            * (4.0 * jh * (2.0 * mh + mt) - 4.0 * jt * (mh + 2.0 * mt)
                + mh * mt * (lh - lt) * (lh + lt)
                + (4.0 * jh * mt - 4.0 * jt * mh + mh * mt * (lt * lt - lh * lh)) * c2);
    let inertia = 4.0 * jh
        + 4.0 * jt
        + (mh + 2.0 * mt) * lh * lh
        + (2.0 * mh + mt) * lt * lt
        + 4.0 * m * lh * lt * c
        + (mh * lh * lh + mt * lt * lt - 4.0 * jh - 4.0 * jt) * c2;

    CoefficientSet {
        delta,
        momentum_gain,
        asymmetry_gain,
        inertia,
    }
}

/// `(momentum_gain + 4 inertia cos α) / (8 sin²α)`, in closed form so that the
/// scaled momentum equation stays regular at `sin α = 0`.
fn scaled_momentum_kernel(alpha: f64, params: &RobotParams) -> f64 {
    let (mh, lh, jh) = (params.head.mass, params.head.length, params.head.inertia);
    let (mt, lt, jt) = (params.tail.mass, params.tail.length, params.tail.inertia);
    (4.0 * (jh + jt) - mh * lh * lh - mt * lt * lt) * alpha.cos() - (mh + mt) * lh * lt
}

/// `ṗ = (momentum_gain · p + asymmetry_gain · α̇) α̇ / (4 · inertia · sin α)`.
pub fn momentum_rate(alpha: f64, p: f64, alpha_dot: f64, params: &RobotParams) -> Result<f64> {
    if alpha_dot == 0.0 {
        return Ok(0.0);
    }
    let s = check_chart(alpha, "momentum_rate")?;
    let k = coefficients(alpha, params);
    Ok((k.momentum_gain * p + k.asymmetry_gain * alpha_dot) * alpha_dot / (4.0 * k.inertia * s))
}

/// Rate of the scaled momentum `μ = p sin α`; defined for every `α`.
pub fn scaled_momentum_rate(alpha: f64, mu: f64, alpha_dot: f64, params: &RobotParams) -> f64 {
    let k = coefficients(alpha, params);
    let kernel = scaled_momentum_kernel(alpha, params);
    (2.0 * alpha.sin() * kernel * mu + 0.25 * k.asymmetry_gain * alpha_dot) * alpha_dot / k.inertia
}

fn reconstruction_terms(alpha: f64, params: &RobotParams) -> (f64, f64) {
    let (mh, lh, jh) = (params.head.mass, params.head.length, params.head.inertia);
    let (mt, lt, jt) = (params.tail.mass, params.tail.length, params.tail.inertia);
    let c = alpha.cos();
    let forward = lh * (4.0 * jt + mh * lt * lt) + (mh * lh * lh - 4.0 * jh) * lt * c;
    let turning = 4.0 * jh
        + (mh + 2.0 * mt) * lh * lh
        + 2.0 * (mh + mt) * lh * lt * c
        + (mh * lh * lh - 4.0 * jh) * (2.0 * alpha).cos();
    (forward, turning)
}

/// Velocities `(ẋ, ẏ, θ̇)` from the shape velocity and the momentum.
pub fn reconstruct_rates(
    alpha: f64,
    p: f64,
    alpha_dot: f64,
    theta: f64,
    params: &RobotParams,
) -> BodyRates {
    scaled_reconstruct_rates(alpha, p * alpha.sin(), alpha_dot, theta, params)
}

/// [`reconstruct_rates`] written in terms of `μ = p sin α`.
pub fn scaled_reconstruct_rates(
    alpha: f64,
    mu: f64,
    alpha_dot: f64,
    theta: f64,
    params: &RobotParams,
) -> BodyRates {
    let k = coefficients(alpha, params);
    let s = alpha.sin();
    let (forward, turning) = reconstruction_terms(alpha, params);
    let speed = (4.0 * lever(alpha, params) * mu + s * forward * alpha_dot) / k.inertia;
    let (st, ct) = theta.sin_cos();
    BodyRates {
        x: ct * speed,
        y: st * speed,
        theta: (8.0 * mu * s - turning * alpha_dot) / k.inertia,
    }
}

/// No-slip covectors over `(α, x, y, θ)`.
pub fn constraint_forms(alpha: f64, theta: f64, params: &RobotParams) -> ConstraintCovectors {
    let (st, ct) = theta.sin_cos();
    let (sh, ch) = (theta + alpha).sin_cos();
    ConstraintCovectors {
        tail: [0.0, -st, ct, 0.0],
        head: [
            0.5 * params.head.length,
            -sh,
            ch,
            0.5 * lever(alpha, params),
        ],
    }
}

pub fn scissor_field(alpha: f64, theta: f64, params: &RobotParams) -> [f64; 4] {
    let delta = coefficients(alpha, params).delta;
    let lh = params.head.length;
    let (st, ct) = theta.sin_cos();
    let s = alpha.sin();
    [
        1.0,
        4.0 * lh * s * ct / delta,
        4.0 * lh * s * st / delta,
        -2.0 * lh * lever(alpha, params) / delta,
    ]
}

pub fn roll_field(alpha: f64, theta: f64, params: &RobotParams) -> Result<[f64; 4]> {
    let s = check_chart(alpha, "roll_field")?;
    let radius = lever(alpha, params) / (2.0 * s);
    let (st, ct) = theta.sin_cos();
    Ok([0.0, radius * ct, radius * st, 1.0])
}

pub fn basis_fields(alpha: f64, theta: f64, params: &RobotParams) -> Result<BasisFields> {
    Ok(BasisFields {
        roll: roll_field(alpha, theta, params)?,
        scissor: scissor_field(alpha, theta, params),
    })
}

/// Momentum-covector coefficients on `(ẋ, ẏ)`, each multiplied by `sin α`.
fn scaled_rho_xy(alpha: f64, theta: f64, params: &RobotParams) -> (f64, f64) {
    let (mh, lh) = (params.head.mass, params.head.length);
    let (mt, lt) = (params.tail.mass, params.tail.length);
    let (s, c) = alpha.sin_cos();
    let (st, ct) = theta.sin_cos();
    let along = 2.0 * (mh + mt) * lt * c + lh * (mh + 2.0 * mt + mh * (2.0 * alpha).cos());
    let across = 2.0 * mh * (lt + lh * c);
    (along * ct - across * s * st, across * s * ct + along * st)
}

fn rho_theta(alpha: f64, params: &RobotParams) -> f64 {
    let (mh, lh, jh) = (params.head.mass, params.head.length, params.head.inertia);
    let (lt, jt) = (params.tail.length, params.tail.inertia);
    4.0 * (jh + jt) + mh * lt * lt + mh * lh * lt * alpha.cos()
}

/// `p` from a velocity `(α̇, ẋ, ẏ, θ̇)`.
pub fn nonholonomic_momentum(
    alpha: f64,
    theta: f64,
    velocity: [f64; 4],
    params: &RobotParams,
) -> Result<f64> {
    let s = check_chart(alpha, "nonholonomic_momentum")?;
    Ok(scaled_momentum(alpha, theta, velocity, params) / s)
}

/// `μ = p sin α`, defined for every configuration.
pub fn scaled_momentum(alpha: f64, theta: f64, velocity: [f64; 4], params: &RobotParams) -> f64 {
    let [alpha_dot, xd, yd, thd] = velocity;
    let s = alpha.sin();
    let (rx, ry) = scaled_rho_xy(alpha, theta, params);
    params.head.inertia * alpha_dot * s
        + 0.25 * (rx * xd + ry * yd + s * rho_theta(alpha, params) * thd)
}

/// Rates of `(p, x, y, θ)` with the joint angle read from the gait.
pub fn reduced_vector_field(
    state: &ReducedState,
    gait: &GaitSignal,
    t: f64,
    params: &RobotParams,
) -> Result<ReducedRates> {
    let joint = gait.eval(t);
    let body = reconstruct_rates(joint.angle, state.momentum, joint.rate, state.theta, params);
    Ok(ReducedRates {
        momentum: momentum_rate(joint.angle, state.momentum, joint.rate, params)?,
        x: body.x,
        y: body.y,
        theta: body.theta,
    })
}

/// Rates of `(μ, x, y, θ)` for a joint at `(α, α̇)`.
pub fn regularized_rates(
    alpha: f64,
    alpha_dot: f64,
    mu: f64,
    theta: f64,
    params: &RobotParams,
) -> [f64; 4] {
    let body = scaled_reconstruct_rates(alpha, mu, alpha_dot, theta, params);
    [
        scaled_momentum_rate(alpha, mu, alpha_dot, params),
        body.x,
        body.y,
        body.theta,
    ]
}
