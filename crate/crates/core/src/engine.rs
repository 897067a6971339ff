//! Full-coordinate constrained dynamics for robots on a translating platform.
//!
//! Accelerations come from Gauss's principle of least constraint: among all
//! accelerations compatible with the differentiated no-slip constraints and
//! with the prescribed coordinates, pick the one closest to the unconstrained
//! acceleration `M⁻¹ f` in the kinetic-energy metric. This is the same
//! minimizer as the Gibbs–Appell equations over admissible accelerations.
//!
//! Coordinates follow [`FullState`](crate::model::FullState): per robot
//! `(α, x, y, θ)` relative to the platform, then the inertial platform
//! displacement `(X, Y)`. Link velocities include the platform velocity;
//! the constraints only see platform-relative velocities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    dof, FullState, GaitSignal, PlatformMode, PlatformParams, RobotParams, ROBOT_DOF,
};

/// Singular values of the free constraint Jacobian below this fraction of the
/// largest one are treated as rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointDrive {
    /// Joint angle follows the gait exactly.
    Gait(GaitSignal),
    /// Unactuated joint loaded by the robot's torsional spring.
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSlot {
    pub params: RobotParams,
    pub drive: JointDrive,
}

impl RobotSlot {
    pub fn gait(params: RobotParams, gait: GaitSignal) -> Self {
        Self {
            params,
            drive: JointDrive::Gait(gait),
        }
    }

    pub fn passive(params: RobotParams) -> Self {
        Self {
            params,
            drive: JointDrive::Passive,
        }
    }
}

/// Inputs that only matter for prescribed platforms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngineInput {
    /// Inertial platform acceleration `(Ẍ, Ÿ)` for an accelerated platform.
    pub platform_accel: [f64; 2],
}

impl EngineInput {
    pub fn platform(ax: f64, ay: f64) -> Self {
        Self {
            platform_accel: [ax, ay],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedAccelResult {
    /// Accelerations of every coordinate; prescribed entries carry their pinned values.
    pub accel: DVector<f64>,
    /// One per constraint row, with `M q̈ = f + Aᵀ λ` on the free rows.
    pub multipliers: DVector<f64>,
    /// Gauss function at the solution.
    pub gauss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Positions, Jacobians and velocity-product terms of one link's center.
struct LinkKinematics {
    mass: f64,
    inertia: f64,
    /// Center Jacobian rows (x then y), as sparse `(column, dx, dy)` triples.
    jacobian: Vec<(usize, f64, f64)>,
    /// `J̇ v` of the center.
    bias: [f64; 2],
    /// Columns whose rates sum to the link's angular velocity.
    spin: Vec<usize>,
}

impl LinkKinematics {
    fn velocity(&self, v: &DVector<f64>) -> [f64; 2] {
        self.jacobian.iter().fold([0.0, 0.0], |acc, &(c, dx, dy)| {
            [acc[0] + dx * v[c], acc[1] + dy * v[c]]
        })
    }

    fn angular_velocity(&self, v: &DVector<f64>) -> f64 {
        self.spin.iter().map(|&c| v[c]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    robots: Vec<RobotSlot>,
    platform: PlatformParams,
    free: Vec<usize>,
    prescribed: Vec<usize>,
}

/// Coordinate index, pinned `(value, rate)` if any, and pinned acceleration.
type PinnedMotion = (usize, Option<(f64, f64)>, f64);

impl EngineConfig {
    pub fn new(robots: Vec<RobotSlot>, platform: PlatformParams) -> Result<Self> {
        if robots.is_empty() {
            return Err(Error::param("robots", "at least one robot is required"));
        }
        for (i, slot) in robots.iter().enumerate() {
            slot.params.validate().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => {
                    Error::param(format!("robots[{i}].{field}"), reason)
                }
                other => other,
            })?;
        }
        platform.validate()?;

        let n = dof(robots.len());
        let mut free = Vec::new();
        let mut prescribed = Vec::new();
        for (i, slot) in robots.iter().enumerate() {
            let b = ROBOT_DOF * i;
            match slot.drive {
                JointDrive::Gait(_) => prescribed.push(b),
                JointDrive::Passive => free.push(b),
            }
            free.extend([b + 1, b + 2, b + 3]);
        }
        match platform.mode {
            PlatformMode::Free => free.extend([n - 2, n - 1]),
            PlatformMode::Stationary | PlatformMode::Accelerated => {
                prescribed.extend([n - 2, n - 1])
            }
        }
        free.sort_unstable();
        prescribed.sort_unstable();
        Ok(Self {
            robots,
            platform,
            free,
            prescribed,
        })
    }

    pub fn robots(&self) -> &[RobotSlot] {
        &self.robots
    }

    pub fn platform(&self) -> &PlatformParams {
        &self.platform
    }

    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    pub fn dof(&self) -> usize {
        dof(self.robots.len())
    }

    pub fn constraint_count(&self) -> usize {
        2 * self.robots.len()
    }

    pub fn free_coordinates(&self) -> &[usize] {
        &self.free
    }

    pub fn prescribed_coordinates(&self) -> &[usize] {
        &self.prescribed
    }

    pub fn coordinate_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dof());
        for i in 1..=self.robots.len() {
            for c in ["alpha", "x", "y", "theta"] {
                names.push(format!("{c}_{i}"));
            }
        }
        names.push("X".into());
        names.push("Y".into());
        names
    }

    fn platform_columns(&self) -> (usize, usize) {
        let n = self.dof();
        (n - 2, n - 1)
    }

    fn links(&self, q: &DVector<f64>, v: &DVector<f64>) -> Vec<LinkKinematics> {
        let (px, py) = self.platform_columns();
        let mut links = Vec::with_capacity(2 * self.robots.len());
        for (i, slot) in self.robots.iter().enumerate() {
            let b = ROBOT_DOF * i;
            let p = &slot.params;
            let (alpha, theta) = (q[b], q[b + 3]);
            let (alpha_dot, theta_dot) = (v[b], v[b + 3]);
            let (st, ct) = theta.sin_cos();
            let (sh, ch) = (theta + alpha).sin_cos();
            let half_t = 0.5 * p.tail.length;
            let half_h = 0.5 * p.head.length;

            links.push(LinkKinematics {
                mass: p.tail.mass,
                inertia: p.tail.inertia,
                jacobian: vec![
                    (b + 1, 1.0, 0.0),
                    (b + 2, 0.0, 1.0),
                    (px, 1.0, 0.0),
                    (py, 0.0, 1.0),
                ],
                bias: [0.0, 0.0],
                spin: vec![b + 3],
            });

            let head_spin = theta_dot + alpha_dot;
            links.push(LinkKinematics {
                mass: p.head.mass,
                inertia: p.head.inertia,
                jacobian: vec![
                    (b, -half_h * sh, half_h * ch),
                    (b + 1, 1.0, 0.0),
                    (b + 2, 0.0, 1.0),
                    (b + 3, -half_t * st - half_h * sh, half_t * ct + half_h * ch),
                    (px, 1.0, 0.0),
                    (py, 0.0, 1.0),
                ],
                bias: [
                    -half_t * theta_dot * theta_dot * ct - half_h * head_spin * head_spin * ch,
                    -half_t * theta_dot * theta_dot * st - half_h * head_spin * head_spin * sh,
                ],
                spin: vec![b, b + 3],
            });
        }
        links
    }

    /// Hessian of the kinetic energy in the generalized velocities.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let mut m = DMatrix::zeros(n, n);
        for link in self.links(q, &DVector::zeros(n)) {
            for &(r, rx, ry) in &link.jacobian {
                for &(c, cx, cy) in &link.jacobian {
                    m[(r, c)] += link.mass * (rx * cx + ry * cy);
                }
            }
            for &r in &link.spin {
                for &c in &link.spin {
                    m[(r, c)] += link.inertia;
                }
            }
        }
        let (px, py) = self.platform_columns();
        let platform_mass = self.platform_block_mass();
        m[(px, px)] += platform_mass;
        m[(py, py)] += platform_mass;
        m
    }

    /// Mass on the platform block of the metric. A prescribed platform keeps
    /// the metric positive definite with its own mass, or unit mass if it has
    /// none; the free-coordinate accelerations never see this entry.
    fn platform_block_mass(&self) -> f64 {
        match self.platform.mode {
            PlatformMode::Free => self.platform.mass,
            _ if self.platform.mass > 0.0 => self.platform.mass,
            _ => 1.0,
        }
    }

    /// Velocity-product (Coriolis and centripetal) generalized forces `Σ m Jᵀ J̇ v`.
    pub fn velocity_forces(&self, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(self.dof());
        for link in self.links(q, v) {
            for &(r, rx, ry) in &link.jacobian {
                c[r] += link.mass * (rx * link.bias[0] + ry * link.bias[1]);
            }
        }
        c
    }

    /// Spring torques `-k α` on passive joints.
    pub fn applied_forces(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut f = DVector::zeros(self.dof());
        for (i, slot) in self.robots.iter().enumerate() {
            if slot.drive == JointDrive::Passive {
                let b = ROBOT_DOF * i;
                f[b] = -slot.params.spring_stiffness * q[b];
            }
        }
        f
    }

    /// `f = Q − Σ m Jᵀ J̇ v`, so that unconstrained motion obeys `M q̈ = f`.
    pub fn generalized_forces(&self, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.applied_forces(q) - self.velocity_forces(q, v)
    }

    /// No-slip rows, two per robot (tail then head), over all coordinates.
    pub fn constraint_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.constraint_count(), self.dof());
        for (i, slot) in self.robots.iter().enumerate() {
            let b = ROBOT_DOF * i;
            let p = &slot.params;
            let (alpha, theta) = (q[b], q[b + 3]);
            let (st, ct) = theta.sin_cos();
            let (sh, ch) = (theta + alpha).sin_cos();
            a[(2 * i, b + 1)] = -st;
            a[(2 * i, b + 2)] = ct;
            a[(2 * i + 1, b)] = 0.5 * p.head.length;
            a[(2 * i + 1, b + 1)] = -sh;
            a[(2 * i + 1, b + 2)] = ch;
            a[(2 * i + 1, b + 3)] = 0.5 * (p.head.length + p.tail.length * alpha.cos());
        }
        a
    }

    /// `(dA/dt) v`, in closed form.
    pub fn constraint_rate_product(&self, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.constraint_count());
        for (i, slot) in self.robots.iter().enumerate() {
            let b = ROBOT_DOF * i;
            let (alpha, theta) = (q[b], q[b + 3]);
            let (ad, xd, yd, td) = (v[b], v[b + 1], v[b + 2], v[b + 3]);
            let (st, ct) = theta.sin_cos();
            let (sh, ch) = (theta + alpha).sin_cos();
            out[2 * i] = -td * (ct * xd + st * yd);
            out[2 * i + 1] = -(td + ad) * (ch * xd + sh * yd)
                - 0.5 * slot.params.tail.length * alpha.sin() * ad * td;
        }
        out
    }

    /// `(dA/dt) v` by Richardson-extrapolated central differences along `v`.
    pub fn constraint_rate_product_numeric(
        &self,
        q: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        let diff = |h: f64| {
            let ahead = self.constraint_jacobian(&(q + v * h));
            let behind = self.constraint_jacobian(&(q - v * h));
            (ahead - behind) * v / (2.0 * h)
        };
        let h = 1e-3;
        (diff(h / 2.0) * 4.0 - diff(h)) / 3.0
    }

    /// Pinned `(value, rate, accel)` of every prescribed coordinate at `t`.
    /// Accelerated-platform values and rates are integrated, so they are `None`.
    fn prescribed_motion(&self, t: f64, input: &EngineInput) -> Vec<PinnedMotion> {
        let (px, py) = self.platform_columns();
        let mut out = Vec::with_capacity(self.prescribed.len());
        for (i, slot) in self.robots.iter().enumerate() {
            if let JointDrive::Gait(gait) = slot.drive {
                let m = gait.eval(t);
                out.push((ROBOT_DOF * i, Some((m.angle, m.rate)), m.accel));
            }
        }
        match self.platform.mode {
            PlatformMode::Stationary => {
                out.push((px, Some((0.0, 0.0)), 0.0));
                out.push((py, Some((0.0, 0.0)), 0.0));
            }
            PlatformMode::Accelerated => {
                out.push((px, None, input.platform_accel[0]));
                out.push((py, None, input.platform_accel[1]));
            }
            PlatformMode::Free => {}
        }
        out
    }

    /// Overwrites gait-driven joints and a stationary platform with their exact values.
    pub fn sync_prescribed(&self, t: f64, state: &mut FullState) {
        for (c, pinned, _) in self.prescribed_motion(t, &EngineInput::default()) {
            if let Some((value, rate)) = pinned {
                state.q[c] = value;
                state.v[c] = rate;
            }
        }
    }

    fn prescribed_accel(&self, t: f64, input: &EngineInput) -> DVector<f64> {
        let mut a = DVector::zeros(self.dof());
        for (c, _, accel) in self.prescribed_motion(t, input) {
            a[c] = accel;
        }
        a
    }

    fn select(&self, cols: &[usize], m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
    }

    fn check_rank(&self, a_free: &DMatrix<f64>) -> Result<()> {
        let sv = a_free.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if max == 0.0 || min < RANK_TOLERANCE * max {
            let ratio = if max == 0.0 { 0.0 } else { min / max };
            return Err(Error::RankDeficient {
                rows: most_parallel_rows(a_free),
                ratio,
            });
        }
        Ok(())
    }

    /// Right-hand sides shared by both solution routes: the free-row force
    /// `f_F − M_FP a_P` and the free-column constraint target `−Ȧv − A_P a_P`.
    fn reduced_problem(
        &self,
        q: &DVector<f64>,
        v: &DVector<f64>,
        t: f64,
        input: &EngineInput,
    ) -> Result<ReducedProblem> {
        let m = self.mass_matrix(q);
        let f = self.generalized_forces(q, v);
        let a = self.constraint_jacobian(q);
        let pinned = self.prescribed_accel(t, input);
        let m_pinned = &m * &pinned;
        let a_pinned = &a * &pinned;
        let target = -self.constraint_rate_product(q, v) - a_pinned;

        let free = &self.free;
        let m_ff = DMatrix::from_fn(free.len(), free.len(), |r, c| m[(free[r], free[c])]);
        let a_f = self.select(free, &a);
        let force = DVector::from_fn(free.len(), |r, _| f[free[r]] - m_pinned[free[r]]);
        self.check_rank(&a_f)?;
        Ok(ReducedProblem {
            m,
            f,
            pinned,
            m_ff,
            a_f,
            force,
            target,
        })
    }

    fn assemble(&self, problem: &ReducedProblem, free_accel: &DVector<f64>, multipliers: DVector<f64>) -> ConstrainedAccelResult {
        let mut accel = problem.pinned.clone();
        for (k, &c) in self.free.iter().enumerate() {
            accel[c] = free_accel[k];
        }
        let gauss = gauss_function(&problem.m, &problem.f, &accel);
        ConstrainedAccelResult {
            accel,
            multipliers,
            gauss,
        }
    }

    /// Constrained accelerations from the multiplier (saddle-point) system.
    pub fn constrained_accel(
        &self,
        q: &DVector<f64>,
        v: &DVector<f64>,
        t: f64,
        input: &EngineInput,
    ) -> Result<ConstrainedAccelResult> {
        let pr = self.reduced_problem(q, v, t, input)?;
        let nf = self.free.len();
        let nc = self.constraint_count();
        let mut kkt = DMatrix::zeros(nf + nc, nf + nc);
        kkt.view_mut((0, 0), (nf, nf)).copy_from(&pr.m_ff);
        kkt.view_mut((0, nf), (nf, nc)).copy_from(&pr.a_f.transpose());
        kkt.view_mut((nf, 0), (nc, nf)).copy_from(&pr.a_f);
        let mut rhs = DVector::zeros(nf + nc);
        rhs.rows_mut(0, nf).copy_from(&pr.force);
        rhs.rows_mut(nf, nc).copy_from(&pr.target);

        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or(Error::SolveFailed("constrained_accel"))?;
        let free_accel = sol.rows(0, nf).into_owned();
        let multipliers = -sol.rows(nf, nc).into_owned();
        Ok(self.assemble(&pr, &free_accel, multipliers))
    }

    /// Same accelerations as [`constrained_accel`](Self::constrained_accel),
    /// obtained by minimizing the Gauss function over the constraint null space.
    pub fn constrained_accel_least_constraint(
        &self,
        q: &DVector<f64>,
        v: &DVector<f64>,
        t: f64,
        input: &EngineInput,
    ) -> Result<ConstrainedAccelResult> {
        let pr = self.reduced_problem(q, v, t, input)?;
        let nf = self.free.len();
        let nc = self.constraint_count();

        let svd = pr.a_f.clone().svd(true, true);
        let v_t = svd.v_t.as_ref().ok_or(Error::SolveFailed("null space"))?;
        let particular = svd
            .solve(&pr.target, 0.0)
            .map_err(|_| Error::SolveFailed("particular solution"))?;
        // rows of Vᵀ beyond the rank span the null space; rank == nc after check_rank
        let full_v_t = full_right_singular_vectors(&pr.a_f, v_t, nc);
        let null = full_v_t.rows(nc, nf - nc).transpose();

        let reduced_m = null.transpose() * &pr.m_ff * &null;
        let reduced_rhs = null.transpose() * (&pr.force - &pr.m_ff * &particular);
        let z = reduced_m
            .cholesky()
            .ok_or(Error::SolveFailed("reduced mass matrix"))?
            .solve(&reduced_rhs);
        let free_accel = particular + &null * z;

        let residual_force = &pr.m_ff * &free_accel - &pr.force;
        let gram = &pr.a_f * pr.a_f.transpose();
        let multipliers = gram
            .cholesky()
            .ok_or(Error::SolveFailed("multiplier recovery"))?
            .solve(&(&pr.a_f * residual_force));
        Ok(self.assemble(&pr, &free_accel, multipliers))
    }

    /// `½ (q̈ − M⁻¹f)ᵀ M (q̈ − M⁻¹f)`.
    pub fn gauss_value(&self, q: &DVector<f64>, v: &DVector<f64>, accel: &DVector<f64>) -> f64 {
        gauss_function(&self.mass_matrix(q), &self.generalized_forces(q, v), accel)
    }

    /// Kinetic energy of the links (plus a free platform) and spring energy.
    /// For a free or stationary platform the kinetic part equals `½ vᵀ M v`.
    pub fn energy(&self, q: &DVector<f64>, v: &DVector<f64>) -> Energy {
        let mut kinetic: f64 = self
            .links(q, v)
            .iter()
            .map(|link| {
                let vel = link.velocity(v);
                let spin = link.angular_velocity(v);
                0.5 * link.mass * (vel[0] * vel[0] + vel[1] * vel[1])
                    + 0.5 * link.inertia * spin * spin
            })
            .sum();
        if self.platform.mode == PlatformMode::Free {
            let (px, py) = self.platform_columns();
            kinetic += 0.5 * self.platform.mass * (v[px] * v[px] + v[py] * v[py]);
        }
        let potential = self
            .robots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.drive == JointDrive::Passive)
            .map(|(i, s)| 0.5 * s.params.spring_stiffness * q[ROBOT_DOF * i].powi(2))
            .sum();
        Energy { kinetic, potential }
    }

    /// Inertial linear momentum of every link plus a free platform.
    pub fn system_momentum(&self, q: &DVector<f64>, v: &DVector<f64>) -> [f64; 2] {
        let mut total = [0.0, 0.0];
        for link in self.links(q, v) {
            let vel = link.velocity(v);
            total[0] += link.mass * vel[0];
            total[1] += link.mass * vel[1];
        }
        if self.platform.mode == PlatformMode::Free {
            let (px, py) = self.platform_columns();
            total[0] += self.platform.mass * v[px];
            total[1] += self.platform.mass * v[py];
        }
        total
    }

    /// Largest `|A_i v| / ‖A_i‖` over the constraint rows.
    pub fn constraint_residual(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let a = self.constraint_jacobian(q);
        let av = &a * v;
        (0..a.nrows())
            .map(|r| av[r].abs() / a.row(r).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest kinetic-metric correction of the free velocities that restores `A v = 0`.
    pub fn project_velocities(&self, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.mass_matrix(q);
        let a = self.constraint_jacobian(q);
        let free = &self.free;
        let m_ff = DMatrix::from_fn(free.len(), free.len(), |r, c| m[(free[r], free[c])]);
        let a_f = self.select(free, &a);
        self.check_rank(&a_f)?;
        let violation = &a * v;
        let chol = m_ff
            .cholesky()
            .ok_or(Error::SolveFailed("projection mass matrix"))?;
        let minv_at = chol.solve(&a_f.transpose());
        let schur = &a_f * &minv_at;
        let lambda = schur
            .cholesky()
            .ok_or(Error::SolveFailed("projection Schur complement"))?
            .solve(&violation);
        let correction = minv_at * lambda;
        let mut out = v.clone();
        for (k, &c) in free.iter().enumerate() {
            out[c] -= correction[k];
        }
        Ok(out)
    }

    /// Inertial velocities of the robot's tail and head link centers.
    pub fn link_velocities(&self, q: &DVector<f64>, v: &DVector<f64>, robot: usize) -> [[f64; 2]; 2] {
        let links = self.links(q, v);
        [links[2 * robot].velocity(v), links[2 * robot + 1].velocity(v)]
    }

    /// Angular velocities of the robot's tail and head links.
    pub fn link_spins(&self, q: &DVector<f64>, v: &DVector<f64>, robot: usize) -> [f64; 2] {
        let links = self.links(q, v);
        [
            links[2 * robot].angular_velocity(v),
            links[2 * robot + 1].angular_velocity(v),
        ]
    }
}

struct ReducedProblem {
    m: DMatrix<f64>,
    f: DVector<f64>,
    pinned: DVector<f64>,
    m_ff: DMatrix<f64>,
    a_f: DMatrix<f64>,
    force: DVector<f64>,
    target: DVector<f64>,
}

fn gauss_function(m: &DMatrix<f64>, f: &DVector<f64>, accel: &DVector<f64>) -> f64 {
    // M is SPD for any valid configuration; fall back to LU if round-off says otherwise.
    let free_accel = match m.clone().cholesky() {
        Some(chol) => chol.solve(f),
        None => m.clone().lu().solve(f).unwrap_or_else(|| f.clone()),
    };
    let d = accel - free_accel;
    0.5 * d.dot(&(m * &d))
}

/// Completes the thin `Vᵀ` of an SVD to an orthonormal basis of the column space.
fn full_right_singular_vectors(a: &DMatrix<f64>, v_t: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let n = a.ncols();
    if v_t.nrows() == n {
        return v_t.clone();
    }
    // Gram–Schmidt against the row space, seeded with coordinate axes.
    let mut basis: Vec<DVector<f64>> = (0..rank).map(|r| v_t.row(r).transpose()).collect();
    for axis in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = DVector::zeros(n);
        e[axis] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&e);
                e -= b * proj;
            }
        }
        let norm = e.norm();
        if norm > 1e-6 {
            basis.push(e / norm);
        }
    }
    DMatrix::from_fn(n, n, |r, c| basis[r][c])
}

/// Pair of rows whose directions are closest to parallel.
fn most_parallel_rows(a: &DMatrix<f64>) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_cos = -1.0;
    for i in 0..a.nrows() {
        for j in i + 1..a.nrows() {
            let (ri, rj) = (a.row(i), a.row(j));
            let denom = ri.norm() * rj.norm();
            let cos = if denom == 0.0 {
                1.0
            } else {
                (ri.dot(&rj) / denom).abs()
            };
            if cos > best_cos {
                best_cos = cos;
                best = (i, j);
            }
        }
    }
    best
}
