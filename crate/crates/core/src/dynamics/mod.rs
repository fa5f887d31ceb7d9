//! Articulated-chain rigid-body model: `M`, `C`, `G`, `h`, `J`, `J̇` and
//! forward dynamics for fixed-base planar chains.

mod chain;
pub mod model;

use nalgebra::{DMatrix, DVector, Matrix6xX, UnitQuaternion, Vector2, Vector3, Vector6};

pub use model::{JointKind, Link, RobotModel, RobotState};

use crate::error::{Error, Result};
use crate::wrench::Wrench;
use chain::ChainFrames;

/// Condition number above which the mass matrix is treated as singular.
pub const MAX_MASS_CONDITION: f64 = 1e12;

/// Terms of `M ν̇ + C ν + G = B τ + J_cᵀ f*`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsQuantities {
    pub mass: DMatrix<f64>,
    /// Coriolis matrix from Christoffel symbols of `mass`; `Ṁ − 2C` is skew.
    pub coriolis: DMatrix<f64>,
    pub gravity: DVector<f64>,
    /// `h = C ν + G`.
    pub bias: DVector<f64>,
    /// Maps actuated joint torques into generalized forces.
    pub selector: DMatrix<f64>,
}

/// Task-frame Jacobian, rows `[vx vy vz ωx ωy ωz]` in the inertial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskJacobian {
    pub j: Matrix6xX<f64>,
    pub j_dot: Matrix6xX<f64>,
}

/// Tracked-link pose in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Pose {
    /// `[x y z rx ry rz]` with the orientation as a rotation vector.
    pub fn to_vector6(&self) -> Vector6<f64> {
        let r = self.rotation.scaled_axis();
        Vector6::new(self.position.x, self.position.y, self.position.z, r.x, r.y, r.z)
    }
}

#[inline]
fn lift(p: Vector2<f64>) -> Vector3<f64> {
    Vector3::new(p.x, 0.0, p.y)
}

/// Rotation of a link with planar heading `angle`: a positive heading turns
/// +x towards +z, which is a rotation about −y.
#[inline]
fn planar_rotation(angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -angle)
}

fn prepare(model: &RobotModel, state: &RobotState) -> Result<ChainFrames> {
    if model.base_dof != 0 {
        return Err(Error::Unsupported(format!(
            "floating base ({} base DOF) dynamics are not implemented",
            model.base_dof
        )));
    }
    state.check(model)?;
    Ok(ChainFrames::new(model, &state.q))
}

pub fn compute_dynamics(model: &RobotModel, state: &RobotState) -> Result<DynamicsQuantities> {
    let frames = prepare(model, state)?;
    let n = frames.n();
    let mass = frames.mass_matrix(model);
    let dm = frames.mass_matrix_derivatives(model);
    let nu = &state.nu;

    // C_ik = Σ_m ½ (∂_m M_ik + ∂_k M_im − ∂_i M_km) ν_m
    let mut coriolis = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let mut c = 0.0;
            for m in 0..n {
                c += 0.5 * (dm[m][(i, k)] + dm[k][(i, m)] - dm[i][(k, m)]) * nu[m];
            }
            coriolis[(i, k)] = c;
        }
    }
    let gravity = frames.gravity_vector(model);
    let bias = &coriolis * nu + &gravity;
    Ok(DynamicsQuantities {
        mass,
        coriolis,
        gravity,
        bias,
        selector: DMatrix::identity(n, n),
    })
}

pub fn forward_kinematics(model: &RobotModel, state: &RobotState) -> Result<Pose> {
    let frames = prepare(model, state)?;
    let k = model.tracked_link;
    Ok(Pose {
        position: lift(frames.tips[k]),
        rotation: planar_rotation(frames.headings[k]),
    })
}

pub fn task_jacobian(model: &RobotModel, state: &RobotState) -> Result<TaskJacobian> {
    let frames = prepare(model, state)?;
    let n = frames.n();
    let owner = model.tracked_link;
    let tip = frames.tips[owner];

    let linear = frames.point_jacobian(tip, owner);
    let mut j = Matrix6xX::zeros(n);
    let mut j_dot = Matrix6xX::zeros(n);
    for k in 0..n {
        j[(0, k)] = linear[(0, k)];
        j[(2, k)] = linear[(1, k)];
        if k <= owner && frames.is_revolute(k) {
            j[(4, k)] = -1.0;
        }
    }
    // J̇ = Σ_m ∂J/∂q_m ν_m; the angular rows are constant for planar chains.
    for m in 0..n {
        if state.nu[m] == 0.0 {
            continue;
        }
        let d = frames.point_jacobian_derivative(tip, owner, m);
        for k in 0..n {
            j_dot[(0, k)] += d[(0, k)] * state.nu[m];
            j_dot[(2, k)] += d[(1, k)] * state.nu[m];
        }
    }
    Ok(TaskJacobian { j, j_dot })
}

/// Solves `M ν̇ = B τ + Jᵀ f* − h` with a Cholesky factorisation.
pub fn forward_dynamics(
    model: &RobotModel,
    state: &RobotState,
    tau: &DVector<f64>,
    f_ext: &Wrench,
) -> Result<DVector<f64>> {
    let dynamics = compute_dynamics(model, state)?;
    let jac = task_jacobian(model, state)?;
    accelerations(&dynamics, &jac, tau, f_ext)
}

/// Forward dynamics from precomputed quantities.
pub fn accelerations(
    dynamics: &DynamicsQuantities,
    jac: &TaskJacobian,
    tau: &DVector<f64>,
    f_ext: &Wrench,
) -> Result<DVector<f64>> {
    let n = dynamics.mass.nrows();
    if tau.len() != dynamics.selector.ncols() {
        return Err(Error::Dimension {
            what: "tau",
            expected: dynamics.selector.ncols(),
            actual: tau.len(),
        });
    }
    if !tau.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("tau"));
    }
    if !f_ext.is_finite() {
        return Err(Error::NonFinite("f_ext"));
    }
    check_conditioning(&dynamics.mass)?;
    let rhs = &dynamics.selector * tau + jac.j.transpose() * f_ext.to_vector6() - &dynamics.bias;
    let chol = dynamics
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate(format!("{n}x{n} mass matrix is not positive definite")))?;
    Ok(chol.solve(&rhs))
}

pub(crate) fn check_conditioning(mass: &DMatrix<f64>) -> Result<()> {
    let eig = mass.clone().symmetric_eigenvalues();
    let lo = eig.min();
    let hi = eig.max();
    if !(lo > 0.0) || hi / lo > MAX_MASS_CONDITION {
        return Err(Error::Degenerate(format!(
            "mass matrix condition {:.3e} exceeds {:.0e}",
            hi / lo,
            MAX_MASS_CONDITION
        )));
    }
    Ok(())
}

/// World positions of every link centre of mass.
pub fn com_positions(model: &RobotModel, q: &DVector<f64>) -> Vec<Vector3<f64>> {
    ChainFrames::new(model, q).coms.into_iter().map(lift).collect()
}

pub fn kinetic_energy(model: &RobotModel, state: &RobotState) -> Result<f64> {
    let frames = prepare(model, state)?;
    let m = frames.mass_matrix(model);
    Ok(0.5 * state.nu.dot(&(&m * &state.nu)))
}

/// Gravitational potential `Σ m g z_com`, zero at the base height.
pub fn potential_energy(model: &RobotModel, state: &RobotState) -> Result<f64> {
    let frames = prepare(model, state)?;
    Ok(model
        .links
        .iter()
        .zip(&frames.coms)
        .map(|(link, c)| link.mass * model.gravity * c.y)
        .sum())
}

pub fn total_energy(model: &RobotModel, state: &RobotState) -> Result<f64> {
    Ok(kinetic_energy(model, state)? + potential_energy(model, state)?)
}
