//! Task-space feedback linearization with an optional interaction-exploiting
//! correction term.
//!
//! The closed-loop task acceleration obeys `J ν̇ + J̇ ν = Δ τ + Ω f* − Λ`, so
//! `τ = Δ†(ẍ* − Ω f* + Λ) + N τ₀` realizes `ẍ*` on every active task row.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix6, Matrix6xX, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_conditioning, DynamicsQuantities, RobotState, TaskJacobian};
use crate::error::{Error, Result};
use crate::wrench::Wrench;

/// Singular values below this fraction of the largest one are dropped.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-8;

/// Below this desired speed the parallel direction is undefined and α = 0.
pub const VELOCITY_SINGULARITY: f64 = 1e-6;

pub const TASK_ROW_NAMES: [&str; 6] = ["x", "y", "z", "rx", "ry", "rz"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kp: Matrix6<f64>,
    pub kd: Matrix6<f64>,
}

impl Default for Gains {
    fn default() -> Self {
        Gains::diagonal(25.0, 10.0)
    }
}

impl Gains {
    pub fn diagonal(kp: f64, kd: f64) -> Self {
        Gains {
            kp: Matrix6::identity() * kp,
            kd: Matrix6::identity() * kd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("gains.kp", &self.kp), ("gains.kd", &self.kd)] {
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(name, "must be finite"));
            }
            if (m - m.transpose()).amax() > 1e-12 {
                return Err(Error::invalid(name, "must be symmetric"));
            }
            if !(m.symmetric_eigenvalues().min() > 0.0) {
                return Err(Error::invalid(name, "must be positive definite"));
            }
        }
        Ok(())
    }
}

/// Active rows of the 6-D task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskMask(pub [bool; 6]);

impl Default for TaskMask {
    fn default() -> Self {
        TaskMask([true; 6])
    }
}

impl TaskMask {
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut rows = [false; 6];
        for name in names {
            let name = name.as_ref();
            let i = TASK_ROW_NAMES
                .iter()
                .position(|r| *r == name)
                .ok_or_else(|| Error::invalid("controller.task_rows", format!("unknown task row `{name}`")))?;
            rows[i] = true;
        }
        if !rows.iter().any(|r| *r) {
            return Err(Error::invalid("controller.task_rows", "at least one row is required"));
        }
        Ok(TaskMask(rows))
    }

    pub fn apply(&self, v: &Vector6<f64>) -> Vector6<f64> {
        Vector6::from_fn(|i, _| if self.0[i] { v[i] } else { 0.0 })
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|r| **r).count()
    }

    pub fn names(&self) -> Vec<&'static str> {
        (0..6).filter(|i| self.0[*i]).map(|i| TASK_ROW_NAMES[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerVariant {
    Classical,
    #[default]
    Exploiting,
}

impl fmt::Display for ControllerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerVariant::Classical => "classical",
            ControllerVariant::Exploiting => "exploiting",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMatrices {
    /// `S J M⁻¹ B`; inactive rows are zero.
    pub delta: Matrix6xX<f64>,
    /// `J M⁻¹ J_cᵀ` over all six rows.
    pub omega: Matrix6<f64>,
    /// `J M⁻¹ h − J̇ ν`.
    pub lambda: Vector6<f64>,
    pub delta_pinv: DMatrix<f64>,
    pub null_proj: DMatrix<f64>,
}

/// Moore–Penrose pseudo-inverse by SVD. With `damping > 0` each kept
/// singular value maps to `σ / (σ² + λ²)`.
pub fn pseudo_inverse(m: &DMatrix<f64>, damping: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.max();
    let cutoff = PINV_RELATIVE_CUTOFF * s_max;
    let mut out = DMatrix::zeros(c, r);
    if !(s_max > 0.0) {
        return out;
    }
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let inv = if damping > 0.0 {
            s / (s * s + damping * damping)
        } else {
            1.0 / s
        };
        out += v_t.row(i).transpose() * u.column(i).transpose() * inv;
    }
    out
}

pub fn control_matrices(
    dynamics: &DynamicsQuantities,
    jac: &TaskJacobian,
    state: &RobotState,
    mask: &TaskMask,
    damping: f64,
) -> Result<ControlMatrices> {
    let n = dynamics.mass.nrows();
    if jac.j.ncols() != n || state.nu.len() != n {
        return Err(Error::Dimension {
            what: "task jacobian",
            expected: n,
            actual: jac.j.ncols(),
        });
    }
    check_conditioning(&dynamics.mass)?;
    let chol = dynamics
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("mass matrix is not positive definite".into()))?;

    let minv_b = chol.solve(&dynamics.selector);
    let minv_jt = chol.solve(&jac.j.transpose());
    let minv_h = chol.solve(&dynamics.bias);

    let mut delta: Matrix6xX<f64> = &jac.j * &minv_b;
    for (i, active) in mask.0.iter().enumerate() {
        if !active {
            delta.row_mut(i).fill(0.0);
        }
    }
    let omega: Matrix6<f64> = &jac.j * &minv_jt;
    let lambda: Vector6<f64> = &jac.j * &minv_h - &jac.j_dot * &state.nu;

    let delta_dyn = DMatrix::from_column_slice(6, delta.ncols(), delta.as_slice());
    let delta_pinv = pseudo_inverse(&delta_dyn, damping);
    let m = delta_pinv.nrows();
    let null_proj = DMatrix::identity(m, m) - &delta_pinv * &delta_dyn;
    Ok(ControlMatrices {
        delta,
        omega,
        lambda,
        delta_pinv,
        null_proj,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaskError {
    /// `ẋ − ẋ_d`
    pub vel_err: Vector6<f64>,
    /// Running integral of `vel_err`.
    pub int_vel_err: Vector6<f64>,
}

/// `ẍ* = ẍ_d − K_D (ẋ − ẋ_d) − K_P ∫(ẋ − ẋ_d)`
pub fn desired_acceleration(xddot_d: &Vector6<f64>, err: &TaskError, gains: &Gains) -> Vector6<f64> {
    xddot_d - gains.kd * err.vel_err - gains.kp * err.int_vel_err
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub alpha: f64,
    /// Unit vector along `ẋ_d`, or zero below [`VELOCITY_SINGULARITY`].
    pub parallel_dir: Vector6<f64>,
    /// `Ω f* − α · parallel_dir`
    pub perp_component: Vector6<f64>,
}

pub fn decompose_interaction(cm: &ControlMatrices, f_ext: &Wrench, xdot_d: &Vector6<f64>) -> Decomposition {
    decompose_vector(&(cm.omega * f_ext.to_vector6()), xdot_d)
}

/// Splits `omega_f` into a component along `xdot_d` and a remainder.
pub fn decompose_vector(omega_f: &Vector6<f64>, xdot_d: &Vector6<f64>) -> Decomposition {
    let speed = xdot_d.norm();
    if !(speed >= VELOCITY_SINGULARITY) {
        return Decomposition {
            alpha: 0.0,
            parallel_dir: Vector6::zeros(),
            perp_component: *omega_f,
        };
    }
    let dir = xdot_d / speed;
    let alpha = dir.dot(omega_f);
    Decomposition {
        alpha,
        parallel_dir: dir,
        perp_component: omega_f - dir * alpha,
    }
}

/// `τ = Δ†(ẍ* − Ω f* + Λ) + N τ₀`
pub fn control_torques(
    cm: &ControlMatrices,
    xddot_star: &Vector6<f64>,
    f_ext: &Wrench,
    tau0: &DVector<f64>,
) -> Result<DVector<f64>> {
    if !xddot_star.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("xddot_star"));
    }
    if !f_ext.is_finite() {
        return Err(Error::NonFinite("f_ext"));
    }
    if !tau0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("tau0"));
    }
    if tau0.len() != cm.null_proj.nrows() {
        return Err(Error::Dimension {
            what: "tau0",
            expected: cm.null_proj.nrows(),
            actual: tau0.len(),
        });
    }
    let task = xddot_star - cm.omega * f_ext.to_vector6() + cm.lambda;
    let task = DVector::from_column_slice(task.as_slice());
    Ok(&cm.delta_pinv * task + &cm.null_proj * tau0)
}

/// Classical objective plus the correction `max(α, 0) · ẋ_d∥`.
pub fn exploiting_desired_acceleration(
    xddot_d: &Vector6<f64>,
    err: &TaskError,
    gains: &Gains,
    dec: &Decomposition,
) -> Vector6<f64> {
    desired_acceleration(xddot_d, err, gains) + dec.parallel_dir * dec.alpha.max(0.0)
}

/// Joint damping `−k_d ν` used as the lower-priority posture torque.
pub fn posture_damping(nu: &DVector<f64>, k_d: f64) -> DVector<f64> {
    nu * -k_d
}
