//! Closed-form kinematics of a planar serial chain.
//!
//! Points are 2-vectors `(x, z)` in the inertial plane. A point "owned" by
//! link `j` moves with joints `0..=j`; its Jacobian column for joint `k` is
//! `perp(p - pivot_k)` for a revolute joint and the slide axis for a
//! prismatic one. Differentiating those columns once more gives the
//! configuration Hessians used for the Christoffel symbols and `J̇`.

use nalgebra::{DMatrix, DVector, Matrix2xX, Vector2};

use super::model::{JointKind, RobotModel};

/// Rotation by +90° in the plane: the velocity direction of a point
/// rotating about the plane normal with positive joint rate.
#[inline]
pub(crate) fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[inline]
fn heading_dir(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.cos(), angle.sin())
}

pub(crate) struct ChainFrames {
    revolute: Vec<bool>,
    /// Joint location; for prismatic joints it includes the slide.
    pivots: Vec<Vector2<f64>>,
    /// World slide direction of prismatic joints (unused for revolute).
    axes: Vec<Vector2<f64>>,
    /// Link heading after each joint.
    pub headings: Vec<f64>,
    pub coms: Vec<Vector2<f64>>,
    pub tips: Vec<Vector2<f64>>,
}

impl ChainFrames {
    pub fn new(model: &RobotModel, q: &DVector<f64>) -> Self {
        let n = model.n_joints();
        let mut frames = ChainFrames {
            revolute: Vec::with_capacity(n),
            pivots: Vec::with_capacity(n),
            axes: Vec::with_capacity(n),
            headings: Vec::with_capacity(n),
            coms: Vec::with_capacity(n),
            tips: Vec::with_capacity(n),
        };
        let mut origin = Vector2::zeros();
        let mut heading = model.base_angle;
        for (k, link) in model.links.iter().enumerate() {
            let (pivot, axis) = match link.joint {
                JointKind::Revolute => {
                    heading += q[k];
                    (origin, Vector2::zeros())
                }
                JointKind::Prismatic { axis } => {
                    let u = heading_dir(heading + axis[1].atan2(axis[0]));
                    (origin + q[k] * u, u)
                }
            };
            let dir = heading_dir(heading);
            frames.revolute.push(link.joint.is_revolute());
            frames.pivots.push(pivot);
            frames.axes.push(axis);
            frames.headings.push(heading);
            frames.coms.push(pivot + link.com_offset * dir);
            origin = pivot + link.length * dir;
            frames.tips.push(origin);
        }
        frames
    }

    pub fn n(&self) -> usize {
        self.revolute.len()
    }

    pub fn is_revolute(&self, k: usize) -> bool {
        self.revolute[k]
    }

    /// ∂p/∂q_m for a point `p` owned by link `owner`.
    fn column(&self, p: Vector2<f64>, owner: usize, m: usize) -> Vector2<f64> {
        if m > owner {
            Vector2::zeros()
        } else if self.revolute[m] {
            perp(p - self.pivots[m])
        } else {
            self.axes[m]
        }
    }

    pub fn point_jacobian(&self, p: Vector2<f64>, owner: usize) -> Matrix2xX<f64> {
        let n = self.n();
        let mut jac = Matrix2xX::zeros(n);
        for k in 0..n {
            jac.set_column(k, &self.column(p, owner, k));
        }
        jac
    }

    /// ∂J_p/∂q_m for a point `p` owned by link `owner`.
    pub fn point_jacobian_derivative(&self, p: Vector2<f64>, owner: usize, m: usize) -> Matrix2xX<f64> {
        let n = self.n();
        let mut d = Matrix2xX::zeros(n);
        if m > owner {
            return d;
        }
        let dp = self.column(p, owner, m);
        for k in 0..=owner {
            let col = if self.revolute[k] {
                // The pivot of joint k moves with joints 0..k.
                perp(dp - self.column(self.pivots[k], k, m))
            } else if m < k && self.revolute[m] {
                perp(self.axes[k])
            } else {
                Vector2::zeros()
            };
            d.set_column(k, &col);
        }
        d
    }

    /// Angular-rate selector of link `owner`: 1 for every revolute joint up to it.
    pub fn angular_selector(&self, owner: usize) -> DVector<f64> {
        DVector::from_fn(self.n(), |k, _| if k <= owner && self.revolute[k] { 1.0 } else { 0.0 })
    }

    /// Joint-space mass matrix.
    pub fn mass_matrix(&self, model: &RobotModel) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (j, link) in model.links.iter().enumerate() {
            let jc = self.point_jacobian(self.coms[j], j);
            m += link.mass * jc.transpose() * &jc;
            let w = self.angular_selector(j);
            m += link.inertia * &w * w.transpose();
        }
        m
    }

    /// ∂M/∂q_m for every m.
    pub fn mass_matrix_derivatives(&self, model: &RobotModel) -> Vec<DMatrix<f64>> {
        let n = self.n();
        let jacobians: Vec<_> = (0..n).map(|j| self.point_jacobian(self.coms[j], j)).collect();
        (0..n)
            .map(|m| {
                let mut dm = DMatrix::zeros(n, n);
                for (j, link) in model.links.iter().enumerate() {
                    let h = self.point_jacobian_derivative(self.coms[j], j, m);
                    let sym = h.transpose() * &jacobians[j];
                    dm += link.mass * (&sym + sym.transpose());
                }
                dm
            })
            .collect()
    }

    /// Generalized gravity vector `∂U/∂q` with `U = Σ m g z_com`.
    pub fn gravity_vector(&self, model: &RobotModel) -> DVector<f64> {
        let n = self.n();
        let mut g = DVector::zeros(n);
        for (j, link) in model.links.iter().enumerate() {
            let jc = self.point_jacobian(self.coms[j], j);
            for k in 0..n {
                g[k] += link.mass * model.gravity * jc[(1, k)];
            }
        }
        g
    }
}
