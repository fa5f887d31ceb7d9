//! Planar articulated-chain description.
//!
//! Chains live in the inertial x–z plane with gravity along −z. Joint 0 is
//! attached to a fixed base at the origin; `base_angle` is the heading of the
//! chain at zero configuration, measured from +x towards +z.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint type. Revolute joints rotate about the plane normal; prismatic joints
/// slide along `axis`, given in the parent frame as `[along heading, normal]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JointKind {
    Revolute,
    Prismatic { axis: [f64; 2] },
}

impl JointKind {
    pub fn is_revolute(&self) -> bool {
        matches!(self, JointKind::Revolute)
    }
}

/// One joint together with the link it drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub joint: JointKind,
    /// Joint-to-tip distance along the link heading [m].
    pub length: f64,
    /// [kg]
    pub mass: f64,
    /// Distance of the centre of mass from the joint, along the link [m].
    pub com_offset: f64,
    /// Rotational inertia about the centre of mass, plane normal [kg·m²].
    pub inertia: f64,
}

impl Link {
    /// Uniform rod driven by a revolute joint.
    pub fn rod(length: f64, mass: f64) -> Self {
        Link {
            joint: JointKind::Revolute,
            length,
            mass,
            com_offset: 0.5 * length,
            inertia: mass * length * length / 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<Link>,
    /// Norm of the gravitational acceleration [m/s²].
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Unactuated base degrees of freedom: 0 (fixed) or 6 (floating, reserved).
    #[serde(default)]
    pub base_dof: usize,
    #[serde(default)]
    pub base_angle: f64,
    /// Index of the link whose tip frame is the task frame.
    pub tracked_link: usize,
}

fn default_gravity() -> f64 {
    9.81
}

impl RobotModel {
    pub fn n_joints(&self) -> usize {
        self.links.len()
    }

    /// Generalized coordinate count, `n_joints + base_dof`.
    pub fn n_dof(&self) -> usize {
        self.links.len() + self.base_dof
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::invalid("model.links", "at least one link is required"));
        }
        for (i, link) in self.links.iter().enumerate() {
            let key = |field: &str| format!("model.links[{i}].{field}");
            if !(link.length.is_finite() && link.length > 0.0) {
                return Err(Error::invalid(key("length"), "must be finite and > 0"));
            }
            if !(link.mass.is_finite() && link.mass > 0.0) {
                return Err(Error::invalid(key("mass"), "must be finite and > 0"));
            }
            if !(link.inertia.is_finite() && link.inertia >= 0.0) {
                return Err(Error::invalid(key("inertia"), "must be finite and >= 0"));
            }
            if !link.com_offset.is_finite() {
                return Err(Error::invalid(key("com_offset"), "must be finite"));
            }
            if let JointKind::Prismatic { axis } = link.joint {
                let norm = axis[0].hypot(axis[1]);
                if !((norm - 1.0).abs() < 1e-9) {
                    return Err(Error::invalid(key("joint.axis"), "must be a unit 2-vector"));
                }
            }
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::invalid("model.gravity", "must be finite and >= 0"));
        }
        if !self.base_angle.is_finite() {
            return Err(Error::invalid("model.base_angle", "must be finite"));
        }
        if self.base_dof != 0 && self.base_dof != 6 {
            return Err(Error::invalid("model.base_dof", "must be 0 or 6"));
        }
        if self.tracked_link >= self.links.len() {
            return Err(Error::invalid(
                "model.tracked_link",
                format!(
                    "index {} out of range for {} links",
                    self.tracked_link,
                    self.links.len()
                ),
            ));
        }
        Ok(())
    }

    /// Single prismatic joint sliding along +x, 2 kg carriage.
    pub fn slider() -> Self {
        RobotModel {
            name: "slider".into(),
            links: vec![Link {
                joint: JointKind::Prismatic { axis: [1.0, 0.0] },
                length: 0.1,
                mass: 2.0,
                com_offset: 0.0,
                inertia: 0.01,
            }],
            gravity: 9.81,
            base_dof: 0,
            base_angle: 0.0,
            tracked_link: 0,
        }
    }

    /// Planar two-link revolute arm, 0.3 m uniform rods, extended along +x at zero.
    pub fn two_link() -> Self {
        RobotModel {
            name: "two-link".into(),
            links: vec![Link::rod(0.3, 1.0), Link::rod(0.3, 1.0)],
            gravity: 9.81,
            base_dof: 0,
            base_angle: 0.0,
            tracked_link: 1,
        }
    }

    /// Three-link leg hanging from a fixed hip (thigh, shank, foot). The task
    /// frame is the foot tip.
    pub fn leg3() -> Self {
        RobotModel {
            name: "leg3".into(),
            links: vec![Link::rod(0.23, 1.2), Link::rod(0.21, 0.9), Link::rod(0.07, 0.4)],
            gravity: 9.81,
            base_dof: 0,
            base_angle: -std::f64::consts::FRAC_PI_2,
            tracked_link: 2,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "slider" => Some(Self::slider()),
            "two-link" => Some(Self::two_link()),
            "leg3" => Some(Self::leg3()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 3] = ["slider", "two-link", "leg3"];
}

/// Configuration `q` and generalized velocity `nu` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub q: DVector<f64>,
    pub nu: DVector<f64>,
}

impl RobotState {
    pub fn new(q: DVector<f64>, nu: DVector<f64>) -> Self {
        RobotState { q, nu }
    }

    pub fn from_slices(q: &[f64], nu: &[f64]) -> Self {
        RobotState {
            q: DVector::from_column_slice(q),
            nu: DVector::from_column_slice(nu),
        }
    }

    pub fn rest(model: &RobotModel) -> Self {
        let n = model.n_dof();
        RobotState {
            q: DVector::zeros(n),
            nu: DVector::zeros(n),
        }
    }

    pub fn check(&self, model: &RobotModel) -> Result<()> {
        let n = model.n_dof();
        if self.q.len() != n {
            return Err(Error::Dimension {
                what: "q",
                expected: n,
                actual: self.q.len(),
            });
        }
        if self.nu.len() != n {
            return Err(Error::Dimension {
                what: "nu",
                expected: n,
                actual: self.nu.len(),
            });
        }
        if !self.q.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("q"));
        }
        if !self.nu.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("nu"));
        }
        Ok(())
    }
}
