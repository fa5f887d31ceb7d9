//! Reference paths `x_d(ψ)` parametrized by a free parameter `ψ ≥ 0`, with
//! analytic first and second partials in `ψ`. Timing lives in
//! [`crate::advancement`]; a path is purely spatial.

use std::f64::consts::PI;

use nalgebra::Vector6;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ramp {
    None,
    /// Quintic blend `10u³ − 15u⁴ + 6u⁵` on the amplitude over `duration`.
    MinJerk {
        duration: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// `axis · A · b(ψ) · sin(2π f ψ)` where `b` is the ramp envelope.
    Sinusoid {
        axis: Vector6<f64>,
        amplitude: f64,
        frequency: f64,
        ramp: Ramp,
    },
    ConstantPose,
    /// Sum of the displacements of each part from its own base pose.
    Composite(Vec<ReferenceTrajectory>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub base_pose: Vector6<f64>,
    pub kind: PathKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub x_d: Vector6<f64>,
    pub dpsi_x_d: Vector6<f64>,
    pub d2psi_x_d: Vector6<f64>,
}

impl ReferenceTrajectory {
    pub fn constant(base_pose: Vector6<f64>) -> Self {
        ReferenceTrajectory {
            base_pose,
            kind: PathKind::ConstantPose,
        }
    }

    /// Sinusoid along `axis` with a minimum-jerk start over a quarter period.
    pub fn sinusoid(base_pose: Vector6<f64>, axis: Vector6<f64>, amplitude: f64, frequency: f64) -> Self {
        ReferenceTrajectory {
            base_pose,
            kind: PathKind::Sinusoid {
                axis,
                amplitude,
                frequency,
                ramp: Ramp::MinJerk {
                    duration: 0.25 / frequency,
                },
            },
        }
    }

    pub fn with_ramp(mut self, new_ramp: Ramp) -> Self {
        if let PathKind::Sinusoid { ramp, .. } = &mut self.kind {
            *ramp = new_ramp;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PathKind::Sinusoid {
                axis,
                amplitude,
                frequency,
                ramp,
            } => {
                if ((axis.norm() - 1.0).abs()) > 1e-9 {
                    return Err(Error::invalid("trajectory.axis", "must have unit norm"));
                }
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::invalid("trajectory.amplitude", "must be finite and >= 0"));
                }
                if !(frequency.is_finite() && *frequency > 0.0) {
                    return Err(Error::invalid("trajectory.frequency", "must be finite and > 0"));
                }
                if let Ramp::MinJerk { duration } = ramp {
                    if !(duration.is_finite() && *duration > 0.0) {
                        return Err(Error::invalid("trajectory.ramp.duration", "must be finite and > 0"));
                    }
                }
            }
            PathKind::ConstantPose => {}
            PathKind::Composite(parts) => {
                for part in parts {
                    part.validate()?;
                }
            }
        }
        if !self.base_pose.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("trajectory.base_pose", "must be finite"));
        }
        Ok(())
    }

    /// Unit vector of the moving component, when the path has one.
    pub fn axis(&self) -> Option<Vector6<f64>> {
        match &self.kind {
            PathKind::Sinusoid { axis, .. } => Some(*axis),
            _ => None,
        }
    }

    pub fn sample(&self, psi: f64) -> Result<TrajectorySample> {
        if !(psi >= 0.0) || !psi.is_finite() {
            return Err(Error::Domain(format!(
                "free parameter must be finite and >= 0, got {psi}"
            )));
        }
        let (dx, d1, d2) = self.displacement(psi);
        Ok(TrajectorySample {
            x_d: self.base_pose + dx,
            dpsi_x_d: d1,
            d2psi_x_d: d2,
        })
    }

    /// Displacement from `base_pose` and its two partials.
    fn displacement(&self, psi: f64) -> (Vector6<f64>, Vector6<f64>, Vector6<f64>) {
        match &self.kind {
            PathKind::ConstantPose => (Vector6::zeros(), Vector6::zeros(), Vector6::zeros()),
            PathKind::Sinusoid {
                axis,
                amplitude,
                frequency,
                ramp,
            } => {
                let w = 2.0 * PI * frequency;
                let (s, c) = (w * psi).sin_cos();
                let (b, db, d2b) = envelope(*ramp, psi);
                let v = amplitude * b * s;
                let dv = amplitude * (db * s + b * w * c);
                let d2v = amplitude * (d2b * s + 2.0 * db * w * c - b * w * w * s);
                (axis * v, axis * dv, axis * d2v)
            }
            PathKind::Composite(parts) => parts.iter().fold(
                (Vector6::zeros(), Vector6::zeros(), Vector6::zeros()),
                |(a, b, c), part| {
                    let (x, d1, d2) = part.displacement(psi);
                    (a + x, b + d1, c + d2)
                },
            ),
        }
    }
}

/// Ramp envelope and its first two derivatives.
fn envelope(ramp: Ramp, psi: f64) -> (f64, f64, f64) {
    match ramp {
        Ramp::None => (1.0, 0.0, 0.0),
        Ramp::MinJerk { duration } if psi < duration => {
            let u = psi / duration;
            let u2 = u * u;
            let s = u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
            let ds = 30.0 * u2 * (1.0 - 2.0 * u + u2);
            let d2s = 60.0 * u * (1.0 - 3.0 * u + 2.0 * u2);
            (s, ds / duration, d2s / (duration * duration))
        }
        Ramp::MinJerk { .. } => (1.0, 0.0, 0.0),
    }
}

/// `ẋ_d = ∂ψx_d·ψ̇` and `ẍ_d = ∂²ψx_d·ψ̇² + ∂ψx_d·ψ̈`.
pub fn reference_kinematics(s: &TrajectorySample, psidot: f64, psiddot: f64) -> (Vector6<f64>, Vector6<f64>) {
    let xdot_d = s.dpsi_x_d * psidot;
    let xddot_d = s.d2psi_x_d * (psidot * psidot) + s.dpsi_x_d * psiddot;
    (xdot_d, xddot_d)
}
