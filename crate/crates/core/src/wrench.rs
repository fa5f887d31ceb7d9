//! External interaction wrenches: representation, assistive/agnostic
//! classification and the smooth pulse events used in the wrench sweeps.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Vector3, Vector6};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projections at or below this are agnostic.
pub const CLASSIFY_TOLERANCE: f64 = 1e-9;

/// Force and torque applied at the tracked-link origin, expressed with the
/// orientation of the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Wrench { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_force(force: Vector3<f64>) -> Self {
        Wrench {
            force,
            torque: Vector3::zeros(),
        }
    }

    pub fn from_vector6(v: &Vector6<f64>) -> Self {
        Wrench {
            force: v.fixed_rows::<3>(0).into_owned(),
            torque: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    /// `[fx fy fz τx τy τz]`
    pub fn to_vector6(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        Wrench {
            force: self.force * s,
            torque: self.torque * s,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.force == Vector3::zeros() && self.torque == Vector3::zeros()
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: self.force + rhs.force,
            torque: self.torque + rhs.torque,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrenchClass {
    Assistive,
    Agnostic,
}

impl fmt::Display for WrenchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WrenchClass::Assistive => "assistive",
            WrenchClass::Agnostic => "agnostic",
        })
    }
}

/// Assistive iff the wrench has a component along `desired_direction`
/// (a unit 6-vector in the wrench's `[force; torque]` layout).
pub fn classify(w: &Wrench, desired_direction: &Vector6<f64>) -> Result<WrenchClass> {
    let norm = desired_direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Domain(
            "desired direction must be a non-zero finite vector".into(),
        ));
    }
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("desired direction has norm {norm}, expected 1")));
    }
    if w.to_vector6().dot(desired_direction) > CLASSIFY_TOLERANCE {
        Ok(WrenchClass::Assistive)
    } else {
        Ok(WrenchClass::Agnostic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseProfile {
    /// Raised cosine: zero value and slope at both ends, peak at the midpoint.
    #[default]
    Smooth,
    Step,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrenchEvent {
    pub start: f64,
    pub duration: f64,
    pub peak: Wrench,
    pub profile: PulseProfile,
    /// Gaussian measurement noise on each force axis while active [N].
    pub noise_std: f64,
}

impl WrenchEvent {
    pub fn smooth(start: f64, duration: f64, peak: Wrench) -> Self {
        WrenchEvent {
            start,
            duration,
            peak,
            profile: PulseProfile::Smooth,
            noise_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("duration", "must be finite and > 0"));
        }
        if !(self.start.is_finite() && self.start >= 0.0) {
            return Err(Error::invalid("start", "must be finite and >= 0"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::invalid("noise_std", "must be finite and >= 0"));
        }
        if !self.peak.is_finite() {
            return Err(Error::invalid("force", "must be finite"));
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t <= self.end()
    }

    /// Envelope in `[0, 1]` at time `t`.
    pub fn scale(&self, t: f64) -> f64 {
        if !self.is_active(t) {
            return 0.0;
        }
        match self.profile {
            PulseProfile::Smooth => 0.5 * (1.0 - (2.0 * PI * (t - self.start) / self.duration).cos()),
            PulseProfile::Step => 1.0,
        }
    }
}

/// Wrench produced by `event` at time `t`. Force noise is drawn from `rng`
/// only while the event is active and `noise_std > 0`.
pub fn evaluate_event<R: Rng + ?Sized>(event: &WrenchEvent, t: f64, rng: &mut R) -> Wrench {
    if !event.is_active(t) {
        return Wrench::zero();
    }
    let mut w = event.peak.scaled(event.scale(t));
    if event.noise_std > 0.0 {
        let normal = Normal::new(0.0, event.noise_std).expect("validated noise_std");
        for v in w.force.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    w
}

/// One row of a named wrench preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetRow {
    pub label: &'static str,
    pub wrench: Wrench,
    /// Class with respect to +x.
    pub expected: WrenchClass,
}

/// The six test wrenches (a)–(f): three assistive and three agnostic with
/// respect to motion along +x.
pub fn table1() -> Vec<PresetRow> {
    let row = |label, f: [f64; 3], expected| PresetRow {
        label,
        wrench: Wrench::from_force(Vector3::from(f)),
        expected,
    };
    use WrenchClass::*;
    vec![
        row("a", [10.0, 0.0, 0.0], Assistive),
        row("b", [5.0, 10.0, 0.0], Assistive),
        row("c", [5.0, 0.0, 10.0], Assistive),
        row("d", [-10.0, 0.0, 0.0], Agnostic),
        row("e", [0.0, -10.0, 0.0], Agnostic),
        row("f", [0.0, 0.0, 10.0], Agnostic),
    ]
}

pub fn preset(name: &str) -> Option<Vec<PresetRow>> {
    match name {
        "table1" => Some(table1()),
        _ => None,
    }
}
