//! Scenario documents (TOML) and their resolved form.

use std::path::{Path, PathBuf};

use nalgebra::{DVector, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::advancement::AdvancementConfig;
use crate::controller::{ControllerVariant, Gains, TaskMask, TASK_ROW_NAMES};
use crate::dynamics::{forward_kinematics, RobotModel, RobotState};
use crate::error::{Error, Result};
use crate::trajectory::{PathKind, Ramp, ReferenceTrajectory};
use crate::wrench::{PulseProfile, Wrench, WrenchEvent};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

// ---------------------------------------------------------------------------
// Document layer: mirrors the file one-to-one.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: Integrator,
    pub model: ModelDoc,
    pub trajectory: TrajectoryDoc,
    #[serde(default)]
    pub gains: GainsDoc,
    #[serde(default)]
    pub controller: ControllerDoc,
    #[serde(default)]
    pub advancement: AdvancementConfig,
    #[serde(default)]
    pub wrench_events: Vec<WrenchEventDoc>,
    #[serde(default)]
    pub sweep: SweepDoc,
}

fn default_dt() -> f64 {
    1e-3
}

/// Exactly one of `preset`, `path` or `inline` selects the model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub preset: Option<String>,
    /// Model file, relative to the scenario file.
    pub path: Option<PathBuf>,
    pub inline: Option<RobotModel>,
    /// Initial joint positions; zero when omitted.
    pub initial_q: Option<Vec<f64>>,
    pub initial_nu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKindDoc {
    #[default]
    Sinusoid,
    ConstantPose,
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RampDoc {
    None,
    #[default]
    MinJerk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDoc {
    #[serde(default)]
    pub kind: TrajectoryKindDoc,
    /// Anchor pose `[x y z rx ry rz]`; the initial tracked-link pose when omitted.
    pub base_pose: Option<[f64; 6]>,
    /// Task row name (`x`, `z`, ...) or an explicit unit 6-vector.
    #[serde(default)]
    pub axis: AxisDoc,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    #[serde(default)]
    pub ramp: RampDoc,
    /// Blend length [s]; a quarter period when omitted.
    pub ramp_duration: Option<f64>,
    /// Components of a composite path, each relative to `base_pose`.
    #[serde(default)]
    pub parts: Vec<TrajectoryDoc>,
}

fn default_amplitude() -> f64 {
    0.05
}

fn default_frequency() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisDoc {
    Name(String),
    Vector([f64; 6]),
}

impl Default for AxisDoc {
    fn default() -> Self {
        AxisDoc::Name("x".into())
    }
}

/// A gain is a scalar (times identity), six diagonal entries, or a full 6×6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
pub enum GainDoc {
    Scalar(f64),
    Diagonal([f64; 6]),
    Full([[f64; 6]; 6]),
}

impl GainDoc {
    fn matrix(&self) -> Matrix6<f64> {
        match self {
            GainDoc::Scalar(v) => Matrix6::identity() * *v,
            GainDoc::Diagonal(d) => Matrix6::from_diagonal(&Vector6::from(*d)),
            GainDoc::Full(rows) => Matrix6::from_fn(|i, j| rows[i][j]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsDoc {
    pub kp: GainDoc,
    pub kd: GainDoc,
}

impl Default for GainsDoc {
    fn default() -> Self {
        GainsDoc {
            kp: GainDoc::Scalar(25.0),
            kd: GainDoc::Scalar(10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerDoc {
    pub variant: ControllerVariant,
    pub task_rows: Vec<String>,
    /// Damping of the pseudo-inverse; 0 disables it.
    pub pinv_damping: f64,
    /// Joint damping `k_d` of the null-space posture torque `−k_d ν`.
    pub posture_damping: f64,
}

impl Default for ControllerDoc {
    fn default() -> Self {
        ControllerDoc {
            variant: ControllerVariant::Exploiting,
            task_rows: vec!["x".into()],
            pinv_damping: 0.0,
            posture_damping: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrenchEventDoc {
    pub start: f64,
    #[serde(default = "default_pulse")]
    pub duration: f64,
    #[serde(default)]
    pub force: [f64; 3],
    #[serde(default)]
    pub torque: [f64; 3],
    #[serde(default)]
    pub profile: PulseProfile,
    #[serde(default)]
    pub noise_std: f64,
}

fn default_pulse() -> f64 {
    0.75
}

/// Timing and scaling applied to preset wrenches by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepDoc {
    /// Multiplier applied to every preset wrench.
    pub force_scale: f64,
    pub start: f64,
    pub duration: f64,
    pub profile: PulseProfile,
    pub noise_std: f64,
}

impl Default for SweepDoc {
    fn default() -> Self {
        SweepDoc {
            force_scale: 1.0,
            start: 5.0,
            duration: 0.75,
            profile: PulseProfile::Smooth,
            noise_std: 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Resolved layer.

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub variant: ControllerVariant,
    pub mask: TaskMask,
    pub pinv_damping: f64,
    pub posture_damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub force_scale: f64,
    pub start: f64,
    pub duration: f64,
    pub profile: PulseProfile,
    pub noise_std: f64,
}

impl SweepSettings {
    /// Pulse event carrying `peak` scaled by `force_scale`.
    pub fn event(&self, peak: &Wrench) -> WrenchEvent {
        WrenchEvent {
            start: self.start,
            duration: self.duration,
            peak: peak.scaled(self.force_scale),
            profile: self.profile,
            noise_std: self.noise_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: RobotModel,
    pub initial_state: RobotState,
    pub trajectory: ReferenceTrajectory,
    pub gains: Gains,
    pub advancement: AdvancementConfig,
    pub controller: ControllerConfig,
    pub wrench_events: Vec<WrenchEvent>,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub integrator: Integrator,
    pub sweep: SweepSettings,
}

impl ScenarioConfig {
    /// Number of integration steps; the log holds one more record.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("duration", "must be finite and > 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be finite and > 0"));
        }
        if self.dt > self.duration {
            return Err(Error::invalid("dt", "must not exceed duration"));
        }
        self.model.validate()?;
        self.initial_state
            .check(&self.model)
            .map_err(|e| Error::invalid("model.initial_q", e.to_string()))?;
        self.trajectory.validate()?;
        self.gains.validate()?;
        self.advancement.validate()?;
        let c = &self.controller;
        if !(c.pinv_damping.is_finite() && c.pinv_damping >= 0.0) {
            return Err(Error::invalid("controller.pinv_damping", "must be finite and >= 0"));
        }
        if !(c.posture_damping.is_finite() && c.posture_damping >= 0.0) {
            return Err(Error::invalid("controller.posture_damping", "must be finite and >= 0"));
        }
        for (i, e) in self.wrench_events.iter().enumerate() {
            e.validate()
                .map_err(|err| prefix_key(err, &format!("wrench_events[{i}]")))?;
        }
        self.sweep
            .event(&Wrench::zero())
            .validate()
            .map_err(|err| prefix_key(err, "sweep"))?;
        if !(self.sweep.force_scale.is_finite() && self.sweep.force_scale >= 0.0) {
            return Err(Error::invalid("sweep.force_scale", "must be finite and >= 0"));
        }
        if self.model.base_dof != 0 {
            return Err(Error::Unsupported("floating-base models cannot be simulated".into()));
        }
        Ok(())
    }

    /// Parses and resolves a TOML scenario. Model paths are resolved
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::invalid("", e.message().to_string()))?;
        Self::from_doc(&doc, base_dir)
    }

    pub fn from_doc(doc: &ScenarioDoc, base_dir: Option<&Path>) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", doc.schema_version),
            ));
        }
        let model = resolve_model(&doc.model, base_dir)?;
        model.validate()?;
        let n = model.n_dof();
        let vector = |v: &Option<Vec<f64>>, key: &str| -> Result<DVector<f64>> {
            match v {
                None => Ok(DVector::zeros(n)),
                Some(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
                Some(v) => Err(Error::invalid(key, format!("expected {n} entries, got {}", v.len()))),
            }
        };
        let initial_state = RobotState::new(
            vector(&doc.model.initial_q, "model.initial_q")?,
            vector(&doc.model.initial_nu, "model.initial_nu")?,
        );
        initial_state
            .check(&model)
            .map_err(|e| Error::invalid("model.initial_q", e.to_string()))?;

        let base_pose = match doc.trajectory.base_pose {
            Some(p) => Vector6::from(p),
            None => {
                if model.base_dof != 0 {
                    return Err(Error::Unsupported("floating-base models cannot be simulated".into()));
                }
                forward_kinematics(&model, &initial_state)?.to_vector6()
            }
        };
        let trajectory = resolve_trajectory(&doc.trajectory, base_pose, "trajectory")?;

        let controller = ControllerConfig {
            variant: doc.controller.variant,
            mask: TaskMask::from_names(&doc.controller.task_rows)?,
            pinv_damping: doc.controller.pinv_damping,
            posture_damping: doc.controller.posture_damping,
        };
        let wrench_events = doc
            .wrench_events
            .iter()
            .map(|e| WrenchEvent {
                start: e.start,
                duration: e.duration,
                peak: Wrench::new(Vector3::from(e.force), Vector3::from(e.torque)),
                profile: e.profile,
                noise_std: e.noise_std,
            })
            .collect();
        let s = &doc.sweep;
        let cfg = ScenarioConfig {
            model,
            initial_state,
            trajectory,
            gains: Gains {
                kp: doc.gains.kp.matrix(),
                kd: doc.gains.kd.matrix(),
            },
            advancement: doc.advancement,
            controller,
            wrench_events,
            duration: doc.duration,
            dt: doc.dt,
            seed: doc.seed,
            integrator: doc.integrator,
            sweep: SweepSettings {
                force_scale: s.force_scale,
                start: s.start,
                duration: s.duration,
                profile: s.profile,
                noise_std: s.noise_std,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn prefix_key(err: Error, prefix: &str) -> Error {
    match err {
        Error::Invalid { key, message } => Error::Invalid {
            key: format!("{prefix}.{key}"),
            message,
        },
        other => other,
    }
}

fn resolve_model(doc: &ModelDoc, base_dir: Option<&Path>) -> Result<RobotModel> {
    let given = [doc.preset.is_some(), doc.path.is_some(), doc.inline.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(Error::invalid(
            "model",
            "exactly one of `preset`, `path` or `inline` must be given",
        ));
    }
    if let Some(name) = &doc.preset {
        return RobotModel::preset(name).ok_or_else(|| {
            Error::invalid(
                "model.preset",
                format!("unknown model `{name}`; available: {}", RobotModel::PRESETS.join(", ")),
            )
        });
    }
    if let Some(path) = &doc.path {
        let full = match base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.clone(),
        };
        let text = std::fs::read_to_string(&full)
            .map_err(|e| Error::invalid("model.path", format!("cannot read {}: {e}", full.display())))?;
        return load_model(&text).map_err(|e| match e {
            Error::Invalid { key, message } => Error::invalid(
                "model.path",
                format!(
                    "{}: {}{}",
                    full.display(),
                    if key.is_empty() {
                        String::new()
                    } else {
                        format!("`{key}`: ")
                    },
                    message
                ),
            ),
            other => other,
        });
    }
    Ok(doc.inline.clone().expect("checked above"))
}

/// Parses a standalone model file.
pub fn load_model(text: &str) -> Result<RobotModel> {
    let model: RobotModel = toml::from_str(text).map_err(|e| Error::invalid("", e.message().to_string()))?;
    model.validate()?;
    Ok(model)
}

fn resolve_axis(axis: &AxisDoc, key: &str) -> Result<Vector6<f64>> {
    match axis {
        AxisDoc::Name(name) => {
            let i = TASK_ROW_NAMES
                .iter()
                .position(|r| r == name)
                .ok_or_else(|| Error::invalid(format!("{key}.axis"), format!("unknown axis `{name}`")))?;
            let mut v = Vector6::zeros();
            v[i] = 1.0;
            Ok(v)
        }
        AxisDoc::Vector(v) => Ok(Vector6::from(*v)),
    }
}

fn resolve_trajectory(doc: &TrajectoryDoc, base_pose: Vector6<f64>, key: &str) -> Result<ReferenceTrajectory> {
    let traj = match doc.kind {
        TrajectoryKindDoc::ConstantPose => ReferenceTrajectory::constant(base_pose),
        TrajectoryKindDoc::Sinusoid => {
            let axis = resolve_axis(&doc.axis, key)?;
            let ramp = match doc.ramp {
                RampDoc::None => Ramp::None,
                RampDoc::MinJerk => Ramp::MinJerk {
                    duration: doc.ramp_duration.unwrap_or(0.25 / doc.frequency),
                },
            };
            ReferenceTrajectory {
                base_pose,
                kind: PathKind::Sinusoid {
                    axis,
                    amplitude: doc.amplitude,
                    frequency: doc.frequency,
                    ramp,
                },
            }
        }
        TrajectoryKindDoc::Composite => {
            if doc.parts.is_empty() {
                return Err(Error::invalid(format!("{key}.parts"), "a composite path needs parts"));
            }
            let parts = doc
                .parts
                .iter()
                .enumerate()
                .map(|(i, p)| resolve_trajectory(p, Vector6::zeros(), &format!("{key}.parts[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            ReferenceTrajectory {
                base_pose,
                kind: PathKind::Composite(parts),
            }
        }
    };
    traj.validate().map_err(|e| match e {
        Error::Invalid { key: k, message } => Error::Invalid {
            key: k.replacen("trajectory", key, 1),
            message,
        },
        other => other,
    })?;
    Ok(traj)
}
