//! Task-space feedback-linearization control of planar articulated chains
//! with interaction-driven trajectory advancement.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advancement;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod sim;
pub mod trajectory;
pub mod wrench;

pub use advancement::{AdvancementConfig, AdvancementLaw, AdvancementState};
pub use controller::{ControlMatrices, ControllerVariant, Decomposition, Gains, TaskError, TaskMask};
pub use dynamics::{DynamicsQuantities, JointKind, Link, Pose, RobotModel, RobotState, TaskJacobian};
pub use error::{Error, Result};
pub use sim::{LogRecord, RunReport, RunSummary, ScenarioConfig};
pub use trajectory::{ReferenceTrajectory, TrajectorySample};
pub use wrench::{Wrench, WrenchClass, WrenchEvent};

pub use nalgebra;
