//! Fixed-step closed-loop simulation.
//!
//! Each step evaluates the wrench events, computes the control torque at the
//! step start, holds torque and wrench over the step, integrates the robot,
//! and updates `ψ̇` from the velocity measured at the start of the step.

pub mod config;
pub mod log;
pub mod sweep;

use nalgebra::{DVector, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{ControllerConfig, Integrator, ScenarioConfig, ScenarioDoc, SweepSettings, SCHEMA_VERSION};
pub use log::{write_csv, LogRecord};
pub use sweep::{sweep, sweep_preset, SweepRun};

use crate::advancement::{advance, lyapunov_value, psidot_for_law, sdot_condition, AdvancementLaw, AdvancementState};
use crate::controller::{
    control_matrices, control_torques, decompose_interaction, desired_acceleration, exploiting_desired_acceleration,
    posture_damping, ControllerVariant, TaskError,
};
use crate::dynamics::{accelerations, compute_dynamics, forward_kinematics, task_jacobian, RobotModel, RobotState};
use crate::error::{Error, Result};
use crate::trajectory::reference_kinematics;
use crate::wrench::{classify, evaluate_event, Wrench};

/// Monitors gathered alongside the log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub records: Vec<LogRecord>,
    /// Largest normalized stability-condition residual over steps where the
    /// update law set `ψ̇` below its ceiling while `α > 0`.
    pub max_condition_residual: f64,
    /// Steps where that residual exceeded `1e-9`.
    pub condition_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// `ψ(end) − t(end)`
    pub delta_psi: f64,
    pub peak_psidot: f64,
    /// RMS over the log of the active-row position error norm.
    pub rms_err: f64,
    /// `max(0, max α)`
    pub peak_alpha: f64,
}

pub fn run(config: &ScenarioConfig) -> Result<Vec<LogRecord>> {
    Ok(run_report(config)?.records)
}

/// Time derivative of `(q, ν)` under held torque and wrench.
fn derivative(model: &RobotModel, state: &RobotState, tau: &DVector<f64>, f: &Wrench) -> Result<DVector<f64>> {
    let d = compute_dynamics(model, state)?;
    let j = task_jacobian(model, state)?;
    accelerations(&d, &j, tau, f)
}

fn offset(state: &RobotState, dq: &DVector<f64>, dnu: &DVector<f64>, h: f64) -> RobotState {
    RobotState::new(&state.q + dq * h, &state.nu + dnu * h)
}

/// One integration step of length `dt`.
pub fn integrate(
    model: &RobotModel,
    state: &RobotState,
    tau: &DVector<f64>,
    f: &Wrench,
    dt: f64,
    integrator: Integrator,
) -> Result<RobotState> {
    match integrator {
        Integrator::SemiImplicitEuler => {
            let a = derivative(model, state, tau, f)?;
            let nu = &state.nu + a * dt;
            let q = &state.q + &nu * dt;
            Ok(RobotState::new(q, nu))
        }
        Integrator::Rk4 => {
            let k1v = state.nu.clone();
            let k1a = derivative(model, state, tau, f)?;
            let s2 = offset(state, &k1v, &k1a, 0.5 * dt);
            let k2a = derivative(model, &s2, tau, f)?;
            let k2v = s2.nu;
            let s3 = offset(state, &k2v, &k2a, 0.5 * dt);
            let k3a = derivative(model, &s3, tau, f)?;
            let k3v = s3.nu;
            let s4 = offset(state, &k3v, &k3a, dt);
            let k4a = derivative(model, &s4, tau, f)?;
            let k4v = s4.nu;
            let q = &state.q + (k1v + &k2v * 2.0 + &k3v * 2.0 + k4v) * (dt / 6.0);
            let nu = &state.nu + (k1a + &k2a * 2.0 + &k3a * 2.0 + k4a) * (dt / 6.0);
            Ok(RobotState::new(q, nu))
        }
    }
}

pub fn run_report(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    let model = &config.model;
    let ctrl = &config.controller;
    let mask = &ctrl.mask;
    let adv_cfg = &config.advancement;
    let dt = config.dt;
    let n_steps = config.steps();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = config.initial_state.clone();
    let mut adv = AdvancementState::default();
    let mut int_err = Vector6::zeros();
    let mut prev_err = Vector6::zeros();
    let mut records = Vec::with_capacity(n_steps + 1);
    let mut max_residual: f64 = 0.0;
    let mut violations = 0;

    for k in 0..=n_steps {
        let step = |e: Error| e.at_step(k);
        let t = k as f64 * dt;
        let f = config
            .wrench_events
            .iter()
            .fold(Wrench::zero(), |acc, e| acc + evaluate_event(e, t, &mut rng));

        let dynamics = compute_dynamics(model, &state).map_err(step)?;
        let jac = task_jacobian(model, &state).map_err(step)?;
        let x = forward_kinematics(model, &state).map_err(step)?.to_vector6();
        let xdot: Vector6<f64> = &jac.j * &state.nu;
        let cm = control_matrices(&dynamics, &jac, &state, mask, ctrl.pinv_damping).map_err(step)?;

        let sample = config.trajectory.sample(adv.psi).map_err(step)?;
        let (xdot_d, xddot_d) = reference_kinematics(&sample, adv.psidot, adv.psiddot);
        let vel_err = mask.apply(&(xdot - xdot_d));
        if k > 0 {
            int_err += (prev_err + vel_err) * (0.5 * dt);
        }
        prev_err = vel_err;
        let err = TaskError {
            vel_err,
            int_vel_err: int_err,
        };

        let dec = decompose_interaction(&cm, &f, &xdot_d);
        let xddot_star = match ctrl.variant {
            ControllerVariant::Classical => desired_acceleration(&xddot_d, &err, &config.gains),
            ControllerVariant::Exploiting => exploiting_desired_acceleration(&xddot_d, &err, &config.gains, &dec),
        };
        let tau0 = posture_damping(&state.nu, ctrl.posture_damping);
        let tau = control_torques(&cm, &xddot_star, &f, &tau0).map_err(step)?;

        let wrench_class = if f.is_zero() || dec.parallel_dir == Vector6::zeros() {
            None
        } else {
            Some(classify(&f, &dec.parallel_dir).map_err(step)?)
        };
        records.push(LogRecord {
            t,
            psi: adv.psi,
            psidot: adv.psidot,
            psiddot: adv.psiddot,
            x,
            x_d: sample.x_d,
            xdot,
            xdot_d,
            tracking_err: x - sample.x_d,
            tau: tau.clone(),
            f_ext: f,
            alpha: dec.alpha,
            lyapunov: lyapunov_value(&err, &config.gains),
            wrench_class,
        });
        if k == n_steps {
            break;
        }

        // The rate for the next step comes from this step's measurement, one
        // step behind the torque it produced.
        let tangent = mask.apply(&sample.dpsi_x_d);
        let xdot_meas = mask.apply(&xdot);
        let omega_f = mask.apply(&(cm.omega * f.to_vector6()));
        let psidot_new = psidot_for_law(&xdot_meas, &tangent, &omega_f, adv_cfg);

        if adv_cfg.law == AdvancementLaw::Proposition1 && dec.alpha > 0.0 && psidot_new < adv_cfg.psidot_upper {
            let r = sdot_condition(&xdot_meas, &tangent, psidot_new, adv_cfg.epsilon_reg);
            let scale = xdot_meas.norm() * tangent.norm() * psidot_new
                + (tangent.norm_squared() + adv_cfg.epsilon_reg) * psidot_new * psidot_new;
            let normalized = if scale > 0.0 { r / scale } else { 0.0 };
            max_residual = max_residual.max(normalized);
            if normalized > 1e-9 {
                violations += 1;
            }
        }

        state = integrate(model, &state, &tau, &f, dt, config.integrator).map_err(step)?;
        if !state.q.iter().chain(state.nu.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("state").at_step(k));
        }
        adv = advance(&adv, psidot_new, dt, adv_cfg).map_err(step)?;
    }

    Ok(RunReport {
        records,
        max_condition_residual: max_residual,
        condition_violations: violations,
    })
}

pub fn summarize(records: &[LogRecord], config: &ScenarioConfig) -> RunSummary {
    let last = records.last();
    let delta_psi = last.map_or(0.0, |r| r.psi - r.t);
    let peak_psidot = records.iter().map(|r| r.psidot).fold(f64::NAN, f64::max);
    let sq: f64 = records
        .iter()
        .map(|r| config.controller.mask.apply(&r.tracking_err).norm_squared())
        .sum();
    let rms_err = if records.is_empty() {
        0.0
    } else {
        (sq / records.len() as f64).sqrt()
    };
    let peak_alpha = records.iter().map(|r| r.alpha).fold(0.0, f64::max);
    RunSummary {
        delta_psi,
        peak_psidot: if peak_psidot.is_nan() { 0.0 } else { peak_psidot },
        rms_err,
        peak_alpha,
    }
}
