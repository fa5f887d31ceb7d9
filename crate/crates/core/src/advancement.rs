//! Trajectory advancement: the `ψ̇` update laws, integration of `ψ`, the
//! delayed and low-pass filtered `ψ̈`, and the Lyapunov candidate.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::controller::{Gains, TaskError};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvancementLaw {
    /// Projection of the measured velocity onto the path tangent.
    #[default]
    Proposition1,
    /// Ratio of the projections onto the interaction acceleration `Ω f*`.
    Appendix,
    /// `ψ̇ ≡ 1`: plain time parametrization.
    Frozen,
}

impl fmt::Display for AdvancementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdvancementLaw::Proposition1 => "proposition1",
            AdvancementLaw::Appendix => "appendix",
            AdvancementLaw::Frozen => "frozen",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvancementConfig {
    pub psidot_upper: f64,
    pub epsilon_reg: f64,
    pub lowpass_cutoff_hz: f64,
    pub law: AdvancementLaw,
}

impl Default for AdvancementConfig {
    fn default() -> Self {
        AdvancementConfig {
            psidot_upper: 10.0,
            epsilon_reg: 1e-8,
            lowpass_cutoff_hz: 10.0,
            law: AdvancementLaw::Proposition1,
        }
    }
}

impl AdvancementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.psidot_upper.is_finite() && self.psidot_upper >= 1.0) {
            return Err(Error::invalid("advancement.psidot_upper", "must be finite and >= 1"));
        }
        if !(self.epsilon_reg.is_finite() && self.epsilon_reg >= 0.0) {
            return Err(Error::invalid("advancement.epsilon_reg", "must be finite and >= 0"));
        }
        if !(self.lowpass_cutoff_hz.is_finite() && self.lowpass_cutoff_hz > 0.0) {
            return Err(Error::invalid(
                "advancement.lowpass_cutoff_hz",
                "must be finite and > 0",
            ));
        }
        Ok(())
    }

    fn clamp(&self, ratio: f64) -> f64 {
        if ratio.is_nan() {
            return 1.0;
        }
        ratio.max(1.0).min(self.psidot_upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvancementState {
    pub psi: f64,
    pub psidot: f64,
    pub psiddot: f64,
    pub prev_psidot: f64,
    pub filter_state: f64,
}

impl Default for AdvancementState {
    fn default() -> Self {
        AdvancementState {
            psi: 0.0,
            psidot: 1.0,
            psiddot: 0.0,
            prev_psidot: 1.0,
            filter_state: 0.0,
        }
    }
}

/// `min{ψ̇_upper, max{1, ẋᵀ∂ψx_d / (‖∂ψx_d‖² + ε)}}`
pub fn psidot_update(xdot: &Vector6<f64>, dpsi_x_d: &Vector6<f64>, cfg: &AdvancementConfig) -> f64 {
    if cfg.law == AdvancementLaw::Frozen {
        return 1.0;
    }
    let ratio = xdot.dot(dpsi_x_d) / (dpsi_x_d.norm_squared() + cfg.epsilon_reg);
    cfg.clamp(ratio)
}

/// `min{ψ̇_upper, max{1, ẋᵀΩf* / (∂ψx_dᵀΩf* + sign · ε‖Ωf*‖/‖∂ψx_d‖)}}`.
///
/// The regularizer keeps the sign of the denominator and is scaled so that
/// the law coincides with [`psidot_update`] whenever `Ωf*` is collinear with
/// the tangent. Denominators below `ε` in magnitude return 1.
pub fn psidot_update_appendix(
    xdot: &Vector6<f64>,
    dpsi_x_d: &Vector6<f64>,
    omega_f: &Vector6<f64>,
    cfg: &AdvancementConfig,
) -> f64 {
    if cfg.law == AdvancementLaw::Frozen {
        return 1.0;
    }
    let den = dpsi_x_d.dot(omega_f);
    if !(den.abs() >= cfg.epsilon_reg) || den == 0.0 {
        return 1.0;
    }
    let reg = den.signum() * cfg.epsilon_reg * omega_f.norm() / dpsi_x_d.norm();
    cfg.clamp(xdot.dot(omega_f) / (den + reg))
}

/// Dispatches on `cfg.law`.
pub fn psidot_for_law(
    xdot: &Vector6<f64>,
    dpsi_x_d: &Vector6<f64>,
    omega_f: &Vector6<f64>,
    cfg: &AdvancementConfig,
) -> f64 {
    match cfg.law {
        AdvancementLaw::Proposition1 => psidot_update(xdot, dpsi_x_d, cfg),
        AdvancementLaw::Appendix => psidot_update_appendix(xdot, dpsi_x_d, omega_f, cfg),
        AdvancementLaw::Frozen => 1.0,
    }
}

/// Integrates `ψ` with the trapezoidal rule and refreshes the filtered
/// derivative `ψ̈` from the change since the previous step.
pub fn advance(
    state: &AdvancementState,
    psidot_new: f64,
    dt: f64,
    cfg: &AdvancementConfig,
) -> Result<AdvancementState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be finite and > 0, got {dt}")));
    }
    if !psidot_new.is_finite() {
        return Err(Error::NonFinite("psidot"));
    }
    let psidot = cfg.clamp(psidot_new);
    let raw = (psidot - state.psidot) / dt;
    let a = 1.0 - (-2.0 * PI * cfg.lowpass_cutoff_hz * dt).exp();
    let filter_state = state.filter_state + a * (raw - state.filter_state);
    Ok(AdvancementState {
        psi: state.psi + 0.5 * (state.psidot + psidot) * dt,
        psidot,
        psiddot: filter_state,
        prev_psidot: state.psidot,
        filter_state,
    })
}

/// `V = ½‖ẋ − ẋ_d‖² + ½ (∫ẋ − ẋ_d)ᵀ K_P (∫ẋ − ẋ_d)`
pub fn lyapunov_value(err: &TaskError, gains: &Gains) -> f64 {
    let z = &err.int_vel_err;
    0.5 * err.vel_err.norm_squared() + 0.5 * z.dot(&(gains.kp * z))
}

/// Left side of the stability condition with the regularized tangent norm,
/// `ẋᵀ∂ψx_d ψ̇ − (‖∂ψx_d‖² + ε) ψ̇²`. Non-positive whenever `ψ̇` was chosen by
/// [`psidot_update`] and not clamped at the ceiling.
pub fn sdot_condition(xdot: &Vector6<f64>, dpsi_x_d: &Vector6<f64>, psidot: f64, epsilon_reg: f64) -> f64 {
    xdot.dot(dpsi_x_d) * psidot - (dpsi_x_d.norm_squared() + epsilon_reg) * psidot * psidot
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn x(v: f64) -> Vector6<f64> {
        Vector6::new(v, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    fn exact() -> AdvancementConfig {
        AdvancementConfig {
            epsilon_reg: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn update_rule_examples() {
        let cfg = AdvancementConfig::default();
        let d = x(0.03);
        assert_relative_eq!(psidot_update(&(d * 2.0), &d, &cfg), 2.0, epsilon = 1e-4);
        assert_eq!(psidot_update(&(d * 2.0), &d, &exact()), 2.0);
        let ortho = Vector6::new(0.0, 0.0, 0.3, 0.0, 0.0, 0.0);
        assert_eq!(psidot_update(&ortho, &d, &cfg), 1.0);
        assert_eq!(psidot_update(&(d * 15.0), &d, &cfg), 10.0);
        let frozen = AdvancementConfig {
            law: AdvancementLaw::Frozen,
            ..Default::default()
        };
        assert_eq!(psidot_update(&(d * 3.0), &d, &frozen), 1.0);
    }

    #[test]
    fn turning_point_does_not_divide_by_zero() {
        let cfg = AdvancementConfig::default();
        assert_eq!(psidot_update(&x(0.01), &Vector6::zeros(), &cfg), 1.0);
    }

    #[test]
    fn appendix_examples() {
        let cfg = AdvancementConfig::default();
        let d = x(0.03);
        assert_eq!(psidot_update_appendix(&(d * 2.0), &d, &Vector6::zeros(), &cfg), 1.0);
        let of = x(0.4);
        assert_relative_eq!(
            psidot_update_appendix(&(d * 2.0), &d, &of, &cfg),
            psidot_update(&(d * 2.0), &d, &cfg),
            epsilon = 1e-12
        );
        assert_eq!(psidot_update_appendix(&(d * -2.0), &d, &of, &cfg), 1.0);
        // guard: |∂ψx_dᵀΩf*| < ε
        assert_eq!(psidot_update_appendix(&(d * 5.0), &d, &x(1e-8), &cfg), 1.0);
    }

    #[test]
    fn constant_rate_identifies_time() {
        let cfg = AdvancementConfig::default();
        let mut s = AdvancementState::default();
        for _ in 0..2000 {
            s = advance(&s, 1.0, 1e-3, &cfg).unwrap();
        }
        assert!((s.psi - 2.0).abs() < 1e-9, "{}", s.psi);
        assert_eq!(s.psiddot, 0.0);
    }

    #[test]
    fn constant_rate_integrates_exactly() {
        let cfg = AdvancementConfig::default();
        let mut s = AdvancementState {
            psidot: 3.5,
            prev_psidot: 3.5,
            ..Default::default()
        };
        let t0 = s.psi;
        for _ in 0..700 {
            s = advance(&s, 3.5, 1e-3, &cfg).unwrap();
        }
        assert_relative_eq!(s.psi - t0, 3.5 * 0.7, epsilon = 1e-12);
    }

    #[test]
    fn step_response_decays_with_filter_constant() {
        let cfg = AdvancementConfig::default();
        let dt = 1e-3;
        let a = 1.0 - (-2.0 * PI * 10.0 * dt).exp();
        let s1 = advance(&AdvancementState::default(), 2.0, dt, &cfg).unwrap();
        // spike: the filter passes a fraction `a` of the raw 1/dt derivative
        assert_relative_eq!(s1.psiddot, a * 1000.0, epsilon = 1e-9);
        let mut s = s1;
        for _ in 0..50 {
            s = advance(&s, 2.0, dt, &cfg).unwrap();
        }
        // after 50 ms the response is down by exp(−2π·10·0.05)
        assert_relative_eq!(s.psiddot / s1.psiddot, (-2.0 * PI * 10.0 * 0.05).exp(), epsilon = 1e-12);
        assert_relative_eq!(s.psi, 0.0015 + 50.0 * 2.0 * dt, epsilon = 1e-12);
    }

    #[test]
    fn non_positive_step_is_a_domain_error() {
        let cfg = AdvancementConfig::default();
        let s = AdvancementState::default();
        assert!(matches!(advance(&s, 1.0, 0.0, &cfg), Err(Error::Domain(_))));
        assert!(matches!(advance(&s, 1.0, -1e-3, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn lyapunov_examples() {
        let g = Gains::default();
        assert_eq!(lyapunov_value(&TaskError::default(), &g), 0.0);
        let e = TaskError {
            vel_err: x(0.1),
            int_vel_err: Vector6::zeros(),
        };
        assert_relative_eq!(lyapunov_value(&e, &g), 0.005, epsilon = 1e-15);
        let e = TaskError {
            vel_err: Vector6::zeros(),
            int_vel_err: x(0.02),
        };
        assert_relative_eq!(lyapunov_value(&e, &g), 0.5 * 25.0 * 4e-4, epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(AdvancementConfig::default().validate().is_ok());
        let bad = AdvancementConfig {
            psidot_upper: 0.5,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Invalid { key, .. }) if key == "advancement.psidot_upper"));
    }

    fn vec6() -> impl Strategy<Value = Vector6<f64>> {
        prop::array::uniform6(-2.0f64..2.0).prop_map(Vector6::from)
    }

    proptest! {
        #[test]
        fn update_is_clamped(xd in vec6(), d in vec6(), upper in 1.0f64..20.0, eps in 0.0f64..1e-3) {
            let cfg = AdvancementConfig { psidot_upper: upper, epsilon_reg: eps, ..Default::default() };
            let p = psidot_update(&xd, &d, &cfg);
            prop_assert!((1.0..=upper).contains(&p));
            let of = xd.component_mul(&d);
            let p = psidot_update_appendix(&xd, &d, &of, &cfg);
            prop_assert!((1.0..=upper).contains(&p));
        }

        #[test]
        fn collinear_velocity_gives_clamped_scale(d in vec6(), c in -5.0f64..15.0) {
            prop_assume!(d.norm() > 1e-3);
            let p = psidot_update(&(d * c), &d, &exact());
            prop_assert!((p - c.clamp(1.0, 10.0)).abs() < 1e-12);
        }

        #[test]
        fn orthogonal_velocity_gives_floor(d in vec6(), v in vec6()) {
            prop_assume!(d.norm() > 1e-3);
            let ortho = v - d * (v.dot(&d) / d.norm_squared());
            prop_assert_eq!(psidot_update(&ortho, &d, &AdvancementConfig::default()), 1.0);
        }

        #[test]
        fn monotone_in_alignment(d in vec6(), v in vec6(), a in -3.0f64..3.0, b in 0.0f64..3.0) {
            let cfg = AdvancementConfig::default();
            let lo = psidot_update(&(v + d * a), &d, &cfg);
            let hi = psidot_update(&(v + d * (a + b)), &d, &cfg);
            prop_assert!(hi >= lo);
        }

        #[test]
        fn accepted_rate_satisfies_the_condition(xd in vec6(), d in vec6(), eps in 0.0f64..1e-6) {
            let cfg = AdvancementConfig { epsilon_reg: eps, ..Default::default() };
            let p = psidot_update(&xd, &d, &cfg);
            prop_assume!(p < cfg.psidot_upper);
            let scale = xd.norm() * d.norm() * p + (d.norm_squared() + eps) * p * p;
            prop_assert!(sdot_condition(&xd, &d, p, eps) <= 1e-9 * scale.max(1e-300));
        }

        #[test]
        fn psi_never_falls_behind_time(rates in prop::collection::vec(0.0f64..12.0, 1..200)) {
            let cfg = AdvancementConfig::default();
            let mut s = AdvancementState::default();
            let dt = 1e-3;
            for (i, r) in rates.iter().enumerate() {
                let prev = s.psi;
                s = advance(&s, *r, dt, &cfg).unwrap();
                prop_assert!((1.0..=10.0).contains(&s.psidot));
                prop_assert!(s.psi - prev >= dt - 1e-15);
                prop_assert!(s.psi >= (i + 1) as f64 * dt - 1e-12);
            }
        }

        #[test]
        fn lyapunov_is_non_negative(v in vec6(), z in vec6()) {
            let e = TaskError { vel_err: v, int_vel_err: z };
            prop_assert!(lyapunov_value(&e, &Gains::default()) >= 0.0);
        }
    }
}
