use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, Isometry3, Translation3, UnitQuaternion, Vector3, Vector6};
use pathadv_core::dynamics::{
    compute_dynamics, forward_dynamics, forward_kinematics, kinetic_energy, task_jacobian, total_energy,
};
use pathadv_core::sim::{integrate, Integrator};
use pathadv_core::{Link, RobotModel, RobotState, Wrench};
use proptest::prelude::*;

/// Two unit rods, 1 kg, centre of mass at mid-length.
fn unit_arm() -> RobotModel {
    let link = Link {
        joint: pathadv_core::JointKind::Revolute,
        length: 1.0,
        mass: 1.0,
        com_offset: 0.5,
        inertia: 1.0 / 12.0,
    };
    RobotModel {
        name: "unit-arm".into(),
        links: vec![link.clone(), link],
        gravity: 9.81,
        base_dof: 0,
        base_angle: 0.0,
        tracked_link: 1,
    }
}

fn state(q: &[f64], nu: &[f64]) -> RobotState {
    RobotState::from_slices(q, nu)
}

struct TwoLinkTextbook {
    m: [[f64; 2]; 2],
    c: [[f64; 2]; 2],
    g: [f64; 2],
}

/// Closed-form two-link terms with heading measured from the horizontal.
#[allow(clippy::too_many_arguments)]
fn textbook(
    q: [f64; 2],
    nu: [f64; 2],
    l1: f64,
    lc1: f64,
    lc2: f64,
    m1: f64,
    m2: f64,
    i1: f64,
    i2: f64,
    g: f64,
) -> TwoLinkTextbook {
    let c2 = q[1].cos();
    let m11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i1 + i2;
    let m12 = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2;
    let m22 = m2 * lc2 * lc2 + i2;
    let h = -m2 * l1 * lc2 * q[1].sin();
    TwoLinkTextbook {
        m: [[m11, m12], [m12, m22]],
        c: [[h * nu[1], h * (nu[0] + nu[1])], [-h * nu[0], 0.0]],
        g: [
            (m1 * lc1 + m2 * l1) * g * q[0].cos() + m2 * lc2 * g * (q[0] + q[1]).cos(),
            m2 * lc2 * g * (q[0] + q[1]).cos(),
        ],
    }
}

#[test]
fn two_link_matches_textbook_terms() {
    let q = [FRAC_PI_4, FRAC_PI_3];
    let nu = [0.1, -0.2];
    let d = compute_dynamics(&unit_arm(), &state(&q, &nu)).unwrap();
    let tb = textbook(q, nu, 1.0, 0.5, 0.5, 1.0, 1.0, 1.0 / 12.0, 1.0 / 12.0, 9.81);

    let frozen_m = [
        [2.166666666666667, 0.5833333333333334],
        [0.5833333333333334, 0.3333333333333333],
    ];
    let frozen_c = [[0.08660254037844387, 0.04330127018922193], [0.04330127018922193, 0.0]];
    let frozen_g = [9.135568868932184, -1.2695074162278637];
    for i in 0..2 {
        assert_relative_eq!(d.gravity[i], tb.g[i], epsilon = 1e-12);
        assert_relative_eq!(d.gravity[i], frozen_g[i], epsilon = 1e-12);
        for j in 0..2 {
            assert_relative_eq!(d.mass[(i, j)], tb.m[i][j], epsilon = 1e-12);
            assert_relative_eq!(d.mass[(i, j)], frozen_m[i][j], epsilon = 1e-12);
            assert_relative_eq!(d.coriolis[(i, j)], tb.c[i][j], epsilon = 1e-12);
            assert_relative_eq!(d.coriolis[(i, j)], frozen_c[i][j], epsilon = 1e-12);
        }
    }
    let h = &d.coriolis * DVector::from_row_slice(&nu) + &d.gravity;
    assert_relative_eq!(d.bias, h, epsilon = 1e-15);
    assert_eq!(d.selector, DMatrix::identity(2, 2));
}

#[test]
fn kinetic_energy_matches_per_link_sum() {
    let (q1, q2) = (FRAC_PI_4, FRAC_PI_3);
    let (d1, d2) = (0.1, -0.2);
    let s = state(&[q1, q2], &[d1, d2]);
    // Centre-of-mass velocities written out by hand.
    let v1 = (-0.5 * q1.sin() * d1, 0.5 * q1.cos() * d1);
    let v2 = (
        -q1.sin() * d1 - 0.5 * (q1 + q2).sin() * (d1 + d2),
        q1.cos() * d1 + 0.5 * (q1 + q2).cos() * (d1 + d2),
    );
    let i = 1.0 / 12.0;
    let per_link = 0.5 * (v1.0 * v1.0 + v1.1 * v1.1)
        + 0.5 * i * d1 * d1
        + 0.5 * (v2.0 * v2.0 + v2.1 * v2.1)
        + 0.5 * i * (d1 + d2) * (d1 + d2);
    let ke = kinetic_energy(&unit_arm(), &s).unwrap();
    assert_relative_eq!(ke, per_link, epsilon = 1e-15);
    assert_relative_eq!(ke, 0.005833333333333334, epsilon = 1e-15);
}

#[test]
fn shipped_arm_matches_textbook_with_its_own_parameters() {
    let model = RobotModel::two_link();
    let q = [0.4, -1.1];
    let nu = [0.7, 0.3];
    let d = compute_dynamics(&model, &state(&q, &nu)).unwrap();
    let i = 0.3 * 0.3 / 12.0;
    let tb = textbook(q, nu, 0.3, 0.15, 0.15, 1.0, 1.0, i, i, 9.81);
    for r in 0..2 {
        assert_relative_eq!(d.gravity[r], tb.g[r], epsilon = 1e-12);
        for c in 0..2 {
            assert_relative_eq!(d.mass[(r, c)], tb.m[r][c], epsilon = 1e-12);
            assert_relative_eq!(d.coriolis[(r, c)], tb.c[r][c], epsilon = 1e-12);
        }
    }
}

#[test]
fn forward_kinematics_matches_transform_product() {
    let model = RobotModel::two_link();
    let q = [FRAC_PI_4, FRAC_PI_3];
    let pose = forward_kinematics(&model, &state(&q, &[0.0, 0.0])).unwrap();

    // Rotations about −y turn +x towards +z.
    let joint = |angle: f64| {
        Isometry3::from_parts(
            Translation3::identity(),
            UnitQuaternion::from_axis_angle(&-Vector3::y_axis(), angle),
        )
    };
    let rod = Isometry3::translation(0.3, 0.0, 0.0);
    let tip = joint(q[0]) * rod * joint(q[1]) * rod;
    assert_relative_eq!(pose.position, tip.translation.vector, epsilon = 1e-15);
    assert_relative_eq!(pose.position.x, 0.13448632082520806, epsilon = 1e-15);
    assert_relative_eq!(pose.position.z, 0.5019097822426848, epsilon = 1e-15);
    assert!(pose.rotation.angle_to(&tip.rotation) < 1e-12);
}

#[test]
fn forward_dynamics_residual_vanishes() {
    for model in [RobotModel::slider(), RobotModel::two_link(), RobotModel::leg3()] {
        let n = model.n_joints();
        let q: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.2).collect();
        let nu: Vec<f64> = (0..n).map(|i| 0.5 - 0.4 * i as f64).collect();
        let s = state(&q, &nu);
        let tau = DVector::from_fn(n, |i, _| 0.7 - 0.3 * i as f64);
        let f = Wrench::new(Vector3::new(0.4, 0.1, -0.6), Vector3::new(0.0, 0.05, 0.0));
        let a = forward_dynamics(&model, &s, &tau, &f).unwrap();
        let d = compute_dynamics(&model, &s).unwrap();
        let j = task_jacobian(&model, &s).unwrap();
        let r = &d.mass * a + &d.bias - &d.selector * &tau - j.j.transpose() * f.to_vector6();
        assert!(r.amax() < 1e-10, "{}: residual {r}", model.name);
    }
}

#[test]
fn prismatic_forward_dynamics_by_hand() {
    let a = forward_dynamics(
        &RobotModel::slider(),
        &state(&[0.2], &[0.1]),
        &DVector::from_element(1, 1.5),
        &Wrench::from_force(Vector3::new(0.5, 0.0, 0.0)),
    )
    .unwrap();
    assert_relative_eq!(a[0], 1.0, epsilon = 1e-15);
}

fn pose_difference(a: &Vector6<f64>, b: &Vector6<f64>) -> Vector6<f64> {
    let mut d = a - b;
    // Planar orientation lives in ry; undo rotation-vector wrap-around.
    d[4] = (d[4] + PI).rem_euclid(2.0 * PI) - PI;
    d
}

fn shipped_models() -> Vec<RobotModel> {
    vec![RobotModel::slider(), RobotModel::two_link(), RobotModel::leg3()]
}

fn arb_model_state() -> impl Strategy<Value = (RobotModel, RobotState)> {
    (
        0usize..3,
        prop::collection::vec(-2.5f64..2.5, 3),
        prop::collection::vec(-2.0f64..2.0, 3),
    )
        .prop_map(|(k, q, nu)| {
            let model = shipped_models().swap_remove(k);
            let n = model.n_joints();
            let s = state(&q[..n], &nu[..n]);
            (model, s)
        })
}

fn finite_difference_mass(model: &RobotModel, s: &RobotState, h: f64) -> DMatrix<f64> {
    let plus = RobotState::new(&s.q + &s.nu * h, s.nu.clone());
    let minus = RobotState::new(&s.q - &s.nu * h, s.nu.clone());
    (compute_dynamics(model, &plus).unwrap().mass - compute_dynamics(model, &minus).unwrap().mass) / (2.0 * h)
}

proptest! {
    #[test]
    fn mass_matrix_symmetric_positive_definite((model, s) in arb_model_state()) {
        let m = compute_dynamics(&model, &s).unwrap().mass;
        prop_assert!((&m - m.transpose()).amax() <= 1e-10 * m.amax());
        prop_assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn mdot_minus_two_c_is_skew((model, s) in arb_model_state(), v in prop::collection::vec(-1.0f64..1.0, 3)) {
        let n = model.n_joints();
        let v = DVector::from_row_slice(&v[..n]);
        let d = compute_dynamics(&model, &s).unwrap();
        let mdot = finite_difference_mass(&model, &s, 1e-6);
        let quad = v.dot(&((mdot - &d.coriolis * 2.0) * &v));
        prop_assert!(quad.abs() < 1e-8, "vᵀ(Ṁ − 2C)v = {quad:e}");
    }

    #[test]
    fn jacobian_maps_velocity_to_pose_rate((model, s) in arb_model_state()) {
        let h = 1e-6;
        let plus = RobotState::new(&s.q + &s.nu * h, s.nu.clone());
        let minus = RobotState::new(&s.q - &s.nu * h, s.nu.clone());
        let x_plus = forward_kinematics(&model, &plus).unwrap().to_vector6();
        let x_minus = forward_kinematics(&model, &minus).unwrap().to_vector6();
        let fd = pose_difference(&x_plus, &x_minus) / (2.0 * h);
        let j = task_jacobian(&model, &s).unwrap();
        let xdot = &j.j * &s.nu;
        prop_assert!((xdot - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }

    #[test]
    fn jacobian_derivative_matches_finite_difference((model, s) in arb_model_state()) {
        let h = 1e-6;
        let plus = RobotState::new(&s.q + &s.nu * h, s.nu.clone());
        let minus = RobotState::new(&s.q - &s.nu * h, s.nu.clone());
        let fd = (task_jacobian(&model, &plus).unwrap().j - task_jacobian(&model, &minus).unwrap().j) / (2.0 * h);
        let j_dot = task_jacobian(&model, &s).unwrap().j_dot;
        prop_assert!((&j_dot - &fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }

    #[test]
    fn planar_rows_stay_zero((model, s) in arb_model_state()) {
        let j = task_jacobian(&model, &s).unwrap();
        for r in [1, 3, 5] {
            prop_assert_eq!(j.j.row(r).amax(), 0.0);
            prop_assert_eq!(j.j_dot.row(r).amax(), 0.0);
        }
    }
}

/// Passive trajectory sampled every 0.02 s.
fn passive_run(
    model: &RobotModel,
    s0: &RobotState,
    dt: f64,
    duration: f64,
    integrator: Integrator,
) -> Vec<DVector<f64>> {
    let tau = DVector::zeros(model.n_joints());
    let per_sample = (0.02 / dt).round() as usize;
    let mut s = s0.clone();
    let mut out = Vec::new();
    for k in 1..=(duration / dt).round() as usize {
        s = integrate(model, &s, &tau, &Wrench::zero(), dt, integrator).unwrap();
        if k % per_sample == 0 {
            out.push(DVector::from_iterator(
                2 * s.q.len(),
                s.q.iter().chain(s.nu.iter()).copied(),
            ));
        }
    }
    out
}

fn max_error(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

#[test]
fn passive_energy_is_conserved() {
    for (model, q, nu) in [
        (RobotModel::two_link(), vec![0.3, 0.5], vec![0.5, -0.3]),
        (RobotModel::leg3(), vec![0.4, -0.3, 0.2], vec![0.0, 0.3, 0.0]),
    ] {
        let s0 = state(&q, &nu);
        let e0 = total_energy(&model, &s0).unwrap();
        let tau = DVector::zeros(model.n_joints());
        let mut s = s0.clone();
        let mut worst: f64 = 0.0;
        for _ in 0..5000 {
            s = integrate(&model, &s, &tau, &Wrench::zero(), 1e-3, Integrator::Rk4).unwrap();
            worst = worst.max((total_energy(&model, &s).unwrap() - e0).abs());
        }
        assert!(
            worst / e0.abs() < 1e-5,
            "{}: relative drift {:e}",
            model.name,
            worst / e0.abs()
        );
    }
}

#[test]
fn rk4_is_fourth_order() {
    let model = RobotModel::two_link();
    let s0 = state(&[0.3, 0.5], &[0.5, -0.3]);
    let reference = passive_run(&model, &s0, 1e-4, 1.0, Integrator::Rk4);
    let err = |dt: f64| max_error(&passive_run(&model, &s0, dt, 1.0, Integrator::Rk4), &reference);
    let ratio = err(0.002) / err(0.001);
    assert!((12.0..20.0).contains(&ratio), "halving dt reduced the error by {ratio}");
}

#[test]
fn semi_implicit_euler_is_first_order() {
    let model = RobotModel::two_link();
    let s0 = state(&[0.3, 0.5], &[0.5, -0.3]);
    let reference = passive_run(&model, &s0, 1e-4, 1.0, Integrator::Rk4);
    let err = |dt: f64| {
        max_error(
            &passive_run(&model, &s0, dt, 1.0, Integrator::SemiImplicitEuler),
            &reference,
        )
    };
    let ratio = err(0.001) / err(0.0005);
    assert!((1.6..2.4).contains(&ratio), "halving dt reduced the error by {ratio}");
}
