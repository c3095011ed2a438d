mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use optobind_core::binding::{binding_matrices, structural_identity_check};
use optobind_core::classical::{binding_force_with, conservative_potential, Kernel};
use optobind_core::dynamics::{lyapunov, lyapunov_residual, stability_spectrum, LinearModel, Stability};
use optobind_core::green::green_full;
use optobind_core::particle::depolarization_tensor;
use optobind_core::quadrature::richardson_derivative;
use optobind_core::response::{susceptibility_matrix, ChainSpec, ResponseModel};
use optobind_core::scenario::{ArrayScenario, ChainGeometry, GasSpec};
use optobind_core::{PhysicalConstants, Vec3};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrices_satisfy_structural_invariants(seed in any::<u64>(), n in 2usize..7) {
        let s = common::random_scenario(&mut common::rng(seed), n);
        let m = binding_matrices(&s).unwrap();
        for j in 0..n {
            prop_assert_eq!(m.c[(j, j)], 0.0);
            let row: f64 = (0..n).map(|jp| m.c[(j, jp)]).sum();
            prop_assert!((m.k[j] - row).abs() <= 1e-12 * m.c.amax());
            prop_assert!(m.d[(j, j)].re > 0.0);
            for jp in 0..n {
                prop_assert!((m.d[(j, jp)] - m.d[(jp, j)].conj()).norm() <= 1e-14 * m.d.camax());
            }
        }
        prop_assert!(structural_identity_check(&m.c, &m.d, s.constants.hbar).passed());
    }

    #[test]
    fn depolarization_trace_and_bounds(a in 0.02f64..50.0, b in 0.02f64..50.0, c in 0.02f64..50.0) {
        let n = depolarization_tensor([a, b, c]).unwrap();
        prop_assert!((n.trace() - 1.0).abs() <= 1e-10);
        for i in 0..3 {
            prop_assert!(n[(i, i)] > 0.0 && n[(i, i)] < 1.0);
        }
        // the longest axis depolarizes least
        let longest = [a, b, c].iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        for i in 0..3 {
            prop_assert!(n[(longest, longest)] <= n[(i, i)] + 1e-12);
        }
    }

    #[test]
    fn green_tensor_symmetric_and_even(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, kr in 1e-4f64..80.0,
    ) {
        let dir = Vec3::new(x, y, z);
        prop_assume!(dir.norm() > 0.1);
        let k = 2.0 * PI / common::WAVELENGTH;
        let r = dir.normalize() * (kr / k);
        let g = green_full(&r, k).unwrap();
        let scale = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!((g - g.transpose()).iter().all(|v| v.norm() <= 1e-13 * scale));
        let gm = green_full(&(-r), k).unwrap();
        prop_assert!((g - gm).iter().all(|v| v.norm() <= 1e-13 * scale));
    }

    #[test]
    fn lyapunov_solution_of_random_stable_drift(seed in any::<u64>(), n in 1usize..6) {
        use rand::Rng;
        let mut rng = common::rng(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        // shift so the spectrum sits in the left half plane
        let shift = b.norm() + 0.1;
        let a = &b - DMatrix::identity(n, n) * shift;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = &g * g.transpose();
        let s = lyapunov(&a, &q).unwrap();
        prop_assert!(lyapunov_residual(&a, &s, &q) <= 1e-10);
        prop_assert!((&s - s.transpose()).amax() <= 1e-12 * s.amax());
    }

    #[test]
    fn frequency_rescaling_leaves_chain_response_unchanged(s in 0.2f64..5.0, w in 15.0f64..25.0, n in 2usize..8) {
        let base = ChainSpec::reference(n);
        let scaled = ChainSpec { omega0: base.omega0 * s, gamma: base.gamma * s, g: base.g * s, ..base };
        let a = susceptibility_matrix(&base.response_model(), w).unwrap();
        let b = susceptibility_matrix(&scaled.response_model(), w * s).unwrap();
        prop_assert!((&a - &b).norm() <= 1e-9 * a.norm());
    }
}

#[test]
fn chain_round_trip_matches_closed_form() {
    let particle = common::random_sphere(&mut common::rng(3));
    let geometry = ChainGeometry {
        count: 6,
        order: ChainGeometry::minimal_order(1e-6, common::WAVELENGTH),
        waist: 1e-6,
        wavelength: common::WAVELENGTH,
        field: 2e7,
        polarization_angle: 0.5 * PI,
    };
    let (s, warnings) = ArrayScenario::chain(
        particle,
        &geometry,
        GasSpec::damping(1e3),
        PhysicalConstants::default(),
        false,
    )
    .unwrap();
    assert!(warnings.is_empty());
    let m = binding_matrices(&s).unwrap();
    let chain = ChainSpec::from_scenario(&s, &m).unwrap();
    assert_eq!(chain.order, geometry.order);
    let closed = chain.coupling_over_mass() * particle.mass;
    let dev = (&closed - &m.c).amax() / m.c.amax();
    assert!(dev <= 1e-10, "{dev:e}");
    // forward coupling from 1 towards N
    assert!(m.c[(1, 0)].abs() > 1e3 * m.c[(0, 1)].abs());
}

#[test]
fn symmetric_chain_response_is_reciprocal() {
    let n = 6;
    let cm = DMatrix::from_fn(n, n, |j, jp| {
        if j == jp {
            0.0
        } else {
            let a = (j as f64 - jp as f64).abs();
            // phi_next = 0, k d = 2 pi n
            2.0 * 20.0 / a * (2.0 * PI * a).cos()
        }
    });
    let model = ResponseModel {
        omega_sq: DVector::from_element(n, 400.0),
        coupling_over_mass: cm,
        gamma: 1.0,
        omega_ref: 20.0,
    };
    for w in [14.0, 19.5, 20.0, 23.0] {
        let chi = susceptibility_matrix(&model, w).unwrap();
        assert!((chi[(n - 1, 0)] - chi[(0, n - 1)]).norm() <= 1e-12 * chi[(n - 1, 0)].norm());
    }
}

fn pair_model(c: f64, gamma: f64, omega0: f64, antisymmetric: bool) -> LinearModel {
    let coupling = DMatrix::from_row_slice(2, 2, &[0.0, c, if antisymmetric { -c } else { c }, 0.0]);
    let k = [c, if antisymmetric { -c } else { c }];
    let omega = DVector::from_fn(2, |j, _| (omega0 * omega0 - k[j]).sqrt());
    let d = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
    LinearModel::from_parts(
        &DVector::from_element(2, 1.0),
        &omega,
        &coupling,
        gamma,
        &d,
        &DVector::zeros(2),
        None,
    )
    .unwrap()
}

#[test]
fn antireciprocal_pair_loses_stability_at_gamma_omega() {
    // with C_12 = -C_21 = c the modes obey l^2 + gamma l + w0^2 -+ i c = 0,
    // which crosses Re l = 0 at c = gamma w0
    let (gamma, omega0) = (1.0, 20.0);
    let mut threshold = None;
    let steps = 4000;
    for i in 1..=steps {
        let c = 2.0 * gamma * omega0 * i as f64 / steps as f64;
        let report = stability_spectrum(&pair_model(c, gamma, omega0, true));
        if report.class == Stability::Unstable {
            threshold = Some(c);
            break;
        }
    }
    let c = threshold.expect("instability within the scan");
    assert!(
        (c - gamma * omega0).abs() <= 2.0 * gamma * omega0 / steps as f64 + 1e-9,
        "{c}"
    );
}

#[test]
fn damping_shifts_symmetric_spectrum_by_half_gamma() {
    let undamped = stability_spectrum(&pair_model(30.0, 0.0, 20.0, false));
    let damped = stability_spectrum(&pair_model(30.0, 0.8, 20.0, false));
    assert!(undamped.max_real.abs() <= 1e-10);
    for z in &damped.eigenvalues {
        assert!((z.re + 0.4).abs() <= 1e-10, "{z}");
    }
}

#[test]
fn potential_gradient_matches_conservative_binding_force() {
    let s = common::random_scenario(&mut common::rng(11), 3);
    let k = s.wavenumber();
    let positions: Vec<Vec3> = s
        .tweezers
        .iter()
        .enumerate()
        .map(|(j, t)| t.focus + Vec3::new(2e-8 * j as f64, -1e-8, 3e-8))
        .collect();
    let forces = binding_force_with(&s, &positions, Kernel::RealPart, false).unwrap();
    for j in 0..positions.len() {
        for a in 0..3 {
            let shifted = |x: f64| {
                let mut p = positions.clone();
                p[j][a] += x;
                conservative_potential(&s, &p).unwrap()
            };
            let grad = richardson_derivative(shifted, 0.0, 0.05 / k, 1e-10, 0.0).unwrap();
            let f = forces.forces[j][a];
            let scale = forces.forces[j].norm();
            assert!(
                (-grad - f).abs() <= 1e-8 * scale,
                "particle {j} axis {a}: {} vs {f}",
                -grad
            );
        }
    }
}
