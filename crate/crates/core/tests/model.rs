mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;

use capsule_core::model::{rhs_full, FullState, NondimParams, PhysicalParams};
use common::{case2_params, full_model_residual};

fn params() -> impl Strategy<Value = NondimParams> {
    (
        1e-4..0.5f64,
        0.1..5.0f64,
        1e-3..10.0f64,
        0.0..2.0f64,
        1e-3..1.0f64,
        1e-3..1.0f64,
    )
        .prop_map(
            |(epsilon, omega, forcing_amp, zeta, mu_forward, mu_backward)| NondimParams {
                epsilon,
                omega,
                forcing_amp,
                zeta,
                mu_forward,
                mu_backward,
            },
        )
}

fn state() -> impl Strategy<Value = FullState> {
    (-10.0..10.0f64, -1.0..1.0f64, -20.0..20.0f64, -5.0..5.0f64)
        .prop_map(|(x, v, theta, theta_dot)| FullState::new(x, v, theta, theta_dot))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivative_satisfies_both_equations(p in params(), s in state(), t in 0.0..100.0f64) {
        let d = rhs_full(&s, t, &p).unwrap();
        prop_assert_eq!(d.x, s.v);
        prop_assert_eq!(d.theta, s.theta_dot);
        let r = full_model_residual(s.to_array(), [d.v, d.theta_dot], t, &p);
        prop_assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12, "{:?}", r);
    }

    #[test]
    fn reflection_flips_the_derivative(p in params(), s in state(), t in 0.0..100.0f64) {
        let p = NondimParams { mu_backward: p.mu_forward, ..p };
        let d = rhs_full(&s, t, &p).unwrap();
        let m = rhs_full(&s.reflected(), t, &p).unwrap();
        prop_assert_eq!(m.to_array(), d.reflected().to_array());
    }

    #[test]
    fn nondimensionalisation_round_trips(
        capsule in 0.1..100.0f64, ratio in 1e-3..0.5f64, length in 0.01..2.0f64,
        amp in 1e-4..0.1f64, freq in 1.0..100.0f64, c1 in 0.0..5.0f64, c2 in 0.0..5.0f64, ch in 0.0..0.1f64,
    ) {
        let pendulum = capsule * ratio / (1.0 - ratio);
        let phys = PhysicalParams {
            capsule_mass: capsule,
            pendulum_mass: pendulum,
            pendulum_length: length,
            gravity: 9.81,
            base_amplitude: amp,
            base_frequency: freq,
            damping_forward: c1 + 1e-3,
            damping_backward: c2 + 1e-3,
            hinge_damping: ch + 1e-4,
        };
        let n = phys.nondimensionalize().unwrap();
        prop_assert!((n.epsilon - ratio).abs() < 1e-12);
        let back = n.redimensionalize(capsule, length, 9.81).unwrap();
        for (a, b) in [
            (back.capsule_mass, phys.capsule_mass),
            (back.pendulum_mass, phys.pendulum_mass),
            (back.base_amplitude, phys.base_amplitude),
            (back.base_frequency, phys.base_frequency),
            (back.damping_forward, phys.damping_forward),
            (back.damping_backward, phys.damping_backward),
            (back.hinge_damping, phys.hinge_damping),
        ] {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{} vs {}", a, b);
        }
    }
}

#[test]
fn equilibrium_and_horizontal_pendulum() {
    let p = case2_params();
    let d = rhs_full(&FullState::default(), 0.0, &p).unwrap();
    assert_eq!(d.to_array(), [0.0; 4]);

    let t = std::f64::consts::PI / (2.0 * p.omega);
    let d = rhs_full(&FullState::at_rest(std::f64::consts::FRAC_PI_2, 0.0), t, &p).unwrap();
    assert!(d.v.abs() < 1e-15);
    assert_relative_eq!(d.theta_dot, -1.0, epsilon = 1e-12);
}

#[test]
fn invalid_mass_ratio_is_rejected() {
    let p = NondimParams {
        epsilon: 1.0,
        ..case2_params()
    };
    assert!(rhs_full(&FullState::default(), 0.0, &p).is_err());
}
