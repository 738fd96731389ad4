use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use qnonlocal_core::correlators::TestKind;
use qnonlocal_core::harness::{evaluate, evaluate_exact, theta_sweep, Mode, Pipeline};
use qnonlocal_core::sampler::{substream, ChannelEfficiencies};
use qnonlocal_core::states::{singlet, werner};
use qnonlocal_core::SweepConfig;

#[test]
fn sampled_rows_track_exact_rows() {
    for kind in TestKind::ALL {
        let base = SweepConfig {
            kind,
            points: 32,
            theta_stop: PI,
            shots: 100_000,
            seed: 77,
            ..SweepConfig::default()
        };
        let exact = theta_sweep(&base).unwrap();
        let sampled = theta_sweep(&SweepConfig {
            mode: Mode::Sampled,
            ..base
        })
        .unwrap();
        let inside = exact
            .iter()
            .zip(&sampled)
            .filter(|(e, s)| (e.functional - s.functional).abs() <= 3.0 * s.stderr + 1e-12)
            .count();
        assert!(
            inside as f64 >= 0.99 * 32.0 - 1.0,
            "{kind:?}: {inside}/32 within 3 sigma"
        );
    }
}

#[test]
fn sweep_rows_in_grid_order() {
    let rows = theta_sweep(&SweepConfig {
        kind: TestKind::Chsh,
        theta_start: -1.0,
        theta_stop: 1.0,
        points: 5,
        ..SweepConfig::default()
    })
    .unwrap();
    let thetas: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    assert_eq!(thetas, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chsh_period_is_a_quarter_turn(theta in -10.0f64..10.0) {
        let rho = singlet();
        let a = evaluate_exact(TestKind::Chsh, &rho, theta).unwrap().functional;
        let b = evaluate_exact(TestKind::Chsh, &rho, theta + FRAC_PI_2).unwrap().functional;
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(a >= 2.0 - 1e-10);
    }

    #[test]
    fn witness_and_steering_rotation_invariant(theta in -10.0f64..10.0) {
        let rho = singlet();
        for kind in [TestKind::Entanglement, TestKind::Steering] {
            let v = evaluate_exact(kind, &rho, theta).unwrap().functional;
            prop_assert!((v - kind.singlet_value()).abs() < 1e-10);
        }
    }

    #[test]
    fn werner_functionals_are_affine(mu in 0.0f64..=1.0) {
        let rho = werner(mu).unwrap();
        for kind in TestKind::ALL {
            let v = evaluate_exact(kind, &rho, 0.0).unwrap();
            prop_assert!((v.functional - mu * kind.singlet_value()).abs() < 1e-10);
            prop_assert_eq!(v.violated, mu * kind.singlet_value() > kind.bound() + 1e-12);
        }
    }

    #[test]
    fn uniform_loss_leaves_functionals(ea in 0.05f64..=1.0, eb in 0.05f64..=1.0, mu in 0.0f64..=1.0) {
        let rho = werner(mu).unwrap();
        let lossy = Pipeline {
            efficiencies: Some(ChannelEfficiencies::new(vec![ea; 3], vec![eb; 3]).unwrap()),
            ..Pipeline::exact()
        };
        for kind in TestKind::ALL {
            let clean = evaluate_exact(kind, &rho, 0.3).unwrap();
            let v = evaluate(kind, &rho, 0.3, &lossy, &mut substream(0, 0)).unwrap();
            prop_assert!((v.functional - clean.functional).abs() < 1e-12);
            prop_assert_eq!(v.violated, clean.violated);
        }
    }

    #[test]
    fn seeded_runs_repeat(seed in any::<u64>()) {
        let p = Pipeline::sampled(500);
        let a = evaluate(TestKind::Chsh, &singlet(), 0.0, &p, &mut substream(seed, 1)).unwrap();
        let b = evaluate(TestKind::Chsh, &singlet(), 0.0, &p, &mut substream(seed, 1)).unwrap();
        prop_assert_eq!(a, b);
    }
}
