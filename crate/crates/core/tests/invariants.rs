//! Property tests for structural invariants across modules.

use aavf_core::integrator::{aavf_step, exact_linear_step, Quadrature, StepperConfig, DEFAULT_FP_TOL};
use aavf_core::resonance::{check_numerical_nonres, check_pair_nonres, KVector, ResonanceParams};
use aavf_core::spectral::{build_frequencies, Grid, NodalField};
use aavf_core::system::{
    actions, energy, modified_actions, modified_momentum, momentum, State, SystemSpec,
};
use proptest::prelude::*;

fn nodal(values: &[f64]) -> NodalField {
    NodalField::new(values.to_vec())
}

fn small_state(grid: &Grid, u: &[f64], v: &[f64]) -> State {
    State::from_nodal(grid, &nodal(u), &nodal(v)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(u in prop::collection::vec(-1.0f64..1.0, 16)) {
        let grid = Grid::with_len(16).unwrap();
        let back = grid.idft(&grid.dft(&nodal(&u)).unwrap()).unwrap();
        for (a, b) in back.values.iter().zip(&u) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn exact_quadrature_conserves_energy_per_step(
        u in prop::collection::vec(-0.2f64..0.2, 16),
        v in prop::collection::vec(-0.2f64..0.2, 16),
        h in 0.01f64..0.3,
        gauss in prop::bool::ANY,
    ) {
        let grid = Grid::with_len(16).unwrap();
        let freqs = build_frequencies(0.5, 8).unwrap();
        let spec = SystemSpec::polynomial(0.5, vec![-1.0, 0.5]).unwrap();
        // g cubic: two Gauss nodes integrate it exactly
        let quad = if gauss { Quadrature::Gauss(2) } else { Quadrature::ExactPolynomial };
        let x0 = small_state(&grid, &u, &v);
        let x1 = aavf_step(&x0, &spec, &freqs, &grid, StepperConfig::new(h, quad)).unwrap();
        let e0 = energy(&x0, &spec, &freqs, &grid).unwrap();
        let e1 = energy(&x1, &spec, &freqs, &grid).unwrap();
        prop_assert!((e1 - e0).abs() <= 50.0 * DEFAULT_FP_TOL * e0.abs().max(1.0));
    }

    #[test]
    fn step_preserves_hermitian_symmetry(
        u in prop::collection::vec(-0.2f64..0.2, 8),
        v in prop::collection::vec(-0.2f64..0.2, 8),
    ) {
        let grid = Grid::with_len(8).unwrap();
        let freqs = build_frequencies(0.5, 4).unwrap();
        let spec = SystemSpec::quadratic_preset();
        let x0 = small_state(&grid, &u, &v);
        let x1 = aavf_step(&x0, &spec, &freqs, &grid, StepperConfig::new(0.1, Quadrature::Midpoint)).unwrap();
        prop_assert!(x1.q.symmetry_residual() <= 1e-17);
        prop_assert!(x1.p.symmetry_residual() <= 1e-17);
    }

    #[test]
    fn linear_propagator_is_reversible_and_conservative(
        u in prop::collection::vec(-1.0f64..1.0, 16),
        v in prop::collection::vec(-1.0f64..1.0, 16),
        h in -1.0f64..1.0,
    ) {
        let grid = Grid::with_len(16).unwrap();
        let freqs = build_frequencies(0.5, 8).unwrap();
        let x0 = small_state(&grid, &u, &v);
        let x1 = exact_linear_step(&x0, &freqs, h).unwrap();
        let back = exact_linear_step(&x1, &freqs, -h).unwrap();
        prop_assert!(back.max_abs_diff(&x0) <= 1e-14 * x0.max_abs().max(1e-300));
        let i0 = actions(&x0, &freqs).unwrap();
        let i1 = actions(&x1, &freqs).unwrap();
        for (a, b) in i0.iter().zip(&i1) {
            prop_assert!((a - b).abs() <= 1e-13 * a.max(1e-300));
        }
        let k0 = momentum(&x0).unwrap();
        let k1 = momentum(&x1).unwrap();
        prop_assert!((k0 - k1).abs() <= 1e-13 * (1.0 + k0.abs()));
    }

    #[test]
    fn modified_quantities_approach_plain_ones(
        u in prop::collection::vec(-1.0f64..1.0, 8),
        v in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let grid = Grid::with_len(8).unwrap();
        let freqs = build_frequencies(0.5, 4).unwrap();
        let x = small_state(&grid, &u, &v);
        let h = 1e-7;
        let i = actions(&x, &freqs).unwrap();
        let mi = modified_actions(&x, &freqs, h).unwrap();
        for (a, b) in i.iter().zip(&mi) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        let k = momentum(&x).unwrap();
        prop_assert!((k - modified_momentum(&x, &freqs, h).unwrap()).abs() <= 1e-12 * k.abs().max(1.0));
    }

    #[test]
    fn pair_check_is_even_in_k(k in prop::collection::vec(-3i32..=3, 4), j in -3i64..=3, eps in 0.0f64..1.0, h in 0.01f64..2.0) {
        let freqs = build_frequencies(0.5, 3).unwrap();
        let p = ResonanceParams { epsilon: eps, h, n: 2, m: 3, sigma: 1.0, c0: 1.0 };
        let neg: Vec<i32> = k.iter().map(|x| -x).collect();
        let a = check_pair_nonres(j, &KVector::new(k, &freqs).unwrap(), &freqs, &p).unwrap();
        let b = check_pair_nonres(j, &KVector::new(neg, &freqs).unwrap(), &freqs, &p).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn numerical_nonres_never_improves_with_larger_epsilon(eps in 0.0f64..0.25, h in 0.01f64..2.0) {
        let freqs = build_frequencies(0.5, 16).unwrap();
        let p = ResonanceParams { epsilon: eps, h, n: 1, m: 16, sigma: 1.0, c0: 1.0 };
        let doubled = ResonanceParams { epsilon: 4.0 * eps, ..p.clone() };
        let a = check_numerical_nonres(&freqs, &p);
        let b = check_numerical_nonres(&freqs, &doubled);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x || !*y);
        }
    }
}
