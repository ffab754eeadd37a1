//! Randomized checks of the structural properties of the scheme and estimators.

use hjhomog::datum::Datum;
use hjhomog::effective::extrapolate;
use hjhomog::fixtures;
use hjhomog::hamiltonian::shift_pin;
use hjhomog::media::sample_medium;
use hjhomog::problem::Realized;
use hjhomog::solver::{godunov_flux, solve_pair, SolveConfig};
use hjhomog::verify::{check_contraction, check_monotone_preservation, check_ordering, check_sign_reduction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn w_periodic() -> Realized {
    fixtures::w_shape(fixtures::periodic_b(), 0.0).realize(0).unwrap()
}

fn random_b(seed: u64) -> Realized {
    fixtures::b_family(fixtures::random_phase_b(), 1.0).realize(seed).unwrap()
}

fn small_solve() -> SolveConfig {
    SolveConfig {
        epsilon: 0.5,
        dx: 1.0 / 16.0,
        t_final: 0.5,
        snapshots: 4,
        ..SolveConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flux_is_monotone(x in -5.0..5.0f64, pm in -4.0..4.0f64, pp in -4.0..4.0f64, d in 1e-6..1.0f64) {
        let r = w_periodic();
        let h = &r.hamiltonian;
        let f = godunov_flux(h, x, pm, pp);
        prop_assert!(godunov_flux(h, x, pm + d, pp) >= f - 1e-12);
        prop_assert!(godunov_flux(h, x, pm, pp + d) <= f + 1e-12);
    }

    #[test]
    fn flux_is_consistent(x in -5.0..5.0f64, p in -4.0..4.0f64) {
        let r = w_periodic();
        let h = &r.hamiltonian;
        prop_assert!((godunov_flux(h, x, p, p) - h.eval(x, p)).abs() <= 1e-12 * (1.0 + p * p));
    }

    #[test]
    fn shift_moves_the_argument(x in -5.0..5.0f64, p in -3.0..3.0f64, p0 in -2.0..2.0f64) {
        let r = w_periodic();
        let s = shift_pin(&r.hamiltonian, p0);
        prop_assert!((s.eval(x, p) - r.hamiltonian.eval(x, p + p0)).abs() <= 1e-12 * (1.0 + (p + p0).powi(2)));
    }

    #[test]
    fn extrapolation_is_exact_on_lines(c0 in -3.0..3.0f64, c1 in -5.0..5.0f64) {
        let values: Vec<(f64, f64)> = [0.25, 0.125, 0.0625, 0.03125]
            .iter()
            .map(|&e| (e, c0 + c1 * e))
            .collect();
        let (v, err, no_conv, residual) = extrapolate(&values, 0.0);
        prop_assert!((v - c0).abs() <= 1e-12 * (1.0 + c1.abs()));
        prop_assert!(residual <= 1e-12 * (1.0 + c1.abs()));
        prop_assert!(!no_conv);
        prop_assert!(err >= 0.0);
    }

    #[test]
    fn clamped_medium_stays_in_range(seed in any::<u64>(), x in -1e3..1e3f64) {
        let b = sample_medium(&fixtures::random_phase_b(), seed).unwrap();
        let v = b.eval(x);
        prop_assert!((0.5..=2.0).contains(&v), "{v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordered_data_stay_ordered(seed in any::<u64>(), medium in 0u64..1000) {
        let r = random_b(medium);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = Datum::random_tents(&mut rng, 4, 2.0);
        let g2 = g1.plus(&Datum::random_bumps(&mut rng, 3, 2.0));
        let (u1, u2) = solve_pair(&r.hamiltonian, &r.diffusion, &|x| g1.eval(x), &|x| g2.eval(x), &small_solve()).unwrap();
        let rep = check_ordering(&u1, &u2).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn solutions_contract(seed in any::<u64>(), medium in 0u64..1000) {
        let r = random_b(medium);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = Datum::random_tents(&mut rng, 4, 2.0);
        let g2 = Datum::random_tents(&mut rng, 4, 2.0).with_slope(g1.slope());
        let (u1, u2) = solve_pair(&r.hamiltonian, &r.diffusion, &|x| g1.eval(x), &|x| g2.eval(x), &small_solve()).unwrap();
        let rep = check_contraction(&u1, &u2).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn monotone_data_stay_monotone(seed in any::<u64>(), medium in 0u64..1000, increasing in any::<bool>()) {
        let r = random_b(medium);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Datum::random_monotone(&mut rng, 4, 2.0, increasing);
        let rep = check_monotone_preservation(&r.hamiltonian, &r.diffusion, &|x| g.eval(x), &small_solve()).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn sign_reduction_holds(theta in -2.0..2.0f64, medium in 0u64..1000) {
        let r = random_b(medium);
        let rep = check_sign_reduction(&r.hamiltonian, &r.diffusion, theta, &small_solve()).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }
}
