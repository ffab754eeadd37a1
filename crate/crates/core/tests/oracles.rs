//! The solver and estimators against independent routes.

use hjhomog::datum::Datum;
use hjhomog::effective::{effective_at, ergodic_estimate, EffectiveConfig};
use hjhomog::fixtures;
use hjhomog::media::MediumSpec;
use hjhomog::oracle::{constant_coeff_effective, heat_kernel, hopf_lax, periodic_cell_effective};
use hjhomog::solver::{solve, SolveConfig};
use std::f64::consts::PI;

fn tents() -> Datum {
    Datum::Tents {
        slope: 0.3,
        tents: vec![[0.0, 1.0, 0.5], [1.0, -0.6, 0.4]],
    }
}

fn hopf_lax_error(dx: f64) -> f64 {
    let q = fixtures::quadratic(0.0).realize(0).unwrap();
    let g = tents();
    let cfg = SolveConfig {
        dx,
        t_final: 0.5,
        snapshots: 1,
        ..SolveConfig::default()
    };
    let sol = solve(&q.hamiltonian, &q.diffusion, &|x| g.eval(x), &cfg).unwrap();
    [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 1.5]
        .iter()
        .map(|&x| {
            let o = hopf_lax(&|y| g.eval(y), &|v| 0.5 * v * v, 0.5, x, 1e-9).unwrap();
            (sol.interpolate(1, x) - o.value).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn inviscid_quadratic_matches_hopf_lax() {
    let coarse = hopf_lax_error(1.0 / 128.0);
    let fine = hopf_lax_error(1.0 / 256.0);
    assert!(fine < 1.5e-2, "{fine}");
    // kinks limit the rate below one but it must still converge
    assert!(fine < 0.75 * coarse, "{coarse} -> {fine}");
}

fn hopf_cole_error(dx: f64) -> f64 {
    // u = -2a log w turns u_t - a u_xx + u_x^2 / 2 = 0 into the heat equation
    let a: f64 = 0.5;
    let v = fixtures::quadratic(a.sqrt()).realize(0).unwrap();
    let g = |x: f64| (2.0 * x).sin() + 0.2 * x;
    let cfg = SolveConfig {
        dx,
        t_final: 0.5,
        snapshots: 1,
        ..SolveConfig::default()
    };
    let sol = solve(&v.hamiltonian, &v.diffusion, &g, &cfg).unwrap();
    [-1.0, -0.3, 0.0, 0.4, 1.2]
        .iter()
        .map(|&x| {
            let w = heat_kernel(&|y| (-g(y) / (2.0 * a)).exp(), a, 0.5, x, 1e-12).unwrap();
            (sol.interpolate(1, x) + 2.0 * a * w.value.ln()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn viscous_quadratic_matches_hopf_cole() {
    let coarse = hopf_cole_error(1.0 / 64.0);
    let fine = hopf_cole_error(1.0 / 128.0);
    assert!(fine < 2e-3, "{fine}");
    assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
}

#[test]
fn long_time_average_matches_cell_formula() {
    let c = fixtures::periodic_cosine().realize(0).unwrap();
    let cfg = EffectiveConfig {
        dx_ratio: 1.0 / 32.0,
        ..EffectiveConfig::default()
    };
    let oracle = periodic_cell_effective(&|x| (2.0 * PI * x).cos(), 2.0, 1e-10).unwrap();
    let e = ergodic_estimate(&c.hamiltonian, &c.diffusion, 2.0, 0, 16.0, &cfg).unwrap();
    let d = (e.extrapolated - oracle.value).abs();
    assert!(d <= 2.0 * e.error_bar && e.error_bar < 5e-3, "{d} vs bar {}", e.error_bar);
}

#[test]
fn scaling_limit_matches_constant_coefficients() {
    let r = fixtures::b_family(MediumSpec::constant(1.0), 1.0).realize(0).unwrap();
    let cfg = EffectiveConfig {
        eps_ladder: vec![0.25, 0.125, 0.0625],
        dx_ratio: 1.0 / 16.0,
        ..EffectiveConfig::default()
    };
    for theta in [-1.5, -0.5, 0.25, 1.0, 2.0] {
        let e = effective_at(&r.hamiltonian, &r.diffusion, theta, 0, &cfg).unwrap();
        let o = constant_coeff_effective(&r.hamiltonian, theta).unwrap();
        assert!((e.extrapolated - o.value).abs() < 1e-9, "theta {theta}: {} vs {}", e.extrapolated, o.value);
    }
}
