//! Named problems used by the tests, the acceptance suite and the CLI examples.

use crate::hamiltonian::{Coeffs, HamiltonianDoc, PieceDoc, PieceForm};
use crate::media::MediumSpec;
use crate::problem::ProblemSpec;
use std::collections::BTreeMap;

fn quadratic_piece(center: f64, offset: f64, medium: Option<(&str, f64, f64)>) -> PieceDoc {
    let (medium_ref, slope_medium, offset_medium) = match medium {
        Some((name, s, o)) => (Some(name.to_string()), s, o),
        None => (None, 0.0, 0.0),
    };
    PieceDoc {
        form: PieceForm::Quadratic,
        coeffs: Coeffs {
            center,
            offset,
            slope_medium,
            offset_medium,
            ..Coeffs::default()
        },
        medium_ref,
    }
}

fn sigma_spec(sigma: f64) -> Option<MediumSpec> {
    (sigma != 0.0).then(|| MediumSpec::constant(sigma))
}

/// `H(p) = p^2/2` with constant `A = sigma^2`.
pub fn quadratic(sigma: f64) -> ProblemSpec {
    ProblemSpec {
        hamiltonian: HamiltonianDoc {
            pieces: vec![quadratic_piece(0.0, 0.0, None)],
            pins: vec![],
            pinned_values: vec![],
            class: None,
        },
        media: BTreeMap::new(),
        sigma: sigma_spec(sigma),
    }
}

/// `H(x, p) = p^2/2 - b(x) |p|`, pinned at `p = 0` with value 0.
pub fn b_family(b: MediumSpec, sigma: f64) -> ProblemSpec {
    ProblemSpec {
        hamiltonian: HamiltonianDoc {
            pieces: vec![
                quadratic_piece(0.0, 0.0, Some(("b", 1.0, 0.0))),
                quadratic_piece(0.0, 0.0, Some(("b", -1.0, 0.0))),
            ],
            pins: vec![0.0],
            pinned_values: vec![0.0],
            class: None,
        },
        media: BTreeMap::from([("b".to_string(), b)]),
        sigma: sigma_spec(sigma),
    }
}

/// Three quadratic pieces pinned at `p = -1` and `p = 1`, both with value 0:
/// `(p+1)^2/2 + b (p+1)`, `p^2/2 - 1/2`, `(p-1)^2/2 - b (p-1)`.
pub fn w_shape(b: MediumSpec, sigma: f64) -> ProblemSpec {
    ProblemSpec {
        hamiltonian: HamiltonianDoc {
            pieces: vec![
                quadratic_piece(-1.0, 0.0, Some(("b", 1.0, 0.0))),
                quadratic_piece(0.0, -0.5, None),
                quadratic_piece(1.0, 0.0, Some(("b", -1.0, 0.0))),
            ],
            pins: vec![-1.0, 1.0],
            pinned_values: vec![0.0, 0.0],
            class: None,
        },
        media: BTreeMap::from([("b".to_string(), b)]),
        sigma: sigma_spec(sigma),
    }
}

/// `H(x, p) = p^2/2 + cos(2 pi x)`, no diffusion.
pub fn periodic_cosine() -> ProblemSpec {
    ProblemSpec {
        hamiltonian: HamiltonianDoc {
            pieces: vec![quadratic_piece(0.0, 0.0, Some(("v", 0.0, 1.0)))],
            pins: vec![],
            pinned_values: vec![],
            class: None,
        },
        media: BTreeMap::from([("v".to_string(), MediumSpec::periodic(0.0, vec![1.0], 1.0))]),
        sigma: None,
    }
}

/// `b(x) = 1.25 + 0.75 cos(2 pi x)`, ranging over `[0.5, 2]`.
pub fn periodic_b() -> MediumSpec {
    MediumSpec::periodic(1.25, vec![0.75], 1.0)
}

/// The same periodic `b` with a seeded random translation.
pub fn shifted_periodic_b() -> MediumSpec {
    periodic_b().with_random_shift()
}

/// Quasi-periodic random-phase `b`, clamped smoothly into `[a, 1/a]` with `a = 0.5`.
pub fn random_phase_b() -> MediumSpec {
    MediumSpec::random_phase(
        1.2,
        vec![0.35, 0.25, 0.15],
        vec![1.0, std::f64::consts::SQRT_2, 0.5 * (1.0 + 5f64.sqrt())],
    )
    .with_clamp(0.5)
}

/// Every pinned fixture with its pins and pinned values, for pin-value checks.
pub fn pinned_fixtures() -> Vec<(&'static str, ProblemSpec)> {
    vec![
        ("b-family-constant", b_family(MediumSpec::constant(1.0), 0.0)),
        ("b-family-periodic", b_family(periodic_b(), 1.0)),
        ("b-family-random", b_family(random_phase_b(), 1.0)),
        ("w-shape-periodic", w_shape(periodic_b(), 0.0)),
        ("w-shape-random", w_shape(random_phase_b(), 1.0)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_realize() {
        for (name, p) in pinned_fixtures() {
            let r = p.realize(3).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(r.hamiltonian.pins().len(), p.hamiltonian.pins.len());
        }
        let r = periodic_cosine().realize(0).unwrap();
        assert!((r.hamiltonian.eval(0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((r.hamiltonian.eval(0.5, 2.0) - 1.0).abs() < 1e-12);
        assert!(r.diffusion.is_zero());
        assert!(!periodic_cosine().is_random());
        assert!(b_family(random_phase_b(), 1.0).is_random());
        let q = quadratic(1.0).realize(0).unwrap();
        assert_eq!(q.diffusion.eval(0.3), 1.0);
    }

    #[test]
    fn b_ranges() {
        let b = crate::media::sample_medium(&random_phase_b(), 1).unwrap();
        for i in 0..5000 {
            let v = b.eval(-100.0 + 0.04 * i as f64);
            assert!((0.5..=2.0).contains(&v));
        }
    }
}
