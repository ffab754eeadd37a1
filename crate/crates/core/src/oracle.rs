//! Reference values on closed-form-friendly subcases.
//!
//! Nothing here calls into the solver or the Hamiltonian flux code; every
//! minimizer and quadrature rule is local to this module.

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    HopfLax,
    CellQuadrature,
    ConstantCoeff,
    HeatKernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub method: OracleMethod,
    /// Declared accuracy, met by self-refinement.
    pub tolerance: f64,
}

const MAX_REFINEMENTS: usize = 40;

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Dense scan on `[lo, hi]` followed by golden-section refinement around the best sample.
fn scan_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, tol: f64) -> (f64, f64) {
    let h = (hi - lo) / samples as f64;
    let (mut best_x, mut best) = (lo, f(lo));
    for k in 1..=samples {
        let x = lo + k as f64 * h;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let (x, v) = golden_min(f, (best_x - h).max(lo), (best_x + h).min(hi), tol);
    if v < best {
        (x, v)
    } else {
        (best_x, best)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let whole = simpson(f, a, b);
    adaptive_step(f, a, b, whole, tol, depth)
}

fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson exhausted its depth on [{a}, {b}]"
        )));
    }
    Ok(adaptive_step(f, a, m, left, 0.5 * tol, depth - 1)?
        + adaptive_step(f, m, b, right, 0.5 * tol, depth - 1)?)
}

/// `inf_y g(y) + t L((x - y) / t)` for an x-independent convex Hamiltonian
/// with Lagrangian `lagrangian` and no diffusion.
pub fn hopf_lax(
    g: &dyn Fn(f64) -> f64,
    lagrangian: &dyn Fn(f64) -> f64,
    t: f64,
    x: f64,
    tol: f64,
) -> Result<OracleResult> {
    if !(t > 0.0) {
        return Err(crate::error::invalid("t", "must be positive"));
    }
    let phi = |y: f64| g(y) + t * lagrangian((x - y) / t);
    // Grow the window until the minimizer is interior.
    let mut radius = 4.0 * t.max(1e-3);
    let mut found = None;
    for _ in 0..40 {
        let (y, v) = scan_min(&phi, x - radius, x + radius, 4000, 1e-12 * radius);
        let edge = (y - x).abs() > 0.95 * radius;
        if !edge {
            found = Some((y, v));
            break;
        }
        radius *= 2.0;
    }
    let Some((_, mut value)) = found else {
        return Err(Error::Bracket(format!(
            "minimizer escaped every window up to radius {radius:e}; Lagrangian not superlinear?"
        )));
    };
    let mut samples = 8000;
    for _ in 0..MAX_REFINEMENTS {
        let (_, v) = scan_min(&phi, x - radius, x + radius, samples, 1e-13 * radius);
        let change = (v - value).abs();
        value = value.min(v);
        if change < 0.25 * tol {
            return Ok(OracleResult {
                value,
                method: OracleMethod::HopfLax,
                tolerance: tol,
            });
        }
        samples *= 2;
    }
    Err(Error::Bracket("Hopf-Lax minimization did not settle".into()))
}

/// Maximum of a 1-periodic function and a maximizer in `[0, 1)`.
fn periodic_max(v: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let neg = |x: f64| -v(x);
    let (x, m) = scan_min(&neg, 0.0, 1.0, 8192, 1e-14);
    (x.rem_euclid(1.0), -m)
}

/// `int_0^1 sqrt(2 (lambda - V))`, split at the maximizer so the only kink
/// of the integrand sits at an interval end.
fn action(v: &dyn Fn(f64) -> f64, lambda: f64, x_max: f64, tol: f64) -> Result<f64> {
    let f = |x: f64| (2.0 * (lambda - v(x))).max(0.0).sqrt();
    let pieces = 16;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = x_max + k as f64 / pieces as f64;
        let b = x_max + (k + 1) as f64 / pieces as f64;
        total += adaptive_simpson(&f, a, b, tol / pieces as f64, 50)?;
    }
    Ok(total)
}

fn cell_value(v: &dyn Fn(f64) -> f64, theta: f64, tol: f64) -> Result<f64> {
    let (x_max, v_max) = periodic_max(v);
    let target = theta.abs();
    let quad_tol = 0.1 * tol;
    if action(v, v_max, x_max, quad_tol)? >= target {
        return Ok(v_max);
    }
    // action(lambda) >= sqrt(2 (lambda - max V)), so this upper end brackets the root
    let mut lo = v_max;
    let mut hi = v_max + 0.5 * target * target + 1.0;
    while hi - lo > 0.1 * tol {
        let mid = 0.5 * (lo + hi);
        if action(v, mid, x_max, quad_tol)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Effective Hamiltonian of `H(x, p) = p^2/2 + V(x)` with `V` 1-periodic and
/// no diffusion: the root `lambda` of `int_0^1 sqrt(2(lambda - V)) = |theta|`,
/// or `max V` on the flat part.
pub fn periodic_cell_effective(v: &dyn Fn(f64) -> f64, theta: f64, tol: f64) -> Result<OracleResult> {
    let mut inner = tol;
    let mut previous = cell_value(v, theta, inner)?;
    for _ in 0..MAX_REFINEMENTS {
        inner *= 0.5;
        let next = cell_value(v, theta, inner)?;
        if (next - previous).abs() < 0.25 * tol {
            return Ok(OracleResult {
                value: next,
                method: OracleMethod::CellQuadrature,
                tolerance: tol,
            });
        }
        previous = next;
    }
    Err(Error::Quadrature("cell problem refinement did not settle".into()))
}

/// `H(theta)` itself: without x-dependence the linear datum is a classical solution.
pub fn constant_coeff_effective(h: &HamiltonianSpec, theta: f64) -> Result<OracleResult> {
    if !h.is_x_independent() {
        return Err(crate::error::invalid(
            "hamiltonian",
            "constant-coefficient oracle needs an x-independent Hamiltonian",
        ));
    }
    Ok(OracleResult {
        value: h.eval(0.0, theta),
        method: OracleMethod::ConstantCoeff,
        tolerance: 0.0,
    })
}

/// Solution of `u_t = a u_xx` from `g`, by Gaussian convolution:
/// `u = pi^{-1/2} int g(x - 2 sqrt(a t) z) e^{-z^2} dz`.
pub fn heat_kernel(g: &dyn Fn(f64) -> f64, a: f64, t: f64, x: f64, tol: f64) -> Result<OracleResult> {
    if !(t >= 0.0 && a >= 0.0) {
        return Err(crate::error::invalid("t", "time and diffusivity must be nonnegative"));
    }
    if t == 0.0 || a == 0.0 {
        return Ok(OracleResult {
            value: g(x),
            method: OracleMethod::HeatKernel,
            tolerance: 0.0,
        });
    }
    let s = 2.0 * (a * t).sqrt();
    let f = |z: f64| g(x - s * z) * (-z * z).exp();
    let mut previous = f64::NAN;
    let mut quad = tol;
    for _ in 0..MAX_REFINEMENTS {
        let mut total = 0.0;
        for k in -16..16 {
            total += adaptive_simpson(&f, 0.5 * k as f64, 0.5 * (k + 1) as f64, quad / 32.0, 50)?;
        }
        let value = total / std::f64::consts::PI.sqrt();
        if (value - previous).abs() < 0.25 * tol {
            return Ok(OracleResult {
                value,
                method: OracleMethod::HeatKernel,
                tolerance: tol,
            });
        }
        previous = value;
        quad *= 0.5;
    }
    Err(Error::Quadrature("heat kernel refinement did not settle".into()))
}
