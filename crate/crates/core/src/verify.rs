//! Executable property checks over solver and estimator output.

use crate::datum::Datum;
use crate::effective::{
    effective_at, effective_curve_for, min_compose, EffectiveConfig, EffectiveCurve,
};
use crate::error::{invalid, Error, Result};
use crate::fixtures;
use crate::hamiltonian::{shift_pin, split_at_pin, HamiltonianSpec};
use crate::media::MediumSpec;
use crate::problem::{ProblemSpec, Realized};
use crate::report::{config_hash, Status, VerificationReport};
use crate::solver::{solve, solve_observed, solve_pair, Diffusion, GridSolution, Scheme, SolveConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `max` that turns NaN into `+inf`, so blown-up runs cannot pass.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

fn same_grid(u1: &GridSolution, u2: &GridSolution) -> Result<()> {
    if u1.xs != u2.xs || u1.times.len() != u2.times.len() {
        return Err(Error::GridMismatch(format!(
            "{} x {} vs {} x {} grids",
            u1.times.len(),
            u1.xs.len(),
            u2.times.len(),
            u2.xs.len()
        )));
    }
    if u1
        .times
        .iter()
        .zip(&u2.times)
        .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::GridMismatch("snapshot times differ".into()));
    }
    Ok(())
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| worse(m, (x - y).abs()))
}

/// `sup |u1 - u2|` at every stored time stays below its initial value plus `10 dt`.
pub fn check_contraction(u1: &GridSolution, u2: &GridSolution) -> Result<VerificationReport> {
    same_grid(u1, u2)?;
    let d0 = sup_distance(&u1.values[0], &u2.values[0]);
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (t, (a, b)) in u1.times.iter().zip(u1.values.iter().zip(&u2.values)) {
        let excess = sup_distance(a, b) - d0;
        let excess = if excess.is_nan() { f64::INFINITY } else { excess };
        if excess > worst {
            worst = excess;
            at = *t;
        }
    }
    let tol = 10.0 * u1.meta.dt_max.max(u2.meta.dt_max);
    Ok(VerificationReport::from_measurement("contraction", worst, tol, 0.0)
        .with_witness(format!("t={at}"), worst)
        .with_witness("initial_distance", d0))
}

/// Ordered data stay ordered: `max (u1 - u2)^+ <= 1e-10`.
pub fn check_ordering(u1: &GridSolution, u2: &GridSolution) -> Result<VerificationReport> {
    same_grid(u1, u2)?;
    let initial = u1.values[0]
        .iter()
        .zip(&u2.values[0])
        .fold(0.0f64, |m, (a, b)| m.max(a - b));
    if initial > 1e-14 {
        return Err(invalid("data", "initial data are not ordered"));
    }
    let (mut worst, mut at) = (0.0f64, (0.0, 0.0));
    for (t, (a, b)) in u1.times.iter().zip(u1.values.iter().zip(&u2.values)) {
        for ((x, p), q) in u1.xs.iter().zip(a).zip(b) {
            let v = p - q;
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v > worst {
                worst = v;
                at = (*t, *x);
            }
        }
    }
    Ok(VerificationReport::from_measurement("ordering", worst, 1e-10, 0.0)
        .with_witness(format!("t={},x={}", at.0, at.1), worst))
}

/// Largest per-step decrease of a nondecreasing datum (or increase of a
/// nonincreasing one) over every time step. Tolerance `1e-12`.
pub fn check_monotone_preservation(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
) -> Result<VerificationReport> {
    let mut direction: Option<f64> = None;
    let mut bad_datum = false;
    let mut worst = 0.0f64;
    let mut at = (0usize, 0.0f64);
    solve_observed(h, a, g, cfg, &mut |view| {
        let d = *direction.get_or_insert_with(|| {
            let lo = view.u.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::min);
            let hi = view.u.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            match (lo >= 0.0, hi <= 0.0) {
                (true, true) => 0.0,
                (true, false) => 1.0,
                (false, true) => -1.0,
                (false, false) => {
                    bad_datum = true;
                    1.0
                }
            }
        });
        for (i, w) in view.u.windows(2).enumerate() {
            let inc = w[1] - w[0];
            let v = if d == 0.0 { inc.abs() } else { -d * inc };
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v > worst {
                worst = v;
                at = (view.step, view.xs[i]);
            }
        }
    })?;
    if bad_datum {
        return Err(invalid("g", "datum is not monotone on the grid"));
    }
    Ok(
        VerificationReport::from_measurement("monotone-preservation", worst, 1e-12, 0.0)
            .with_witness(format!("step={},x={}", at.0, at.1), worst),
    )
}

/// `max |u(dx) - u(2 dx)|` over the final slice, on common nodes with `|x| <= L/2`.
pub fn refinement_delta(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
) -> Result<f64> {
    let fine = solve(h, a, g, cfg)?;
    refinement_delta_from(&fine, h, a, g, cfg)
}

fn refinement_delta_from(
    fine: &GridSolution,
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
) -> Result<f64> {
    let coarse_cfg = SolveConfig {
        dx: 2.0 * cfg.dx,
        half_width: Some(fine.meta.half_width),
        ..cfg.clone()
    };
    let coarse = solve(h, a, g, &coarse_cfg)?;
    let limit = 0.5 * fine.meta.half_width;
    let (fo, co) = (fine.origin() as i64, coarse.origin() as i64);
    let mut delta = 0.0f64;
    for (j, x) in coarse.xs.iter().enumerate() {
        if x.abs() > limit {
            continue;
        }
        let i = fo + 2 * (j as i64 - co);
        if i < 0 || i as usize >= fine.xs.len() {
            continue;
        }
        delta = worse(delta, (fine.final_values()[i as usize] - coarse.final_values()[j]).abs());
    }
    Ok(delta)
}

fn pin_at_zero(h: &HamiltonianSpec) -> Result<usize> {
    h.pins()
        .iter()
        .position(|p| p.abs() <= 1e-12)
        .ok_or(Error::NotPinned(0))
}

/// For `theta >= 0` the solution with `H` equals the one with `H_+` (split at
/// the pin `p = 0`); for `theta < 0` with `H_-`. Tolerance: twice the
/// grid-refinement delta plus `1e-12`.
pub fn check_sign_reduction(
    h: &HamiltonianSpec,
    a: &Diffusion,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<VerificationReport> {
    let k = pin_at_zero(h)?;
    let split = split_at_pin(h, k)?;
    let half = if theta >= 0.0 { &split.plus } else { &split.minus };
    let g = |x: f64| theta * x;
    let full = solve(h, a, &g, cfg)?;
    let cfg_same = SolveConfig {
        half_width: Some(full.meta.half_width),
        ..cfg.clone()
    };
    let reduced = solve(half, a, &g, &cfg_same)?;
    same_grid(&full, &reduced)?;
    let disc = full
        .values
        .iter()
        .zip(&reduced.values)
        .fold(0.0, |m, (p, q)| worse(m, sup_distance(p, q)));
    let delta = refinement_delta_from(&full, h, a, &g, &cfg_same)?;
    let tol = 2.0 * delta + 1e-12;
    let side = if theta >= 0.0 { "plus" } else { "minus" };
    Ok(
        VerificationReport::from_measurement("sign-reduction", disc, tol, 0.0)
            .with_witness(format!("theta={theta},half={side}"), disc)
            .with_witness("refinement_delta", delta),
    )
}

/// Modulus `m(d) = sup_{t, |x| <= L/2} (|u_{t1} - u_{t2}| - |x| d) / t` over
/// theta pairs at distance `d`; a quadratic fit over the three smallest
/// distances must extrapolate to `|m(0)| <= tol`.
pub fn check_theta_continuity(
    h: &HamiltonianSpec,
    a: &Diffusion,
    pairs: &[(f64, f64)],
    cfg: &SolveConfig,
    tol: f64,
) -> Result<VerificationReport> {
    if pairs.is_empty() {
        return Err(invalid("pairs", "need at least one theta pair"));
    }
    let reach = pairs
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(0.0, f64::max);
    let ref_cfg = SolveConfig {
        half_width: cfg.half_width,
        ..cfg.clone()
    };
    // common grid: size it for the steepest datum
    let probe = solve(h, a, &|x| reach * x, &ref_cfg)?;
    let common = SolveConfig {
        half_width: Some(probe.meta.half_width),
        ..cfg.clone()
    };
    let moduli: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(t1, t2)| {
            let u1 = solve(h, a, &|x| t1 * x, &common)?;
            let u2 = solve(h, a, &|x| t2 * x, &common)?;
            let d = (t1 - t2).abs();
            let limit = 0.5 * u1.meta.half_width;
            let mut m = 0.0f64;
            for (k, &t) in u1.times.iter().enumerate().skip(1) {
                for (i, x) in u1.xs.iter().enumerate() {
                    if x.abs() <= limit {
                        let v = ((u1.values[k][i] - u2.values[k][i]).abs() - x.abs() * d) / t;
                        m = worse(m, v);
                    }
                }
            }
            Ok((d, m))
        })
        .collect::<Result<_>>()?;
    let mut sorted = moduli.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.dedup_by(|a, b| a.0 == b.0 && {
        b.1 = b.1.max(a.1);
        true
    });
    let distinct: Vec<(f64, f64)> = sorted.iter().copied().filter(|p| p.0 > 0.0).take(3).collect();
    let zero = sorted.iter().find(|p| p.0 == 0.0).map(|p| p.1);
    // exact quadratic through the three smallest distances
    let intercept = match distinct.as_slice() {
        [(d0, m0), (d1, m1), (d2, m2)] => {
            m0 * d1 * d2 / ((d0 - d1) * (d0 - d2))
                + m1 * d0 * d2 / ((d1 - d0) * (d1 - d2))
                + m2 * d0 * d1 / ((d2 - d0) * (d2 - d1))
        }
        [(d0, m0), (d1, m1)] => (m0 * d1 - m1 * d0) / (d1 - d0),
        [(_, m0)] => *m0,
        _ => 0.0,
    };
    let worst = worse(intercept.abs(), zero.unwrap_or(0.0).abs());
    let mut report = VerificationReport::from_measurement("theta-continuity", worst, tol, 0.0)
        .with_witness("intercept", intercept);
    for (d, m) in sorted {
        report = report.with_witness(format!("d={d}"), m);
    }
    Ok(report)
}

/// `u^eps(t, x) = eps u(t/eps, x/eps)` on commensurate grids; tolerance `5 (dx + dt)`.
pub fn check_scaling_identity(
    h: &HamiltonianSpec,
    a: &Diffusion,
    theta: f64,
    eps: f64,
    cfg: &SolveConfig,
) -> Result<VerificationReport> {
    let scaled_cfg = SolveConfig {
        epsilon: eps,
        origin_only: false,
        ..cfg.clone()
    };
    let g = |x: f64| theta * x;
    let scaled = solve(h, a, &g, &scaled_cfg)?;
    let unscaled_cfg = SolveConfig {
        epsilon: 1.0,
        dx: cfg.dx / eps,
        t_final: cfg.t_final / eps,
        half_width: Some(scaled.meta.half_width / eps),
        ..scaled_cfg.clone()
    };
    let unscaled = solve(h, a, &g, &unscaled_cfg)?;
    if unscaled.xs.len() != scaled.xs.len() || unscaled.times.len() != scaled.times.len() {
        return Err(Error::GridMismatch(format!(
            "scaled grid has {} nodes, unscaled {}",
            scaled.xs.len(),
            unscaled.xs.len()
        )));
    }
    let (mut worst, mut at) = (0.0f64, (0.0, 0.0));
    for k in 0..scaled.times.len() {
        for i in 0..scaled.xs.len() {
            let v = (scaled.values[k][i] - eps * unscaled.values[k][i]).abs();
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v > worst {
                worst = v;
                at = (scaled.times[k], scaled.xs[i]);
            }
        }
    }
    let tol = 5.0 * (cfg.dx + scaled.meta.dt_max);
    Ok(
        VerificationReport::from_measurement("scaling-identity", worst, tol, 0.0)
            .with_witness(format!("eps={eps},t={},x={}", at.0, at.1), worst),
    )
}

/// `theta x - t beta(|theta|) <= u <= theta x - t alpha(|theta|)` at every node.
pub fn check_solution_sandwich(
    h: &HamiltonianSpec,
    a: &Diffusion,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<VerificationReport> {
    let sol = solve(h, a, &|x| theta * x, cfg)?;
    let class = h.class();
    let (al, be) = (class.alpha(theta.abs()), class.beta(theta.abs()));
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (t, row) in sol.times.iter().zip(&sol.values) {
        for (x, u) in sol.xs.iter().zip(row) {
            let base = theta * x;
            worst = worse(worst, (base - t * be) - u);
            worst = worse(worst, u - (base - t * al));
            scale = scale.max(u.abs());
        }
    }
    let tol = 1e-9 * (1.0 + scale);
    Ok(
        VerificationReport::from_measurement("coercivity-sandwich", worst, tol, 0.0)
            .with_witness(format!("theta={theta}"), worst),
    )
}

/// `alpha(|theta|) - tol <= H_bar(theta) <= beta(|theta|) + tol` along a curve.
pub fn check_curve_sandwich(curve: &EffectiveCurve, tol: f64) -> VerificationReport {
    let (mut worst, mut at, mut err) = (f64::NEG_INFINITY, f64::NAN, 0.0);
    for (i, e) in curve.estimates.iter().enumerate() {
        let v = worse(curve.alpha_env[i] - e.extrapolated, e.extrapolated - curve.beta_env[i]);
        if v > worst {
            worst = v;
            at = e.theta;
            err = e.error_bar;
        }
    }
    let worst = worst.max(0.0);
    VerificationReport::from_measurement("coercivity-sandwich", worst, tol, err)
        .with_witness(format!("theta={at}"), worst)
}

/// `|H_bar(p_i) - h_i| <= tol` at every pin.
pub fn check_pin_values(
    h: &HamiltonianSpec,
    a: &Diffusion,
    cfg: &EffectiveConfig,
    tol: f64,
) -> Result<VerificationReport> {
    if h.pins().is_empty() {
        return Err(Error::NotPinned(0));
    }
    let results: Vec<(f64, f64)> = h
        .pins()
        .par_iter()
        .zip(h.pinned_values())
        .map(|(&p, &v)| Ok((p, (effective_at(h, a, p, 0, cfg)?.extrapolated - v).abs())))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut report_witnesses = Vec::new();
    for (p, d) in results {
        worst = worse(worst, d);
        report_witnesses.push((format!("pin={p}"), d));
    }
    let mut r = VerificationReport::from_measurement("pin-values", worst, tol, 0.0);
    for (loc, v) in report_witnesses {
        r = r.with_witness(loc, v);
    }
    Ok(r)
}

/// Reports the point where `|d| - e` is largest; passes iff `|d| <= min(e, cap)` there.
fn binding(name: &str, points: &[(String, f64, f64)], cap: f64) -> VerificationReport {
    let mut best: Option<&(String, f64, f64)> = None;
    let slack = |p: &(String, f64, f64)| {
        let s = p.1 - p.2.min(cap);
        if s.is_nan() {
            f64::INFINITY
        } else {
            s
        }
    };
    for p in points {
        if best.is_none_or(|b| slack(p) > slack(b)) {
            best = Some(p);
        }
    }
    let (loc, d, e) = best.cloned().unwrap_or_else(|| ("none".into(), 0.0, 0.0));
    let d = if d.is_nan() { f64::INFINITY } else { d };
    VerificationReport::from_measurement(name, d, e.min(cap), 0.0)
        .with_witness(loc, d)
        .with_witness("combined_error", e)
}

/// `H_bar[shift_pin(H, p0)](theta)` against `H_bar[H](theta + p0)`, within the
/// combined error bars.
pub fn check_shift_covariance(
    h: &HamiltonianSpec,
    a: &Diffusion,
    shifts: &[f64],
    thetas: &[f64],
    cfg: &EffectiveConfig,
) -> Result<VerificationReport> {
    let tasks: Vec<(f64, f64)> = shifts
        .iter()
        .flat_map(|&p0| thetas.iter().map(move |&t| (p0, t)))
        .collect();
    let points: Vec<(String, f64, f64)> = tasks
        .par_iter()
        .map(|&(p0, t)| {
            let shifted = shift_pin(h, p0);
            let lhs = effective_at(&shifted, a, t, 0, cfg)?;
            let rhs = effective_at(h, a, t + p0, 0, cfg)?;
            Ok((
                format!("p0={p0},theta={t}"),
                (lhs.extrapolated - rhs.extrapolated).abs(),
                lhs.error_bar + rhs.error_bar,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(binding("shift-covariance", &points, f64::INFINITY))
}

/// Direct curve, the two half curves from the split at `pin_index`, and their min-composition.
pub struct MinFormulaCurves {
    pub direct: EffectiveCurve,
    pub minus: EffectiveCurve,
    pub plus: EffectiveCurve,
    pub composed: EffectiveCurve,
}

pub fn min_formula_curves(
    realized: &Realized,
    pin_index: usize,
    thetas: &[f64],
    cfg: &EffectiveConfig,
) -> Result<MinFormulaCurves> {
    let split = split_at_pin(&realized.hamiltonian, pin_index)?;
    let direct = effective_curve_for(realized, thetas, cfg)?;
    let minus = effective_curve_for(&realized.with_hamiltonian(split.minus), thetas, cfg)?;
    let plus = effective_curve_for(&realized.with_hamiltonian(split.plus), thetas, cfg)?;
    let composed = min_compose(&minus, &plus)?;
    Ok(MinFormulaCurves {
        direct,
        minus,
        plus,
        composed,
    })
}

/// `|H_bar - min(H_bar_-, H_bar_+)|` within the combined error bars, capped at `cap`.
pub fn check_min_formula(
    direct: &EffectiveCurve,
    composed: &EffectiveCurve,
    cap: f64,
) -> Result<VerificationReport> {
    direct.max_discrepancy(composed)?;
    let points: Vec<(String, f64, f64)> = direct
        .estimates
        .iter()
        .zip(&composed.estimates)
        .map(|(a, b)| {
            (
                format!("theta={}", a.theta),
                (a.extrapolated - b.extrapolated).abs(),
                a.error_bar + b.error_bar,
            )
        })
        .collect();
    let worst_bar = points.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(binding("min-formula", &points, cap).with_witness("max_combined_error", worst_bar))
}

/// Strongest level-set convexity violation `H(j) - max(H(i), H(k))` over
/// triples `i < j < k`, guarded by twice the largest of the three error bars.
/// Passes when the violation clears the guard, fails when it is below minus
/// the guard, inconclusive in between.
pub fn check_nonconvexity_witness(curve: &EffectiveCurve) -> VerificationReport {
    let h = curve.values();
    let e = curve.errors();
    let n = h.len();
    let mut best = (f64::NEG_INFINITY, 0.0, (0usize, 0usize, 0usize));
    for j in 1..n.saturating_sub(1) {
        for i in 0..j {
            for k in j + 1..n {
                let margin = h[j] - h[i].max(h[k]);
                let guard = 2.0 * e[i].max(e[j]).max(e[k]);
                if margin - guard > best.0 - best.1 {
                    best = (margin, guard, (i, j, k));
                }
            }
        }
    }
    let (margin, guard, (i, j, k)) = best;
    if !margin.is_finite() {
        return VerificationReport::from_measurement("non-convexity-witness", f64::INFINITY, 0.0, 0.0);
    }
    let t = &curve.thetas;
    VerificationReport::from_measurement("non-convexity-witness", guard - margin, 0.0, 2.0 * guard)
        .with_witness(format!("theta={},{},{}", t[i], t[j], t[k]), margin)
        .with_witness("guard", guard)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Contraction,
    Ordering,
    MonotonePreservation,
    SignReduction,
    ThetaContinuity,
    ScalingIdentity,
    CoercivitySandwich,
    PinValues,
    ShiftCovariance,
    MinFormula,
    NonConvexityWitness,
}

impl CheckName {
    pub const ALL: [CheckName; 11] = [
        CheckName::Contraction,
        CheckName::Ordering,
        CheckName::MonotonePreservation,
        CheckName::SignReduction,
        CheckName::ThetaContinuity,
        CheckName::ScalingIdentity,
        CheckName::CoercivitySandwich,
        CheckName::PinValues,
        CheckName::ShiftCovariance,
        CheckName::MinFormula,
        CheckName::NonConvexityWitness,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub problem: ProblemSpec,
    pub checks: Vec<CheckName>,
    pub seed: u64,
    pub solve: SolveConfig,
    pub effective: EffectiveConfig,
    pub thetas: Vec<f64>,
    /// Randomized data pairs for contraction and ordering, and monotone data.
    pub random_data: usize,
    /// Swap the monotone flux for the non-monotone central one (fault injection).
    pub broken_flux: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            problem: fixtures::b_family(MediumSpec::constant(1.0), 0.0),
            checks: CheckName::ALL.to_vec(),
            seed: 0,
            solve: SolveConfig {
                epsilon: 0.25,
                dx: 1.0 / 64.0,
                snapshots: 8,
                ..SolveConfig::default()
            },
            effective: EffectiveConfig {
                eps_ladder: vec![0.25, 0.125, 0.0625],
                dx_ratio: 1.0 / 16.0,
                ..EffectiveConfig::default()
            },
            thetas: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            random_data: 10,
            broken_flux: false,
        }
    }
}

/// Run every listed check; results come back in the order of `cfg.checks`.
///
/// Solver breakdowns inside a check (time-step underflow, boundary
/// influence) become failed reports; configuration errors are returned.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let mut cfg = cfg.clone();
    if cfg.broken_flux {
        cfg.solve.scheme = Scheme::Central;
        cfg.effective.solve.scheme = Scheme::Central;
    }
    let hash = config_hash(&cfg);
    let realized = cfg.problem.realize(cfg.seed)?;
    cfg.checks
        .par_iter()
        .map(|&name| {
            let r = match run_check(name, &cfg, &realized) {
                Ok(r) => r,
                Err(e @ (Error::CflFailure { .. } | Error::BoundaryInfluence { .. } | Error::DomainCheck { .. })) => {
                    VerificationReport {
                        check_name: kebab(name),
                        status: Status::Fail,
                        worst_violation: f64::INFINITY,
                        tolerance: 0.0,
                        witnesses: vec![crate::report::Witness {
                            location: format!("solver error: {e}"),
                            value: f64::INFINITY,
                        }],
                        config_hash: String::new(),
                    }
                }
                Err(e) => return Err(e),
            };
            Ok(r.with_hash(hash.clone()))
        })
        .collect()
}

fn kebab(name: CheckName) -> String {
    serde_json::to_value(name)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Keep the worst of several reports of the same check.
fn worst_of(name: &str, reports: Vec<VerificationReport>) -> VerificationReport {
    let rank = |s: Status| match s {
        Status::Pass => 0,
        Status::Inconclusive => 1,
        Status::Fail => 2,
    };
    let mut reports = reports;
    reports.sort_by(|a, b| {
        rank(a.status)
            .cmp(&rank(b.status))
            .then((a.worst_violation - a.tolerance).total_cmp(&(b.worst_violation - b.tolerance)))
    });
    let mut r = reports.pop().expect("at least one report");
    r.check_name = name.to_string();
    r
}

fn run_check(name: CheckName, cfg: &SuiteConfig, realized: &Realized) -> Result<VerificationReport> {
    let h = &realized.hamiltonian;
    let a = &realized.diffusion;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_da7a);
    let scfg = &cfg.solve;
    Ok(match name {
        CheckName::Contraction | CheckName::Ordering => {
            let pairs: Vec<(Datum, Datum)> = (0..cfg.random_data)
                .map(|_| {
                    let g1 = Datum::random_tents(&mut rng, 6, 2.0);
                    let g2 = if name == CheckName::Ordering {
                        g1.plus(&Datum::random_bumps(&mut rng, 4, 2.0))
                    } else {
                        Datum::random_tents(&mut rng, 6, 2.0).with_slope(g1.slope())
                    };
                    (g1, g2)
                })
                .collect();
            let reports = pairs
                .par_iter()
                .map(|(g1, g2)| {
                    let (u1, u2) = solve_pair(h, a, &|x| g1.eval(x), &|x| g2.eval(x), scfg)?;
                    if name == CheckName::Ordering {
                        check_ordering(&u1, &u2)
                    } else {
                        check_contraction(&u1, &u2)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            worst_of(&kebab(name), reports)
        }
        CheckName::MonotonePreservation => {
            let data: Vec<Datum> = (0..cfg.random_data)
                .map(|i| Datum::random_monotone(&mut rng, 5, 2.0, i % 2 == 0))
                .collect();
            let reports = data
                .par_iter()
                .map(|g| check_monotone_preservation(h, a, &|x| g.eval(x), scfg))
                .collect::<Result<Vec<_>>>()?;
            worst_of("monotone-preservation", reports)
        }
        CheckName::SignReduction => {
            let reports = cfg
                .thetas
                .par_iter()
                .map(|&t| check_sign_reduction(h, a, t, scfg))
                .collect::<Result<Vec<_>>>()?;
            worst_of("sign-reduction", reports)
        }
        CheckName::ThetaContinuity => {
            let base = 0.5;
            let pairs: Vec<(f64, f64)> = (0..=4)
                .map(|k| (base, if k == 0 { base } else { base + 0.5f64.powi(k) }))
                .collect();
            check_theta_continuity(h, a, &pairs, scfg, 2e-2)?
        }
        CheckName::ScalingIdentity => {
            let base = SolveConfig {
                epsilon: 1.0,
                ..scfg.clone()
            };
            let reports = [1.0, 0.5, 0.25]
                .par_iter()
                .map(|&e| check_scaling_identity(h, a, 0.5, e, &base))
                .collect::<Result<Vec<_>>>()?;
            worst_of("scaling-identity", reports)
        }
        CheckName::CoercivitySandwich => {
            let mut reports = cfg
                .thetas
                .par_iter()
                .map(|&t| check_solution_sandwich(h, a, t, scfg))
                .collect::<Result<Vec<_>>>()?;
            let curve = effective_curve_for(realized, &cfg.thetas, &cfg.effective)?;
            reports.push(check_curve_sandwich(&curve, 1e-3));
            worst_of("coercivity-sandwich", reports)
        }
        CheckName::PinValues => check_pin_values(h, a, &cfg.effective, 1e-6)?,
        CheckName::ShiftCovariance => {
            check_shift_covariance(h, a, &[-1.0, 1.0], &[-1.0, 0.0, 1.0], &cfg.effective)?
        }
        CheckName::MinFormula => {
            let k = pin_at_zero(h).or_else(|_| if h.pins().is_empty() { Err(Error::NotPinned(0)) } else { Ok(0) })?;
            let c = min_formula_curves(realized, k, &cfg.thetas, &cfg.effective)?;
            check_min_formula(&c.direct, &c.composed, 3e-2)?
        }
        CheckName::NonConvexityWitness => {
            let curve = effective_curve_for(realized, &cfg.thetas, &cfg.effective)?;
            check_nonconvexity_witness(&curve)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_b() -> Realized {
        fixtures::b_family(MediumSpec::constant(1.0), 0.0).realize(0).unwrap()
    }

    fn small() -> SolveConfig {
        SolveConfig {
            dx: 1.0 / 32.0,
            snapshots: 4,
            ..SolveConfig::default()
        }
    }

    #[test]
    fn additive_constant_keeps_distance() {
        let r = constant_b();
        let g = |x: f64| (2.0 * x).sin();
        let u1 = solve(&r.hamiltonian, &r.diffusion, &g, &small()).unwrap();
        let same = SolveConfig {
            half_width: Some(u1.meta.half_width),
            ..small()
        };
        let u2 = solve(&r.hamiltonian, &r.diffusion, &|x| g(x) + 0.3, &same).unwrap();
        let rep = check_contraction(&u1, &u2).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(check_ordering(&u1, &u2).unwrap().passed());
        assert!(check_ordering(&u2, &u1).is_err());
    }

    #[test]
    fn sign_reduction_trivial_and_mirrored() {
        let r = constant_b();
        for theta in [0.0, 1.0, -1.0] {
            let rep = check_sign_reduction(&r.hamiltonian, &r.diffusion, theta, &small()).unwrap();
            assert!(rep.passed(), "{rep:?}");
        }
        let q = fixtures::quadratic(0.0).realize(0).unwrap();
        assert!(matches!(
            check_sign_reduction(&q.hamiltonian, &q.diffusion, 1.0, &small()),
            Err(Error::NotPinned(_))
        ));
    }

    #[test]
    fn continuity_for_constant_coefficients() {
        let r = constant_b();
        let pairs = [(0.5, 0.5), (0.5, 1.0), (0.5, 0.75), (0.5, 0.625)];
        let rep = check_theta_continuity(&r.hamiltonian, &r.diffusion, &pairs, &small(), 2e-2).unwrap();
        assert!(rep.passed(), "{rep:?}");
        // m(d) = |H(theta1) - H(theta2)| exactly
        let m = rep.witnesses.iter().find(|w| w.location == "d=0.5").unwrap().value;
        assert!((m - 0.125).abs() < 1e-9, "{m}");
        assert!(rep.worst_violation < 1e-9, "{rep:?}");
    }

    #[test]
    fn scaling_identity_is_tight() {
        let r = fixtures::b_family(fixtures::periodic_b(), 1.0).realize(0).unwrap();
        for eps in [1.0, 0.5] {
            let rep = check_scaling_identity(&r.hamiltonian, &r.diffusion, 0.5, eps, &small()).unwrap();
            assert!(rep.passed() && rep.worst_violation < 1e-10, "{rep:?}");
        }
    }

    #[test]
    fn nonconvexity_witness_and_status() {
        let r = constant_b();
        let cfg = EffectiveConfig {
            eps_ladder: vec![0.5, 0.25],
            dx_ratio: 1.0 / 8.0,
            ..EffectiveConfig::default()
        };
        let curve = effective_curve_for(&r, &[-0.5, 0.0, 0.5], &cfg).unwrap();
        let rep = check_nonconvexity_witness(&curve);
        assert!(rep.passed(), "{rep:?}");
        assert!(!curve.level_set_convex);
        let q = fixtures::quadratic(0.0).realize(0).unwrap();
        let curve = effective_curve_for(&q, &[-0.5, 0.0, 0.5], &cfg).unwrap();
        assert_eq!(check_nonconvexity_witness(&curve).status, Status::Fail);
    }

    #[test]
    fn suite_passes_and_fault_injection_fails() {
        let cfg = SuiteConfig {
            random_data: 3,
            ..SuiteConfig::default()
        };
        let reports = run_suite(&cfg).unwrap();
        for r in &reports {
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.config_hash.len(), 64);
        }
        let broken = SuiteConfig {
            broken_flux: true,
            checks: vec![CheckName::Contraction],
            ..cfg
        };
        let reports = run_suite(&broken).unwrap();
        assert_eq!(reports[0].status, Status::Fail, "{:?}", reports[0]);
    }
}
