//! Effective Hamiltonian estimates `H_bar(theta) ~ -u^eps_theta(1, 0)`.

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{shift_pin, ClassParams, HamiltonianSpec};
use crate::problem::{ProblemSpec, Realized};
use crate::solver::{solve, solve_linear_datum, Diffusion, SolveConfig};
use crate::stats::{kendall_trend, mean, variance, KendallTrend};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveConfig {
    /// Strictly decreasing, inside `(0, 1]`.
    pub eps_ladder: Vec<f64>,
    /// `dx = dx_ratio * eps` unless `dx` is set.
    pub dx_ratio: f64,
    pub dx: Option<f64>,
    /// Re-run the finest level at twice the spacing to measure the grid error.
    pub refine: bool,
    /// Template for every solve; `epsilon`, `dx` and `t_final` are overwritten.
    pub solve: SolveConfig,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        Self {
            eps_ladder: (2..=6).map(|k| 0.5f64.powi(k)).collect(),
            dx_ratio: 1.0 / 32.0,
            dx: None,
            refine: true,
            solve: SolveConfig {
                snapshots: 4,
                ..SolveConfig::default()
            },
        }
    }
}

impl EffectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_ladder.is_empty() {
            return Err(invalid("eps_ladder", "must not be empty"));
        }
        if self.eps_ladder.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(invalid("eps_ladder", "entries must lie in (0, 1]"));
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps_ladder", "must be strictly decreasing"));
        }
        if !(self.dx_ratio > 0.0) {
            return Err(invalid("dx_ratio", "must be positive"));
        }
        if let Some(dx) = self.dx {
            if !(dx > 0.0) {
                return Err(invalid("dx", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn dx_for(&self, eps: f64) -> f64 {
        self.dx.unwrap_or(self.dx_ratio * eps)
    }

    pub fn solve_config(&self, eps: f64) -> SolveConfig {
        SolveConfig {
            epsilon: eps,
            dx: self.dx_for(eps),
            t_final: 1.0,
            origin_only: true,
            ..self.solve.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ScalingLimit,
    ErgodicAverage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Increments along the ladder stopped shrinking; the fit was rejected.
    pub no_convergence: bool,
    /// Largest residual of the linear-in-eps fit.
    pub residual: f64,
    /// `|v(dx) - v(2 dx)|` at the finest level.
    pub refinement_delta: f64,
    /// Largest measured space-Lipschitz constant over the solves.
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveEstimate {
    pub theta: f64,
    /// `(eps, -u^eps(1, 0))`, eps decreasing.
    pub values_by_epsilon: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub error_bar: f64,
    pub seed: u64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl EffectiveEstimate {
    /// The raw value at the smallest eps (or longest time).
    pub fn finest(&self) -> f64 {
        self.values_by_epsilon.last().map_or(f64::NAN, |v| v.1)
    }
}

fn floor(v: f64) -> f64 {
    1e-10 * (1.0 + v.abs())
}

/// Extrapolated value, error bar, no-convergence flag and fit residual for
/// `(eps, value)` pairs sorted by decreasing eps.
///
/// The model is `c0 + c1 eps`, least squares over the last three points.
/// The error bar is at least twice the residual plus the grid delta, and
/// always reaches back to the hull of the last two values.
pub fn extrapolate(values: &[(f64, f64)], grid_delta: f64) -> (f64, f64, bool, f64) {
    let n = values.len();
    let last = values[n - 1].1;
    if n == 1 {
        return (last, grid_delta + floor(last), false, 0.0);
    }
    let tail = &values[n.saturating_sub(3)..];
    let k = tail.len() as f64;
    let se = tail.iter().map(|v| v.0).sum::<f64>() / k;
    let sv = tail.iter().map(|v| v.1).sum::<f64>() / k;
    let cov: f64 = tail.iter().map(|v| (v.0 - se) * (v.1 - sv)).sum();
    let var: f64 = tail.iter().map(|v| (v.0 - se).powi(2)).sum();
    let c1 = cov / var;
    let c0 = sv - c1 * se;
    let residual = tail
        .iter()
        .map(|v| (v.1 - (c0 + c1 * v.0)).abs())
        .fold(0.0, f64::max);
    let prev = values[n - 2].1;
    let base = floor(last);
    let no_convergence = n >= 3 && {
        let d1 = (last - prev).abs();
        let d0 = (prev - values[n - 3].1).abs();
        d1 > d0 + 2.0 * grid_delta + base
    };
    if no_convergence {
        return (last, 2.0 * (last - prev).abs() + grid_delta + base, true, residual);
    }
    let (lo, hi) = (prev.min(last), prev.max(last));
    let outside = (lo - c0).max(c0 - hi).max(0.0);
    let err = (2.0 * residual + grid_delta + base).max(outside);
    (c0, err, false, residual)
}

/// Scaling-limit estimate along `cfg.eps_ladder` for one realized medium.
pub fn effective_at(
    h: &HamiltonianSpec,
    a: &Diffusion,
    theta: f64,
    seed: u64,
    cfg: &EffectiveConfig,
) -> Result<EffectiveEstimate> {
    cfg.validate()?;
    let finest = *cfg.eps_ladder.last().expect("validated");
    let mut jobs: Vec<SolveConfig> = cfg.eps_ladder.iter().map(|&e| cfg.solve_config(e)).collect();
    if cfg.refine {
        let mut coarse = cfg.solve_config(finest);
        coarse.dx *= 2.0;
        jobs.push(coarse);
    }
    let runs: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|c| {
            let sol = solve_linear_datum(h, a, theta, c)?;
            Ok((-sol.final_at_origin(), sol.meta.kappa()))
        })
        .collect::<Result<_>>()?;
    let n = cfg.eps_ladder.len();
    let values: Vec<(f64, f64)> = cfg
        .eps_ladder
        .iter()
        .zip(&runs)
        .map(|(&e, r)| (e, r.0))
        .collect();
    let delta = if cfg.refine { (runs[n].0 - runs[n - 1].0).abs() } else { 0.0 };
    let kappa = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let (extrapolated, error_bar, no_convergence, residual) = extrapolate(&values, delta);
    Ok(EffectiveEstimate {
        theta,
        values_by_epsilon: values,
        extrapolated,
        error_bar,
        seed,
        method: Method::ScalingLimit,
        diagnostics: Diagnostics {
            no_convergence,
            residual,
            refinement_delta: delta,
            kappa,
        },
    })
}

/// Long-time average `-w(T, 0) / T` of the unscaled equation with Hamiltonian
/// `H(x, theta + p)` from zero data. The error bar is `|v(T) - v(T/2)|`.
pub fn ergodic_estimate(
    h: &HamiltonianSpec,
    a: &Diffusion,
    theta: f64,
    seed: u64,
    t_final: f64,
    cfg: &EffectiveConfig,
) -> Result<EffectiveEstimate> {
    if !(t_final >= 1.0) {
        return Err(invalid("t_final", "must be at least 1"));
    }
    let shifted = shift_pin(h, theta);
    let solve_cfg = SolveConfig {
        epsilon: 1.0,
        dx: cfg.dx.map_or(cfg.dx_ratio, |dx| dx * t_final),
        t_final,
        snapshots: 2,
        origin_only: false,
        half_width: cfg.solve.half_width.map(|l| l * t_final),
        ..cfg.solve.clone()
    };
    let sol = solve(&shifted, a, &|_| 0.0, &solve_cfg)?;
    let o = sol.origin();
    let half = -sol.values[1][o] / (0.5 * t_final);
    let full = -sol.values[2][o] / t_final;
    Ok(EffectiveEstimate {
        theta,
        values_by_epsilon: vec![(2.0 / t_final, half), (1.0 / t_final, full)],
        extrapolated: full,
        error_bar: (full - half).abs() + floor(full),
        seed,
        method: Method::ErgodicAverage,
        diagnostics: Diagnostics {
            kappa: sol.meta.kappa(),
            ..Diagnostics::default()
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub theta: f64,
    pub seeds: Vec<u64>,
    pub estimates: Vec<EffectiveEstimate>,
    pub eps: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// Trend of the across-seed standard deviation along the ladder.
    pub trend: KendallTrend,
    /// All across-seed deviations vanish (deterministic medium).
    pub deterministic: bool,
    /// `deterministic`, or a significant decreasing trend (p < 0.05).
    pub concentrating: bool,
    pub mean_extrapolated: f64,
    pub extrapolated_sem: f64,
}

/// Per-seed estimates plus across-seed statistics per ladder level.
pub fn ensemble_effective(
    problem: &ProblemSpec,
    theta: f64,
    seeds: &[u64],
    cfg: &EffectiveConfig,
) -> Result<EnsembleStats> {
    if seeds.len() < 2 {
        return Err(invalid("seeds", "an ensemble needs at least two seeds"));
    }
    cfg.validate()?;
    let estimates: Vec<EffectiveEstimate> = seeds
        .par_iter()
        .map(|&s| {
            let r = problem.realize(s)?;
            effective_at(&r.hamiltonian, &r.diffusion, theta, s, cfg)
        })
        .collect::<Result<_>>()?;
    Ok(ensemble_from(theta, seeds, estimates, &cfg.eps_ladder))
}

fn ensemble_from(theta: f64, seeds: &[u64], estimates: Vec<EffectiveEstimate>, eps: &[f64]) -> EnsembleStats {
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for k in 0..eps.len() {
        let column: Vec<f64> = estimates.iter().map(|e| e.values_by_epsilon[k].1).collect();
        means.push(mean(&column));
        vars.push(variance(&column));
    }
    let std_dev: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
    let deterministic = std_dev
        .iter()
        .zip(&means)
        .all(|(s, m)| *s <= 1e-13 * (1.0 + m.abs()));
    let trend = kendall_trend(&std_dev);
    let ext: Vec<f64> = estimates.iter().map(|e| e.extrapolated).collect();
    EnsembleStats {
        theta,
        seeds: seeds.to_vec(),
        eps: eps.to_vec(),
        mean: means,
        variance: vars,
        std_dev,
        trend,
        deterministic,
        concentrating: deterministic || trend.p_decreasing < 0.05,
        mean_extrapolated: mean(&ext),
        extrapolated_sem: (variance(&ext) / ext.len() as f64).sqrt(),
        estimates,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCurve {
    pub thetas: Vec<f64>,
    pub estimates: Vec<EffectiveEstimate>,
    pub seed_counts: Vec<usize>,
    pub alpha_env: Vec<f64>,
    pub beta_env: Vec<f64>,
    /// No adjacent triple sits above its chord by more than twice the error bars.
    pub convex: bool,
    /// No triple has a middle value above both ends by more than twice the error bars.
    pub level_set_convex: bool,
    /// `min_theta min(H_bar - alpha, beta - H_bar)`.
    pub sandwich_margin: f64,
    /// `|H_bar(theta_{i+1}) - H_bar(theta_i)|`.
    pub continuity: Vec<f64>,
}

impl EffectiveCurve {
    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.extrapolated).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.error_bar).collect()
    }

    /// Assemble a curve from per-theta estimates and the envelopes `alpha(|theta|)`, `beta(|theta|)`.
    pub fn from_parts(
        estimates: Vec<EffectiveEstimate>,
        seed_counts: Vec<usize>,
        alpha_env: Vec<f64>,
        beta_env: Vec<f64>,
    ) -> Self {
        let thetas: Vec<f64> = estimates.iter().map(|e| e.theta).collect();
        let h: Vec<f64> = estimates.iter().map(|e| e.extrapolated).collect();
        let err: Vec<f64> = estimates.iter().map(|e| e.error_bar).collect();
        let n = h.len();
        let mut convex = true;
        for i in 1..n.saturating_sub(1) {
            let w = (thetas[i + 1] - thetas[i]) / (thetas[i + 1] - thetas[i - 1]);
            let chord = w * h[i - 1] + (1.0 - w) * h[i + 1];
            let guard = 2.0 * err[i - 1].max(err[i]).max(err[i + 1]);
            if h[i] > chord + guard {
                convex = false;
            }
        }
        let mut level_set_convex = true;
        'outer: for j in 1..n.saturating_sub(1) {
            for i in 0..j {
                for k in j + 1..n {
                    let guard = 2.0 * err[i].max(err[j]).max(err[k]);
                    if h[j] > h[i].max(h[k]) + guard {
                        level_set_convex = false;
                        break 'outer;
                    }
                }
            }
        }
        let sandwich_margin = (0..n)
            .map(|i| (h[i] - alpha_env[i]).min(beta_env[i] - h[i]))
            .fold(f64::INFINITY, f64::min);
        let continuity = h.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        Self {
            thetas,
            estimates,
            seed_counts,
            alpha_env,
            beta_env,
            convex,
            level_set_convex,
            sandwich_margin,
            continuity,
        }
    }

    /// Largest `|self - other|` on a common grid, its location and the combined error bar there.
    pub fn max_discrepancy(&self, other: &EffectiveCurve) -> Result<(f64, f64, f64)> {
        check_same_grid(self, other)?;
        let mut worst = (0.0, f64::NAN, 0.0);
        for (a, b) in self.estimates.iter().zip(&other.estimates) {
            let d = (a.extrapolated - b.extrapolated).abs();
            if d >= worst.0 {
                worst = (d, a.theta, a.error_bar + b.error_bar);
            }
        }
        Ok(worst)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["theta", "h_eff", "err", "alpha_env", "beta_env", "seed_count"])?;
        for i in 0..self.thetas.len() {
            out.write_record([
                self.thetas[i].to_string(),
                self.estimates[i].extrapolated.to_string(),
                self.estimates[i].error_bar.to_string(),
                self.alpha_env[i].to_string(),
                self.beta_env[i].to_string(),
                self.seed_counts[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn envelopes(class: &ClassParams, thetas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        thetas.iter().map(|t| class.alpha(t.abs())).collect(),
        thetas.iter().map(|t| class.beta(t.abs())).collect(),
    )
}

/// Curve for one realized medium.
pub fn effective_curve_for(
    realized: &Realized,
    thetas: &[f64],
    cfg: &EffectiveConfig,
) -> Result<EffectiveCurve> {
    let estimates: Vec<EffectiveEstimate> = thetas
        .par_iter()
        .map(|&t| effective_at(&realized.hamiltonian, &realized.diffusion, t, realized.seed, cfg))
        .collect::<Result<_>>()?;
    let (alpha, beta) = envelopes(&realized.hamiltonian.class(), thetas);
    Ok(EffectiveCurve::from_parts(estimates, vec![1; thetas.len()], alpha, beta))
}

/// Curve averaged over `seeds`. With several seeds each point carries the
/// mean of the per-seed values and an error bar of the mean per-seed bar
/// plus two standard errors.
pub fn effective_curve(
    problem: &ProblemSpec,
    thetas: &[f64],
    seeds: &[u64],
    cfg: &EffectiveConfig,
) -> Result<EffectiveCurve> {
    if seeds.is_empty() {
        return Err(invalid("seeds", "need at least one seed"));
    }
    if thetas.iter().any(|t| !t.is_finite()) {
        return Err(invalid("thetas", "must be finite"));
    }
    cfg.validate()?;
    let realized: Vec<Realized> = seeds.iter().map(|&s| problem.realize(s)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..thetas.len())
        .flat_map(|i| (0..seeds.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<EffectiveEstimate> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let r = &realized[j];
            effective_at(&r.hamiltonian, &r.diffusion, thetas[i], r.seed, cfg)
        })
        .collect::<Result<_>>()?;
    let estimates: Vec<EffectiveEstimate> = flat
        .chunks(seeds.len())
        .map(combine_seeds)
        .collect();
    let (alpha, beta) = envelopes(&realized[0].hamiltonian.class(), thetas);
    Ok(EffectiveCurve::from_parts(estimates, vec![seeds.len(); thetas.len()], alpha, beta))
}

fn combine_seeds(group: &[EffectiveEstimate]) -> EffectiveEstimate {
    if group.len() == 1 {
        return group[0].clone();
    }
    let n = group.len() as f64;
    let ext: Vec<f64> = group.iter().map(|e| e.extrapolated).collect();
    let values_by_epsilon = (0..group[0].values_by_epsilon.len())
        .map(|k| {
            let col: Vec<f64> = group.iter().map(|e| e.values_by_epsilon[k].1).collect();
            (group[0].values_by_epsilon[k].0, mean(&col))
        })
        .collect();
    let bars: Vec<f64> = group.iter().map(|e| e.error_bar).collect();
    EffectiveEstimate {
        theta: group[0].theta,
        values_by_epsilon,
        extrapolated: mean(&ext),
        error_bar: mean(&bars) + 2.0 * (variance(&ext) / n).sqrt(),
        seed: group[0].seed,
        method: group[0].method,
        diagnostics: Diagnostics {
            no_convergence: group.iter().any(|e| e.diagnostics.no_convergence),
            residual: group.iter().map(|e| e.diagnostics.residual).fold(0.0, f64::max),
            refinement_delta: group
                .iter()
                .map(|e| e.diagnostics.refinement_delta)
                .fold(0.0, f64::max),
            kappa: group.iter().map(|e| e.diagnostics.kappa).fold(0.0, f64::max),
        },
    }
}

fn check_same_grid(a: &EffectiveCurve, b: &EffectiveCurve) -> Result<()> {
    let same = a.thetas.len() == b.thetas.len()
        && a.thetas
            .iter()
            .zip(&b.thetas)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "theta grids differ ({} vs {} points)",
            a.thetas.len(),
            b.thetas.len()
        )))
    }
}

/// Pointwise minimum of two curves on the same grid. Where the two values
/// are within their combined error bars the larger bar is kept.
pub fn min_compose(minus: &EffectiveCurve, plus: &EffectiveCurve) -> Result<EffectiveCurve> {
    check_same_grid(minus, plus)?;
    let n = minus.thetas.len();
    let mut estimates = Vec::with_capacity(n);
    for (m, p) in minus.estimates.iter().zip(&plus.estimates) {
        let mut pick = if p.extrapolated < m.extrapolated { p.clone() } else { m.clone() };
        if (m.extrapolated - p.extrapolated).abs() <= m.error_bar + p.error_bar {
            pick.error_bar = m.error_bar.max(p.error_bar);
        }
        pick.values_by_epsilon = m
            .values_by_epsilon
            .iter()
            .zip(&p.values_by_epsilon)
            .map(|(a, b)| (a.0, a.1.min(b.1)))
            .collect();
        estimates.push(pick);
    }
    let alpha = (0..n).map(|i| minus.alpha_env[i].min(plus.alpha_env[i])).collect();
    let beta = (0..n).map(|i| minus.beta_env[i].min(plus.beta_env[i])).collect();
    let counts = (0..n)
        .map(|i| minus.seed_counts[i].min(plus.seed_counts[i]))
        .collect();
    Ok(EffectiveCurve::from_parts(estimates, counts, alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn point(theta: f64, value: f64) -> EffectiveEstimate {
        EffectiveEstimate {
            theta,
            values_by_epsilon: vec![(1.0, value)],
            extrapolated: value,
            error_bar: 1e-9,
            seed: 0,
            method: Method::ScalingLimit,
            diagnostics: Diagnostics::default(),
        }
    }

    fn closed_form(f: impl Fn(f64) -> f64) -> EffectiveCurve {
        let thetas: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
        let est = thetas.iter().map(|&t| point(t, f(t))).collect();
        let n = thetas.len();
        EffectiveCurve::from_parts(est, vec![1; n], vec![-10.0; n], vec![10.0; n])
    }

    #[test]
    fn extrapolation_of_exact_linear_data() {
        let v: Vec<(f64, f64)> = [0.25, 0.125, 0.0625].iter().map(|&e| (e, 1.0 + 0.4 * e)).collect();
        let (c0, err, bad, res) = extrapolate(&v, 0.0);
        assert!((c0 - 1.0).abs() < 1e-14);
        assert!(!bad && res < 1e-14);
        // the hull of the last two values is [1.025, 1.05]
        assert!((err - 0.025).abs() < 1e-12);
        let growing = [(0.25, 1.0), (0.125, 1.01), (0.0625, 1.2)];
        assert!(extrapolate(&growing, 0.0).2);
    }

    #[test]
    fn min_compose_closed_forms_and_idempotence() {
        let plus = closed_form(|t| 0.5 * t * t - t);
        let minus = closed_form(|t| 0.5 * t * t + t);
        let c = min_compose(&minus, &plus).unwrap();
        for (t, v) in c.thetas.iter().zip(c.values()) {
            assert!((v - (0.5 * t * t - t.abs())).abs() < 1e-15);
        }
        assert!(!c.level_set_convex && !c.convex);
        let same = min_compose(&plus, &plus).unwrap();
        assert_eq!(same.values(), plus.values());
        assert!(plus.convex && plus.level_set_convex);
        let short = EffectiveCurve::from_parts(vec![point(0.0, 0.0)], vec![1], vec![0.0], vec![1.0]);
        assert!(matches!(min_compose(&short, &plus), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn quadratic_is_exact() {
        let r = fixtures::quadratic(1.0).realize(0).unwrap();
        let cfg = EffectiveConfig {
            eps_ladder: vec![0.25, 0.125, 0.0625],
            ..EffectiveConfig::default()
        };
        let e = effective_at(&r.hamiltonian, &r.diffusion, 1.0, 0, &cfg).unwrap();
        assert!((e.extrapolated - 0.5).abs() < 1e-10, "{e:?}");
        assert!(e.error_bar < 1e-9);
        let g = ergodic_estimate(&r.hamiltonian, &r.diffusion, 1.0, 0, 8.0, &cfg).unwrap();
        assert!((g.extrapolated - 0.5).abs() < 1e-10);
    }

    #[test]
    fn pinned_theta_zero() {
        let r = fixtures::b_family(fixtures::periodic_b(), 1.0).realize(0).unwrap();
        let cfg = EffectiveConfig {
            eps_ladder: vec![0.5, 0.25],
            ..EffectiveConfig::default()
        };
        let e = effective_at(&r.hamiltonian, &r.diffusion, 0.0, 0, &cfg).unwrap();
        assert_eq!(e.extrapolated, 0.0);
        let bad = EffectiveConfig {
            eps_ladder: vec![0.25, 0.5],
            ..cfg
        };
        assert!(effective_at(&r.hamiltonian, &r.diffusion, 0.0, 0, &bad).is_err());
    }

    #[test]
    fn deterministic_ensemble_has_zero_spread() {
        let p = fixtures::b_family(crate::media::MediumSpec::constant(1.0), 0.0);
        let cfg = EffectiveConfig {
            eps_ladder: vec![0.5, 0.25],
            refine: false,
            ..EffectiveConfig::default()
        };
        let s = ensemble_effective(&p, 0.5, &[1, 2, 3], &cfg).unwrap();
        assert!(s.variance.iter().all(|&v| v == 0.0));
        assert!(s.deterministic && s.concentrating);
        assert!((s.mean_extrapolated + 0.375).abs() < 1e-12);
    }
}
