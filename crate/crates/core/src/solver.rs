//! Grid viscosity solutions of
//!
//! ```text
//! u_t - eps A(x/eps) u_xx + H(x/eps, u_x) = 0     on (0, T] x [-L, L]
//! ```
//!
//! First order in time: an explicit monotone numerical Hamiltonian followed by
//! a backward-Euler diffusion step (IMEX) or an explicit one. Nodes sit at
//! `x_i = (i - m) dx`, so `x = 0` is always a node.

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{HamiltonianSpec, LocalHamiltonian, LocalPiece};
use crate::media::MediumSample;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Godunov,
    LocalLaxFriedrichs,
    /// Centered `H((p- + p+)/2)` without dissipation. Not monotone; exists so
    /// verification suites can be fed a known-bad flux.
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Ghost value `2 u_0 - u_1`.
    GradientExtrapolation,
    /// Ghost value `u_0 - s dx`, `s` the initial datum's slope at the edge.
    FrozenLinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionStepping {
    Explicit,
    Imex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub epsilon: f64,
    /// Half-width `L` of the truncated domain; `None` sizes it from the speed bound.
    pub half_width: Option<f64>,
    pub dx: f64,
    pub t_final: f64,
    pub cfl_safety: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub diffusion_stepping: DiffusionStepping,
    /// Number of stored time intervals; slices are kept at `k T / snapshots`.
    pub snapshots: usize,
    /// Auto-sized `L = domain_safety * speed * T + diffusion spread`.
    pub domain_safety: f64,
    /// Re-solve on `[-2L, 2L]` and require `|change of u(T, 0)| < 1e-4 (1 + |g'(0)|)`.
    pub check_domain: bool,
    /// Only `u(t_final, 0)` is wanted: the active window shrinks with the
    /// cone of dependence of the origin, and stored slices are only
    /// meaningful inside it.
    pub origin_only: bool,
    pub max_steps: usize,
    /// Fixed CFL speed: every step is `cfl_safety dx / cfl_speed` (plus the
    /// explicit diffusion term), so solves sharing it take identical steps.
    /// Local speeds above `cfl_speed / cfl_safety` are a [`Error::CflFailure`].
    pub cfl_speed: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            half_width: None,
            dx: 1.0 / 32.0,
            t_final: 1.0,
            cfl_safety: 0.45,
            scheme: Scheme::Godunov,
            boundary: Boundary::FrozenLinear,
            diffusion_stepping: DiffusionStepping::Imex,
            snapshots: 10,
            domain_safety: 3.0,
            check_domain: false,
            origin_only: false,
            max_steps: 50_000_000,
            cfl_speed: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid("epsilon", "must lie in (0, 1]"));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(invalid("dx", "must be positive"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid("t_final", "must be positive"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(invalid("cfl_safety", "must lie in (0, 1)"));
        }
        if self.snapshots == 0 {
            return Err(invalid("snapshots", "must be at least 1"));
        }
        if let Some(c) = self.cfl_speed {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid("cfl_speed", "must be positive"));
            }
        }
        if let Some(l) = self.half_width {
            if !(l >= 2.0 * self.dx) {
                return Err(invalid("half_width", "must cover at least two cells"));
            }
        }
        if !(self.domain_safety >= 1.0) {
            return Err(invalid("domain_safety", "must be at least 1"));
        }
        Ok(())
    }
}

/// Diffusion root `sigma`, with `A = sigma^2`. `None` means `A = 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diffusion(pub Option<Arc<MediumSample>>);

impl Diffusion {
    pub fn none() -> Self {
        Self(None)
    }

    pub fn sigma(field: MediumSample) -> Self {
        if field.is_identically_zero() {
            Self(None)
        } else {
            Self(Some(Arc::new(field)))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_none()
    }

    /// `A(y) = sigma(y)^2`.
    pub fn eval(&self, y: f64) -> f64 {
        self.0.as_ref().map_or(0.0, |s| {
            let v = s.eval(y);
            v * v
        })
    }

    /// `sup A <= sigma_bound^2`.
    pub fn bound(&self) -> f64 {
        self.0.as_ref().map_or(0.0, |s| s.spec().sigma_bound().powi(2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    /// `max |D u|` on each stored slice.
    pub lipschitz: Vec<f64>,
    /// Empirical `(a, M_a)` with `|u(t, x) - u(0, x)| <= a + t M_a` on stored slices.
    pub growth_pair: (f64, f64),
    /// `L` minus the distance influence can travel from the boundary by `T`.
    pub boundary_margin: f64,
    pub half_width: f64,
    pub steps: usize,
    pub dt_max: f64,
    pub max_speed: f64,
}

impl SolutionMeta {
    /// Measured space-Lipschitz constant over all stored slices.
    pub fn kappa(&self) -> f64 {
        self.lipschitz.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    /// One row per stored time.
    pub values: Vec<Vec<f64>>,
    pub meta: SolutionMeta,
}

impl GridSolution {
    /// Index of the node `x = 0`.
    pub fn origin(&self) -> usize {
        (self.xs.len() - 1) / 2
    }

    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("at least one slice")
    }

    /// `u(T, 0)`.
    pub fn final_at_origin(&self) -> f64 {
        self.final_values()[self.origin()]
    }

    /// Linear interpolation in `x` on stored slice `k`.
    pub fn interpolate(&self, k: usize, x: f64) -> f64 {
        let dx = self.xs[1] - self.xs[0];
        let s = ((x - self.xs[0]) / dx).clamp(0.0, (self.xs.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.xs.len() - 2);
        let w = s - i as f64;
        let row = &self.values[k];
        (1.0 - w) * row[i] + w * row[i + 1]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "u"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, u) in self.xs.iter().zip(row) {
                out.write_record([t.to_string(), x.to_string(), u.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Binary layout: magic `HJGRID01`, `u64` slice count, `u64` node count,
    /// the times, the nodes, then the values row-major; all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.times.len() as u64).to_le_bytes())?;
        w.write_all(&(self.xs.len() as u64).to_le_bytes())?;
        for v in self.times.iter().chain(&self.xs).chain(self.values.iter().flatten()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`GridSolution::write_binary`]; `meta` is not stored and comes back empty.
    pub fn read_binary<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(invalid("binary", "bad magic"));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let nt = next_u64(&mut r)? as usize;
        let nx = next_u64(&mut r)? as usize;
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        let times = read_f64s(nt)?;
        let xs = read_f64s(nx)?;
        let values = (0..nt).map(|_| read_f64s(nx)).collect::<Result<_>>()?;
        Ok((times, xs, values))
    }
}

pub const BINARY_MAGIC: &[u8; 8] = b"HJGRID01";

/// Godunov numerical Hamiltonian: `min H` on `[p-, p+]` when `p- <= p+`,
/// `max H` on `[p+, p-]` otherwise.
pub fn godunov_flux(h: &HamiltonianSpec, x: f64, p_minus: f64, p_plus: f64) -> f64 {
    h.with_local(x, |local| local.godunov(p_minus, p_plus))
}

/// State handed to step observers after every accepted step (and once at `t = 0`).
pub struct StepView<'a> {
    pub step: usize,
    pub t: f64,
    pub xs: &'a [f64],
    pub u: &'a [f64],
}

/// Hamiltonian frozen at every node.
struct FrozenField {
    n_pieces: usize,
    pieces: Vec<LocalPiece>,
    pins: Vec<f64>,
    pinned_values: Vec<f64>,
}

impl FrozenField {
    fn new(h: &HamiltonianSpec, xs: &[f64], epsilon: f64) -> Self {
        let n_pieces = h.pieces().len();
        let mut pieces = Vec::with_capacity(n_pieces * xs.len());
        let mut buf = Vec::with_capacity(n_pieces);
        for &x in xs {
            h.freeze_into(x / epsilon, &mut buf);
            pieces.extend_from_slice(&buf);
        }
        Self {
            n_pieces,
            pieces,
            pins: h.pins().to_vec(),
            pinned_values: h.pinned_values().to_vec(),
        }
    }

    #[inline]
    fn at(&self, i: usize) -> LocalHamiltonian<'_> {
        LocalHamiltonian {
            pieces: &self.pieces[i * self.n_pieces..(i + 1) * self.n_pieces],
            pins: &self.pins,
            pinned_values: &self.pinned_values,
        }
    }
}

/// Outermost `p` beyond `start` (in direction `dir`) with `H(p) <= level`.
fn sublevel_edge(local: &LocalHamiltonian<'_>, start: f64, dir: f64, level: f64) -> f64 {
    let last_pin = if dir > 0.0 {
        local.pins.last().copied().unwrap_or(f64::NEG_INFINITY)
    } else {
        local.pins.first().copied().unwrap_or(f64::INFINITY)
    };
    let h = 1.0 / 64.0;
    let mut edge = start;
    let mut p = start;
    // geometric steps; the cap only matters for non-coercive input
    while p.abs() < 1e6 {
        p += dir * h * (1.0 + p.abs());
        let v = local.eval(p);
        if v <= level {
            edge = p;
            continue;
        }
        let past_pins = (p - last_pin) * dir > 0.0;
        let rising = dir * (local.eval(p + dir * 1e-6) - v) > 0.0;
        if past_pins && rising {
            break;
        }
    }
    edge
}

/// Bound on `|H_p|` along the solution. With `M` the largest value of `H`
/// at the initial gradients, the gradient at `y` stays in the sublevel set
/// `{p : H(y, p) <= M}` (exactly so without diffusion).
fn speed_estimate(h: &HamiltonianSpec, g: &dyn Fn(f64) -> f64, l: f64, dx: f64) -> f64 {
    let samples = 2001usize;
    let step = (2.0 * l / (samples - 1) as f64).max(dx);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut x = -l;
    while x <= l {
        let p = (g(x + dx) - g(x)) / dx;
        lo = lo.min(p);
        hi = hi.max(p);
        x += step;
    }
    // 400 points of the fast variable spread over 100 units
    let ys: Vec<f64> = (0..400).map(|k| -50.0 + 0.25 * k as f64 + 0.0123).collect();
    let level = ys
        .iter()
        .map(|&y| h.with_local(y, |local| local.max_over(lo, hi)))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut speed = 0.0f64;
    for &y in &ys {
        speed = speed.max(h.with_local(y, |local| {
            let a = sublevel_edge(local, lo, -1.0, level);
            let b = sublevel_edge(local, hi, 1.0, level);
            local.max_speed(a, b)
        }));
    }
    speed
}

/// Half-width and speed bound, iterated until the sampled gradient range settles.
fn auto_half_width(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
) -> (f64, f64) {
    let spread = 4.0 * (cfg.epsilon * a.bound() * cfg.t_final).sqrt();
    let mut l = 1.0f64.max(8.0 * cfg.dx);
    let mut c = 0.0;
    for _ in 0..6 {
        c = speed_estimate(h, g, l, cfg.dx);
        let next = cfg.domain_safety * c.max(0.25) * cfg.t_final + spread + 8.0 * cfg.dx;
        let settled = (next - l).abs() <= 1e-3 * l;
        l = next;
        if settled {
            break;
        }
    }
    (l, c)
}

/// Solve from initial datum `g`.
pub fn solve(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
) -> Result<GridSolution> {
    solve_observed(h, a, g, cfg, &mut |_| {})
}

/// Solve two data on one grid with one step sequence, as comparison
/// arguments require.
pub fn solve_pair(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g1: &dyn Fn(f64) -> f64,
    g2: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
) -> Result<(GridSolution, GridSolution)> {
    let l = match cfg.half_width {
        Some(l) => l,
        None => auto_half_width(h, a, g1, cfg).0.max(auto_half_width(h, a, g2, cfg).0),
    };
    let probe = SolveConfig {
        half_width: Some(l),
        ..cfg.clone()
    };
    let first = solve(h, a, g1, &probe)?;
    let second = solve(h, a, g2, &probe)?;
    if cfg.cfl_speed.is_some() {
        return Ok((first, second));
    }
    let shared = SolveConfig {
        cfl_speed: Some(first.meta.max_speed.max(second.meta.max_speed)),
        ..probe
    };
    Ok((solve(h, a, g1, &shared)?, solve(h, a, g2, &shared)?))
}

/// [`solve`] with a callback after every time step.
pub fn solve_observed(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
    observer: &mut dyn FnMut(StepView<'_>),
) -> Result<GridSolution> {
    cfg.validate()?;
    let (l, speed) = match cfg.half_width {
        Some(l) => (l, speed_estimate(h, g, l, cfg.dx)),
        None => auto_half_width(h, a, g, cfg),
    };
    let sol = integrate(h, a, g, cfg, l, speed, observer)?;
    if cfg.check_domain {
        let wide = SolveConfig {
            half_width: Some(2.0 * sol.meta.half_width),
            check_domain: false,
            ..cfg.clone()
        };
        let reference = integrate(h, a, g, &wide, 2.0 * sol.meta.half_width, speed, &mut |_| {})?;
        let change = (reference.final_at_origin() - sol.final_at_origin()).abs();
        let slope = (g(cfg.dx) - g(0.0)) / cfg.dx;
        let limit = 1e-4 * (1.0 + slope.abs());
        if change >= limit {
            return Err(Error::DomainCheck { change, limit });
        }
    }
    Ok(sol)
}

fn integrate(
    h: &HamiltonianSpec,
    a: &Diffusion,
    g: &dyn Fn(f64) -> f64,
    cfg: &SolveConfig,
    l: f64,
    speed_bound: f64,
    observer: &mut dyn FnMut(StepView<'_>),
) -> Result<GridSolution> {
    let dx = cfg.dx;
    let eps = cfg.epsilon;
    let m = ((l / dx) - 1e-9).ceil() as usize;
    let n = 2 * m + 1;
    let half_width = m as f64 * dx;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 - m as f64) * dx).collect();
    let field = FrozenField::new(h, &xs, eps);
    // eps A(x / eps) at the nodes
    let diff: Vec<f64> = if a.is_zero() {
        Vec::new()
    } else {
        xs.iter().map(|&x| eps * a.eval(x / eps)).collect()
    };
    let diff_max = diff.iter().copied().fold(0.0, f64::max);
    let mut u: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let g0 = u.clone();
    let slope_left = (u[0] - g(xs[0] - dx)) / dx;
    let slope_right = (g(xs[n - 1] + dx) - u[n - 1]) / dx;
    let spread = 4.0 * (diff_max * cfg.t_final).sqrt();
    // numerical viscosity of the upwind flux smears edge kinks over sqrt(c dx T)
    let smear = 4.0 * (speed_bound * dx * cfg.t_final).sqrt();
    let tail = 2.0 * spread + smear + 8.0 * dx;
    // active half-window (in cells) at time t
    let window = |t: f64| -> usize {
        if !cfg.origin_only {
            return m;
        }
        let w = cfg.domain_safety * speed_bound * (cfg.t_final - t) + tail;
        ((w / dx).ceil() as usize).min(m)
    };

    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let targets: Vec<f64> = (1..=cfg.snapshots)
        .map(|k| cfg.t_final * k as f64 / cfg.snapshots as f64)
        .collect();
    let mut next_target = 0usize;

    let mut grad = vec![0.0; n + 1];
    let mut flux = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut t = 0.0f64;
    let mut step = 0usize;
    let mut travelled = 0.0f64;
    let mut max_speed = 0.0f64;
    let mut dt_max = 0.0f64;
    // (active half-width, distance travelled before the step)
    let mut reach: Vec<(f64, f64)> = Vec::new();
    let explicit_diffusion =
        cfg.diffusion_stepping == DiffusionStepping::Explicit && !diff.is_empty();
    observer(StepView {
        step,
        t,
        xs: &xs,
        u: &u,
    });

    while next_target < targets.len() {
        let k = window(t);
        let (lo, hi) = (m - k, m + k);
        // window edges keep the initial datum's edge gradient, like the domain boundary
        let left = if lo > 0 {
            u[lo] - (g0[lo] - g0[lo - 1])
        } else {
            match cfg.boundary {
                Boundary::FrozenLinear => u[0] - slope_left * dx,
                Boundary::GradientExtrapolation => 2.0 * u[0] - u[1],
            }
        };
        let right = if hi < n - 1 {
            u[hi] + (g0[hi + 1] - g0[hi])
        } else {
            match cfg.boundary {
                Boundary::FrozenLinear => u[n - 1] + slope_right * dx,
                Boundary::GradientExtrapolation => 2.0 * u[n - 1] - u[n - 2],
            }
        };
        // grad[j] = (u_j - u_{j-1}) / dx for j in lo..=hi+1
        grad[lo] = (u[lo] - left) / dx;
        for j in lo + 1..=hi {
            grad[j] = (u[j] - u[j - 1]) / dx;
        }
        grad[hi + 1] = (right - u[hi]) / dx;

        let mut speed = speed_bound;
        for i in lo..=hi {
            let (pm, pp) = (grad[i], grad[i + 1]);
            let local = field.at(i);
            let (a, b) = if pm <= pp { (pm, pp) } else { (pp, pm) };
            speed = speed.max(local.max_speed(a, b));
            flux[i] = match cfg.scheme {
                Scheme::Godunov => local.godunov(pm, pp),
                Scheme::LocalLaxFriedrichs => local.lax_friedrichs(pm, pp),
                Scheme::Central => local.eval(0.5 * (pm + pp)),
            };
        }
        max_speed = max_speed.max(speed);
        if let Some(c) = cfg.cfl_speed {
            if speed > c / cfg.cfl_safety {
                return Err(Error::CflFailure { dt: cfg.cfl_safety * dx / speed, t });
            }
            speed = c;
        }

        let rate = speed / dx + if explicit_diffusion { 2.0 * diff_max / (dx * dx) } else { 0.0 };
        let mut dt = if rate > 0.0 {
            cfg.cfl_safety / rate
        } else {
            f64::INFINITY
        };
        let remaining = targets[next_target] - t;
        let hit = dt >= remaining * (1.0 - 1e-12);
        if hit {
            dt = remaining;
        }
        if !(dt > 1e-12 * cfg.t_final) || step >= cfg.max_steps {
            return Err(Error::CflFailure { dt, t });
        }

        for i in lo..=hi {
            rhs[i] = u[i] - dt * flux[i];
        }
        if !diff.is_empty() {
            if explicit_diffusion {
                for i in lo..=hi {
                    let at_edge = (i == 0 || i == n - 1) && cfg.boundary == Boundary::GradientExtrapolation;
                    if !at_edge {
                        rhs[i] += dt * diff[i] * (grad[i + 1] - grad[i]) / dx;
                    }
                }
            } else {
                let edge = |jump: f64| match cfg.boundary {
                    Boundary::FrozenLinear => Edge::FrozenLinear(jump),
                    Boundary::GradientExtrapolation => Edge::Extrapolated,
                };
                let left_edge = if lo > 0 {
                    Edge::FrozenLinear(g0[lo] - g0[lo - 1])
                } else {
                    edge(slope_left * dx)
                };
                let right_edge = if hi < n - 1 {
                    Edge::FrozenLinear(g0[hi + 1] - g0[hi])
                } else {
                    edge(slope_right * dx)
                };
                implicit_diffusion(
                    &diff[lo..=hi],
                    dt / (dx * dx),
                    left_edge,
                    right_edge,
                    &mut rhs[lo..=hi],
                    &mut scratch[lo..=hi],
                );
            }
        }
        u[lo..=hi].copy_from_slice(&rhs[lo..=hi]);

        reach.push((k as f64 * dx, travelled));
        dt_max = dt_max.max(dt);
        t = if hit { targets[next_target] } else { t + dt };
        step += 1;
        travelled += speed * dt;
        observer(StepView {
            step,
            t,
            xs: &xs,
            u: &u,
        });
        if hit {
            times.push(t);
            values.push(u.clone());
            next_target += 1;
        }
    }

    let lipschitz = values
        .iter()
        .map(|row| {
            row.windows(2)
                .map(|w| ((w[1] - w[0]) / dx).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let growth = times
        .iter()
        .zip(&values)
        .skip(1)
        .map(|(&t, row)| {
            row.iter()
                .zip(&g0)
                .map(|(v, g)| (v - g).abs())
                .fold(0.0, f64::max)
                / t
        })
        .fold(0.0, f64::max);
    let boundary_margin = reach
        .iter()
        .map(|&(w, before)| w - (travelled - before))
        .fold(half_width - travelled, f64::min)
        - spread;
    if boundary_margin < 0.0 {
        return Err(Error::BoundaryInfluence {
            margin: boundary_margin,
        });
    }
    Ok(GridSolution {
        times,
        xs,
        values,
        meta: SolutionMeta {
            lipschitz,
            growth_pair: (0.0, growth),
            boundary_margin,
            half_width,
            steps: step,
            dt_max,
            max_speed,
        },
    })
}

/// Closure of the diffusion system at one end of the active range.
#[derive(Clone, Copy, Debug)]
enum Edge {
    /// Ghost `u_0 -+ jump`.
    FrozenLinear(f64),
    /// Zero second difference: the end row is the identity.
    Extrapolated,
}

/// Backward-Euler step `(I - dt eps A D2) u = rhs`, overwriting `rhs`.
///
/// `coef = dt / dx^2`; every closure gives an M-matrix, so the step is
/// order preserving.
fn implicit_diffusion(diff: &[f64], coef: f64, left: Edge, right: Edge, rhs: &mut [f64], c_prime: &mut [f64]) {
    let n = rhs.len();
    let mut prev_c = 0.0;
    // row i: -lower u_{i-1} + diag u_i - upper u_{i+1} = rhs_i (Thomas forward sweep)
    for i in 0..n {
        let c = coef * diff[i];
        let (mut lower, mut diag, mut upper) = (c, 1.0 + 2.0 * c, c);
        let mut identity = false;
        if i == 0 {
            lower = 0.0;
            match left {
                Edge::FrozenLinear(jump) => {
                    diag -= c;
                    rhs[i] -= c * jump;
                }
                Edge::Extrapolated => identity = true,
            }
        }
        if i == n - 1 {
            upper = 0.0;
            match right {
                Edge::FrozenLinear(jump) => {
                    diag -= c;
                    rhs[i] += c * jump;
                }
                Edge::Extrapolated => identity = true,
            }
        }
        if identity {
            (lower, diag, upper) = (0.0, 1.0, 0.0);
        }
        let denom = diag - lower * prev_c;
        c_prime[i] = upper / denom;
        let prev_r = if i > 0 { rhs[i - 1] } else { 0.0 };
        rhs[i] = (rhs[i] + lower * prev_r) / denom;
        prev_c = c_prime[i];
    }
    for i in (0..n - 1).rev() {
        rhs[i] += c_prime[i] * rhs[i + 1];
    }
}

/// Solve from `g(x) = theta x`. `meta.kappa()` is the measured Lipschitz constant.
pub fn solve_linear_datum(
    h: &HamiltonianSpec,
    a: &Diffusion,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<GridSolution> {
    solve(h, a, &|x| theta * x, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_pinned, ClassParams, Piece};
    use crate::media::{sample_medium, MediumSpec};

    fn quadratic() -> HamiltonianSpec {
        HamiltonianSpec::single(
            Piece::quadratic(1.0, 0.0, 0.0, 0.0),
            ClassParams::new(2.0, 0.4, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn b_family(b: MediumSample) -> HamiltonianSpec {
        let b = Arc::new(b);
        build_pinned(
            vec![
                Piece::quadratic(1.0, 0.0, 0.0, 0.0).with_medium("b", b.clone(), 1.0, 0.0),
                Piece::quadratic(1.0, 0.0, 0.0, 0.0).with_medium("b", b, -1.0, 0.0),
            ],
            vec![0.0],
        )
        .unwrap()
    }

    fn unit_sigma() -> Diffusion {
        Diffusion::sigma(sample_medium(&MediumSpec::constant(1.0), 0).unwrap())
    }

    #[test]
    fn pinned_zero_datum_is_exact() {
        let h = build_pinned(
            vec![
                Piece::quadratic(1.0, 0.0, 1.0, 0.3),
                Piece::quadratic(1.0, 0.0, -1.0, 0.3),
            ],
            vec![0.0],
        )
        .unwrap();
        let cfg = SolveConfig {
            half_width: Some(8.0),
            ..SolveConfig::default()
        };
        let sol = solve(&h, &unit_sigma(), &|_| 0.0, &cfg).unwrap();
        for (t, row) in sol.times.iter().zip(&sol.values) {
            for v in row {
                assert!((v + 0.3 * t).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn linear_datum_is_classical() {
        let h = b_family(sample_medium(&MediumSpec::constant(1.0), 0).unwrap());
        let sol = solve_linear_datum(&h, &Diffusion::none(), 1.0, &SolveConfig::default()).unwrap();
        assert!((sol.final_at_origin() - 0.5).abs() < 1e-12);
        for (x, u) in sol.xs.iter().zip(sol.final_values()) {
            assert!((u - (x + 0.5)).abs() < 1e-10);
        }
        assert!((sol.meta.kappa() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn heat_equation_converges() {
        let zero = HamiltonianSpec::single(
            Piece::quadratic(0.0, 0.0, 0.0, 0.0),
            ClassParams::new(2.0, 0.1, 1.0).unwrap(),
        )
        .unwrap();
        let err = |dx: f64, stepping: DiffusionStepping, snapshots: usize| {
            let cfg = SolveConfig {
                dx,
                half_width: Some(std::f64::consts::PI * 4.0),
                diffusion_stepping: stepping,
                snapshots,
                ..SolveConfig::default()
            };
            let sol = solve(&zero, &unit_sigma(), &|x: f64| x.sin(), &cfg).unwrap();
            let e = (-1.0f64).exp();
            let l2: f64 = sol
                .xs
                .iter()
                .zip(sol.final_values())
                .filter(|(x, _)| x.abs() < 6.0)
                .map(|(x, u)| (u - e * x.sin()).powi(2) * dx)
                .sum();
            (l2.sqrt(), sol.meta.steps)
        };
        // H = 0 imposes no CFL limit, so the IMEX step is the snapshot spacing.
        let (e1, _) = err(0.05, DiffusionStepping::Imex, 100);
        let (e2, _) = err(0.05, DiffusionStepping::Imex, 1000);
        assert!(e2 < e1 && e2 < 5e-3, "{e1} {e2}");
        let (x1, s1) = err(0.1, DiffusionStepping::Explicit, 1);
        let (x2, s2) = err(0.05, DiffusionStepping::Explicit, 1);
        assert!(s2 > s1);
        assert!(x2 < x1 && x2 < 2e-3, "{x1} {x2}");
    }

    #[test]
    fn boundary_influence_is_detected() {
        let cfg = SolveConfig {
            half_width: Some(0.5),
            t_final: 1.0,
            ..SolveConfig::default()
        };
        let err = solve_linear_datum(&quadratic(), &Diffusion::none(), 2.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::BoundaryInfluence { .. }));
    }

    #[test]
    fn binary_round_trip() {
        let sol = solve_linear_datum(&quadratic(), &Diffusion::none(), 0.5, &SolveConfig::default()).unwrap();
        let mut buf = Vec::new();
        sol.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], BINARY_MAGIC);
        let (times, xs, values) = GridSolution::read_binary(&buf[..]).unwrap();
        assert_eq!(times, sol.times);
        assert_eq!(xs, sol.xs);
        assert_eq!(values, sol.values);
        let mut csv = Vec::new();
        sol.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,x,u\n"));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SolveConfig = serde_json::from_str(r#"{"epsilon":0.25,"scheme":"local-lax-friedrichs"}"#).unwrap();
        assert_eq!(cfg.epsilon, 0.25);
        assert_eq!(cfg.scheme, Scheme::LocalLaxFriedrichs);
        assert_eq!(cfg.boundary, Boundary::FrozenLinear);
        let bad = SolveConfig {
            cfl_safety: 1.5,
            ..SolveConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Invalid { field, .. }) if field == "cfl_safety"));
    }
}
