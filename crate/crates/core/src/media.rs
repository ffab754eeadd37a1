//! Shift-stationary one-dimensional coefficient fields.
//!
//! A [`MediumSpec`] describes a law on scalar fields; [`sample_medium`]
//! realizes one field from it for a given seed. Random ingredients (phases,
//! offsets, bump jitters) are drawn from a ChaCha stream keyed by the spec
//! hash, the seed and a per-ingredient index, so any single value can be
//! regenerated without replaying the others.

use crate::error::{invalid, Result};
use crate::report::{config_hash, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediumKind {
    Constant,
    Periodic,
    RandomPhase,
    JitteredBumps,
}

/// Kind-specific parameters. Fields irrelevant to a kind are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumParams {
    /// Constant part of the field.
    pub mean: f64,
    /// Mode amplitudes (periodic, random-phase).
    pub amplitudes: Vec<f64>,
    /// Mode frequencies in cycles per unit length (random-phase).
    pub frequencies: Vec<f64>,
    /// Period of the periodic kind; mode `k` has frequency `(k + 1) / period`.
    pub period: f64,
    /// Fixed phases of the periodic modes (missing entries are zero).
    pub phases: Vec<f64>,
    /// Periodic kind only: draw a uniform translation in `[0, period)` from the seed.
    pub random_shift: bool,
    /// Bump amplitude (jittered-bumps).
    pub bump_amplitude: f64,
    /// Bump half-width (jittered-bumps).
    pub bump_width: f64,
    /// Distance between nominal bump centers (jittered-bumps).
    pub spacing: f64,
    /// Center jitter as a fraction of `spacing`, in `[0, 1)`.
    pub jitter: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self {
            mean: 0.0,
            amplitudes: Vec::new(),
            frequencies: Vec::new(),
            period: 1.0,
            phases: Vec::new(),
            random_shift: false,
            bump_amplitude: 0.0,
            bump_width: 0.25,
            spacing: 1.0,
            jitter: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub kind: MediumKind,
    #[serde(default)]
    pub params: MediumParams,
    /// `[a, 1/a]` with `0 < a < 1`; absent means the raw field is used.
    #[serde(default)]
    pub clamp: Option<[f64; 2]>,
    /// Seed used when the spec is sampled from a config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// `max |psi'|` for the bump profile `psi(r) = (1 - r^2)^3`, attained at `r = 1/sqrt(5)`.
const BUMP_SLOPE: f64 = 1.717_300_106_907_313;
/// `max |psi''|`, attained at `r = 0`.
const BUMP_CURVATURE: f64 = 6.0;

impl MediumSpec {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: MediumKind::Constant,
            params: MediumParams {
                mean: value,
                ..MediumParams::default()
            },
            clamp: None,
            seed: None,
        }
    }

    pub fn periodic(mean: f64, amplitudes: Vec<f64>, period: f64) -> Self {
        Self {
            kind: MediumKind::Periodic,
            params: MediumParams {
                mean,
                amplitudes,
                period,
                ..MediumParams::default()
            },
            clamp: None,
            seed: None,
        }
    }

    pub fn random_phase(mean: f64, amplitudes: Vec<f64>, frequencies: Vec<f64>) -> Self {
        Self {
            kind: MediumKind::RandomPhase,
            params: MediumParams {
                mean,
                amplitudes,
                frequencies,
                ..MediumParams::default()
            },
            clamp: None,
            seed: None,
        }
    }

    pub fn with_clamp(mut self, a: f64) -> Self {
        self.clamp = Some([a, 1.0 / a]);
        self
    }

    pub fn with_random_shift(mut self) -> Self {
        self.params.random_shift = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if !p.mean.is_finite() {
            return Err(invalid("params.mean", "must be finite"));
        }
        if p.amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(invalid("params.amplitudes", "must be finite"));
        }
        match self.kind {
            MediumKind::Constant => {}
            MediumKind::Periodic => {
                if !(p.period > 0.0 && p.period.is_finite()) {
                    return Err(invalid("params.period", "must be positive"));
                }
                if p.phases.len() > p.amplitudes.len() {
                    return Err(invalid("params.phases", "more phases than amplitudes"));
                }
            }
            MediumKind::RandomPhase => {
                if p.frequencies.len() != p.amplitudes.len() {
                    return Err(invalid(
                        "params.frequencies",
                        "need one frequency per amplitude",
                    ));
                }
                if p.frequencies.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
                    return Err(invalid("params.frequencies", "must be positive"));
                }
            }
            MediumKind::JitteredBumps => {
                if !(p.spacing > 0.0 && p.spacing.is_finite()) {
                    return Err(invalid("params.spacing", "must be positive"));
                }
                if !(0.0..1.0).contains(&p.jitter) {
                    return Err(invalid("params.jitter", "must lie in [0, 1)"));
                }
                if !(p.bump_width > 0.0 && p.bump_width <= 0.5 * p.spacing * (1.0 - p.jitter)) {
                    return Err(invalid(
                        "params.bump_width",
                        "must lie in (0, spacing * (1 - jitter) / 2] so bumps never overlap",
                    ));
                }
                if !p.bump_amplitude.is_finite() {
                    return Err(invalid("params.bump_amplitude", "must be finite"));
                }
            }
        }
        if let Some([a, inv_a]) = self.clamp {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid("clamp", "need 0 < a < 1"));
            }
            if ((a * inv_a) - 1.0).abs() > 1e-12 {
                return Err(invalid("clamp", "second bound must equal 1/a"));
            }
        }
        Ok(())
    }

    fn raw_sup_bound(&self) -> f64 {
        let p = &self.params;
        let modes: f64 = p.amplitudes.iter().map(|a| a.abs()).sum();
        match self.kind {
            MediumKind::Constant => p.mean.abs(),
            MediumKind::Periodic | MediumKind::RandomPhase => p.mean.abs() + modes,
            MediumKind::JitteredBumps => p.mean.abs() + p.bump_amplitude.abs(),
        }
    }

    fn raw_lipschitz_bound(&self) -> f64 {
        let p = &self.params;
        match self.kind {
            MediumKind::Constant => 0.0,
            MediumKind::Periodic => p
                .amplitudes
                .iter()
                .enumerate()
                .map(|(k, a)| a.abs() * TAU * (k + 1) as f64 / p.period)
                .sum(),
            MediumKind::RandomPhase => p
                .amplitudes
                .iter()
                .zip(&p.frequencies)
                .map(|(a, f)| a.abs() * TAU * f)
                .sum(),
            MediumKind::JitteredBumps => p.bump_amplitude.abs() * BUMP_SLOPE / p.bump_width,
        }
    }

    fn raw_curvature_bound(&self) -> f64 {
        let p = &self.params;
        match self.kind {
            MediumKind::Constant => 0.0,
            MediumKind::Periodic => p
                .amplitudes
                .iter()
                .enumerate()
                .map(|(k, a)| a.abs() * (TAU * (k + 1) as f64 / p.period).powi(2))
                .sum(),
            MediumKind::RandomPhase => p
                .amplitudes
                .iter()
                .zip(&p.frequencies)
                .map(|(a, f)| a.abs() * (TAU * f).powi(2))
                .sum(),
            MediumKind::JitteredBumps => {
                p.bump_amplitude.abs() * BUMP_CURVATURE / (p.bump_width * p.bump_width)
            }
        }
    }

    /// Analytic Lipschitz constant of every realization. The clamp has slope at most one.
    pub fn lipschitz_bound(&self) -> f64 {
        self.raw_lipschitz_bound()
    }

    /// Bound on `|f''|` including the clamp's contribution.
    pub fn curvature_bound(&self) -> f64 {
        let raw = self.raw_curvature_bound();
        match self.clamp {
            Some([a, inv_a]) => {
                let delta = SmoothClamp::new(a, inv_a).delta;
                raw + 0.75 / delta * self.raw_lipschitz_bound().powi(2)
            }
            None => raw,
        }
    }

    /// Bound on `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        match self.clamp {
            Some([_, inv_a]) => inv_a.min(self.raw_sup_bound()).max(0.0),
            None => self.raw_sup_bound(),
        }
    }

    /// `Lambda_A` when the field is used as the diffusion root `sigma`.
    pub fn sigma_bound(&self) -> f64 {
        self.sup_bound().max(self.lipschitz_bound())
    }

    /// True for the constant zero field (no diffusion).
    pub fn is_identically_zero(&self) -> bool {
        self.kind == MediumKind::Constant && self.params.mean == 0.0 && self.clamp.is_none()
    }

    /// Constant and periodic fields are deterministic up to a translation.
    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, MediumKind::Constant | MediumKind::Periodic)
    }

    /// Whether samples with different seeds can differ.
    pub fn is_seed_dependent(&self) -> bool {
        let p = &self.params;
        match self.kind {
            MediumKind::Constant => false,
            MediumKind::Periodic => p.random_shift && p.amplitudes.iter().any(|&a| a != 0.0),
            MediumKind::RandomPhase => p.amplitudes.iter().any(|&a| a != 0.0),
            MediumKind::JitteredBumps => p.bump_amplitude != 0.0,
        }
    }

    /// Stable 64-bit key derived from the spec contents (seed excluded).
    pub fn spec_key(&self) -> u64 {
        let mut s = self.clone();
        s.seed = None;
        let hex = config_hash(&s);
        u64::from_str_radix(&hex[..16], 16).expect("hex digest")
    }
}

/// C^2 map onto `[lo, hi]` that is the identity on `[lo + delta, hi - delta]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct SmoothClamp {
    lo: f64,
    hi: f64,
    delta: f64,
}

impl SmoothClamp {
    fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            delta: 0.05 * (hi - lo),
        }
    }

    // Above hi - delta the slope falls from 1 to 0 along 1 - smoothstep
    // over [hi - delta, hi + delta]; the integral of that slope is exactly delta.
    fn upper(r: f64, edge: f64, delta: f64) -> f64 {
        let start = edge - delta;
        if r <= start {
            return r;
        }
        let w = 2.0 * delta;
        let t = ((r - start) / w).min(1.0);
        // int_0^t (1 - 3s^2 + 2s^3) ds = t - t^3 + t^4 / 2
        (start + w * (t - t.powi(3) + 0.5 * t.powi(4))).min(edge)
    }

    fn apply(&self, r: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        if r >= mid {
            Self::upper(r, self.hi, self.delta)
        } else {
            -Self::upper(-r, -self.lo, self.delta)
        }
    }
}

/// One realized coefficient field. Immutable; evaluation is pure.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumSample {
    spec: MediumSpec,
    seed: u64,
    spec_key: u64,
    phases: Vec<f64>,
    offset: f64,
    shift: f64,
    clamp: Option<SmoothClamp>,
}

/// Provenance of a realized field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_hash: String,
    pub seed: u64,
}

fn ingredient_rng(spec_key: u64, seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec_key ^ seed.rotate_left(32));
    rng.set_stream(index);
    rng
}

/// Realize one field from the ensemble described by `spec`.
pub fn sample_medium(spec: &MediumSpec, seed: u64) -> Result<MediumSample> {
    spec.validate()?;
    let spec_key = spec.spec_key();
    let p = &spec.params;
    let mut phases = Vec::new();
    let mut offset = 0.0;
    match spec.kind {
        MediumKind::Constant => {}
        MediumKind::Periodic => {
            phases = (0..p.amplitudes.len())
                .map(|k| p.phases.get(k).copied().unwrap_or(0.0))
                .collect();
            if p.random_shift {
                offset = ingredient_rng(spec_key, seed, 0).gen::<f64>() * p.period;
            }
        }
        MediumKind::RandomPhase => {
            phases = (0..p.amplitudes.len())
                .map(|k| ingredient_rng(spec_key, seed, k as u64).gen::<f64>() * TAU)
                .collect();
        }
        MediumKind::JitteredBumps => {
            offset = ingredient_rng(spec_key, seed, u64::MAX).gen::<f64>() * p.spacing;
        }
    }
    Ok(MediumSample {
        spec: spec.clone(),
        seed,
        spec_key,
        phases,
        offset,
        shift: 0.0,
        clamp: spec.clamp.map(|[a, inv_a]| SmoothClamp::new(a, inv_a)),
    })
}

impl MediumSample {
    pub fn spec(&self) -> &MediumSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> Provenance {
        let mut s = self.spec.clone();
        s.seed = None;
        Provenance {
            spec_hash: config_hash(&s),
            seed: self.seed,
        }
    }

    /// Accumulated translation applied by [`MediumSample::shifted`].
    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn raw(&self, x: f64) -> f64 {
        let p = &self.spec.params;
        match self.spec.kind {
            MediumKind::Constant => p.mean,
            MediumKind::Periodic => {
                let y = x + self.offset;
                p.mean
                    + p.amplitudes
                        .iter()
                        .zip(&self.phases)
                        .enumerate()
                        .map(|(k, (a, phi))| a * (TAU * (k + 1) as f64 * y / p.period + phi).cos())
                        .sum::<f64>()
            }
            MediumKind::RandomPhase => {
                p.mean
                    + p.amplitudes
                        .iter()
                        .zip(&p.frequencies)
                        .zip(&self.phases)
                        .map(|((a, f), phi)| a * (TAU * f * x + phi).cos())
                        .sum::<f64>()
            }
            MediumKind::JitteredBumps => {
                let rel = (x - self.offset) / p.spacing;
                let n0 = rel.floor() as i64;
                let mut total = p.mean;
                for n in (n0 - 1)..=(n0 + 2) {
                    let center = self.offset + p.spacing * (n as f64 + p.jitter * (self.jitter(n) - 0.5));
                    let r = (x - center) / p.bump_width;
                    if r.abs() < 1.0 {
                        total += p.bump_amplitude * (1.0 - r * r).powi(3);
                    }
                }
                total
            }
        }
    }

    fn jitter(&self, cell: i64) -> f64 {
        ingredient_rng(self.spec_key, self.seed, cell as u64).gen::<f64>()
    }

    /// Field value at `x` (defined for every real `x`).
    pub fn eval(&self, x: f64) -> f64 {
        let r = self.raw(x + self.shift);
        match &self.clamp {
            Some(c) => c.apply(r),
            None => r,
        }
    }

    /// The translated field `x -> f(x + y)`.
    pub fn shifted(&self, y: f64) -> MediumSample {
        let mut out = self.clone();
        out.shift += y;
        out
    }

    pub fn is_identically_zero(&self) -> bool {
        self.spec.is_identically_zero()
    }
}

/// Translate a realized field: the result evaluates `x -> f(x + y)`.
pub fn shift_medium(sample: &MediumSample, y: f64) -> MediumSample {
    sample.shifted(y)
}

/// Probe a field as a coefficient `b` and as a diffusion root `sigma`.
///
/// Witnesses: `max_abs`, `max_slope`, `range_violation`, `lipschitz_bound`.
/// The report fails when the sampled slope exceeds the analytic bound plus
/// `10 * dx * curvature_bound`, or when any value leaves the clamp range.
pub fn validate_medium(sample: &MediumSample, probe: &[f64]) -> VerificationReport {
    let values: Vec<f64> = probe.iter().map(|&x| sample.eval(x)).collect();
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut max_slope = 0.0f64;
    let mut max_dx = 0.0f64;
    for i in 1..probe.len() {
        let dx = probe[i] - probe[i - 1];
        if dx > 0.0 {
            max_slope = max_slope.max(((values[i] - values[i - 1]) / dx).abs());
            max_dx = max_dx.max(dx);
        }
    }
    let range_violation = match sample.spec.clamp {
        Some([a, inv_a]) => values
            .iter()
            .map(|&v| (a - v).max(v - inv_a).max(0.0))
            .fold(0.0, f64::max),
        None => 0.0,
    };
    let bound = sample.spec.lipschitz_bound();
    let slack = 10.0 * max_dx * sample.spec.curvature_bound();
    let slope_excess = (max_slope - bound - slack).max(0.0);
    let worst = range_violation.max(slope_excess);
    VerificationReport::from_measurement("medium", worst, 0.0, 0.0)
        .with_witness("max_abs", max_abs)
        .with_witness("max_slope", max_slope)
        .with_witness("range_violation", range_violation)
        .with_witness("lipschitz_bound", bound)
        .with_hash(config_hash(&(sample.spec.clone(), sample.seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quasi() -> MediumSpec {
        MediumSpec::random_phase(
            1.0,
            vec![0.3, 0.2, 0.15],
            vec![1.0, std::f64::consts::SQRT_2, 0.5 * (1.0 + 5f64.sqrt())],
        )
        .with_clamp(0.5)
    }

    #[test]
    fn constant_field_is_constant() {
        let m = sample_medium(&MediumSpec::constant(1.0), 7).unwrap();
        for x in [-3.0, 0.0, 0.3, 1e6] {
            assert_eq!(m.eval(x), 1.0);
        }
    }

    #[test]
    fn clamp_keeps_interior_values() {
        let m = sample_medium(&MediumSpec::constant(1.0).with_clamp(0.5), 0).unwrap();
        assert_eq!(m.eval(2.5), 1.0);
        let r = validate_medium(&m, &[0.0, 0.5, 1.0]);
        assert!(r.passed());
        assert_eq!(r.witnesses[2].value, 0.0);
    }

    #[test]
    fn smooth_clamp_saturates_and_is_monotone() {
        let c = SmoothClamp::new(0.5, 2.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..4000 {
            let r = -2.0 + i as f64 * 0.0015;
            let v = c.apply(r);
            assert!((0.5..=2.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(c.apply(10.0), 2.0);
        assert_eq!(c.apply(-10.0), 0.5);
        assert_eq!(c.apply(1.2), 1.2);
    }

    #[test]
    fn determinism() {
        let s = quasi();
        let a = sample_medium(&s, 42).unwrap();
        let b = sample_medium(&s, 42).unwrap();
        assert_eq!(a.eval(0.3).to_bits(), b.eval(0.3).to_bits());
        let c = sample_medium(&s, 43).unwrap();
        assert_ne!(a.eval(0.3), c.eval(0.3));
    }

    #[test]
    fn shifts() {
        let m = sample_medium(&quasi(), 3).unwrap();
        let zero = shift_medium(&m, 0.0);
        let back = shift_medium(&shift_medium(&m, 1.7), -1.7);
        let per = sample_medium(&MediumSpec::periodic(1.0, vec![0.4, 0.1], 1.0), 0).unwrap();
        for i in 0..200 {
            let x = -5.0 + 0.05 * i as f64;
            assert_eq!(zero.eval(x), m.eval(x));
            assert!((back.eval(x) - m.eval(x)).abs() < 1e-13);
            assert!((per.shifted(1.0).eval(x) - per.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut s = MediumSpec::periodic(0.0, vec![1.0], 0.0);
        match s.validate() {
            Err(crate::Error::Invalid { field, .. }) => assert_eq!(field, "params.period"),
            other => panic!("{other:?}"),
        }
        s.params.period = 1.0;
        s.clamp = Some([1.5, 1.0 / 1.5]);
        assert!(matches!(s.validate(), Err(crate::Error::Invalid { field, .. }) if field == "clamp"));
        let mut r = quasi();
        r.params.frequencies.pop();
        assert!(sample_medium(&r, 0).is_err());
    }

    #[test]
    fn unit_diffusion_report() {
        let m = sample_medium(&MediumSpec::constant(1.0), 0).unwrap();
        let probe: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let r = validate_medium(&m, &probe);
        assert!(r.passed());
        assert_eq!(r.witnesses[0].value, 1.0);
        assert_eq!(r.witnesses[1].value, 0.0);
        assert_eq!(m.spec().sigma_bound(), 1.0);
    }

    #[test]
    fn sampled_slope_within_analytic_bound() {
        let s = quasi();
        let probe: Vec<f64> = (0..20_000).map(|i| -50.0 + i as f64 * 0.005).collect();
        for seed in 0..5 {
            let m = sample_medium(&s, seed).unwrap();
            let r = validate_medium(&m, &probe);
            assert!(r.passed(), "{r:?}");
            assert!(r.witnesses[1].value <= s.lipschitz_bound() + 1e-9 + 10.0 * 0.005 * s.curvature_bound());
        }
    }

    #[test]
    fn jittered_bumps_are_smooth_and_bounded() {
        let s = MediumSpec {
            kind: MediumKind::JitteredBumps,
            params: MediumParams {
                mean: 1.0,
                bump_amplitude: 0.6,
                bump_width: 0.3,
                spacing: 1.0,
                jitter: 0.3,
                ..MediumParams::default()
            },
            clamp: Some([0.5, 2.0]),
            seed: None,
        };
        let m = sample_medium(&s, 11).unwrap();
        let probe: Vec<f64> = (0..10_000).map(|i| -20.0 + i as f64 * 0.004).collect();
        let r = validate_medium(&m, &probe);
        assert!(r.passed(), "{r:?}");
        let max = probe.iter().map(|&x| m.eval(x)).fold(0.0, f64::max);
        assert!(max > 1.3);
    }

    #[test]
    fn json_keys() {
        let text = serde_json::to_string(&quasi()).unwrap();
        let pos: Vec<usize> = ["\"kind\"", "\"params\"", "\"clamp\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["kind"], "random-phase");
        let back: MediumSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, quasi());
        let parsed: MediumSpec = serde_json::from_str(
            r#"{"kind":"periodic","params":{"mean":1,"amplitudes":[0.5],"period":1},"clamp":[0.5,2.0],"seed":9}"#,
        )
        .unwrap();
        assert_eq!(parsed.seed, Some(9));
    }
}
