//! Initial data `g` for the solver, serializable for configs.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Datum {
    /// `theta x`.
    Linear { theta: f64 },
    /// `slope x + sum h max(0, 1 - |x - c| / w)` for each `[c, h, w]`.
    Tents { slope: f64, tents: Vec<[f64; 3]> },
    /// `slope x + sum h clamp((x - c) / w + 1/2, 0, 1)` for each `[c, h, w]`.
    Ramps { slope: f64, ramps: Vec<[f64; 3]> },
    /// `amplitude sin(wavenumber x)`.
    Sine { amplitude: f64, wavenumber: f64 },
}

impl Datum {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Datum::Linear { theta } => theta * x,
            Datum::Tents { slope, tents } => {
                slope * x
                    + tents
                        .iter()
                        .map(|[c, h, w]| h * (1.0 - (x - c).abs() / w).max(0.0))
                        .sum::<f64>()
            }
            Datum::Ramps { slope, ramps } => {
                slope * x
                    + ramps
                        .iter()
                        .map(|[c, h, w]| h * ((x - c) / w + 0.5).clamp(0.0, 1.0))
                        .sum::<f64>()
            }
            Datum::Sine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).sin(),
        }
    }

    /// Global Lipschitz bound.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            Datum::Linear { theta } => theta.abs(),
            Datum::Tents { slope, tents } => {
                slope.abs() + tents.iter().map(|[_, h, w]| (h / w).abs()).sum::<f64>()
            }
            Datum::Ramps { slope, ramps } => {
                slope.abs() + ramps.iter().map(|[_, h, w]| (h / w).abs()).sum::<f64>()
            }
            Datum::Sine {
                amplitude,
                wavenumber,
            } => (amplitude * wavenumber).abs(),
        }
    }

    /// Linear background plus `n` random tents centred in `[-width, width]`.
    pub fn random_tents<R: Rng>(rng: &mut R, n: usize, width: f64) -> Self {
        Datum::Tents {
            slope: rng.gen_range(-1.5..1.5),
            tents: (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-width..width),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(0.05..0.6),
                    ]
                })
                .collect(),
        }
    }

    /// Nonnegative tents: adding them to a datum keeps the pair ordered.
    pub fn random_bumps<R: Rng>(rng: &mut R, n: usize, width: f64) -> Self {
        Datum::Tents {
            slope: 0.0,
            tents: (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-width..width),
                        rng.gen_range(0.0..0.5),
                        rng.gen_range(0.05..0.6),
                    ]
                })
                .collect(),
        }
    }

    /// Nondecreasing (or, with `increasing = false`, nonincreasing) ramps.
    pub fn random_monotone<R: Rng>(rng: &mut R, n: usize, width: f64, increasing: bool) -> Self {
        let sign = if increasing { 1.0 } else { -1.0 };
        Datum::Ramps {
            slope: sign * rng.gen_range(0.0..1.5),
            ramps: (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-width..width),
                        sign * rng.gen_range(0.0..1.0),
                        rng.gen_range(0.02..0.5),
                    ]
                })
                .collect(),
        }
    }

    /// The same shape over a different linear background.
    pub fn with_slope(&self, theta: f64) -> Datum {
        match self {
            Datum::Linear { .. } => Datum::Linear { theta },
            Datum::Tents { tents, .. } => Datum::Tents { slope: theta, tents: tents.clone() },
            Datum::Ramps { ramps, .. } => Datum::Ramps { slope: theta, ramps: ramps.clone() },
            Datum::Sine { .. } => self.clone(),
        }
    }

    /// Linear background slope (zero for a sine).
    pub fn slope(&self) -> f64 {
        match self {
            Datum::Linear { theta } => *theta,
            Datum::Tents { slope, .. } | Datum::Ramps { slope, .. } => *slope,
            Datum::Sine { .. } => 0.0,
        }
    }

    /// Pointwise sum of two data (tents and ramps concatenate).
    pub fn plus(&self, other: &Datum) -> Datum {
        match (self, other) {
            (Datum::Tents { slope: a, tents: ta }, Datum::Tents { slope: b, tents: tb }) => Datum::Tents {
                slope: a + b,
                tents: ta.iter().chain(tb).copied().collect(),
            },
            (Datum::Linear { theta }, Datum::Tents { slope, tents })
            | (Datum::Tents { slope, tents }, Datum::Linear { theta }) => Datum::Tents {
                slope: slope + theta,
                tents: tents.clone(),
            },
            (Datum::Linear { theta: a }, Datum::Linear { theta: b }) => Datum::Linear { theta: a + b },
            _ => panic!("unsupported datum sum"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monotone_data_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for inc in [true, false] {
            let d = Datum::random_monotone(&mut rng, 6, 2.0, inc);
            let mut prev = d.eval(-5.0);
            for i in 1..2000 {
                let v = d.eval(-5.0 + i as f64 * 0.005);
                assert!(if inc { v >= prev } else { v <= prev });
                prev = v;
            }
        }
    }

    #[test]
    fn json_tagged() {
        let d: Datum = serde_json::from_str(r#"{"kind":"linear","theta":0.5}"#).unwrap();
        assert_eq!(d.eval(2.0), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Datum::random_tents(&mut rng, 3, 1.0);
        let back: Datum = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(t.lipschitz_bound() >= 0.0);
    }
}
