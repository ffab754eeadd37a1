//! Small sample statistics used by ensemble diagnostics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KendallTrend {
    pub tau: f64,
    /// One-sided p-value against "no trend", in the direction of a decrease.
    pub p_decreasing: f64,
}

fn inversions(ys: &[f64]) -> (i64, i64) {
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            if ys[j] > ys[i] {
                concordant += 1;
            } else if ys[j] < ys[i] {
                discordant += 1;
            }
        }
    }
    (concordant, discordant)
}

/// Kendall's tau of `ys` against its index, with a one-sided test for a
/// decreasing trend. Exact permutation null for `n <= 8`, normal
/// approximation with continuity correction beyond.
pub fn kendall_trend(ys: &[f64]) -> KendallTrend {
    let n = ys.len();
    if n < 2 {
        return KendallTrend {
            tau: 0.0,
            p_decreasing: 1.0,
        };
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let (c, d) = inversions(ys);
    let s = c - d;
    let tau = s as f64 / pairs as f64;
    let p = if n <= 8 {
        let mut count = 0u64;
        let mut total = 0u64;
        let mut perm: Vec<f64> = (0..n).map(|i| i as f64).collect();
        permute(&mut perm, 0, &mut |p| {
            total += 1;
            let (pc, pd) = inversions(p);
            if pc - pd <= s {
                count += 1;
            }
        });
        count as f64 / total as f64
    } else {
        let nf = n as f64;
        let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
        let z = (s as f64 + 1.0) / var.sqrt();
        normal_cdf(z)
    };
    KendallTrend {
        tau,
        p_decreasing: p,
    }
}

fn permute(xs: &mut Vec<f64>, k: usize, visit: &mut dyn FnMut(&[f64])) {
    if k == xs.len() {
        visit(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, visit);
        xs.swap(k, i);
    }
}

fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS rejection threshold at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(variance(&[4.0]), 0.0);
    }

    #[test]
    fn kendall_exact_tail() {
        let t = kendall_trend(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(t.tau, -1.0);
        assert!((t.p_decreasing - 1.0 / 120.0).abs() < 1e-15);
        // one adjacent swap: 5 of 120 orderings have at most one inversion
        let t = kendall_trend(&[5.0, 3.0, 4.0, 2.0, 1.0]);
        assert!((t.p_decreasing - 5.0 / 120.0).abs() < 1e-15);
        let t = kendall_trend(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.p_decreasing, 1.0);
    }

    #[test]
    fn kendall_normal_branch_is_close_to_exact() {
        let ys: Vec<f64> = (0..12).map(|i| -(i as f64) + if i % 3 == 0 { 2.5 } else { 0.0 }).collect();
        let t = kendall_trend(&ys);
        assert!(t.tau < -0.5 && t.p_decreasing < 0.01);
    }

    #[test]
    fn ks_detects_shift() {
        let a: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!(ks_statistic(&a, &b) > ks_critical_01(200, 200));
        assert!(ks_statistic(&a, &a) < 1e-12);
    }
}
