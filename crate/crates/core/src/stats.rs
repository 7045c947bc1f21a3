//! Estimators and tests used by the ensemble harness.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Mean and standard error of i.i.d. samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return MeanSe {
            mean,
            se: f64::NAN,
            n,
        };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanSe {
        mean,
        se: (var / n as f64).sqrt(),
        n,
    }
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Batch-means estimate for a correlated series: mean and standard error from
/// `batches` contiguous blocks.
pub fn batch_means(xs: &[f64], batches: usize) -> MeanSe {
    let b = batches.max(2).min(xs.len());
    let len = xs.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| xs[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let r = mean_se(&means);
    MeanSe {
        mean: r.mean,
        se: r.se,
        n: xs.len(),
    }
}

/// Kolmogorov limiting survival function `Q(λ) = 2 Σ (-1)^{j-1} e^{-2 j² λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..200 {
        let t = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        s += if j % 2 == 1 { t } else { -t };
        if t < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS statistic `sup |F_n - F|` against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
        n: v.len(),
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    y.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p(d, ne),
        n: n + m,
    }
}

pub fn normal_cdf(x: f64, sd: f64) -> f64 {
    Normal::new(0.0, sd).unwrap().cdf(x)
}

pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Two-sided standard-normal threshold at family-wise level `alpha` over `m` tests.
pub fn bonferroni_z(alpha: f64, m: usize) -> f64 {
    Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(1.0 - alpha / (2.0 * m.max(1) as f64))
}

/// Two-sided tail probability of 3 standard errors.
pub const THREE_SIGMA_ALPHA: f64 = 0.002_699_796_063_260_2;

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Energy-distance two-sample statistic with a permutation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDistance {
    /// `2E|X-Y| - E|X-X'| - E|Y-Y'|` with U-statistic within-sample means.
    pub distance: f64,
    pub p_value: f64,
    pub permutations: usize,
}

fn energy_from_matrix(d: &[f64], n: usize, idx: &[usize], na: usize) -> f64 {
    let (a, b) = idx.split_at(na);
    let nb = b.len();
    let mut xy = 0.0;
    for &i in a {
        for &j in b {
            xy += d[i * n + j];
        }
    }
    let within = |s: &[usize]| {
        let mut t = 0.0;
        for (p, &i) in s.iter().enumerate() {
            for &j in &s[p + 1..] {
                t += d[i * n + j];
            }
        }
        2.0 * t / (s.len() * (s.len() - 1)) as f64
    };
    2.0 * xy / (na * nb) as f64 - within(a) - within(b)
}

pub fn energy_distance<R: Rng + ?Sized>(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    permutations: usize,
    rng: &mut R,
) -> EnergyDistance {
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b.iter()).collect();
    let n = pooled.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = dist(pooled[i], pooled[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let stat = energy_from_matrix(&d, n, &idx, a.len());
    let mut exceed = 0usize;
    for _ in 0..permutations {
        idx.shuffle(rng);
        if energy_from_matrix(&d, n, &idx, a.len()) >= stat {
            exceed += 1;
        }
    }
    EnergyDistance {
        distance: stat,
        p_value: (exceed + 1) as f64 / (permutations + 1) as f64,
        permutations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ≈ 0.0494, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn ks_detects_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_one_sample(&a, uniform_cdf).p_value > 0.01);
        let b: Vec<f64> = a.iter().map(|x| x * 0.9).collect();
        assert!(ks_one_sample(&b, uniform_cdf).p_value < 1e-6);
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &c).p_value > 0.01);
        assert!(ks_two_sample(&a, &b).p_value < 0.01);
    }

    #[test]
    fn energy_distance_separates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut draw = |s: f64| -> Vec<Vec<f64>> {
            (0..150)
                .map(|_| {
                    (0..2)
                        .map(|_| s * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect()
        };
        let a = draw(1.0);
        let b = draw(1.0);
        let c = draw(1.6);
        let mut r = ChaCha8Rng::seed_from_u64(1);
        assert!(energy_distance(&a, &b, 99, &mut r).p_value > 0.01);
        assert!(energy_distance(&a, &c, 99, &mut r).p_value < 0.05);
    }

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y) + 0.5).abs() < 1e-12);
        let z = bonferroni_z(THREE_SIGMA_ALPHA, 1);
        assert!((z - 3.0).abs() < 1e-6);
    }
}
