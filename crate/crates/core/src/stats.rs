//! Goodness-of-fit helpers: Kolmogorov-Smirnov tests and the univariate
//! skew-normal distribution function.

use std::f64::consts::PI;

use crate::special::std_normal_cdf;

/// Outcome of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsOutcome {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value with Stephens' small-sample correction.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample test of `data` against the continuous CDF `cdf`.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> KsOutcome {
    let xs = sorted(data);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    KsOutcome {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsOutcome {
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsOutcome {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Owen's T function `T(h, a) = (1/2π) ∫_0^a exp(-h²(1+x²)/2) / (1+x²) dx`,
/// by composite Gauss-Legendre quadrature.
pub fn owen_t(h: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if a < 0.0 {
        return -owen_t(h, -a);
    }
    let nodes = gauss_legendre(24);
    let panels = (a.ceil() as usize).clamp(4, 64);
    let width = a / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = p as f64 * width;
        let mid = lo + 0.5 * width;
        for &(t, w) in &nodes {
            let x = mid + 0.5 * width * t;
            let q = 1.0 + x * x;
            total += w * 0.5 * width * (-0.5 * h * h * q).exp() / q;
        }
    }
    total / (2.0 * PI)
}

/// CDF of the univariate skew normal with density `2 φ(z) Φ(δ z)`.
pub fn skew_normal_cdf(z: f64, delta: f64) -> f64 {
    (std_normal_cdf(z) - 2.0 * owen_t(z, delta)).clamp(0.0, 1.0)
}

/// Mean of the univariate skew normal with shape `δ`.
pub fn skew_normal_mean(delta: f64) -> f64 {
    delta / (1.0 + delta * delta).sqrt() * (2.0 / PI).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
