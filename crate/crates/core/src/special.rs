//! Standard normal density and distribution function in log space.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Below this argument `ln Φ` switches to the Mills-ratio tail branch.
const TAIL_CUTOFF: f64 = -8.0;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn ln_std_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * LN_2PI
}

/// Standard normal CDF, `Φ(x) = erfc(-x/√2)/2`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, finite for every finite `x`.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x >= TAIL_CUTOFF {
        if x > 5.0 {
            // Φ close to 1: ln(1 - Q) with Q = Φ(-x)
            return (-std_normal_cdf(-x)).ln_1p();
        }
        return std_normal_cdf(x).ln();
    }
    // Φ(x) = φ(x) R(-x), with R the Mills ratio
    ln_std_normal_pdf(x) + mills_ratio(-x).ln()
}

/// Mills ratio `R(t) = (1 - Φ(t)) / φ(t)` for `t ≥ 8`, by the continued
/// fraction `1/(t + 1/(t + 2/(t + 3/(t + ...))))` (modified Lentz).
fn mills_ratio(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = t;
    let mut c = t;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}
