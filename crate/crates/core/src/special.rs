//! Normal-distribution tails and the upper incomplete gamma function at
//! negative order.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::quad::{self, Tolerance};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function Φ.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function 1 − Φ.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 − Φ(z)) / φ(z)`.
///
/// Uses the complementary error function up to `z = 8` and the Laplace
/// continued fraction `1/(z + 1/(z + 2/(z + …)))` beyond, where the survival
/// function itself underflows long before the ratio loses meaning.
pub fn mills_ratio(z: f64) -> f64 {
    if z < 8.0 {
        return normal_sf(z) / normal_pdf(z);
    }
    let mut tail = z;
    for k in (1..=120).rev() {
        tail = z + k as f64 / tail;
    }
    1.0 / tail
}

/// Upper incomplete gamma `Γ(a, z) = ∫_z^∞ t^{a−1} e^{−t} dt` for `z > 0`
/// and any real `a` (used with `a ∈ (−2, 0)` for tempered tails).
pub fn upper_gamma(a: f64, z: f64) -> f64 {
    assert!(z > 0.0, "upper_gamma needs z > 0");
    const SPLIT: f64 = 1.0;
    if z >= SPLIT {
        return upper_gamma_cf(a, z);
    }
    let head = quad::adaptive(
        |w: f64| (a * w - w.exp()).exp(),
        z.ln(),
        SPLIT.ln(),
        Tolerance::new(0.0, 1e-15),
    );
    head.value + upper_gamma_cf(a, SPLIT)
}

// Legendre continued fraction evaluated with the modified Lentz method.
fn upper_gamma_cf(a: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * z.ln() - z).exp() * h
}
