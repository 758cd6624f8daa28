//! Two explicit processes whose canonical decompositions misbehave.
//!
//! * `U` standard Gaussian, `V` standard Laplace, independent: `E[U | U + V]`
//!   is bounded and non-degenerate, hence not infinitely divisible.
//! * `X_t = Σ_{k≤N} B_k(t)` with `N` Poisson: an infinitely divisible
//!   martingale whose increments are dependent.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::series_sim::path_rng;
use crate::special::{mills_ratio, normal_sf};

/// Natural log of the Mills ratio `(1 − Φ(z)) / φ(z)`, finite for all real `z`.
fn log_mills(z: f64) -> f64 {
    if z >= 0.0 {
        mills_ratio(z).ln()
    } else {
        normal_sf(z).ln() + 0.5 * z * z + 0.5 * (2.0 * PI).ln()
    }
}

/// Half the log-odds `½ ln(M(1 − y) / M(1 + y))`.
///
/// `e^{−y}Φ(y−1)` and `e^{y}(1−Φ(y+1))` share the factor `φ(0)e^{−(y²+1)/2}`,
/// leaving the Mills ratios at `1 − y` and `1 + y`.
fn half_log_odds(y: f64) -> f64 {
    0.5 * (log_mills(1.0 - y) - log_mills(1.0 + y))
}

/// `E[U | U + V = y]`.
pub fn conditional_mean(y: f64) -> f64 {
    let d = half_log_odds(y.abs());
    let v = d.tanh();
    if y < 0.0 {
        -v
    } else {
        v
    }
}

/// `1 − |E[U | U + V = y]|`, kept positive where [`conditional_mean`] has
/// already rounded to `±1`.
pub fn conditional_mean_gap(y: f64) -> f64 {
    let q = (-2.0 * half_log_odds(y.abs())).exp();
    2.0 * q / (1.0 + q)
}

/// Laplace density `½e^{−|v|}`.
pub fn laplace_pdf(v: f64) -> f64 {
    0.5 * (-v.abs()).exp()
}

/// Draw `(U, V)`; `V` is the difference of two unit exponentials.
pub fn sample_gauss_laplace<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.sample(StandardNormal);
    let e1: f64 = rng.sample(rand_distr::Exp1);
    let e2: f64 = rng.sample(rand_distr::Exp1);
    (u, e1 - e2)
}

/// Both sides of `e^{−θ²/2−u²/2} = e^{−θ²/2} + e^{−u²/2} − 1`, which would
/// have to hold if `X` had independent increments.
pub fn factorization_identity_sides(theta: f64, u: f64) -> (f64, f64) {
    let a = (-0.5 * theta * theta).exp();
    let b = (-0.5 * u * u).exp();
    (a * b, a + b - 1.0)
}

/// `E[e^{iθ(X₂−X₁) + iuX₁}]` for Poisson intensity `lambda`.
pub fn poisson_brownian_joint_cf(theta: f64, u: f64, lambda: f64) -> f64 {
    (lambda * ((-0.5 * (theta * theta + u * u)).exp() - 1.0)).exp()
}

/// `E[e^{iθ(X₂−X₁)}] E[e^{iuX₁}]`.
pub fn poisson_brownian_product_cf(theta: f64, u: f64, lambda: f64) -> f64 {
    let one = |w: f64| (lambda * ((-0.5 * w * w).exp() - 1.0)).exp();
    one(theta) * one(u)
}

/// `|E[e^{iθ(X₂−X₁)+iuX₁}] − E[e^{iθ(X₂−X₁)}]E[e^{iuX₁}]|` at unit intensity.
///
/// Both characteristic functions are real because `X` is symmetric.
pub fn poisson_brownian_factorization_gap(theta: f64, u: f64) -> f64 {
    poisson_brownian_gap_at(theta, u, 1.0)
}

pub fn poisson_brownian_gap_at(theta: f64, u: f64, lambda: f64) -> f64 {
    (poisson_brownian_joint_cf(theta, u, lambda) - poisson_brownian_product_cf(theta, u, lambda)).abs()
}

/// Paths of `Σ_{k≤N} B_k(t)` on `grid` (starting at 0), one RNG stream per path.
///
/// Given `N = n`, the sum is a Brownian motion with variance `n` per unit time.
pub fn poisson_brownian_paths(n_paths: usize, grid: &[f64], lambda: f64, seed: u64) -> Vec<Vec<f64>> {
    let poisson = Poisson::new(lambda).expect("Poisson intensity must be positive and finite");
    (0..n_paths as u64)
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let n: f64 = poisson.sample(&mut rng);
            let sd = n.sqrt();
            let mut x = 0.0;
            let mut prev = 0.0;
            grid.iter()
                .map(|&t| {
                    let z: f64 = rng.sample(StandardNormal);
                    x += sd * (t - prev).sqrt() * z;
                    prev = t;
                    x
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{self, Tolerance};
    use crate::special::normal_cdf;

    // The unsimplified ratio with c₁ = (2√(2π))⁻¹ and c₂ = √e/2.
    fn direct_formula(y: f64) -> f64 {
        let c1 = 1.0 / (2.0 * (2.0 * PI).sqrt());
        let c2 = 0.5_f64.exp() / 2.0;
        let a = c2 * (-y).exp() * normal_cdf(y - 1.0);
        let b = c2 * y.exp() * (1.0 - normal_cdf(y + 1.0));
        let g = c1 * (-0.5 * y * y).exp();
        (-g + a + g - b) / (a + b)
    }

    // E[U | Y = y] as a ratio of two convolution integrals.
    fn quadrature_oracle(y: f64) -> f64 {
        let tol = Tolerance::new(1e-15, 1e-12);
        let dens = |u: f64| (-0.5 * u * u).exp() * laplace_pdf(y - u);
        let num = quad::adaptive(|u| u * dens(u), -12.0, y, tol).value + quad::adaptive(|u| u * dens(u), y, 12.0, tol).value;
        let den = quad::adaptive(dens, -12.0, y, tol).value + quad::adaptive(dens, y, 12.0, tol).value;
        num / den
    }

    #[test]
    fn zero_at_origin() {
        assert_eq!(conditional_mean(0.0), 0.0);
    }

    #[test]
    fn matches_direct_formula_and_quadrature() {
        for y in [-4.0, -1.5, -0.3, 0.2, 1.0, 2.0, 3.7] {
            let v = conditional_mean(y);
            assert!((v - direct_formula(y)).abs() < 1e-12, "y={y}");
            assert!((v - quadrature_oracle(y)).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn limits_at_six() {
        let v = conditional_mean(6.0);
        assert!(v > 0.95 && v < 1.0, "{v}");
        assert_eq!(conditional_mean(-6.0), -v);
    }

    #[test]
    fn odd_and_bounded_on_grid() {
        for i in 0..=400 {
            let y = -20.0 + 0.1 * i as f64;
            assert!((conditional_mean(-y) + conditional_mean(y)).abs() <= 1e-12);
            assert!(conditional_mean(y).abs() <= 1.0);
            assert!(conditional_mean_gap(y) > 0.0, "y={y}");
        }
    }

    #[test]
    fn gap_agrees_with_value_where_representable() {
        for y in [0.0, 0.5, 2.0, 5.0] {
            assert!((1.0 - conditional_mean(y).abs() - conditional_mean_gap(y)).abs() < 1e-14);
        }
    }

    #[test]
    fn monte_carlo_at_two() {
        let mut rng = path_rng(7, 0);
        let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
        for _ in 0..1_000_000 {
            let (u, v) = sample_gauss_laplace(&mut rng);
            if ((u + v) - 2.0).abs() < 0.05 {
                n += 1.0;
                s += u;
                s2 += u * u;
            }
        }
        let mean = s / n;
        let se = ((s2 / n - mean * mean) / n).sqrt();
        let v = conditional_mean(2.0);
        assert!(v.abs() < 1.0);
        assert!((mean - v).abs() < 3.0 * se, "mc={mean} se={se} v={v}");
    }

    #[test]
    fn factorization_gap_examples() {
        for u in [-3.0, 0.0, 0.7, 2.0] {
            assert!(poisson_brownian_factorization_gap(0.0, u) < 1e-16);
        }
        let (lhs, rhs) = factorization_identity_sides(2.0, 2.0);
        assert!((lhs - (-4.0_f64).exp()).abs() < 1e-15);
        assert!((rhs - (2.0 * (-2.0_f64).exp() - 1.0)).abs() < 1e-15);
        assert!(poisson_brownian_factorization_gap(2.0, 2.0) > 0.0);
        let (l, r) = factorization_identity_sides(40.0, 40.0);
        assert!(l >= 0.0 && (r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gap_positive_off_axes() {
        for th in [-2.0, -0.5, 0.3, 1.0] {
            for u in [-1.0, 0.2, 2.5] {
                assert!(poisson_brownian_factorization_gap(th, u) > 0.0);
            }
        }
    }

    #[test]
    fn simulated_paths_have_poisson_variance() {
        let grid = [0.0, 1.0, 2.0];
        let paths = poisson_brownian_paths(20_000, &grid, 1.0, 3);
        let var: f64 = paths.iter().map(|p| p[1] * p[1]).sum::<f64>() / paths.len() as f64;
        // Var X₁ = E[N] = 1; fourth moment E[3N²] = 6.
        assert!((var - 1.0).abs() < 3.0 * (5.0_f64 / 20_000.0).sqrt(), "{var}");
    }
}
