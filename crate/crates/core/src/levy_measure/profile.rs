//! Integrands `h(|x|, |u|)` integrated against a Lévy measure, with their
//! endpoint exponents and the growth of `u ↦ ∫ h(|x|, |u|) ρ(dx)`.

use super::{Exponent, LevyFamily, LevyMeasureSpec};

/// An integrand `h(y, u)` with `y = |x|`, `u = |u|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `|yu| ∧ |yu|²`.
    Psi,
    /// `(|yu| ∧ |yu|²)(1 ∧ y⁻²)`.
    PsiTruncated,
    /// `⟦yu⟧² = (|yu| ∧ 1)²`.
    TruncSquare,
    /// `1 ∧ |yu|`.
    FiniteVariation,
    /// `y^q`, independent of `u`.
    Moment(f64),
    /// `y^q 1{y ≤ cut}`.
    Inner { cut: f64, power: f64 },
    /// `y^q 1{y > cut}`.
    Outer { cut: f64, power: f64 },
}

impl Profile {
    pub fn eval(&self, y: f64, u: f64) -> f64 {
        let z = y * u;
        match *self {
            Profile::Psi => z.min(z * z),
            Profile::PsiTruncated => z.min(z * z) * (1.0f64).min(1.0 / (y * y)),
            Profile::TruncSquare => {
                let t = z.min(1.0);
                t * t
            }
            Profile::FiniteVariation => z.min(1.0),
            Profile::Moment(q) => y.powf(q),
            Profile::Inner { cut, power } => {
                if y <= cut {
                    y.powf(power)
                } else {
                    0.0
                }
            }
            Profile::Outer { cut, power } => {
                if y > cut {
                    y.powf(power)
                } else {
                    0.0
                }
            }
        }
    }

    /// True when the integrand is identically zero at `u = 0`.
    pub fn vanishes_at_zero(&self) -> bool {
        matches!(self, Profile::Psi | Profile::PsiTruncated | Profile::TruncSquare | Profile::FiniteVariation)
    }

    /// Power of `y` as `y → 0`; `None` when the integrand is zero near the origin.
    pub fn origin_power(&self) -> Option<f64> {
        match *self {
            Profile::Psi | Profile::PsiTruncated | Profile::TruncSquare => Some(2.0),
            Profile::FiniteVariation => Some(1.0),
            Profile::Moment(q) | Profile::Inner { power: q, .. } => Some(q),
            Profile::Outer { .. } => None,
        }
    }

    /// Power of `y` as `y → ∞`; `None` when the integrand is zero near infinity.
    pub fn tail_power(&self) -> Option<f64> {
        match *self {
            Profile::Psi => Some(1.0),
            Profile::PsiTruncated => Some(-1.0),
            Profile::TruncSquare | Profile::FiniteVariation => Some(0.0),
            Profile::Moment(q) | Profile::Outer { power: q, .. } => Some(q),
            Profile::Inner { .. } => None,
        }
    }

    /// For integrands of the form `k(|yu|) w(y)`: the exponents of `k` at 0
    /// and ∞ and the power of `w` at infinity.
    fn scaling(&self) -> Option<(f64, f64, f64)> {
        match self {
            Profile::Psi => Some((2.0, 1.0, 0.0)),
            Profile::PsiTruncated => Some((2.0, 1.0, -2.0)),
            Profile::TruncSquare => Some((2.0, 0.0, 0.0)),
            Profile::FiniteVariation => Some((1.0, 0.0, 0.0)),
            _ => None,
        }
    }

    /// Points where the integrand has a kink.
    pub fn breaks(&self, u: f64) -> Vec<f64> {
        match *self {
            Profile::Psi | Profile::TruncSquare | Profile::FiniteVariation => vec![1.0 / u],
            Profile::PsiTruncated => vec![1.0 / u, 1.0],
            Profile::Moment(_) => vec![1.0],
            Profile::Inner { cut, .. } | Profile::Outer { cut, .. } => vec![cut],
        }
    }
}

/// Power-law growth of `G(u) = ∫ h(|x|, u) ρ(dx)` at one end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `G(u) ≍ u^g` (up to logarithms).
    Power(f64),
    /// `G ≡ 0`.
    Zero,
    /// `G(u) = ∞` for every `u ≠ 0`.
    Infinite,
    /// Exponents are not declared.
    Unknown,
}

impl LevyMeasureSpec {
    /// Growth of `u ↦ ∫ h(|x|, u) ρ(dx)` as `u → 0` and as `u → ∞`.
    pub fn growth(&self, profile: Profile) -> (Growth, Growth) {
        if self.is_zero() {
            return (Growth::Zero, Growth::Zero);
        }
        match self.profile_finite(profile) {
            Ok(true) => {}
            Ok(false) => return (Growth::Infinite, Growth::Infinite),
            Err(_) => return (Growth::Unknown, Growth::Unknown),
        }
        let Some((a0, a_inf, w_inf)) = profile.scaling() else {
            return (Growth::Power(0.0), Growth::Power(0.0));
        };
        let tempered = matches!(self.family, LevyFamily::SymmetricTemperedStable { .. });
        let at_zero = match self.tail {
            _ if tempered => Growth::Power(a0),
            Exponent::Power(b) => {
                let e = w_inf + b;
                if a0 + e < 0.0 {
                    Growth::Power(a0)
                } else {
                    Growth::Power(-e)
                }
            }
            Exponent::Vanishing => Growth::Power(a0),
            Exponent::Undeclared => Growth::Unknown,
        };
        let at_infinity = match self.origin {
            Exponent::Power(p) if -1.0 - p > a_inf => Growth::Power(-1.0 - p),
            Exponent::Power(_) | Exponent::Vanishing => Growth::Power(a_inf),
            Exponent::Undeclared => Growth::Unknown,
        };
        (at_zero, at_infinity)
    }
}
