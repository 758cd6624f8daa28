//! One-dimensional Lévy measures, the truncation function and the integrals
//! `B`, `K` and `ψ` built on top of them.
//!
//! Each measure carries declared power-law exponents at the origin and at
//! infinity. Finiteness of every improper integral is decided from those
//! exponents; quadrature only supplies values of integrals already known to
//! converge.

mod profile;
mod random_measure;

use std::fmt;

use thiserror::Error;

use crate::quad::{self, OriginBehaviour, TailBehaviour, Tolerance};
use crate::special::upper_gamma;

pub use profile::{Growth, Profile};
pub use random_measure::{
    LevyField, Mark, MarkMeasure, ParamFn, PowerLawMarks, RandomMeasureSpec, WeightedMark,
};

/// Errors raised while building or evaluating Lévy measures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevyError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("declared {which} exponent {declared} does not match the family value {expected}")]
    ExponentMismatch { which: &'static str, declared: f64, expected: f64 },
    #[error("{0} exponent is not declared")]
    Undeclared(&'static str),
    #[error("integral diverges: {0}")]
    NonIntegrable(String),
    #[error("mark {0} has no per-mark parameter")]
    MissingMarkParameter(String),
    #[error("mark measure has infinite mass on the simulation window")]
    UnnormalizableMarks,
    #[error("degenerate random measure: mark {0} has neither a Gaussian part nor jumps")]
    Deterministic(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> LevyError {
    LevyError::InvalidParameter { name, reason: reason.into() }
}

/// Three-valued outcome of a condition check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Satisfied,
    Violated,
    Unknown,
}

impl Condition {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Condition::Satisfied
        } else {
            Condition::Violated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Satisfied => "satisfied",
            Condition::Violated => "violated",
            Condition::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declared asymptotic behaviour at one end of the real line.
///
/// At the origin `Power(p)` means a density `≈ |x|^p`; at infinity
/// `Power(β)` means a tail mass `ρ(x, ∞) ≈ x^β`. `Vanishing` stands for no
/// mass near the origin, or a tail lighter than every power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Power(f64),
    Vanishing,
    Undeclared,
}

/// Which half-line a tail refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

/// A point mass of a compound Poisson measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Density given on a grid, linearly interpolated, extended by the declared
/// power laws beyond the outermost knots on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    /// `(|x|, density)` for `x > 0`, increasing in `|x|`.
    positive: Vec<(f64, f64)>,
    /// `(|x|, density)` for `x < 0`, increasing in `|x|`.
    negative: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevyFamily {
    SymmetricStable { alpha: f64, c: f64 },
    SymmetricTemperedStable { alpha: f64, lambda: f64, c: f64 },
    CompoundPoisson { atoms: Vec<Atom> },
    Tabulated(TabulatedDensity),
}

/// A Lévy measure with declared endpoint exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasureSpec {
    family: LevyFamily,
    origin: Exponent,
    tail: Exponent,
}

/// Truncation `⟦x⟧ = x / (|x| ∨ 1)`.
pub fn truncate(x: f64) -> f64 {
    x / x.abs().max(1.0)
}

const QUAD_TOL: Tolerance = Tolerance::new(1e-10, 1e-8);
const FINE_TOL: Tolerance = Tolerance::new(1e-13, 1e-11);

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl LevyMeasureSpec {
    pub fn stable(alpha: f64, c: f64) -> Result<Self, LevyError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("{c} must be positive")));
        }
        Ok(Self {
            family: LevyFamily::SymmetricStable { alpha, c },
            origin: Exponent::Power(-alpha - 1.0),
            tail: Exponent::Power(-alpha),
        })
    }

    pub fn tempered_stable(alpha: f64, lambda: f64, c: f64) -> Result<Self, LevyError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} must be positive")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("{c} must be positive")));
        }
        Ok(Self {
            family: LevyFamily::SymmetricTemperedStable { alpha, lambda, c },
            origin: Exponent::Power(-alpha - 1.0),
            tail: Exponent::Vanishing,
        })
    }

    pub fn compound_poisson(atoms: Vec<Atom>) -> Result<Self, LevyError> {
        for a in &atoms {
            if a.position == 0.0 || !a.position.is_finite() {
                return Err(invalid("atoms", format!("atom position {} must be finite and non-zero", a.position)));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(invalid("atoms", format!("atom mass {} must be positive", a.mass)));
            }
        }
        Ok(Self {
            family: LevyFamily::CompoundPoisson { atoms },
            origin: Exponent::Vanishing,
            tail: Exponent::Vanishing,
        })
    }

    /// The zero measure.
    pub fn zero() -> Self {
        Self {
            family: LevyFamily::CompoundPoisson { atoms: Vec::new() },
            origin: Exponent::Vanishing,
            tail: Exponent::Vanishing,
        }
    }

    /// Tabulated density from `(x, density)` points on either side of zero.
    pub fn tabulated(points: &[(f64, f64)], origin: Exponent, tail: Exponent) -> Result<Self, LevyError> {
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for &(x, d) in points {
            if !(x.is_finite() && x != 0.0) {
                return Err(invalid("density", format!("grid point {x} must be finite and non-zero")));
            }
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid("density", format!("density {d} at {x} must be non-negative")));
            }
            if x > 0.0 {
                positive.push((x, d));
            } else {
                negative.push((-x, d));
            }
        }
        for side in [&mut positive, &mut negative] {
            side.sort_by(|a, b| a.0.total_cmp(&b.0));
            if side.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(invalid("density", "duplicate grid point"));
            }
            if side.len() == 1 {
                return Err(invalid("density", "each non-empty side needs at least two grid points"));
            }
        }
        if positive.is_empty() && negative.is_empty() {
            return Err(invalid("density", "empty grid"));
        }
        if let Exponent::Power(p) = origin {
            if p <= -3.0 {
                return Err(invalid("origin_exponent", format!("{p} violates ∫(1 ∧ x²) ρ(dx) < ∞")));
            }
        }
        if let Exponent::Power(b) = tail {
            if b >= 0.0 {
                return Err(invalid("tail_exponent", format!("{b} must be negative")));
            }
        }
        Ok(Self { family: LevyFamily::Tabulated(TabulatedDensity { positive, negative }), origin, tail })
    }

    /// Checks declared exponents against the family; tabulated densities
    /// adopt them.
    pub fn with_declared(mut self, origin: Option<Exponent>, tail: Option<Exponent>) -> Result<Self, LevyError> {
        let tabulated = matches!(self.family, LevyFamily::Tabulated(_));
        for (which, declared, own) in [("origin", origin, &mut self.origin), ("tail", tail, &mut self.tail)] {
            let Some(declared) = declared else { continue };
            if tabulated {
                *own = declared;
                continue;
            }
            let ok = match (declared, *own) {
                (Exponent::Power(a), Exponent::Power(b)) => same(a, b),
                (a, b) => a == b,
            };
            if !ok {
                let value = |e: Exponent| match e {
                    Exponent::Power(p) => p,
                    _ => f64::NEG_INFINITY,
                };
                return Err(LevyError::ExponentMismatch {
                    which,
                    declared: value(declared),
                    expected: value(*own),
                });
            }
        }
        Ok(self)
    }

    pub fn family(&self) -> &LevyFamily {
        &self.family
    }

    pub fn origin_exponent(&self) -> Exponent {
        self.origin
    }

    pub fn tail_exponent(&self) -> Exponent {
        self.tail
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            LevyFamily::CompoundPoisson { atoms } => atoms.is_empty(),
            LevyFamily::Tabulated(t) => {
                t.positive.iter().chain(&t.negative).all(|p| p.1 == 0.0)
                    && !matches!(self.origin, Exponent::Power(_))
            }
            _ => false,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            LevyFamily::SymmetricStable { .. } | LevyFamily::SymmetricTemperedStable { .. } => true,
            LevyFamily::CompoundPoisson { atoms } => {
                let mut pos: Vec<(f64, f64)> =
                    atoms.iter().filter(|a| a.position > 0.0).map(|a| (a.position, a.mass)).collect();
                let mut neg: Vec<(f64, f64)> =
                    atoms.iter().filter(|a| a.position < 0.0).map(|a| (-a.position, a.mass)).collect();
                pos.sort_by(|a, b| a.0.total_cmp(&b.0));
                neg.sort_by(|a, b| a.0.total_cmp(&b.0));
                merge_atoms(&pos) == merge_atoms(&neg)
            }
            LevyFamily::Tabulated(t) => t.positive == t.negative,
        }
    }

    /// Whether the measure puts mass on the given half-line.
    fn side_has_mass(&self, side: Side) -> bool {
        match &self.family {
            LevyFamily::SymmetricStable { .. } | LevyFamily::SymmetricTemperedStable { .. } => true,
            LevyFamily::CompoundPoisson { atoms } => atoms.iter().any(|a| side_matches(a.position, side)),
            LevyFamily::Tabulated(t) => {
                let pts = t.side(side);
                !pts.is_empty() && (pts.iter().any(|p| p.1 > 0.0) || matches!(self.origin, Exponent::Power(_)))
            }
        }
    }

    /// Density at `|x| = y > 0` on the given side, for absolutely continuous families.
    pub fn side_density(&self, y: f64, side: Side) -> Option<f64> {
        match &self.family {
            LevyFamily::SymmetricStable { alpha, c } => Some(c * y.powf(-alpha - 1.0)),
            LevyFamily::SymmetricTemperedStable { alpha, lambda, c } => {
                Some(c * y.powf(-alpha - 1.0) * (-lambda * y).exp())
            }
            LevyFamily::CompoundPoisson { .. } => None,
            LevyFamily::Tabulated(t) => Some(t.density(t.side(side), y, self.origin, self.tail)),
        }
    }

    /// `ρ((x, ∞))` for `Side::Positive`, `ρ((−∞, −x))` for `Side::Negative`.
    pub fn tail_mass(&self, x: f64, side: Side) -> f64 {
        assert!(x > 0.0, "tail_mass needs x > 0");
        match &self.family {
            LevyFamily::SymmetricStable { alpha, c } => c / alpha * x.powf(-alpha),
            LevyFamily::SymmetricTemperedStable { alpha, lambda, c } => {
                c * lambda.powf(*alpha) * upper_gamma(-alpha, lambda * x)
            }
            LevyFamily::CompoundPoisson { atoms } => atoms
                .iter()
                .filter(|a| side_matches(a.position, side) && a.position.abs() > x)
                .map(|a| a.mass)
                .sum(),
            LevyFamily::Tabulated(t) => t.tail_mass(t.side(side), x, self.origin, self.tail),
        }
    }

    /// Total mass of one half-line (possibly infinite).
    pub fn side_mass(&self, side: Side) -> f64 {
        match &self.family {
            LevyFamily::SymmetricStable { .. } | LevyFamily::SymmetricTemperedStable { .. } => f64::INFINITY,
            LevyFamily::CompoundPoisson { atoms } => {
                atoms.iter().filter(|a| side_matches(a.position, side)).map(|a| a.mass).sum()
            }
            LevyFamily::Tabulated(t) => t.tail_mass(t.side(side), 0.0, self.origin, self.tail),
        }
    }

    /// Generalised inverse of the tail: `inf{x > 0 : ρ(x, ∞) ≤ s}` for `s > 0`
    /// and `sup{x < 0 : ρ(−∞, x) ≤ −s}` for `s < 0`. Zero when the tail never
    /// exceeds `|s|`.
    pub fn tail_inverse(&self, s: f64) -> f64 {
        assert!(s != 0.0 && !s.is_nan(), "tail_inverse needs s ≠ 0");
        let side = if s > 0.0 { Side::Positive } else { Side::Negative };
        let sign = if s > 0.0 { 1.0 } else { -1.0 };
        let level = s.abs();
        let magnitude = match &self.family {
            LevyFamily::SymmetricStable { alpha, c } => (c / (alpha * level)).powf(1.0 / alpha),
            LevyFamily::CompoundPoisson { atoms } => {
                let mut sizes: Vec<(f64, f64)> = atoms
                    .iter()
                    .filter(|a| side_matches(a.position, side))
                    .map(|a| (a.position.abs(), a.mass))
                    .collect();
                sizes.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut cumulative = 0.0;
                let mut out = 0.0;
                for (size, mass) in sizes {
                    cumulative += mass;
                    if cumulative > level {
                        out = size;
                        break;
                    }
                }
                out
            }
            LevyFamily::SymmetricTemperedStable { alpha, c, .. } => {
                let guess = (c / (alpha * level)).powf(1.0 / alpha);
                self.solve_tail(level, side, guess)
            }
            LevyFamily::Tabulated(_) => {
                if self.side_mass(side) <= level {
                    0.0
                } else {
                    self.solve_tail(level, side, 1.0)
                }
            }
        };
        sign * magnitude
    }

    // Safeguarded Newton iteration in log x on a bracket of the generalised inverse.
    fn solve_tail(&self, level: f64, side: Side, guess: f64) -> f64 {
        let mass = |x: f64| self.tail_mass(x, side);
        let mut hi = guess.max(1e-300);
        let mut guard = 0;
        while mass(hi) > level {
            hi *= 4.0;
            guard += 1;
            if guard > 600 {
                return hi;
            }
        }
        let mut lo = hi;
        guard = 0;
        while mass(lo) <= level {
            lo *= 0.25;
            guard += 1;
            if guard > 600 {
                return lo;
            }
        }
        // Invariant: mass(lo) > level >= mass(hi).
        let mut x = hi;
        for _ in 0..300 {
            let m = mass(x);
            if m > level {
                lo = x;
            } else {
                hi = x;
            }
            if hi <= lo * (1.0 + 2.0 * f64::EPSILON) {
                break;
            }
            let d = self.side_density(x, side).unwrap_or(0.0);
            let newton = if m > 0.0 && d > 0.0 {
                x * ((m / level).ln() * m / (x * d)).exp()
            } else {
                f64::NAN
            };
            if newton > lo && newton < hi {
                if (newton / x - 1.0).abs() <= 2.0 * f64::EPSILON {
                    return newton;
                }
                x = newton;
            } else {
                x = (lo * hi).sqrt();
            }
        }
        hi
    }

    /// `∫ (⟦xy⟧ − x⟦y⟧) ρ(dy)`; exactly zero for symmetric measures.
    pub fn b_integral(&self, x: f64) -> Result<f64, LevyError> {
        if x == 0.0 || self.is_symmetric() {
            return Ok(0.0);
        }
        let h = |y: f64| truncate(x * y) - x * truncate(y);
        match &self.family {
            LevyFamily::CompoundPoisson { atoms } => Ok(atoms.iter().map(|a| a.mass * h(a.position)).sum()),
            LevyFamily::Tabulated(t) => {
                // The integrand vanishes for |y| < min(1, 1/|x|) and is bounded
                // beyond, so only the tail exponent matters.
                let tail = self.tail_behaviour(Some(0.0))?;
                let mut total = 0.0;
                for (side, sign) in [(Side::Positive, 1.0), (Side::Negative, -1.0)] {
                    let pts = t.side(side);
                    if pts.is_empty() {
                        continue;
                    }
                    let lo = 1.0f64.min(1.0 / x.abs());
                    let mut breaks: Vec<f64> = pts.iter().map(|p| p.0).filter(|&y| y > lo).collect();
                    breaks.push(lo);
                    breaks.push(1.0f64.max(1.0 / x.abs()));
                    breaks.sort_by(f64::total_cmp);
                    breaks.dedup();
                    let f = |y: f64| h(sign * y) * t.density(pts, y, self.origin, self.tail);
                    let mut acc = 0.0;
                    for w in breaks.windows(2) {
                        acc += quad::adaptive_log(&f, w[0], w[1], FINE_TOL).value;
                    }
                    acc += quad::tail_segment(&f, *breaks.last().expect("non-empty"), tail, FINE_TOL).value;
                    total += acc;
                }
                Ok(total)
            }
            _ => unreachable!("parametric families are symmetric"),
        }
    }

    /// `∫ ⟦xy⟧² ρ(dy)`.
    pub fn k_integral(&self, x: f64) -> Result<f64, LevyError> {
        self.profile_integral(Profile::TruncSquare, x)
    }

    /// `∫ (|xu| ∧ |xu|²) ρ(dx)`, `+∞` on divergence.
    pub fn psi_integral(&self, u: f64) -> Result<f64, LevyError> {
        self.profile_integral(Profile::Psi, u)
    }

    /// Same as [`psi_integral`](Self::psi_integral) but never uses a closed form.
    pub fn psi_integral_quadrature(&self, u: f64) -> Result<f64, LevyError> {
        self.profile_quadrature(Profile::Psi, u)
    }

    /// `∫_{−1}^{1} |x| ρ(dx) = ∞`, decided from the origin exponent.
    pub fn small_jumps_infinite_variation(&self) -> Condition {
        if self.is_zero() {
            return Condition::Violated;
        }
        match self.origin {
            Exponent::Power(p) => Condition::from_bool(p <= -2.0),
            Exponent::Vanishing => Condition::Violated,
            Exponent::Undeclared => Condition::Unknown,
        }
    }

    /// `∫_{|x|>1} x² ρ(dx) < ∞`.
    pub fn finite_second_moment_at_infinity(&self) -> Condition {
        match self.tail {
            Exponent::Power(b) => Condition::from_bool(b < -2.0),
            Exponent::Vanishing => Condition::Satisfied,
            Exponent::Undeclared => Condition::Unknown,
        }
    }

    /// `∫_{|x|≤1} |x| ρ(dx) + ρ(|x|>1) < ∞`, i.e. paths of finite variation.
    pub fn finite_variation(&self) -> Condition {
        if self.is_zero() {
            return Condition::Satisfied;
        }
        match self.origin {
            Exponent::Power(p) => Condition::from_bool(p > -2.0),
            Exponent::Vanishing => Condition::Satisfied,
            Exponent::Undeclared => Condition::Unknown,
        }
    }

    /// The ratio `u ∫_{|x|>u} |x| ρ(dx) / ∫_{|x|≤u} x² ρ(dx)`.
    pub fn ratio_at(&self, u: f64) -> Result<f64, LevyError> {
        assert!(u > 0.0);
        if let LevyFamily::SymmetricStable { alpha, .. } = self.family {
            if alpha > 1.0 {
                return Ok((2.0 - alpha) / (alpha - 1.0));
            }
            return Ok(f64::INFINITY);
        }
        let numerator = u * self.profile_integral(Profile::Outer { cut: u, power: 1.0 }, 1.0)?;
        let denominator = self.profile_integral(Profile::Inner { cut: u, power: 2.0 }, 1.0)?;
        if numerator == 0.0 {
            return Ok(0.0);
        }
        if denominator == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(numerator / denominator)
    }

    /// The ratio on a logarithmic grid `u ∈ [1, 10⁶]`.
    pub fn ratio_witness(&self) -> Vec<(f64, f64)> {
        (0..=12)
            .map(|k| {
                let u = 10f64.powf(k as f64 * 0.5);
                (u, self.ratio_at(u).unwrap_or(f64::NAN))
            })
            .collect()
    }

    /// Limsup of the ratio as `u → ∞` is finite.
    pub fn ratio_u0(&self) -> Condition {
        if self.finite_second_moment_at_infinity() == Condition::Satisfied {
            return Condition::Satisfied;
        }
        match self.tail {
            Exponent::Power(b) if (-2.0..-1.0).contains(&b) => Condition::Satisfied,
            // ∫_{|x|>u} |x| ρ(dx) = ∞ for every u.
            Exponent::Power(b) if b >= -1.0 => Condition::Violated,
            _ => Condition::Unknown,
        }
    }

    /// The ratio is bounded over all `u > 0`.
    pub fn ratio_bounded(&self) -> Condition {
        if self.is_zero() {
            return Condition::Satisfied;
        }
        let at_infinity = self.ratio_u0();
        let at_zero = match self.origin {
            Exponent::Power(p) => Condition::from_bool(p < -2.0),
            Exponent::Vanishing => Condition::Violated,
            Exponent::Undeclared => Condition::Unknown,
        };
        match (at_infinity, at_zero) {
            (Condition::Violated, _) | (_, Condition::Violated) => Condition::Violated,
            (Condition::Satisfied, Condition::Satisfied) => Condition::Satisfied,
            _ => Condition::Unknown,
        }
    }

    fn origin_behaviour(&self, a0: Option<f64>) -> Result<OriginBehaviour, LevyError> {
        let Some(a0) = a0 else { return Ok(OriginBehaviour::Power(0.0)) };
        match self.origin {
            Exponent::Power(p) => Ok(OriginBehaviour::Power(a0 + p)),
            Exponent::Vanishing => Ok(OriginBehaviour::Power(0.0)),
            Exponent::Undeclared => Err(LevyError::Undeclared("origin")),
        }
    }

    fn tail_behaviour(&self, a_inf: Option<f64>) -> Result<TailBehaviour, LevyError> {
        let Some(a) = a_inf else { return Ok(TailBehaviour::Exponential) };
        match (&self.family, self.tail) {
            (LevyFamily::SymmetricTemperedStable { .. }, _) => Ok(TailBehaviour::Exponential),
            (_, Exponent::Power(b)) => Ok(TailBehaviour::Power(a + b - 1.0)),
            (_, Exponent::Vanishing) => Ok(TailBehaviour::Exponential),
            (_, Exponent::Undeclared) => Err(LevyError::Undeclared("tail")),
        }
    }

    /// `∫ h(|x|, |u|) ρ(dx)` for a profile `h`, `+∞` on divergence.
    pub fn profile_integral(&self, profile: Profile, u: f64) -> Result<f64, LevyError> {
        if let Some(v) = self.profile_closed_form(profile, u) {
            return Ok(v);
        }
        self.profile_quadrature(profile, u)
    }

    fn profile_closed_form(&self, profile: Profile, u: f64) -> Option<f64> {
        let u = u.abs();
        if u == 0.0 && profile.vanishes_at_zero() {
            return Some(0.0);
        }
        match &self.family {
            LevyFamily::CompoundPoisson { atoms } => {
                Some(atoms.iter().map(|a| a.mass * profile.eval(a.position.abs(), u)).sum())
            }
            LevyFamily::SymmetricStable { alpha, c } => {
                let a = *alpha;
                match profile {
                    Profile::Psi if a > 1.0 => Some(2.0 * c * (1.0 / (2.0 - a) + 1.0 / (a - 1.0)) * u.powf(a)),
                    Profile::TruncSquare => Some(2.0 * c * (1.0 / (2.0 - a) + 1.0 / a) * u.powf(a)),
                    Profile::FiniteVariation if a < 1.0 => {
                        Some(2.0 * c * (1.0 / (1.0 - a) + 1.0 / a) * u.powf(a))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Exponent check followed by quadrature, ignoring closed forms.
    pub fn profile_quadrature(&self, profile: Profile, u: f64) -> Result<f64, LevyError> {
        let u = u.abs();
        if u == 0.0 && profile.vanishes_at_zero() {
            return Ok(0.0);
        }
        if let LevyFamily::CompoundPoisson { atoms } = &self.family {
            return Ok(atoms.iter().map(|a| a.mass * profile.eval(a.position.abs(), u)).sum());
        }
        if !self.profile_finite(profile)? {
            return Ok(f64::INFINITY);
        }
        let origin = self.origin_behaviour(profile.origin_power())?;
        let tail = self.tail_behaviour(profile.tail_power())?;
        let mut total = 0.0;
        for side in [Side::Positive, Side::Negative] {
            if !self.side_has_mass(side) {
                continue;
            }
            let mut breaks = profile.breaks(u);
            if let LevyFamily::Tabulated(t) = &self.family {
                breaks.extend(t.side(side).iter().map(|p| p.0));
            }
            if let LevyFamily::SymmetricTemperedStable { lambda, .. } = self.family {
                breaks.push(1.0 / lambda);
            }
            let density = |y: f64| self.side_density(y, side).unwrap_or(0.0);
            let f = |y: f64| {
                let d = density(y);
                if d == 0.0 {
                    0.0
                } else {
                    profile.eval(y, u) * d
                }
            };
            let r = quad::half_line(f, &breaks, origin, tail, QUAD_TOL);
            total += r.value;
        }
        Ok(total)
    }

    /// Exponent arithmetic: is `∫ h(|x|, u) ρ(dx)` finite for `u ≠ 0`?
    pub fn profile_finite(&self, profile: Profile) -> Result<bool, LevyError> {
        if self.is_zero() {
            return Ok(true);
        }
        if let LevyFamily::CompoundPoisson { .. } = self.family {
            return Ok(true);
        }
        let origin_ok = match self.origin_behaviour(profile.origin_power())? {
            OriginBehaviour::Power(q) => q > -1.0,
        };
        let tail_ok = match self.tail_behaviour(profile.tail_power())? {
            TailBehaviour::Power(q) => q < -1.0,
            TailBehaviour::Exponential => true,
        };
        Ok(origin_ok && tail_ok)
    }
}

fn side_matches(x: f64, side: Side) -> bool {
    match side {
        Side::Positive => x > 0.0,
        Side::Negative => x < 0.0,
    }
}

fn merge_atoms(sorted: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(x, m) in sorted {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => out.push((x, m)),
        }
    }
    out
}

impl TabulatedDensity {
    fn side(&self, side: Side) -> &[(f64, f64)] {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }

    fn density(&self, pts: &[(f64, f64)], y: f64, origin: Exponent, tail: Exponent) -> f64 {
        let Some(&(x_first, d_first)) = pts.first() else { return 0.0 };
        let &(x_last, d_last) = pts.last().expect("non-empty");
        if y < x_first {
            return match origin {
                Exponent::Power(p) => d_first * (y / x_first).powf(p),
                _ => 0.0,
            };
        }
        if y > x_last {
            return match tail {
                Exponent::Power(b) => d_last * (y / x_last).powf(b - 1.0),
                _ => 0.0,
            };
        }
        let i = pts.partition_point(|p| p.0 <= y).clamp(1, pts.len() - 1);
        let (x0, d0) = pts[i - 1];
        let (x1, d1) = pts[i];
        d0 + (d1 - d0) * (y - x0) / (x1 - x0)
    }

    // Exact integral of the interpolant over (x, ∞); x = 0 gives the side mass.
    fn tail_mass(&self, pts: &[(f64, f64)], x: f64, origin: Exponent, tail: Exponent) -> f64 {
        let Some(&(x_first, d_first)) = pts.first() else { return 0.0 };
        let &(x_last, d_last) = pts.last().expect("non-empty");
        let mut total = 0.0;
        if x < x_first {
            if let Exponent::Power(p) = origin {
                if d_first > 0.0 {
                    total += if x == 0.0 && p <= -1.0 {
                        f64::INFINITY
                    } else if (p + 1.0).abs() < 1e-14 {
                        d_first * x_first * (x_first / x).ln()
                    } else {
                        d_first * x_first.powf(-p) * (x_first.powf(p + 1.0) - x.powf(p + 1.0)) / (p + 1.0)
                    };
                }
            }
        }
        for w in pts.windows(2) {
            let (x0, d0) = w[0];
            let (x1, d1) = w[1];
            if x1 <= x {
                continue;
            }
            let a = x.max(x0);
            let da = d0 + (d1 - d0) * (a - x0) / (x1 - x0);
            total += 0.5 * (da + d1) * (x1 - a);
        }
        if let Exponent::Power(b) = tail {
            let a = x.max(x_last);
            total += d_last * x_last.powf(1.0 - b) * a.powf(b) / (-b);
        }
        total
    }
}

#[cfg(test)]
mod tests;
