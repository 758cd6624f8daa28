//! Independently scattered random measures on `ℝ × V` with control measure
//! `ds m(dv)` and characteristics `(b(v), σ²(v), ρ_v)`.

use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{invalid, Condition, LevyError, LevyMeasureSpec};

/// A point of the mark space. `index` identifies the atom of a discrete mark
/// measure, which per-mark parameters are keyed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mark {
    pub value: f64,
    pub index: Option<usize>,
}

impl Mark {
    pub fn new(value: f64) -> Self {
        Self { value, index: None }
    }

    pub fn indexed(value: f64, index: usize) -> Self {
        Self { value, index: Some(index) }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "v[{i}]={}", self.value),
            None => write!(f, "v={}", self.value),
        }
    }
}

/// A real parameter as a function of the mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ParamFn {
    Constant(f64),
    Affine { intercept: f64, slope: f64 },
    PerMark { per_mark: Vec<f64> },
}

impl ParamFn {
    pub fn eval(&self, mark: &Mark) -> Result<f64, LevyError> {
        match self {
            ParamFn::Constant(c) => Ok(*c),
            ParamFn::Affine { intercept, slope } => Ok(intercept + slope * mark.value),
            ParamFn::PerMark { per_mark } => mark
                .index
                .and_then(|i| per_mark.get(i).copied())
                .ok_or_else(|| LevyError::MissingMarkParameter(mark.to_string())),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ParamFn::Constant(_) => true,
            ParamFn::Affine { slope, .. } => *slope == 0.0,
            ParamFn::PerMark { per_mark } => per_mark.windows(2).all(|w| w[0] == w[1]),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ParamFn::Constant(c) => *c == 0.0,
            ParamFn::Affine { intercept, slope } => *intercept == 0.0 && *slope == 0.0,
            ParamFn::PerMark { per_mark } => per_mark.iter().all(|x| *x == 0.0),
        }
    }

    /// Infimum and supremum over the support of `marks` (closure for densities).
    pub fn range(&self, marks: &MarkMeasure) -> Result<(f64, f64), LevyError> {
        let values: Vec<f64> = match marks {
            MarkMeasure::Discrete(list) => list
                .iter()
                .enumerate()
                .filter(|(_, m)| m.weight > 0.0)
                .map(|(i, m)| self.eval(&Mark::indexed(m.value, i)))
                .collect::<Result<_, _>>()?,
            MarkMeasure::PowerLaw(p) => match self {
                ParamFn::Constant(c) => vec![*c],
                ParamFn::Affine { intercept, slope } => {
                    if *slope == 0.0 {
                        vec![*intercept]
                    } else {
                        vec![intercept + slope * p.lo, intercept + slope * p.hi]
                    }
                }
                ParamFn::PerMark { .. } => {
                    return Err(invalid("per_mark", "per-mark parameters need a discrete mark measure"))
                }
            },
        };
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }
}

/// An atom `weight · δ_value` of a discrete mark measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMark {
    pub value: f64,
    pub weight: f64,
}

/// Mark density `scale · |v|^exponent` on the open interval `(lo, hi)`,
/// which must not contain 0 in its interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawMarks {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLawMarks {
    pub fn new(lo: f64, hi: f64, scale: f64, exponent: f64) -> Result<Self, LevyError> {
        if !(lo < hi) {
            return Err(invalid("marks", format!("interval ({lo}, {hi}) is empty")));
        }
        if lo < 0.0 && hi > 0.0 {
            return Err(invalid("marks", "interval must lie on one side of 0"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("marks", format!("scale {scale} must be positive")));
        }
        if !exponent.is_finite() {
            return Err(invalid("marks", "exponent must be finite"));
        }
        Ok(Self { lo, hi, scale, exponent })
    }

    /// `+1` for an interval in `[0, ∞)`, `−1` for one in `(−∞, 0]`.
    pub fn sign(&self) -> f64 {
        if self.hi <= 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// The interval in the distance variable `y = |v|`.
    pub fn distance_range(&self) -> (f64, f64) {
        if self.sign() > 0.0 {
            (self.lo, self.hi)
        } else {
            (-self.hi, -self.lo)
        }
    }

    fn antiderivative_span(&self, a: f64, b: f64) -> f64 {
        let q = self.exponent;
        if (q + 1.0).abs() < 1e-14 {
            return (b / a).ln();
        }
        (b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        let (a, b) = self.distance_range();
        let q = self.exponent;
        if (a == 0.0 && q <= -1.0) || (b.is_infinite() && q >= -1.0) {
            return f64::INFINITY;
        }
        self.scale * self.antiderivative_span(a, b)
    }

    /// Inverse distribution function of the normalised mark law.
    pub fn quantile(&self, p: f64) -> f64 {
        let (a, b) = self.distance_range();
        let q = self.exponent;
        let y = if (q + 1.0).abs() < 1e-14 {
            a * (b / a).powf(p)
        } else {
            let e = q + 1.0;
            let (ea, eb) = (a.powf(e), b.powf(e));
            (ea + p * (eb - ea)).powf(1.0 / e)
        };
        self.sign() * y.clamp(a, b)
    }
}

/// The mark measure `m` on `V ⊆ ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkMeasure {
    Discrete(Vec<WeightedMark>),
    PowerLaw(PowerLawMarks),
}

impl MarkMeasure {
    /// Unit point mass at `v`.
    pub fn point(v: f64) -> Self {
        MarkMeasure::Discrete(vec![WeightedMark { value: v, weight: 1.0 }])
    }

    pub fn validate(&self) -> Result<(), LevyError> {
        match self {
            MarkMeasure::Discrete(list) => {
                if list.is_empty() {
                    return Err(invalid("marks", "no marks given"));
                }
                for m in list {
                    if !m.value.is_finite() {
                        return Err(invalid("marks", format!("mark {} must be finite", m.value)));
                    }
                    if !(m.weight >= 0.0 && m.weight.is_finite()) {
                        return Err(invalid("marks", format!("weight {} must be non-negative", m.weight)));
                    }
                }
                if list.iter().all(|m| m.weight == 0.0) {
                    return Err(invalid("marks", "all weights are zero"));
                }
                Ok(())
            }
            MarkMeasure::PowerLaw(p) => PowerLawMarks::new(p.lo, p.hi, p.scale, p.exponent).map(|_| ()),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            MarkMeasure::Discrete(list) => list.iter().map(|m| m.weight).sum(),
            MarkMeasure::PowerLaw(p) => p.total_mass(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, MarkMeasure::Discrete(_))
    }

    /// Marks carrying positive weight (discrete), or interior sample points
    /// of the density's interval.
    pub fn representative_marks(&self) -> Vec<Mark> {
        match self {
            MarkMeasure::Discrete(list) => list
                .iter()
                .enumerate()
                .filter(|(_, m)| m.weight > 0.0)
                .map(|(i, m)| Mark::indexed(m.value, i))
                .collect(),
            MarkMeasure::PowerLaw(p) => {
                let (a, b) = p.distance_range();
                let lo = if a > 0.0 { a } else { b.min(1.0) * 1e-3 };
                let hi = if b.is_finite() { b } else { a.max(1.0) * 1e3 };
                (1..=9)
                    .map(|k| {
                        let t = k as f64 / 10.0;
                        Mark::new(p.sign() * lo * (hi / lo).powf(t))
                    })
                    .collect()
            }
        }
    }
}

/// The Lévy measure as a function of the mark.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyField {
    Uniform(LevyMeasureSpec),
    PerMark(Vec<LevyMeasureSpec>),
    /// Symmetric stable with index `α(v)` and constant scale `c`.
    MultiStable { alpha: ParamFn, c: f64 },
}

/// Characteristics `(m, b, σ², ρ)` of the random measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMeasureSpec {
    pub marks: MarkMeasure,
    pub drift: ParamFn,
    pub gaussian_var: ParamFn,
    pub levy: LevyField,
}

impl RandomMeasureSpec {
    /// Single-mark measure with no drift and no Gaussian part.
    pub fn levy_driven(rho: LevyMeasureSpec) -> Self {
        Self {
            marks: MarkMeasure::point(0.0),
            drift: ParamFn::Constant(0.0),
            gaussian_var: ParamFn::Constant(0.0),
            levy: LevyField::Uniform(rho),
        }
    }

    pub fn with_marks(mut self, marks: MarkMeasure) -> Self {
        self.marks = marks;
        self
    }

    pub fn with_drift(mut self, drift: ParamFn) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_gaussian_var(mut self, var: ParamFn) -> Self {
        self.gaussian_var = var;
        self
    }

    pub fn rho(&self, mark: &Mark) -> Result<Cow<'_, LevyMeasureSpec>, LevyError> {
        match &self.levy {
            LevyField::Uniform(r) => Ok(Cow::Borrowed(r)),
            LevyField::PerMark(list) => mark
                .index
                .and_then(|i| list.get(i))
                .map(Cow::Borrowed)
                .ok_or_else(|| LevyError::MissingMarkParameter(mark.to_string())),
            LevyField::MultiStable { alpha, c } => {
                Ok(Cow::Owned(LevyMeasureSpec::stable(alpha.eval(mark)?, *c)?))
            }
        }
    }

    pub fn drift_at(&self, mark: &Mark) -> Result<f64, LevyError> {
        self.drift.eval(mark)
    }

    pub fn gaussian_var_at(&self, mark: &Mark) -> Result<f64, LevyError> {
        let v = self.gaussian_var.eval(mark)?;
        if v < 0.0 {
            return Err(invalid("gaussian_var", format!("σ² = {v} at {mark} is negative")));
        }
        Ok(v)
    }

    /// Structural checks, including the non-degeneracy condition on every
    /// representative mark.
    pub fn validate(&self) -> Result<(), LevyError> {
        self.marks.validate()?;
        if let (LevyField::PerMark(list), MarkMeasure::Discrete(marks)) = (&self.levy, &self.marks) {
            if list.len() != marks.len() {
                return Err(invalid(
                    "levy",
                    format!("{} per-mark measures for {} marks", list.len(), marks.len()),
                ));
            }
        }
        if matches!(self.levy, LevyField::PerMark(_)) && !self.marks.is_discrete() {
            return Err(invalid("levy", "per-mark measures need a discrete mark measure"));
        }
        for mark in self.marks.representative_marks() {
            let var = self.gaussian_var_at(&mark)?;
            let rho = self.rho(&mark)?;
            self.drift_at(&mark)?;
            if var == 0.0 && rho.is_zero() {
                return Err(LevyError::Deterministic(mark.to_string()));
            }
        }
        Ok(())
    }

    /// No drift and every `ρ_v` symmetric.
    pub fn is_symmetric(&self) -> bool {
        if !self.drift.is_zero() {
            return false;
        }
        match &self.levy {
            LevyField::Uniform(r) => r.is_symmetric(),
            LevyField::PerMark(list) => list.iter().all(|r| r.is_symmetric()),
            LevyField::MultiStable { .. } => true,
        }
    }

    /// `B(x, v) = x b(v) + ∫ (⟦xy⟧ − x⟦y⟧) ρ_v(dy)`.
    pub fn char_b(&self, x: f64, mark: &Mark) -> Result<f64, LevyError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let b = self.drift_at(mark)?;
        Ok(x * b + self.rho(mark)?.b_integral(x)?)
    }

    /// `K(x, v) = x² σ²(v) + ∫ ⟦xy⟧² ρ_v(dy)`.
    pub fn char_k(&self, x: f64, mark: &Mark) -> Result<f64, LevyError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(x * x * self.gaussian_var_at(mark)? + self.rho(mark)?.k_integral(x)?)
    }

    /// `∫_{−1}^{1} |x| ρ_v(dx) = ∞` or `σ²(v) > 0` at a single mark.
    pub fn invar_con_at(&self, mark: &Mark) -> Result<Condition, LevyError> {
        if self.gaussian_var_at(mark)? > 0.0 {
            return Ok(Condition::Satisfied);
        }
        Ok(self.rho(mark)?.small_jumps_infinite_variation())
    }

    /// `∫_{−1}^{1} |x| ρ_v(dx) = ∞` or `σ²(v) > 0` for m-a.e. `v`.
    pub fn invar_con(&self) -> Result<Condition, LevyError> {
        let mut out = Condition::Satisfied;
        for mark in self.marks.representative_marks() {
            match self.invar_con_at(&mark)? {
                Condition::Violated => return Ok(Condition::Violated),
                Condition::Unknown => out = Condition::Unknown,
                Condition::Satisfied => {}
            }
        }
        Ok(out)
    }

    /// True when `σ²` and `ρ` do not depend on the mark.
    pub fn field_is_mark_free(&self) -> bool {
        let levy_free = match &self.levy {
            LevyField::Uniform(_) => true,
            LevyField::PerMark(list) => list.windows(2).all(|w| w[0] == w[1]),
            LevyField::MultiStable { alpha, .. } => alpha.is_constant(),
        };
        levy_free && self.gaussian_var.is_constant()
    }

    /// `limsup_{u→∞}` of the tail ratio is finite for m-a.e. `v`.
    pub fn ratio_u0(&self) -> Result<Condition, LevyError> {
        match &self.levy {
            LevyField::MultiStable { alpha, .. } => {
                let (lo, _) = alpha.range(&self.marks)?;
                // For α(v) > 1 the ratio is the constant (2 − α)/(α − 1).
                Ok(if lo > 1.0 {
                    Condition::Satisfied
                } else if lo < 1.0 {
                    Condition::Violated
                } else {
                    Condition::Unknown
                })
            }
            _ => {
                let mut out = Condition::Satisfied;
                for mark in self.marks.representative_marks() {
                    match self.rho(&mark)?.ratio_u0() {
                        Condition::Violated => return Ok(Condition::Violated),
                        Condition::Unknown => out = Condition::Unknown,
                        Condition::Satisfied => {}
                    }
                }
                Ok(out)
            }
        }
    }

    /// `sup_v sup_{u>0}` of the tail ratio is finite.
    pub fn ratio_u00(&self) -> Result<Condition, LevyError> {
        match &self.levy {
            LevyField::MultiStable { alpha, .. } => {
                let (lo, _) = alpha.range(&self.marks)?;
                // sup_v (2 − α(v))/(α(v) − 1) < ∞ iff inf_v α(v) > 1.
                Ok(Condition::from_bool(lo > 1.0))
            }
            LevyField::Uniform(r) => Ok(r.ratio_bounded()),
            LevyField::PerMark(list) => {
                let mut out = Condition::Satisfied;
                let MarkMeasure::Discrete(marks) = &self.marks else {
                    return Ok(Condition::Unknown);
                };
                for (r, m) in list.iter().zip(marks) {
                    if m.weight == 0.0 {
                        continue;
                    }
                    match r.ratio_bounded() {
                        Condition::Violated => return Ok(Condition::Violated),
                        Condition::Unknown => out = Condition::Unknown,
                        Condition::Satisfied => {}
                    }
                }
                Ok(out)
            }
        }
    }
}
