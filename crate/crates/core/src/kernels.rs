//! Moving-average kernels `f(t, v)`, `f₀(t, v)`, their derivatives and the
//! shifted kernel `g(s, v) = f(s, v) − f(0, v) 1{s ≥ 0}`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::levy_measure::{LevyError, Mark, MarkMeasure, ParamFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel `{0}` is not absolutely continuous on [0, ∞)")]
    NotAbsolutelyContinuous(String),
    #[error("kernel `{0}` has no derivative")]
    NoDerivative(String),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Levy(#[from] LevyError),
}

/// Declared behaviour of `ḟ(t, v)` at `t → 0⁺` or `t → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptote {
    /// `|ḟ(t)| ≍ t^e`.
    Power(f64),
    /// `|ḟ(t)|` decays exponentially (only meaningful at infinity).
    Exponential,
    /// `ḟ ≡ 0` near this end.
    Zero,
    Undeclared,
}

pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied kernel with analytic `f` and optional `ḟ`, as functions of `(t, v)`.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub f: KernelFn,
    pub fdot: Option<KernelFn>,
    pub origin: Asymptote,
    pub infinity: Asymptote,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("origin", &self.origin)
            .field("infinity", &self.infinity)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum KernelFamily {
    /// `f(t, v) = t₊^{γ(v)}`.
    Fractional { gamma: ParamFn },
    /// `f(t, v) = e^{vt} 1{t ≥ 0}`, `v < 0`.
    ExponentialOu,
    /// `f = 1_{[0, ∞)}`.
    Step,
    /// `f = 1_{[0, w)}`.
    Box { width: f64 },
    Custom(CustomKernel),
}

/// Choice of `f₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F0Mode {
    /// `f₀ = f`: stationary increments.
    SameAsF,
    /// `f₀ = 0`: a plain moving average.
    Zero,
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub f0: F0Mode,
    /// Overall multiplicative constant.
    pub scale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        Self { family, f0: F0Mode::SameAsF, scale: 1.0 }
    }

    pub fn fractional(gamma: f64) -> Self {
        Self::new(KernelFamily::Fractional { gamma: ParamFn::Constant(gamma) })
    }

    pub fn ou() -> Self {
        Self::new(KernelFamily::ExponentialOu)
    }

    pub fn step() -> Self {
        Self::new(KernelFamily::Step)
    }

    pub fn boxcar(width: f64) -> Self {
        Self::new(KernelFamily::Box { width })
    }

    pub fn with_f0(mut self, f0: F0Mode) -> Self {
        self.f0 = f0;
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    pub fn name(&self) -> &str {
        match &self.family {
            KernelFamily::Fractional { .. } => "fractional",
            KernelFamily::ExponentialOu => "ou",
            KernelFamily::Step => "step",
            KernelFamily::Box { .. } => "box",
            KernelFamily::Custom(c) => &c.name,
        }
    }

    /// Checks parameters against every mark in the support of `marks`.
    pub fn validate(&self, marks: &MarkMeasure) -> Result<(), KernelError> {
        if !self.scale.is_finite() {
            return Err(KernelError::InvalidParameter(format!("scale {} must be finite", self.scale)));
        }
        match &self.family {
            KernelFamily::Fractional { gamma } => {
                let (lo, _) = gamma.range(marks)?;
                if !(lo > 0.0) {
                    return Err(KernelError::InvalidParameter(format!("fractional γ must be positive, got {lo}")));
                }
            }
            KernelFamily::ExponentialOu => {
                let sup = match marks {
                    MarkMeasure::Discrete(list) => {
                        list.iter().filter(|m| m.weight > 0.0).map(|m| m.value).fold(f64::NEG_INFINITY, f64::max)
                    }
                    MarkMeasure::PowerLaw(p) => p.hi,
                };
                let open_at_zero = matches!(marks, MarkMeasure::PowerLaw(p) if p.hi == 0.0);
                if !(sup < 0.0 || open_at_zero) {
                    return Err(KernelError::InvalidParameter("OU kernel needs marks v < 0".into()));
                }
            }
            KernelFamily::Box { width } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(KernelError::InvalidParameter(format!("box width {width} must be positive")));
                }
            }
            KernelFamily::Step | KernelFamily::Custom(_) => {}
        }
        Ok(())
    }

    /// The kernel section `t ↦ f(t, v)` at a fixed mark.
    pub fn at(&self, mark: &Mark) -> Result<MarkKernel, KernelError> {
        let shape = match &self.family {
            KernelFamily::Fractional { gamma } => Shape::Fractional(gamma.eval(mark)?),
            KernelFamily::ExponentialOu => Shape::Ou(mark.value),
            KernelFamily::Step => Shape::Step,
            KernelFamily::Box { width } => Shape::Box(*width),
            KernelFamily::Custom(c) => Shape::Custom(c.clone(), mark.value),
        };
        Ok(MarkKernel { shape, same_f0: self.f0 == F0Mode::SameAsF, scale: self.scale })
    }

    pub fn eval_f(&self, t: f64, mark: &Mark) -> Result<f64, KernelError> {
        Ok(self.at(mark)?.f(t))
    }

    pub fn eval_fdot(&self, t: f64, mark: &Mark) -> Result<f64, KernelError> {
        self.at(mark)?.fdot(t)
    }

    pub fn eval_g(&self, s: f64, mark: &Mark) -> Result<f64, KernelError> {
        Ok(self.at(mark)?.g(s))
    }

    /// True when `f` does not depend on the mark.
    pub fn is_mark_free(&self) -> bool {
        match &self.family {
            KernelFamily::Fractional { gamma } => gamma.is_constant(),
            KernelFamily::ExponentialOu | KernelFamily::Custom(_) => false,
            KernelFamily::Step | KernelFamily::Box { .. } => true,
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Fractional(f64),
    Ou(f64),
    Step,
    Box(f64),
    Custom(CustomKernel, f64),
}

/// A kernel section at a fixed mark.
#[derive(Debug, Clone)]
pub struct MarkKernel {
    shape: Shape,
    same_f0: bool,
    scale: f64,
}

impl MarkKernel {
    fn name(&self) -> String {
        match &self.shape {
            Shape::Fractional(g) => format!("fractional(γ={g})"),
            Shape::Ou(v) => format!("ou(v={v})"),
            Shape::Step => "step".into(),
            Shape::Box(w) => format!("box(w={w})"),
            Shape::Custom(c, _) => c.name.clone(),
        }
    }

    /// `f(t)`, zero for `t < 0`.
    pub fn f(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.scale
            * match &self.shape {
                Shape::Fractional(g) => {
                    if t == 0.0 {
                        0.0
                    } else {
                        t.powf(*g)
                    }
                }
                Shape::Ou(v) => (v * t).exp(),
                Shape::Step => 1.0,
                Shape::Box(w) => {
                    if t < *w {
                        1.0
                    } else {
                        0.0
                    }
                }
                Shape::Custom(c, v) => (c.f)(t, *v),
            }
    }

    pub fn f0(&self, t: f64) -> f64 {
        if self.same_f0 {
            self.f(t)
        } else {
            0.0
        }
    }

    /// `φ(t, s) = f(t − s) − f₀(−s)`.
    pub fn phi(&self, t: f64, s: f64) -> f64 {
        self.f(t - s) - self.f0(-s)
    }

    pub fn f_at_zero(&self) -> f64 {
        self.f(0.0)
    }

    /// `g(s) = f(s) − f(0) 1{s ≥ 0}`.
    pub fn g(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        self.f(s) - self.f_at_zero()
    }

    /// `ḟ(t)` for `t > 0`.
    pub fn fdot(&self, t: f64) -> Result<f64, KernelError> {
        if t <= 0.0 {
            return Err(KernelError::InvalidParameter(format!("ḟ needs t > 0, got {t}")));
        }
        let d = match &self.shape {
            Shape::Fractional(g) => g * t.powf(g - 1.0),
            Shape::Ou(v) => v * (v * t).exp(),
            Shape::Step => 0.0,
            Shape::Box(_) => return Err(KernelError::NotAbsolutelyContinuous(self.name())),
            Shape::Custom(c, v) => match &c.fdot {
                Some(fd) => fd(t, *v),
                None => return Err(KernelError::NoDerivative(self.name())),
            },
        };
        Ok(self.scale * d)
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        match &self.shape {
            Shape::Box(_) => false,
            Shape::Custom(c, _) => c.fdot.is_some(),
            _ => true,
        }
    }

    /// `ḟ ≡ 0` on `(0, ∞)`.
    pub fn fdot_vanishes(&self) -> bool {
        matches!(self.shape, Shape::Step)
    }

    /// Behaviour of `|ḟ|` as `t → 0⁺`.
    pub fn origin_asymptote(&self) -> Asymptote {
        match &self.shape {
            Shape::Fractional(g) => Asymptote::Power(g - 1.0),
            Shape::Ou(_) => Asymptote::Power(0.0),
            Shape::Step => Asymptote::Zero,
            Shape::Box(_) => Asymptote::Undeclared,
            Shape::Custom(c, _) => c.origin,
        }
    }

    /// Behaviour of `|ḟ|` as `t → ∞`.
    pub fn infinity_asymptote(&self) -> Asymptote {
        match &self.shape {
            Shape::Fractional(g) => Asymptote::Power(g - 1.0),
            Shape::Ou(v) if *v < 0.0 => Asymptote::Exponential,
            Shape::Ou(_) => Asymptote::Power(0.0),
            Shape::Step => Asymptote::Zero,
            Shape::Box(_) => Asymptote::Undeclared,
            Shape::Custom(c, _) => c.infinity,
        }
    }

    /// Natural time scales of the section, used to split quadratures.
    pub fn time_scales(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Ou(v) if *v != 0.0 => vec![1.0 / v.abs()],
            Shape::Box(w) => vec![*w],
            _ => vec![1.0],
        }
    }

    /// Fractional exponent, when the section is fractional.
    pub fn fractional_gamma(&self) -> Option<f64> {
        match self.shape {
            Shape::Fractional(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self.shape, Shape::Step)
    }
}
