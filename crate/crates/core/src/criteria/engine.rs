//! Exponent-certified evaluation of the time and mark integrals behind the
//! criteria. An integral is declared finite only after the endpoint
//! exponents certify it; quadrature then supplies the value.

use std::cell::RefCell;

use crate::kernels::{Asymptote, KernelFamily, KernelSpec, MarkKernel};
use crate::levy_measure::{Growth, LevyError, Mark, MarkMeasure, RandomMeasureSpec};
use crate::quad::{self, OriginBehaviour, TailBehaviour, Tolerance};

use super::report::{IntegralRecord, Method};

const TIME_TOL: Tolerance = Tolerance::new(1e-14, 1e-7);
const MARK_TOL: Tolerance = Tolerance::new(1e-14, 1e-6);

/// A certified integral: `value` is `+∞` when an endpoint diverges.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub method: Method,
    pub note: Option<String>,
}

impl Evaluated {
    pub fn exact(value: f64) -> Self {
        Self { value, method: Method::ClosedForm, note: None }
    }

    pub fn divergent(method: Method, note: impl Into<String>) -> Self {
        Self { value: f64::INFINITY, method, note: Some(note.into()) }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn record(&self) -> IntegralRecord {
        IntegralRecord { value: self.value, method: self.method, note: self.note.clone() }
    }
}

/// Exponents or inputs are missing, so finiteness cannot be certified.
#[derive(Debug, Clone, PartialEq)]
pub struct Undecided(pub String);

impl From<LevyError> for Undecided {
    fn from(e: LevyError) -> Self {
        Undecided(e.to_string())
    }
}

impl From<crate::kernels::KernelError> for Undecided {
    fn from(e: crate::kernels::KernelError) -> Self {
        Undecided(e.to_string())
    }
}

pub type Certified = Result<Evaluated, Undecided>;

/// `∫₀^∞ G(|ḟ(t)|) dt` for a section with absolutely continuous `f`.
///
/// `growth` gives the power of `G(u)` as `u → 0` and `u → ∞`.
pub fn time_integral<G>(section: &MarkKernel, g: G, growth: (Growth, Growth), extra_breaks: &[f64]) -> Certified
where
    G: Fn(f64) -> Result<f64, LevyError>,
{
    if !section.is_absolutely_continuous() {
        return Err(Undecided("kernel is not absolutely continuous".into()));
    }
    if section.fdot_vanishes() {
        return Ok(Evaluated::exact(0.0));
    }
    let (g0, g_inf) = match growth {
        (Growth::Zero, _) | (_, Growth::Zero) => return Ok(Evaluated::exact(0.0)),
        (Growth::Infinite, _) | (_, Growth::Infinite) => {
            return Ok(Evaluated::divergent(Method::ClosedForm, "x-integral diverges"))
        }
        (Growth::Power(a), Growth::Power(b)) => (a, b),
        _ => return Err(Undecided("Lévy exponents undeclared".into())),
    };
    let method = Method::ExponentQuadrature;
    let q0 = match section.origin_asymptote() {
        Asymptote::Power(e) if e < 0.0 => e * g_inf,
        Asymptote::Power(e) => e * g0,
        Asymptote::Zero | Asymptote::Exponential => 0.0,
        Asymptote::Undeclared => return Err(Undecided("ḟ undeclared at t → 0".into())),
    };
    if q0 <= -1.0 {
        return Ok(Evaluated::divergent(method, format!("diverges at t → 0 (exponent {q0:.4})")));
    }
    let tail = match section.infinity_asymptote() {
        Asymptote::Power(e) if e < 0.0 => {
            let q = e * g0;
            if q >= -1.0 {
                return Ok(Evaluated::divergent(method, format!("diverges at t → ∞ (exponent {q:.4})")));
            }
            TailBehaviour::Power(q)
        }
        Asymptote::Power(_) => {
            return Ok(Evaluated::divergent(method, "diverges at t → ∞ (ḟ does not vanish)"))
        }
        Asymptote::Exponential | Asymptote::Zero => TailBehaviour::Exponential,
        Asymptote::Undeclared => return Err(Undecided("ḟ undeclared at t → ∞".into())),
    };
    let failure: RefCell<Option<String>> = RefCell::new(None);
    let integrand = |t: f64| -> f64 {
        let d = match section.fdot(t) {
            Ok(d) => d.abs(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e.to_string());
                return 0.0;
            }
        };
        if d == 0.0 {
            return 0.0;
        }
        match g(d) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e.to_string());
                0.0
            }
        }
    };
    let mut breaks = section.time_scales();
    breaks.extend_from_slice(extra_breaks);
    breaks.retain(|b| b.is_finite() && *b > 0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let r = quad::half_line(integrand, &breaks, OriginBehaviour::Power(q0), tail, TIME_TOL);
    if let Some(e) = failure.into_inner() {
        return Err(Undecided(e));
    }
    Ok(Evaluated {
        value: r.value,
        method,
        note: (!r.converged).then(|| "quadrature tolerance not reached".to_string()),
    })
}

/// End of the mark range in the distance variable `|v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkEnd {
    Zero,
    Infinity,
}

/// `∫_V I(v) m(dv)`.
///
/// On density marks, `endpoint` gives the power of `I` in `|v|` at `|v| → 0`
/// and `|v| → ∞`; finite nonzero ends only need `I` finite there.
pub fn mark_integral(
    marks: &MarkMeasure,
    inner: &dyn Fn(&Mark) -> Certified,
    endpoint: &dyn Fn(MarkEnd) -> Option<f64>,
    mark_free: bool,
) -> Certified {
    match marks {
        MarkMeasure::Discrete(list) => {
            let mut total = 0.0;
            let mut method = Method::ClosedForm;
            let mut note = None;
            for (i, wm) in list.iter().enumerate() {
                if wm.weight == 0.0 {
                    continue;
                }
                let e = inner(&Mark::indexed(wm.value, i))?;
                if e.method == Method::ExponentQuadrature {
                    method = Method::ExponentQuadrature;
                }
                if !e.is_finite() {
                    let why = e.note.unwrap_or_default();
                    return Ok(Evaluated::divergent(e.method, format!("infinite at mark v={} ({why})", wm.value)));
                }
                if e.note.is_some() {
                    note = e.note;
                }
                total += wm.weight * e.value;
            }
            Ok(Evaluated { value: total, method, note })
        }
        MarkMeasure::PowerLaw(p) => {
            let reps = marks.representative_marks();
            if mark_free {
                let e = inner(&reps[0])?;
                if !e.is_finite() || e.value == 0.0 {
                    return Ok(e);
                }
                let mass = p.total_mass();
                if mass.is_infinite() {
                    return Ok(Evaluated::divergent(e.method, "infinite mark mass"));
                }
                return Ok(Evaluated { value: e.value * mass, ..e });
            }
            for mark in &reps {
                let e = inner(mark)?;
                if !e.is_finite() {
                    // Divergence on a neighbourhood has positive m-mass.
                    let near = [mark.value * (1.0 - 1e-3), mark.value * (1.0 + 1e-3)];
                    let mut all = true;
                    for v in near {
                        if inner(&Mark::new(v))?.is_finite() {
                            all = false;
                        }
                    }
                    if all {
                        return Ok(Evaluated::divergent(
                            e.method,
                            format!("infinite near mark v={} ({})", mark.value, e.note.unwrap_or_default()),
                        ));
                    }
                }
            }
            let (a, b) = p.distance_range();
            let sign = p.sign();
            let q = p.exponent;
            let origin = if a == 0.0 {
                let Some(e) = endpoint(MarkEnd::Zero) else {
                    return Err(Undecided("mark integrand exponent at |v| → 0 unknown".into()));
                };
                if e + q <= -1.0 {
                    return Ok(Evaluated::divergent(
                        Method::ExponentQuadrature,
                        format!("diverges at |v| → 0 (exponent {:.4})", e + q),
                    ));
                }
                OriginBehaviour::Power(e + q)
            } else {
                check_finite_end(inner, sign * a)?;
                OriginBehaviour::Power(0.0)
            };
            let tail = if b.is_infinite() {
                let Some(e) = endpoint(MarkEnd::Infinity) else {
                    return Err(Undecided("mark integrand exponent at |v| → ∞ unknown".into()));
                };
                if e + q >= -1.0 {
                    return Ok(Evaluated::divergent(
                        Method::ExponentQuadrature,
                        format!("diverges at |v| → ∞ (exponent {:.4})", e + q),
                    ));
                }
                TailBehaviour::Power(e + q)
            } else {
                check_finite_end(inner, sign * b)?;
                TailBehaviour::Exponential
            };
            let failure: RefCell<Option<Undecided>> = RefCell::new(None);
            let integrand = |y: f64| -> f64 {
                if y <= 0.0 {
                    return 0.0;
                }
                match inner(&Mark::new(sign * y)) {
                    Ok(e) => e.value * p.scale * y.powf(q),
                    Err(u) => {
                        failure.borrow_mut().get_or_insert(u);
                        0.0
                    }
                }
            };
            let r = quad::interval(integrand, a, b, origin, tail, MARK_TOL);
            if let Some(u) = failure.into_inner() {
                return Err(u);
            }
            if !r.value.is_finite() {
                return Ok(Evaluated::divergent(Method::ExponentQuadrature, "infinite inside the mark range"));
            }
            Ok(Evaluated {
                value: r.value,
                method: Method::ExponentQuadrature,
                note: Some("m-a.e. checked on sampled marks".into()),
            })
        }
    }
}

fn check_finite_end(inner: &dyn Fn(&Mark) -> Certified, v: f64) -> Result<(), Undecided> {
    match inner(&Mark::new(v)) {
        Ok(e) if e.is_finite() => Ok(()),
        _ => Err(Undecided(format!("mark integrand not finite at the end v={v}"))),
    }
}

/// Power of `v ↦ ∫₀^∞ G(|ḟ(t, v)|) dt` in `|v|` at the ends of the mark
/// range, when the kernel and field allow it to be read off.
///
/// For `ḟ = v e^{vt}` the inner integral is `|v|⁻¹ ∫₀^{|v|} G(w)/w dw`,
/// which behaves like `|v|^{g − 1}` with `g` the growth of `G` at that end.
pub fn time_endpoint_rule(
    kernel: &KernelSpec,
    spec: &RandomMeasureSpec,
    growth: (Growth, Growth),
) -> impl Fn(MarkEnd) -> Option<f64> {
    let field_free = spec.field_is_mark_free();
    let kernel_free = kernel.is_mark_free();
    let ou = matches!(kernel.family, KernelFamily::ExponentialOu);
    move |end| {
        if !field_free {
            return None;
        }
        if kernel_free {
            return Some(0.0);
        }
        if !ou {
            return None;
        }
        let g = match (end, growth) {
            (MarkEnd::Zero, (Growth::Power(g), _)) => g,
            (MarkEnd::Infinity, (_, Growth::Power(g))) => g,
            _ => return None,
        };
        Some(g - 1.0)
    }
}
