//! Semimartingale criteria for `(kernel, random measure)` pairs.
//!
//! The general route evaluates the drift, Gaussian and jump integrals
//! (sufficiency) and the truncated, per-mark and integrated jump integrals
//! (necessity, under the infinite-variation hypothesis and the ratio
//! conditions). Closed forms cover the parametric families.

mod closed_form;
mod engine;
mod report;

use thiserror::Error;

use crate::kernels::{KernelError, KernelFamily, KernelSpec, MarkKernel};
use crate::levy_measure::{Condition, Growth, LevyError, Mark, MarkMeasure, Profile, RandomMeasureSpec};

pub use closed_form::{
    closed_form_fractional, closed_form_multistable, closed_form_stable, closed_form_supflp, closed_form_supou,
    closed_form_tempered, fractional_constant, fractional_constant_quadrature, multistable_partial_sums,
    stable_psi_constant,
};
pub use engine::{Evaluated, Undecided};
pub use report::{format_value, Assumptions, Basis, CriteriaReport, IntegralRecord, Method, Verdict, INTEGRAL_KEYS};

use engine::{mark_integral, time_endpoint_rule, time_integral, Certified, MarkEnd};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriteriaError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("process is not well defined: {0}")]
    WellDefinedness(String),
    #[error("random measure is deterministic: {0}")]
    NonDeterministic(String),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Outcome of a single condition: `Satisfied` means the condition holds.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub status: Condition,
    pub integral: IntegralRecord,
}

impl CheckOutcome {
    fn from_certified(c: Certified) -> Self {
        match c {
            Ok(e) => Self { status: Condition::from_bool(e.is_finite()), integral: e.record() },
            Err(Undecided(why)) => Self { status: Condition::Unknown, integral: IntegralRecord::undecided(why) },
        }
    }

    pub fn holds(&self) -> bool {
        self.status == Condition::Satisfied
    }

    pub fn fails(&self) -> bool {
        self.status == Condition::Violated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Necessity {
    Satisfied,
    Violated(&'static str),
    /// The infinite-variation hypothesis fails, so the necessary conditions say nothing.
    NotApplicable,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessaryOutcome {
    pub necessity: Necessity,
    pub invar_con: Condition,
    pub u0: Condition,
    pub u00: Condition,
    pub records: Vec<(&'static str, IntegralRecord)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FvOutcome {
    pub finite_variation: bool,
    pub driver: Condition,
    pub records: Vec<(&'static str, IntegralRecord)>,
}

fn section(kernel: &KernelSpec, mark: &Mark) -> Result<MarkKernel, Undecided> {
    Ok(kernel.at(mark)?)
}

/// `f(0, v)` is the same for every mark.
fn f_at_zero_mark_free(kernel: &KernelSpec) -> bool {
    !matches!(kernel.family, KernelFamily::Custom(_))
}

fn first_rho_growth(spec: &RandomMeasureSpec, profile: Profile) -> (Growth, Growth) {
    let marks = spec.marks.representative_marks();
    match marks.first().map(|m| spec.rho(m)) {
        Some(Ok(rho)) => rho.growth(profile),
        _ => (Growth::Unknown, Growth::Unknown),
    }
}

/// `∫_V |B(f(0, v), v)| m(dv) < ∞`.
pub fn check_drift(spec: &RandomMeasureSpec, kernel: &KernelSpec) -> CheckOutcome {
    if spec.is_symmetric() || matches!(kernel.family, KernelFamily::Fractional { .. }) {
        return CheckOutcome { status: Condition::Satisfied, integral: Evaluated::exact(0.0).record() };
    }
    let inner = |mark: &Mark| -> Certified {
        let x = section(kernel, mark)?.f_at_zero();
        let b = spec.char_b(x, mark)?;
        Ok(Evaluated::exact(b.abs()))
    };
    let free = spec.field_is_mark_free() && spec.drift.is_constant() && f_at_zero_mark_free(kernel);
    let endpoint = move |_: MarkEnd| free.then_some(0.0);
    CheckOutcome::from_certified(mark_integral(&spec.marks, &inner, &endpoint, free))
}

/// `∫_V ∫₀^∞ |ḟ(s, v)|² σ²(v) ds m(dv) < ∞`.
pub fn check_gaussian(spec: &RandomMeasureSpec, kernel: &KernelSpec) -> CheckOutcome {
    if spec.gaussian_var.is_zero() {
        return CheckOutcome { status: Condition::Satisfied, integral: Evaluated::exact(0.0).record() };
    }
    let square = (Growth::Power(2.0), Growth::Power(2.0));
    let inner = |mark: &Mark| -> Certified {
        let var = spec.gaussian_var_at(mark)?;
        if var == 0.0 {
            return Ok(Evaluated::exact(0.0));
        }
        let s = section(kernel, mark)?;
        if !s.is_absolutely_continuous() {
            return Ok(Evaluated::divergent(Method::ClosedForm, "σ² > 0 and f not absolutely continuous"));
        }
        time_integral(&s, |u| Ok(var * u * u), square, &[])
    };
    let endpoint = time_endpoint_rule(kernel, spec, square);
    let free = spec.field_is_mark_free() && kernel.is_mark_free();
    CheckOutcome::from_certified(mark_integral(&spec.marks, &inner, &endpoint, free))
}

/// `∫_V ∫₀^∞ G_v(|ḟ(s, v)|) ds` for a profile `G_v(u) = ∫ h(|x|, u) ρ_v(dx)`.
fn jump_integrand(spec: &RandomMeasureSpec, kernel: &KernelSpec, profile: Profile, mark: &Mark) -> Certified {
    let s = section(kernel, mark)?;
    if !s.is_absolutely_continuous() {
        return Ok(Evaluated::divergent(Method::ClosedForm, "f not absolutely continuous"));
    }
    let rho = spec.rho(mark)?;
    let growth = rho.growth(profile);
    time_integral(&s, |u| rho.profile_integral(profile, u), growth, &[])
}

/// `∫_V ∫₀^∞ ∫ (|xḟ| ∧ |xḟ|²) ρ_v(dx) ds m(dv) < ∞`.
pub fn check_sufficient(spec: &RandomMeasureSpec, kernel: &KernelSpec) -> CheckOutcome {
    let inner = |mark: &Mark| jump_integrand(spec, kernel, Profile::Psi, mark);
    let endpoint = time_endpoint_rule(kernel, spec, first_rho_growth(spec, Profile::Psi));
    let free = spec.field_is_mark_free() && kernel.is_mark_free();
    CheckOutcome::from_certified(mark_integral(&spec.marks, &inner, &endpoint, free))
}

/// Largest value of a per-mark integral over marks of positive mass.
fn per_mark(marks: &MarkMeasure, inner: &dyn Fn(&Mark) -> Certified) -> Certified {
    let mut worst = Evaluated::exact(0.0);
    let candidates: Vec<Mark> = match marks {
        MarkMeasure::Discrete(list) => list
            .iter()
            .enumerate()
            .filter(|(_, w)| w.weight > 0.0)
            .map(|(i, w)| Mark::indexed(w.value, i))
            .collect(),
        MarkMeasure::PowerLaw(_) => marks.representative_marks(),
    };
    for mark in candidates {
        let e = inner(&mark)?;
        if !e.is_finite() {
            if !marks.is_discrete() {
                let near = [mark.value * (1.0 - 1e-3), mark.value * (1.0 + 1e-3)];
                if !near.iter().all(|v| inner(&Mark::new(*v)).is_ok_and(|e| !e.is_finite())) {
                    continue;
                }
            }
            let why = e.note.clone().unwrap_or_default();
            return Ok(Evaluated::divergent(e.method, format!("infinite at mark v={} ({why})", mark.value)));
        }
        if e.value > worst.value || worst.method == Method::ClosedForm {
            worst = Evaluated { note: Some("maximum over marks".into()), ..e };
        }
    }
    Ok(worst)
}

/// Necessary conditions under the infinite-variation hypothesis.
pub fn check_necessary(spec: &RandomMeasureSpec, kernel: &KernelSpec) -> NecessaryOutcome {
    let invar_con = spec.invar_con().unwrap_or(Condition::Unknown);
    let u0 = spec.ratio_u0().unwrap_or(Condition::Unknown);
    let u00 = spec.ratio_u00().unwrap_or(Condition::Unknown);
    let mut out = NecessaryOutcome { necessity: Necessity::Unknown, invar_con, u0, u00, records: Vec::new() };
    match invar_con {
        Condition::Violated => {
            out.necessity = Necessity::NotApplicable;
            return out;
        }
        Condition::Unknown => return out,
        Condition::Satisfied => {}
    }

    let mut abs_cont = Condition::Satisfied;
    for mark in spec.marks.representative_marks() {
        match kernel.at(&mark) {
            Ok(s) if !s.is_absolutely_continuous() => abs_cont = Condition::Violated,
            Ok(_) => {}
            Err(_) => abs_cont = Condition::Unknown,
        }
    }
    out.records.push(("abs_cont", IntegralRecord::flag(abs_cont)));
    if abs_cont == Condition::Violated {
        out.necessity = Necessity::Violated("abs_cont");
        return out;
    }

    let mut checks: Vec<(&'static str, CheckOutcome)> = Vec::new();
    checks.push(("int_1", check_gaussian(spec, kernel)));
    if u0 == Condition::Satisfied {
        let inner = |mark: &Mark| jump_integrand(spec, kernel, Profile::Psi, mark);
        checks.push(("fdot_int", CheckOutcome::from_certified(per_mark(&spec.marks, &inner))));
    }
    if u00 == Condition::Satisfied {
        checks.push(("cf", check_sufficient(spec, kernel)));
    }
    let inner = |mark: &Mark| jump_integrand(spec, kernel, Profile::PsiTruncated, mark);
    checks.push(("trunc_case", CheckOutcome::from_certified(per_mark(&spec.marks, &inner))));

    let mut violated = None;
    let mut unknown = abs_cont == Condition::Unknown;
    for (name, c) in &checks {
        match c.status {
            Condition::Violated if violated.is_none() => violated = Some(*name),
            Condition::Unknown => unknown = true,
            _ => {}
        }
    }
    out.records.extend(checks.into_iter().map(|(n, c)| (n, c.integral)));
    out.necessity = match (violated, unknown) {
        (Some(name), _) => Necessity::Violated(name),
        (None, true) => Necessity::Unknown,
        (None, false) => Necessity::Satisfied,
    };
    out
}

/// Finite-variation route: the driver has paths of finite variation and the
/// kernel contributes finite total variation.
pub fn closed_form_fv(kernel: &KernelSpec, spec: &RandomMeasureSpec) -> FvOutcome {
    let mut driver = Condition::Satisfied;
    for mark in spec.marks.representative_marks() {
        let here = match (spec.gaussian_var_at(&mark), spec.rho(&mark)) {
            (Ok(var), Ok(rho)) => {
                if var > 0.0 {
                    Condition::Violated
                } else {
                    rho.finite_variation()
                }
            }
            _ => Condition::Unknown,
        };
        match here {
            Condition::Violated => {
                driver = Condition::Violated;
                break;
            }
            Condition::Unknown => driver = Condition::Unknown,
            Condition::Satisfied => {}
        }
    }
    let mut records = vec![("fv_driver", IntegralRecord::flag(driver))];
    if driver != Condition::Satisfied {
        return FvOutcome { finite_variation: false, driver, records };
    }

    let fv = Profile::FiniteVariation;
    let jumps = |mark: &Mark| -> Certified {
        let x = section(kernel, mark)?.f_at_zero();
        Ok(Evaluated::exact(spec.rho(mark)?.profile_integral(fv, x)?))
    };
    let free = spec.field_is_mark_free() && f_at_zero_mark_free(kernel);
    let endpoint = move |_: MarkEnd| free.then_some(0.0);
    let fv_m = CheckOutcome::from_certified(mark_integral(&spec.marks, &jumps, &endpoint, free));

    let shifted = |mark: &Mark| -> Certified {
        let s = section(kernel, mark)?;
        if matches!(kernel.family, KernelFamily::Box { .. }) {
            // g is piecewise constant with one jump.
            return Ok(Evaluated::exact(0.0));
        }
        jump_integrand(spec, kernel, fv, mark).map(|e| if s.fdot_vanishes() { Evaluated::exact(0.0) } else { e })
    };
    let endpoint = time_endpoint_rule(kernel, spec, first_rho_growth(spec, fv));
    let free = spec.field_is_mark_free() && kernel.is_mark_free();
    let fv_a = CheckOutcome::from_certified(mark_integral(&spec.marks, &shifted, &endpoint, free));

    let finite_variation = fv_m.holds() && fv_a.holds();
    records.push(("fv_m", fv_m.integral));
    records.push(("fv_a", fv_a.integral));
    FvOutcome { finite_variation, driver, records }
}

/// General route: sufficiency, then necessity, then the finite-variation
/// closed form when the necessity hypothesis fails.
pub fn verdict(spec: &RandomMeasureSpec, kernel: &KernelSpec) -> CriteriaReport {
    let mut rep = CriteriaReport::new("general");
    let drift = check_drift(spec, kernel);
    let gauss = check_gaussian(spec, kernel);
    let suff = check_sufficient(spec, kernel);
    rep.assumptions.drift = drift.status;
    let sufficient = drift.holds() && gauss.holds() && suff.holds();
    rep.record("drift", drift.integral.clone());
    rep.record("int_1", gauss.integral.clone());
    rep.record("cf", suff.integral.clone());

    let nec = check_necessary(spec, kernel);
    rep.assumptions.invar_con = nec.invar_con;
    rep.assumptions.u0 = nec.u0;
    rep.assumptions.u00 = nec.u00;
    for (k, r) in nec.records {
        // The necessity route re-evaluates `int_1` and `cf`; keep one copy.
        rep.integrals.entry(k).or_insert(r);
    }

    if nec.necessity == Necessity::NotApplicable {
        let fv = closed_form_fv(kernel, spec);
        for (k, r) in fv.records {
            rep.record(k, r);
        }
        if fv.finite_variation {
            rep.decide(Verdict::Semimartingale, Basis::ClosedForm("fv"), None);
            return rep;
        }
    }
    if sufficient {
        rep.decide(Verdict::Semimartingale, Basis::SufficientConditions, None);
        return rep;
    }
    if let Necessity::Violated(name) = nec.necessity {
        rep.decide(Verdict::NotSemimartingale, Basis::NecessityViolation, Some(name));
        return rep;
    }
    let gap = match nec.necessity {
        Necessity::NotApplicable => {
            "σ² = 0 and small jumps of finite variation on a set of marks: necessity does not apply".to_string()
        }
        Necessity::Unknown => "necessary conditions could not be certified (undeclared exponents)".to_string(),
        _ => {
            let failing: Vec<&str> = [("drift", &drift), ("int_1", &gauss), ("cf", &suff)]
                .iter()
                .filter(|(_, c)| !c.holds())
                .map(|(n, _)| *n)
                .collect();
            format!(
                "{} not certified finite, and no necessary condition is violated (u0={}, u00={})",
                failing.join(", "),
                nec.u0,
                nec.u00
            )
        }
    };
    rep.notes.push(gap);
    rep.decide(Verdict::Inconclusive, Basis::Undecidable, None);
    rep
}

#[cfg(test)]
mod tests;
