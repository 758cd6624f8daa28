//! Verdict reports and their flat record form.

use std::collections::BTreeMap;
use std::fmt;

use crate::levy_measure::Condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Semimartingale,
    NotSemimartingale,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Semimartingale => "Semimartingale",
            Verdict::NotSemimartingale => "NotSemimartingale",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Basis {
    SufficientConditions,
    NecessityViolation,
    ClosedForm(&'static str),
    Undecidable,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::SufficientConditions => f.write_str("SufficientConditions"),
            Basis::NecessityViolation => f.write_str("NecessityViolation"),
            Basis::ClosedForm(name) => write!(f, "ClosedForm({name})"),
            Basis::Undecidable => f.write_str("Undecidable"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    ExponentQuadrature,
    Undecided,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::ExponentQuadrature => "exponent+quadrature",
            Method::Undecided => "undecided",
        }
    }
}

/// One named integral. `value` is `+∞` for a certified divergence and NaN
/// when finiteness could not be decided.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralRecord {
    pub value: f64,
    pub method: Method,
    pub note: Option<String>,
}

impl IntegralRecord {
    pub fn flag(c: Condition) -> Self {
        let value = match c {
            Condition::Satisfied => 1.0,
            Condition::Violated => 0.0,
            Condition::Unknown => f64::NAN,
        };
        let method = if c == Condition::Unknown { Method::Undecided } else { Method::ClosedForm };
        Self { value, method, note: None }
    }

    pub fn undecided(note: impl Into<String>) -> Self {
        Self { value: f64::NAN, method: Method::Undecided, note: Some(note.into()) }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assumptions {
    pub drift: Condition,
    pub invar_con: Condition,
    pub u0: Condition,
    pub u00: Condition,
}

impl Default for Assumptions {
    fn default() -> Self {
        Self {
            drift: Condition::Unknown,
            invar_con: Condition::Unknown,
            u0: Condition::Unknown,
            u00: Condition::Unknown,
        }
    }
}

/// Named integrals, in column order.
pub const INTEGRAL_KEYS: &[&str] = &[
    "drift",
    "int_1",
    "cf",
    "abs_cont",
    "trunc_case",
    "fdot_int",
    "fv_driver",
    "fv_m",
    "fv_a",
    "moment",
    "fractional_c",
    "stable_eq",
    "temp_eq",
    "supou_welldef",
    "supou_eq",
    "multistable_eq",
    "supflp_nece",
    "supflp_eq",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaReport {
    pub route: &'static str,
    pub verdict: Verdict,
    pub basis: Basis,
    /// The condition whose violation or failure decided the verdict.
    pub violated: Option<String>,
    pub integrals: BTreeMap<&'static str, IntegralRecord>,
    pub assumptions: Assumptions,
    pub notes: Vec<String>,
}

impl CriteriaReport {
    pub fn new(route: &'static str) -> Self {
        Self {
            route,
            verdict: Verdict::Inconclusive,
            basis: Basis::Undecidable,
            violated: None,
            integrals: BTreeMap::new(),
            assumptions: Assumptions::default(),
            notes: Vec::new(),
        }
    }

    pub fn record(&mut self, key: &'static str, r: IntegralRecord) {
        debug_assert!(INTEGRAL_KEYS.contains(&key), "unknown key {key}");
        self.integrals.insert(key, r);
    }

    pub fn get(&self, key: &str) -> Option<&IntegralRecord> {
        self.integrals.get(key)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.get(key).map(|r| r.value)
    }

    pub fn decide(&mut self, verdict: Verdict, basis: Basis, violated: Option<&str>) {
        self.verdict = verdict;
        self.basis = basis;
        self.violated = violated.map(str::to_string);
    }

    pub fn columns() -> Vec<String> {
        let mut cols: Vec<String> = ["route", "verdict", "basis", "violated"].iter().map(|s| s.to_string()).collect();
        for k in ["drift", "invar_con", "u0", "u00"] {
            cols.push(format!("assume_{k}"));
        }
        for k in INTEGRAL_KEYS {
            cols.push(k.to_string());
            cols.push(format!("{k}_method"));
        }
        cols
    }

    /// Values aligned with [`CriteriaReport::columns`]. Missing integrals are empty.
    pub fn row(&self) -> Vec<String> {
        let mut row = vec![
            self.route.to_string(),
            self.verdict.to_string(),
            self.basis.to_string(),
            self.violated.clone().unwrap_or_default(),
        ];
        let a = self.assumptions;
        for c in [a.drift, a.invar_con, a.u0, a.u00] {
            row.push(c.as_str().to_string());
        }
        for k in INTEGRAL_KEYS {
            match self.integrals.get(k) {
                Some(r) => {
                    row.push(format_value(r.value));
                    row.push(r.method.as_str().to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        row
    }
}

pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:e}")
    }
}

impl fmt::Display for CriteriaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "route: {}", self.route)?;
        writeln!(f, "verdict: {}", self.verdict)?;
        writeln!(f, "basis: {}", self.basis)?;
        if let Some(v) = &self.violated {
            writeln!(f, "violated: {v}")?;
        }
        let a = self.assumptions;
        writeln!(
            f,
            "assumptions: drift={} invar_con={} u0={} u00={}",
            a.drift, a.invar_con, a.u0, a.u00
        )?;
        for k in INTEGRAL_KEYS {
            if let Some(r) = self.integrals.get(k) {
                write!(f, "{k} = {} [{}]", format_value(r.value), r.method.as_str())?;
                if let Some(n) = &r.note {
                    write!(f, "  # {n}")?;
                }
                writeln!(f)?;
            }
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}
