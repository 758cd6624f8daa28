//! TOML instance configuration and its translation into library types.

use serde::{Deserialize, Serialize};

use crate::kernels::{F0Mode, KernelFamily, KernelSpec};
use crate::levy_measure::{
    Atom, Exponent, LevyField, LevyMeasureSpec, MarkMeasure, ParamFn, PowerLawMarks, RandomMeasureSpec, WeightedMark,
};
use crate::series_sim::{uniform_grid, SeriesConfig};

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub process: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver: Option<DriverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<MarksConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverFamily {
    Stable,
    TemperedStable,
    CompoundPoisson,
    Multistable,
    Zero,
}

/// A declared exponent: a number, or `"vanishing"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentDecl {
    Power(f64),
    Keyword(String),
}

impl ExponentDecl {
    fn to_exponent(&self, field: &str) -> Result<Exponent, CliError> {
        match self {
            ExponentDecl::Power(p) => Ok(Exponent::Power(*p)),
            ExponentDecl::Keyword(k) if k == "vanishing" => Ok(Exponent::Vanishing),
            ExponentDecl::Keyword(k) => Err(CliError::Config(format!("driver.{field}: expected a number or \"vanishing\", got {k:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub family: DriverFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ParamFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `[position, mass]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<ParamFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_var: Option<ParamFn>,
    /// Lévy density `≈ |x|^p` at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_exponent: Option<ExponentDecl>,
    /// Tail mass `ρ(x, ∞) ≈ x^β`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_exponent: Option<ExponentDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Fractional,
    Ou,
    Step,
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F0Choice {
    Same,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ParamFn>,
    /// Box width, in time units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<F0Choice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarksKind {
    Discrete,
    PowerLaw,
}

/// Discrete marks (`values`, `weights`) or the density `scale·|v|^exponent`
/// on `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarksConfig {
    pub kind: MarksKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// `T`, in time units.
    pub horizon: f64,
    /// `S`, in time units; defaults to `T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    pub n_terms: usize,
    /// Number of grid intervals on `[0, T]`.
    pub grid_points: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub paths: usize,
    /// Defaults to the symmetry of the random measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    #[serde(default)]
    pub centering: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mark_window: Option<[f64; 2]>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Nested grid levels for variation and jump reports.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_k")]
    pub k_largest: usize,
    #[serde(default)]
    pub independence: bool,
}

fn default_levels() -> usize {
    3
}

fn default_k() -> usize {
    20
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { levels: default_levels(), k_largest: default_k(), independence: false }
    }
}

/// Values listed explicitly, or `from..=to` in steps of `step` (rounded to
/// 12 decimals so that `0.1 + 0.05` prints as `0.15`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Range {
    List(Vec<f64>),
    Span { from: f64, to: f64, step: f64 },
}

impl Range {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let out = match self {
            Range::List(v) => v.clone(),
            Range::Span { from, to, step } => {
                if !(from.is_finite() && to.is_finite() && *step > 0.0 && step.is_finite()) {
                    return Err(CliError::Domain(format!("table.{field}: range must be finite with step > 0")));
                }
                let n = ((to - from) / step + 1e-9).floor();
                if n < 0.0 {
                    vec![]
                } else {
                    (0..=n as usize).map(|k| ((from + step * k as f64) * 1e12).round() / 1e12).collect()
                }
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Domain(format!("table.{field}: values must be finite")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableDriver {
    Stable,
    TemperedStable,
}

/// Sweep of the fractional kernel over `(α, γ, λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub driver: TableDriver,
    pub alpha: Range,
    pub gamma: Range,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Range>,
    #[serde(default = "unit")]
    pub c: f64,
}

fn unit() -> f64 {
    1.0
}

pub fn parse(text: &str) -> Result<InstanceConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// TOML text of `cfg`, as echoed into output headers.
pub fn to_toml(cfg: &InstanceConfig) -> String {
    toml::to_string(cfg).expect("instance config serializes")
}

fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Config(format!("missing field `{field}`")))
}

fn constant(p: &ParamFn, field: &str) -> Result<f64, CliError> {
    match p {
        ParamFn::Constant(c) => Ok(*c),
        _ => Err(CliError::Config(format!("`{field}` must be a number for this family"))),
    }
}

fn domain<E: std::fmt::Display>(field: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Domain(format!("{field}: {e}"))
}

impl InstanceConfig {
    pub fn driver(&self) -> Result<&DriverConfig, CliError> {
        self.driver.as_ref().ok_or_else(|| CliError::Config("missing [driver] block".into()))
    }

    pub fn kernel_block(&self) -> Result<&KernelConfig, CliError> {
        self.kernel.as_ref().ok_or_else(|| CliError::Config("missing [kernel] block".into()))
    }

    pub fn simulation(&self) -> Result<&SimulationConfig, CliError> {
        self.simulation.as_ref().ok_or_else(|| CliError::Config("missing [simulation] block".into()))
    }

    pub fn table_block(&self) -> Result<&TableConfig, CliError> {
        self.table.as_ref().ok_or_else(|| CliError::Config("missing [table] block".into()))
    }

    pub fn analysis(&self) -> AnalysisConfig {
        self.analysis.clone().unwrap_or_default()
    }

    pub fn mark_measure(&self) -> Result<MarkMeasure, CliError> {
        let Some(m) = &self.marks else { return Ok(MarkMeasure::point(0.0)) };
        let marks = match m.kind {
            MarksKind::Discrete => {
                let values = need(&m.values, "marks.values")?;
                let weights = m.weights.clone().unwrap_or_else(|| vec![1.0; values.len()]);
                if weights.len() != values.len() {
                    return Err(CliError::Config("marks.weights must have the same length as marks.values".into()));
                }
                MarkMeasure::Discrete(values.into_iter().zip(weights).map(|(value, weight)| WeightedMark { value, weight }).collect())
            }
            MarksKind::PowerLaw => {
                let p = PowerLawMarks::new(
                    need(&m.lo, "marks.lo")?,
                    need(&m.hi, "marks.hi")?,
                    need(&m.scale, "marks.scale")?,
                    need(&m.exponent, "marks.exponent")?,
                )
                .map_err(domain("marks"))?;
                MarkMeasure::PowerLaw(p)
            }
        };
        marks.validate().map_err(domain("marks"))?;
        Ok(marks)
    }

    pub fn random_measure(&self) -> Result<RandomMeasureSpec, CliError> {
        let d = self.driver()?;
        let declared = |rho: LevyMeasureSpec| -> Result<LevyMeasureSpec, CliError> {
            let origin = d.origin_exponent.as_ref().map(|e| e.to_exponent("origin_exponent")).transpose()?;
            let tail = d.tail_exponent.as_ref().map(|e| e.to_exponent("tail_exponent")).transpose()?;
            rho.with_declared(origin, tail).map_err(domain("driver"))
        };
        let levy = match d.family {
            DriverFamily::Stable => {
                let alpha = constant(&need(&d.alpha, "driver.alpha")?, "driver.alpha")?;
                LevyField::Uniform(declared(
                    LevyMeasureSpec::stable(alpha, d.c.unwrap_or(1.0)).map_err(domain("driver"))?,
                )?)
            }
            DriverFamily::TemperedStable => {
                let alpha = constant(&need(&d.alpha, "driver.alpha")?, "driver.alpha")?;
                let lambda = need(&d.lambda, "driver.lambda")?;
                LevyField::Uniform(declared(
                    LevyMeasureSpec::tempered_stable(alpha, lambda, d.c.unwrap_or(1.0)).map_err(domain("driver"))?,
                )?)
            }
            DriverFamily::CompoundPoisson => {
                let atoms = need(&d.atoms, "driver.atoms")?
                    .into_iter()
                    .map(|[position, mass]| Atom { position, mass })
                    .collect();
                LevyField::Uniform(declared(LevyMeasureSpec::compound_poisson(atoms).map_err(domain("driver"))?)?)
            }
            DriverFamily::Multistable => {
                LevyField::MultiStable { alpha: need(&d.alpha, "driver.alpha")?, c: d.c.unwrap_or(1.0) }
            }
            DriverFamily::Zero => LevyField::Uniform(LevyMeasureSpec::zero()),
        };
        let spec = RandomMeasureSpec {
            marks: self.mark_measure()?,
            drift: d.drift.clone().unwrap_or(ParamFn::Constant(0.0)),
            gaussian_var: d.gaussian_var.clone().unwrap_or(ParamFn::Constant(0.0)),
            levy,
        };
        spec.validate().map_err(domain("driver"))?;
        Ok(spec)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, CliError> {
        let k = self.kernel_block()?;
        let family = match k.family {
            KernelKind::Fractional => KernelFamily::Fractional { gamma: need(&k.gamma, "kernel.gamma")? },
            KernelKind::Ou => KernelFamily::ExponentialOu,
            KernelKind::Step => KernelFamily::Step,
            KernelKind::Box => KernelFamily::Box { width: need(&k.width, "kernel.width")? },
        };
        let mut spec = KernelSpec::new(family).scaled(k.scale.unwrap_or(1.0));
        if k.f0 == Some(F0Choice::Zero) {
            spec = spec.with_f0(F0Mode::Zero);
        }
        spec.validate(&self.mark_measure()?).map_err(domain("kernel"))?;
        Ok(spec)
    }

    /// Series configuration on `grid_points` uniform intervals.
    pub fn series_config(&self, symmetric_default: bool) -> Result<SeriesConfig, CliError> {
        let s = self.simulation()?;
        let cfg = SeriesConfig {
            horizon: s.horizon,
            window: s.window.unwrap_or(s.horizon),
            n_terms: s.n_terms,
            grid: uniform_grid(s.horizon, s.grid_points),
            seed: s.seed,
            symmetric: s.symmetric.unwrap_or(symmetric_default),
            centering: s.centering,
            mark_window: s.mark_window.map(|[a, b]| (a, b)),
        };
        if s.grid_points == 0 {
            return Err(CliError::Config("simulation.grid_points must be at least 1".into()));
        }
        cfg.validate().map_err(|e| CliError::Config(format!("simulation: {e}")))?;
        Ok(cfg)
    }
}

/// Config lines prefixed with `# `, for CSV headers.
pub fn echo_header(cfg: &InstanceConfig) -> String {
    to_toml(cfg).lines().map(|l| format!("# {l}\n")).collect()
}

/// Inverse of [`echo_header`]: parse the leading `#` lines of a CSV file,
/// skipping `#!` marker lines.
pub fn parse_header(text: &str) -> Result<InstanceConfig, CliError> {
    let body: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter(|l| !l.starts_with("#!"))
        .map(|l| format!("{}\n", l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#'))))
        .collect();
    parse(&body)
}
