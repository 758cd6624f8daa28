//! Shot-noise series simulation of `X`, its jump part `M` and its
//! finite-variation part `A` on a finite window.
//!
//! With `κ̃ = Uniform[−S, T] × m/m(V)` the density ratio `h = ½ dκ̃/dκ` is the
//! constant `1/(2(T+S)m(V))`, and the `j`-th term carries the jump
//! `Rⱼ = R(εⱼΓⱼh, Tⱼ)`.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::{KernelError, KernelFamily, KernelSpec, MarkKernel};
use crate::levy_measure::{truncate, LevyError, Mark, MarkMeasure, PowerLawMarks, RandomMeasureSpec, WeightedMark};
use crate::quad::{self, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid series configuration: {0}")]
    Config(String),
    #[error("mark measure has infinite mass on the mark window")]
    UnnormalizableMarks,
    #[error("non-symmetric driver needs `centering = true` (experimental)")]
    CenteringNotImplemented,
    #[error("`symmetric = true` but the random measure is not symmetric")]
    SymmetryMismatch,
    #[error("Gaussian component σ² = {0} > 0 cannot be simulated")]
    GaussianComponent(f64),
    #[error("process not well defined: {0}")]
    NotWellDefined(String),
    #[error("centering integral not certified: {0}")]
    NonIntegrable(String),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesConfig {
    /// Simulate `t ∈ [0, T]`.
    pub horizon: f64,
    /// Arrival times are drawn from `[−S, T]`.
    pub window: f64,
    pub n_terms: usize,
    pub grid: Vec<f64>,
    pub seed: u64,
    /// All centering terms are identically zero.
    pub symmetric: bool,
    /// Quadrature centering for non-symmetric drivers (experimental).
    pub centering: bool,
    /// Restrict a density mark measure to this interval before normalising.
    pub mark_window: Option<(f64, f64)>,
}

/// `n + 1` equally spaced points on `[0, T]`, ending exactly at `T`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let mut g: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    g[n] = horizon;
    g
}

impl SeriesConfig {
    pub fn new(horizon: f64, n_terms: usize, grid_points: usize, seed: u64) -> Self {
        Self {
            horizon,
            window: horizon,
            n_terms,
            grid: uniform_grid(horizon, grid_points),
            seed,
            symmetric: true,
            centering: false,
            mark_window: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |s: String| Err(SimError::Config(s));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon = {} must be positive", self.horizon));
        }
        if !(self.window >= self.horizon && self.window.is_finite()) {
            return bad(format!("window = {} must be at least the horizon {}", self.window, self.horizon));
        }
        if self.n_terms == 0 {
            return bad("n_terms must be at least 1".into());
        }
        if self.grid.len() < 2 {
            return bad("grid needs at least two points".into());
        }
        if self.grid[0] != 0.0 {
            return bad(format!("grid must start at 0, got {}", self.grid[0]));
        }
        if *self.grid.last().unwrap() != self.horizon {
            return bad(format!("grid must end at the horizon {}", self.horizon));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grid must be strictly increasing".into());
        }
        if let Some((lo, hi)) = self.mark_window {
            if !(lo < hi) {
                return bad(format!("mark window ({lo}, {hi}) is empty"));
            }
        }
        Ok(())
    }
}

/// The three independent sequences and the resulting jump sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotNoiseEnsemble {
    pub path: u64,
    pub gamma: Vec<f64>,
    pub eps: Vec<i8>,
    /// Arrival times `Tⱼ¹`.
    pub times: Vec<f64>,
    /// Marks `Tⱼ²`.
    pub marks: Vec<Mark>,
    pub r: Vec<f64>,
    pub h: f64,
}

impl ShotNoiseEnsemble {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `Γ_N`, the Poisson level the truncation corresponds to.
    pub fn gamma_level(&self) -> f64 {
        self.gamma.last().copied().unwrap_or(0.0)
    }
}

/// Paths on the grid; `x[i] = x0 + m[i] + a[i]` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub grid: Vec<f64>,
    pub x0: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone)]
enum MarkSampler {
    Discrete { marks: Vec<(usize, WeightedMark)>, cumulative: Vec<f64> },
    Density(PowerLawMarks),
}

impl MarkSampler {
    fn new(marks: &MarkMeasure, window: Option<(f64, f64)>) -> Result<(Self, f64), SimError> {
        match marks {
            MarkMeasure::Discrete(list) => {
                let kept: Vec<(usize, WeightedMark)> = list
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, m)| m.weight > 0.0)
                    .filter(|(_, m)| window.is_none_or(|(lo, hi)| m.value >= lo && m.value <= hi))
                    .collect();
                let mut cumulative = Vec::with_capacity(kept.len());
                let mut total = 0.0;
                for (_, m) in &kept {
                    total += m.weight;
                    cumulative.push(total);
                }
                if kept.is_empty() {
                    return Err(SimError::Config("no marks of positive weight in the mark window".into()));
                }
                Ok((MarkSampler::Discrete { marks: kept, cumulative }, total))
            }
            MarkMeasure::PowerLaw(p) => {
                let p = match window {
                    Some((lo, hi)) => PowerLawMarks::new(p.lo.max(lo), p.hi.min(hi), p.scale, p.exponent)?,
                    None => *p,
                };
                let mass = p.total_mass();
                if !mass.is_finite() {
                    return Err(SimError::UnnormalizableMarks);
                }
                Ok((MarkSampler::Density(p), mass))
            }
        }
    }

    fn sample(&self, u: f64) -> Mark {
        match self {
            MarkSampler::Discrete { marks, cumulative } => {
                let total = *cumulative.last().unwrap();
                let target = u * total;
                let k = cumulative.partition_point(|c| *c <= target).min(marks.len() - 1);
                let (i, m) = marks[k];
                Mark::indexed(m.value, i)
            }
            MarkSampler::Density(p) => Mark::new(p.quantile(u)),
        }
    }

    /// `E[F(v)]` under the normalised mark law.
    fn expect(&self, f: &dyn Fn(&Mark) -> f64) -> f64 {
        match self {
            MarkSampler::Discrete { marks, cumulative } => {
                let total = *cumulative.last().unwrap();
                marks.iter().map(|(i, m)| m.weight / total * f(&Mark::indexed(m.value, *i))).sum()
            }
            MarkSampler::Density(p) => {
                quad::adaptive(|u| f(&Mark::new(p.quantile(u))), 0.0, 1.0, CENTER_TOL).value
            }
        }
    }
}

const CENTER_TOL: Tolerance = Tolerance::new(1e-11, 1e-8);

/// Deterministic generator for path `path` of a run seeded with `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Validated simulation context for one `(config, random measure, kernel)`.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SeriesConfig,
    spec: RandomMeasureSpec,
    kernel: KernelSpec,
    sampler: MarkSampler,
    mark_mass: f64,
    h: f64,
}

impl Simulator {
    pub fn new(cfg: &SeriesConfig, spec: &RandomMeasureSpec, kernel: &KernelSpec) -> Result<Self, SimError> {
        cfg.validate()?;
        spec.validate()?;
        kernel.validate(&spec.marks)?;
        for mark in spec.marks.representative_marks() {
            let var = spec.gaussian_var_at(&mark)?;
            if var > 0.0 {
                return Err(SimError::GaussianComponent(var));
            }
            if let Ok(s) = kernel.at(&mark) {
                if s.fractional_gamma().is_some_and(|g| g >= 0.5) {
                    return Err(SimError::NotWellDefined(format!(
                        "fractional exponent {} ≥ 1/2",
                        s.fractional_gamma().unwrap()
                    )));
                }
            }
        }
        if cfg.symmetric && !spec.is_symmetric() {
            return Err(SimError::SymmetryMismatch);
        }
        if !cfg.symmetric && !cfg.centering {
            return Err(SimError::CenteringNotImplemented);
        }
        let (sampler, mark_mass) = MarkSampler::new(&spec.marks, cfg.mark_window)?;
        let h = 1.0 / (2.0 * (cfg.horizon + cfg.window) * mark_mass);
        Ok(Self { cfg: cfg.clone(), spec: spec.clone(), kernel: kernel.clone(), sampler, mark_mass, h })
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.cfg
    }

    /// `h = ½ dκ̃/dκ`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// `m(V)` on the mark window.
    pub fn mark_mass(&self) -> f64 {
        self.mark_mass
    }

    fn centred(&self) -> bool {
        !self.cfg.symmetric
    }

    pub fn ensemble(&self, path: u64) -> Result<ShotNoiseEnsemble, SimError> {
        let n = self.cfg.n_terms;
        let mut rng = path_rng(self.cfg.seed, path);
        let (lo, span) = (-self.cfg.window, self.cfg.horizon + self.cfg.window);
        let mut ens = ShotNoiseEnsemble {
            path,
            gamma: Vec::with_capacity(n),
            eps: Vec::with_capacity(n),
            times: Vec::with_capacity(n),
            marks: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            h: self.h,
        };
        let mut g = 0.0;
        for _ in 0..n {
            let e: f64 = rng.sample(Exp1);
            g += e;
            let eps: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
            let t = lo + span * rng.random::<f64>();
            let mark = self.sampler.sample(rng.random::<f64>());
            let r = self.spec.rho(&mark)?.tail_inverse(f64::from(eps) * g * self.h);
            ens.gamma.push(g);
            ens.eps.push(eps);
            ens.times.push(t.min(self.cfg.horizon));
            ens.marks.push(mark);
            ens.r.push(r);
        }
        Ok(ens)
    }

    fn sections(&self, ens: &ShotNoiseEnsemble) -> Result<Vec<MarkKernel>, SimError> {
        if self.kernel.is_mark_free() {
            let s = self.kernel.at(&ens.marks.first().copied().unwrap_or(Mark::new(0.0)))?;
            return Ok(vec![s; ens.len()]);
        }
        ens.marks.iter().map(|m| Ok(self.kernel.at(m)?)).collect()
    }

    /// `Σⱼ Rⱼ φ(t, Tⱼ)` on the grid, without centering.
    fn raw_x(&self, ens: &ShotNoiseEnsemble) -> Result<Vec<f64>, SimError> {
        let grid = &self.cfg.grid;
        if let Some(jumps) = piecewise_jumps(&self.kernel) {
            let same_f0 = self.kernel.f0 == crate::kernels::F0Mode::SameAsF;
            let mut base = 0.0;
            let mut events = Vec::new();
            for (j, (&s, &r)) in ens.times.iter().zip(&ens.r).enumerate() {
                for &(d, c) in &jumps {
                    let at = s + d;
                    if at <= 0.0 {
                        if !same_f0 {
                            base += r * c;
                        }
                    } else {
                        events.push((at, j, r * c));
                    }
                }
            }
            return Ok(step_sum(grid, base, events));
        }
        let sections = self.sections(ens)?;
        let offsets: Vec<f64> = sections.iter().zip(&ens.times).map(|(k, &s)| k.f0(-s)).collect();
        let value = |t: f64| -> f64 {
            let mut acc = 0.0;
            for ((k, &s), (&r, &o)) in sections.iter().zip(&ens.times).zip(ens.r.iter().zip(&offsets)) {
                if r != 0.0 {
                    acc += r * (k.f(t - s) - o);
                }
            }
            acc
        };
        Ok(map_grid(grid, ens.len(), value))
    }

    /// `Σⱼ Rⱼ f(0, Tⱼ²) 1{0 < Tⱼ¹ ≤ t}` on the grid, without centering.
    fn raw_m(&self, ens: &ShotNoiseEnsemble) -> Result<Vec<f64>, SimError> {
        let mut events = Vec::new();
        let piecewise = piecewise_jumps(&self.kernel);
        let mark_free = self.kernel.is_mark_free();
        let f00 = if mark_free { Some(self.kernel.at(&Mark::new(0.0))?.f_at_zero()) } else { None };
        for (j, ((&s, &r), mark)) in ens.times.iter().zip(&ens.r).zip(&ens.marks).enumerate() {
            if s <= 0.0 {
                continue;
            }
            let amount = match &piecewise {
                // Matches the jump bookkeeping of `raw_x` term by term.
                Some(jumps) => jumps.iter().filter(|(d, _)| *d == 0.0).map(|(_, c)| r * c).sum(),
                None => {
                    let f0 = match f00 {
                        Some(v) => v,
                        None => self.kernel.at(mark)?.f_at_zero(),
                    };
                    r * f0
                }
            };
            events.push((s, j, amount));
        }
        Ok(step_sum(&self.cfg.grid, 0.0, events))
    }

    /// `X` on the grid, including `β` and the centering for non-symmetric drivers.
    pub fn path_x(&self, ens: &ShotNoiseEnsemble) -> Result<Vec<f64>, SimError> {
        let mut x = self.raw_x(ens)?;
        if self.centred() {
            let level = ens.gamma_level();
            for (xi, &t) in x.iter_mut().zip(&self.cfg.grid) {
                *xi += self.drift_beta(t)? - self.centering_between(0.0, level, t, Target::Phi)?;
            }
        }
        Ok(x)
    }

    /// `M` on the grid, including `ζ` and its centering for non-symmetric drivers.
    pub fn path_m(&self, ens: &ShotNoiseEnsemble) -> Result<Vec<f64>, SimError> {
        let mut m = self.raw_m(ens)?;
        if self.centred() {
            let level = ens.gamma_level();
            for (mi, &t) in m.iter_mut().zip(&self.cfg.grid) {
                *mi += self.zeta(t)? - self.centering_between(0.0, level, t, Target::Jump)?;
            }
        }
        Ok(m)
    }

    /// `Σⱼ Rⱼ [g(t − Tⱼ¹, Tⱼ²) − g(−Tⱼ¹, Tⱼ²)]`, the direct series for `A`.
    ///
    /// Centering terms are not included; for symmetric drivers they vanish.
    pub fn path_a_direct(&self, ens: &ShotNoiseEnsemble) -> Result<Vec<f64>, SimError> {
        if matches!(self.kernel.family, KernelFamily::Step) {
            return Ok(vec![0.0; self.cfg.grid.len()]);
        }
        let sections = self.sections(ens)?;
        let offsets: Vec<f64> = sections.iter().zip(&ens.times).map(|(k, &s)| k.g(-s)).collect();
        let value = |t: f64| -> f64 {
            let mut acc = 0.0;
            for ((k, &s), (&r, &o)) in sections.iter().zip(&ens.times).zip(ens.r.iter().zip(&offsets)) {
                if r != 0.0 {
                    acc += r * (k.g(t - s) - o);
                }
            }
            acc
        };
        Ok(map_grid(&self.cfg.grid, ens.len(), value))
    }

    pub fn bundle(&self, ens: &ShotNoiseEnsemble) -> Result<PathBundle, SimError> {
        let xd = self.path_x(ens)?;
        let m = self.path_m(ens)?;
        let x0 = xd[0];
        let a: Vec<f64> = xd.iter().zip(&m).map(|(x, m)| (x - x0) - m).collect();
        let x = m.iter().zip(&a).map(|(m, a)| x0 + m + a).collect();
        Ok(PathBundle { grid: self.cfg.grid.clone(), x0, x, m, a })
    }

    /// Ensembles and bundles for paths `0..n_paths`, in path order.
    pub fn simulate(&self, n_paths: usize) -> Result<Vec<(ShotNoiseEnsemble, PathBundle)>, SimError> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|p| {
                let ens = self.ensemble(p)?;
                let b = self.bundle(&ens)?;
                Ok((ens, b))
            })
            .collect()
    }

    /// `αⱼ(t) = ∫_{Γⱼ₋₁}^{Γⱼ} E⟦R(ε r h, T) φ(t, T)⟧ dr` with `Γ₀ = 0`.
    pub fn centering_alpha(&self, ens: &ShotNoiseEnsemble, j: usize, t: f64) -> Result<f64, SimError> {
        if !self.centred() || self.spec.is_symmetric() {
            return Ok(0.0);
        }
        let lo = if j == 0 { 0.0 } else { ens.gamma[j - 1] };
        self.centering_between(lo, ens.gamma[j], t, Target::Phi)
    }

    fn centering_between(&self, lo: f64, hi: f64, t: f64, target: Target) -> Result<f64, SimError> {
        if self.spec.is_symmetric() || hi <= lo {
            return Ok(0.0);
        }
        let breaks = self.time_breaks(t);
        let span = self.cfg.horizon + self.cfg.window;
        let failure: RefCell<Option<SimError>> = RefCell::new(None);
        let fail = |e: SimError| {
            failure.borrow_mut().get_or_insert(e);
            0.0
        };
        let inner = |r: f64| -> f64 {
            let per_mark = |mark: &Mark| -> f64 {
                let section = match self.kernel.at(mark) {
                    Ok(s) => s,
                    Err(e) => return fail(e.into()),
                };
                let rho = match self.spec.rho(mark) {
                    Ok(rho) => rho,
                    Err(e) => return fail(e.into()),
                };
                let up = rho.tail_inverse(r * self.h);
                let down = rho.tail_inverse(-r * self.h);
                let weight = |s: f64| match target {
                    Target::Phi => section.phi(t, s),
                    Target::Jump if s > 0.0 && s <= t => section.f_at_zero(),
                    Target::Jump => 0.0,
                };
                let g = |s: f64| {
                    let w = weight(s);
                    0.5 * (truncate(up * w) + truncate(down * w))
                };
                let total: f64 = breaks.windows(2).map(|p| quad::adaptive(g, p[0], p[1], CENTER_TOL).value).sum();
                total / span
            };
            self.sampler.expect(&per_mark)
        };
        // The integrand is bounded by 1; split [lo, hi] geometrically.
        let mut r_breaks = vec![lo];
        let mut p = lo.max(1e-3);
        while p < hi {
            if p > lo {
                r_breaks.push(p);
            }
            p *= 2.0;
        }
        r_breaks.push(hi);
        let total: f64 = r_breaks.windows(2).map(|w| quad::adaptive(inner, w[0], w[1], CENTER_TOL).value).sum();
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// Arrival-time breakpoints of `s ↦ φ(t, s)` on the window.
    fn time_breaks(&self, t: f64) -> Vec<f64> {
        let (a, b) = (-self.cfg.window, self.cfg.horizon);
        let mut breaks = vec![a, 0.0, t.max(a), b];
        if let KernelFamily::Box { width } = self.kernel.family {
            breaks.extend([t - width, -width]);
        }
        breaks.retain(|s| *s >= a && *s <= b);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }

    /// `β(t) = ∫ B(φ(t, u), u) κ(du)` over the window.
    pub fn drift_beta(&self, t: f64) -> Result<f64, SimError> {
        if self.spec.is_symmetric() {
            return Ok(0.0);
        }
        let breaks = self.time_breaks(t);
        let failure: RefCell<Option<SimError>> = RefCell::new(None);
        let fail = |e: SimError| {
            failure.borrow_mut().get_or_insert(e);
            0.0
        };
        let per_mark = |mark: &Mark| -> f64 {
            let section = match self.kernel.at(mark) {
                Ok(s) => s,
                Err(e) => return fail(e.into()),
            };
            let g = |s: f64| self.spec.char_b(section.phi(t, s), mark).unwrap_or_else(|e| fail(e.into()));
            breaks.windows(2).map(|p| quad::adaptive(g, p[0], p[1], CENTER_TOL).value).sum()
        };
        let v = self.sampler.expect(&per_mark) * self.mark_mass;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `ζ_t = t ∫ B(f(0, v), v) m(dv)`.
    pub fn zeta(&self, t: f64) -> Result<f64, SimError> {
        if self.spec.is_symmetric() {
            return Ok(0.0);
        }
        let failure: RefCell<Option<SimError>> = RefCell::new(None);
        let per_mark = |mark: &Mark| -> f64 {
            let r = self
                .kernel
                .at(mark)
                .map_err(SimError::from)
                .and_then(|s| self.spec.char_b(s.f_at_zero(), mark).map_err(SimError::from));
            r.unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                0.0
            })
        };
        let v = t * self.sampler.expect(&per_mark) * self.mark_mass;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Phi,
    Jump,
}

/// Jump offsets and sizes of a piecewise-constant `f`.
fn piecewise_jumps(kernel: &KernelSpec) -> Option<Vec<(f64, f64)>> {
    match kernel.family {
        KernelFamily::Step => Some(vec![(0.0, kernel.scale)]),
        KernelFamily::Box { width } => Some(vec![(0.0, kernel.scale), (width, -kernel.scale)]),
        _ => None,
    }
}

/// Right-continuous step path `base + Σ_{events at ≤ t} amount` on the grid.
/// Events are summed in (time, term index) order.
fn step_sum(grid: &[f64], base: f64, mut events: Vec<(f64, usize, f64)>) -> Vec<f64> {
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = base;
    let mut k = 0;
    for &t in grid {
        while k < events.len() && events[k].0 <= t {
            acc += events[k].2;
            k += 1;
        }
        out.push(acc);
    }
    out
}

fn map_grid<F: Fn(f64) -> f64 + Sync>(grid: &[f64], terms: usize, value: F) -> Vec<f64> {
    if grid.len() * terms > 1 << 20 {
        grid.par_iter().map(|&t| value(t)).collect()
    } else {
        grid.iter().map(|&t| value(t)).collect()
    }
}

/// `∫_{−2S}^{−S} |φ(T, s)|^α ds`, the stable scale (to the power α) of the
/// part of `X_T` lost by truncating the past at `−S` versus `−2S`.
pub fn window_tail_integral(
    kernel: &KernelSpec,
    mark: &Mark,
    alpha: f64,
    horizon: f64,
    window: f64,
) -> Result<f64, SimError> {
    let k = kernel.at(mark)?;
    let f = |s: f64| k.phi(horizon, s).abs().powf(alpha);
    Ok(quad::adaptive(f, -2.0 * window, -window, Tolerance::new(1e-14, 1e-9)).value)
}

pub fn sample_ensemble(cfg: &SeriesConfig, spec: &RandomMeasureSpec, kernel: &KernelSpec) -> Result<ShotNoiseEnsemble, SimError> {
    Simulator::new(cfg, spec, kernel)?.ensemble(0)
}
