//! Path functionals on grids and the two ensemble tests: independence of
//! increments and jump matching.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::{KernelError, KernelSpec};
use crate::series_sim::{PathBundle, ShotNoiseEnsemble};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("independence test needs at least {needed} paths, got {got}")]
    InsufficientPaths { needed: usize, got: usize },
    #[error("interval ({0}, {1}) is not a valid index range of the paths")]
    BadInterval(usize, usize),
    #[error("grid of {points} points cannot be halved {levels} times")]
    NotNested { points: usize, levels: usize },
    #[error("bundles do not share the same ensemble horizon")]
    Mismatch,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub const MIN_PATHS: usize = 1000;
pub const CF_GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
pub const FV_RATIO_BAND: (f64, f64) = (0.99, 1.05);

/// `Σᵢ (x[i] − x[i−1])²`.
pub fn quadratic_variation(path: &[f64]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum()
}

/// `Σᵢ |x[i] − x[i−1]|`.
pub fn total_variation(path: &[f64]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn max_increment(path: &[f64]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

/// Every `stride`-th point.
pub fn subsample(path: &[f64], stride: usize) -> Vec<f64> {
    path.iter().step_by(stride.max(1)).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvVerdict {
    Stabilizing,
    Diverging,
    Inconclusive,
}

impl FvVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            FvVerdict::Stabilizing => "stabilizing",
            FvVerdict::Diverging => "diverging",
            FvVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Variations on nested grids, coarsest first.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationReport {
    /// Number of intervals per grid.
    pub grid_sizes: Vec<usize>,
    pub qv: Vec<f64>,
    pub tv: Vec<f64>,
    pub verdict_fv: FvVerdict,
}

impl VariationReport {
    /// `tv[k] / tv[k−1]`, one entry per refinement step.
    pub fn tv_ratios(&self) -> Vec<f64> {
        self.tv.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Ratio heuristic on the finest pair of at least three levels. Growth above
/// the band at each of the last two refinements reads as diverging.
pub fn fv_verdict(tv: &[f64]) -> FvVerdict {
    if tv.len() < 3 {
        return FvVerdict::Inconclusive;
    }
    let n = tv.len();
    if tv[n - 1] == 0.0 && tv[n - 2] == 0.0 {
        return FvVerdict::Stabilizing;
    }
    let ratio = |k: usize| tv[k] / tv[k - 1];
    let (lo, hi) = FV_RATIO_BAND;
    let last = ratio(n - 1);
    if (lo..=hi).contains(&last) {
        FvVerdict::Stabilizing
    } else if last > hi && ratio(n - 2) > hi {
        FvVerdict::Diverging
    } else {
        FvVerdict::Inconclusive
    }
}

/// QV and TV of `path` on the grids obtained by halving `levels − 1` times.
///
/// `path` lives on the finest grid; its interval count must be divisible by
/// `2^{levels−1}`.
pub fn variation_report(path: &[f64], levels: usize) -> Result<VariationReport, StatsError> {
    let intervals = path.len().saturating_sub(1);
    let levels = levels.max(1);
    let coarsest = 1usize << (levels - 1);
    if intervals == 0 || intervals % coarsest != 0 {
        return Err(StatsError::NotNested { points: path.len(), levels });
    }
    let mut report = VariationReport { grid_sizes: vec![], qv: vec![], tv: vec![], verdict_fv: FvVerdict::Inconclusive };
    for k in (0..levels).rev() {
        let sub = subsample(path, 1 << k);
        report.grid_sizes.push(sub.len() - 1);
        report.qv.push(quadratic_variation(&sub));
        report.tv.push(total_variation(&sub));
    }
    report.verdict_fv = fv_verdict(&report.tv);
    Ok(report)
}

/// Half-open index interval `(start, end]` of grid points; the increment is
/// `x[end] − x[start]`.
pub type Interval = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct PairStatistics {
    pub first: Interval,
    pub second: Interval,
    pub correlation: f64,
    /// Largest `|φ̂_joint − φ̂₁φ̂₂|` over the θ,u grid.
    pub cf_gap: f64,
    /// Monte Carlo standard error at the point of the largest standardized gap.
    pub cf_se: f64,
    /// Largest `|φ̂_joint − φ̂₁φ̂₂| / SE` over the grid.
    pub cf_z: f64,
    pub cf_at: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub n_paths: usize,
    pub pairs: Vec<PairStatistics>,
    /// `3/√n`.
    pub correlation_bound: f64,
    pub pass: bool,
}

impl IndependenceReport {
    pub fn max_cf_z(&self) -> f64 {
        self.pairs.iter().map(|p| p.cf_z).fold(0.0, f64::max)
    }

    pub fn max_abs_correlation(&self) -> f64 {
        self.pairs.iter().map(|p| p.correlation.abs()).fold(0.0, f64::max)
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

fn mean_c(v: &[Complex64]) -> Complex64 {
    v.iter().sum::<Complex64>() / v.len() as f64
}

/// `D = φ̂_joint(θ,u) − φ̂₁(θ)φ̂₂(u)` and its delta-method standard error.
///
/// The influence of sample `i` is
/// `e^{iθaᵢ+iubᵢ} − φ̂₂(u)e^{iθaᵢ} − φ̂₁(θ)e^{iubᵢ}`; the SE is
/// `√((Var Re + Var Im)/n)` of that.
fn cf_gap(a: &[f64], b: &[f64], theta: f64, u: f64) -> (f64, f64) {
    let ea: Vec<Complex64> = a.iter().map(|&x| Complex64::cis(theta * x)).collect();
    let eb: Vec<Complex64> = b.iter().map(|&y| Complex64::cis(u * y)).collect();
    let joint: Vec<Complex64> = ea.iter().zip(&eb).map(|(p, q)| p * q).collect();
    let (pa, pb, pj) = (mean_c(&ea), mean_c(&eb), mean_c(&joint));
    let d = pj - pa * pb;
    let infl: Vec<Complex64> = (0..a.len()).map(|i| joint[i] - pb * ea[i] - pa * eb[i]).collect();
    let mi = mean_c(&infl);
    let n = a.len() as f64;
    let var = infl.iter().map(|z| (z - mi).norm_sqr()).sum::<f64>() / (n - 1.0);
    (d.norm(), (var / n).sqrt())
}

fn increments(paths: &[Vec<f64>], (s, e): Interval) -> Result<Vec<f64>, StatsError> {
    paths
        .iter()
        .map(|p| {
            if s >= e || e >= p.len() {
                Err(StatsError::BadInterval(s, e))
            } else {
                Ok(p[e] - p[s])
            }
        })
        .collect()
}

/// Correlation and characteristic-function factorization for increments over
/// each pair of disjoint intervals. Passes iff every correlation is within
/// `3/√n` and every standardized gap is at most 3.
pub fn independence_test(paths: &[Vec<f64>], pairs: &[(Interval, Interval)]) -> Result<IndependenceReport, StatsError> {
    if paths.len() < MIN_PATHS {
        return Err(StatsError::InsufficientPaths { needed: MIN_PATHS, got: paths.len() });
    }
    let n = paths.len();
    let bound = 3.0 / (n as f64).sqrt();
    let stats = pairs
        .par_iter()
        .map(|&(first, second)| {
            let a = increments(paths, first)?;
            let b = increments(paths, second)?;
            let mut best = PairStatistics {
                first,
                second,
                correlation: pearson(&a, &b),
                cf_gap: 0.0,
                cf_se: 0.0,
                cf_z: 0.0,
                cf_at: (0.0, 0.0),
            };
            for &theta in &CF_GRID {
                for &u in &CF_GRID {
                    let (gap, se) = cf_gap(&a, &b, theta, u);
                    best.cf_gap = best.cf_gap.max(gap);
                    let z = if se > 0.0 { gap / se } else if gap > 0.0 { f64::INFINITY } else { 0.0 };
                    if z > best.cf_z {
                        best.cf_z = z;
                        best.cf_se = se;
                        best.cf_at = (theta, u);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    let pass = stats.iter().all(|p| p.correlation.abs() <= bound && p.cf_z <= 3.0);
    Ok(IndependenceReport { n_paths: n, pairs: stats, correlation_bound: bound, pass })
}

/// `Σ Rⱼ² f(0, Tⱼ²)²` over arrivals in `(0, T]`: the quadratic variation of `M`.
pub fn jump_square_sum(ens: &ShotNoiseEnsemble, kernel: &KernelSpec, horizon: f64) -> Result<f64, StatsError> {
    let mut s = 0.0;
    for ((&t, &r), mark) in ens.times.iter().zip(&ens.r).zip(&ens.marks) {
        if t > 0.0 && t <= horizon {
            let j = r * kernel.at(mark)?.f_at_zero();
            s += j * j;
        }
    }
    Ok(s)
}

/// One arrival measured on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub term: usize,
    pub time: f64,
    pub r: f64,
    /// `Rᵢ f(0, Tᵢ²)`.
    pub predicted: f64,
    /// Sum of predicted jumps of every arrival in the same grid cell.
    pub cell_predicted: f64,
    /// `x[i] − x[i−1]` over the cell `(t_{i−1}, t_i]` containing the arrival.
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpLevel {
    pub grid_size: usize,
    pub records: Vec<JumpRecord>,
    /// `max |measured − predicted| / |Rᵢ|`.
    pub max_rel_error: f64,
    /// `max |measured − cell_predicted|`.
    pub max_cell_error: f64,
    pub max_abs_measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpMatchReport {
    pub levels: Vec<JumpLevel>,
    /// The relative error never increases under refinement.
    pub pass: bool,
}

/// Indices of the `k` largest `|Rᵢ|` with arrival in `(0, T]`, largest first.
pub fn largest_arrivals(ens: &ShotNoiseEnsemble, horizon: f64, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ens.len()).filter(|&j| ens.times[j] > 0.0 && ens.times[j] <= horizon).collect();
    idx.sort_by(|&a, &b| ens.r[b].abs().total_cmp(&ens.r[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Compare measured grid jumps of `x` at the `k` largest arrivals with
/// `Rᵢ f(0, Tᵢ²)`, for bundles of the same ensemble on successively finer grids.
pub fn jump_match(
    bundles: &[PathBundle],
    ens: &ShotNoiseEnsemble,
    kernel: &KernelSpec,
    k: usize,
) -> Result<JumpMatchReport, StatsError> {
    let horizon = match bundles.first() {
        Some(b) => *b.grid.last().unwrap(),
        None => return Ok(JumpMatchReport { levels: vec![], pass: true }),
    };
    if bundles.iter().any(|b| *b.grid.last().unwrap() != horizon) {
        return Err(StatsError::Mismatch);
    }
    let chosen = largest_arrivals(ens, horizon, k);
    let f0: Vec<f64> = ens
        .marks
        .iter()
        .map(|m| kernel.at(m).map(|s| s.f_at_zero()))
        .collect::<Result<_, _>>()?;
    let cell_of = |grid: &[f64], t: f64| grid.partition_point(|&g| g < t).max(1);
    let mut levels = Vec::with_capacity(bundles.len());
    for b in bundles {
        let mut cell_sum = vec![0.0; b.grid.len()];
        for (j, &t) in ens.times.iter().enumerate() {
            if t > 0.0 && t <= horizon {
                cell_sum[cell_of(&b.grid, t)] += ens.r[j] * f0[j];
            }
        }
        let mut level =
            JumpLevel { grid_size: b.grid.len() - 1, records: vec![], max_rel_error: 0.0, max_cell_error: 0.0, max_abs_measured: 0.0 };
        for &j in &chosen {
            let c = cell_of(&b.grid, ens.times[j]);
            let rec = JumpRecord {
                term: j,
                time: ens.times[j],
                r: ens.r[j],
                predicted: ens.r[j] * f0[j],
                cell_predicted: cell_sum[c],
                measured: b.x[c] - b.x[c - 1],
            };
            level.max_rel_error = level.max_rel_error.max((rec.measured - rec.predicted).abs() / rec.r.abs());
            level.max_cell_error = level.max_cell_error.max((rec.measured - rec.cell_predicted).abs());
            level.max_abs_measured = level.max_abs_measured.max(rec.measured.abs());
            level.records.push(rec);
        }
        levels.push(level);
    }
    let pass = levels.windows(2).all(|w| w[1].max_rel_error <= w[0].max_rel_error);
    Ok(JumpMatchReport { levels, pass })
}

#[cfg(test)]
mod tests;
