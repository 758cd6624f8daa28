use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::counterexamples::{
    conditional_mean, conditional_mean_gap, factorization_identity_sides, poisson_brownian_factorization_gap,
};
use crate::criteria::{
    closed_form_fractional, closed_form_multistable, closed_form_stable, closed_form_supflp, closed_form_supou,
    closed_form_tempered, verdict, CriteriaError, CriteriaReport, Verdict,
};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::levy_measure::{LevyFamily, LevyField, LevyMeasureSpec, Mark, MarkMeasure, ParamFn, RandomMeasureSpec};
use crate::path_stats::{
    independence_test, jump_match, jump_square_sum, variation_report, Interval, VariationReport,
};
use crate::series_sim::{uniform_grid, SeriesConfig, Simulator};

use super::config::{echo_header, parse_header, InstanceConfig, TableDriver};
use super::CliError;

/// Where CSV tables go: files in a directory, or standard output.
#[derive(Debug, Clone)]
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn open(&self, name: &str) -> Result<Box<dyn Write>, CliError> {
        match &self.dir {
            Some(d) => {
                fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
                let p = d.join(name);
                let f = fs::File::create(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Ok(Box::new(io::BufWriter::new(f)))
            }
            None => {
                let mut w: Box<dyn Write> = Box::new(io::stdout().lock());
                writeln!(w, "#! table: {}", name.trim_end_matches(".csv"))?;
                Ok(w)
            }
        }
    }
}

fn write_table(
    out: &Output,
    name: &str,
    header: Option<&str>,
    columns: &[String],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut w = out.open(name)?;
    if let Some(h) = header {
        w.write_all(h.as_bytes())?;
    }
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(columns)?;
        for r in rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(())
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn report_columns() -> Vec<String> {
    let mut c = CriteriaReport::columns();
    c.push("notes".into());
    c
}

fn report_row(r: &CriteriaReport) -> Vec<String> {
    let mut row = r.row();
    row.push(r.notes.join("; "));
    row
}

fn single_mark(marks: &MarkMeasure) -> Option<Mark> {
    match marks {
        MarkMeasure::Discrete(list) => {
            let live: Vec<_> = list.iter().enumerate().filter(|(_, m)| m.weight > 0.0).collect();
            match live.as_slice() {
                [(i, m)] => Some(Mark::indexed(m.value, *i)),
                _ => None,
            }
        }
        MarkMeasure::PowerLaw(_) => None,
    }
}

/// Closed forms that apply to `(spec, kernel)`, in a fixed order. Parameter
/// ranges outside a closed form's domain skip it.
fn closed_forms(spec: &RandomMeasureSpec, kernel: &KernelSpec) -> Result<Vec<CriteriaReport>, CliError> {
    let mut out = Vec::new();
    let mut push = |r: Result<CriteriaReport, CriteriaError>| -> Result<(), CliError> {
        match r {
            Ok(rep) => out.push(rep),
            Err(CriteriaError::Domain(_)) => {}
            Err(e) => return Err(e.into()),
        }
        Ok(())
    };
    let unit_weight = matches!(&spec.marks, MarkMeasure::Discrete(l) if l.iter().filter(|m| m.weight > 0.0).all(|m| m.weight == 1.0));
    let plain = spec.drift.is_zero() && kernel.scale == 1.0;
    match (&spec.levy, &kernel.family) {
        (LevyField::Uniform(rho), KernelFamily::Fractional { gamma }) => match gamma {
            ParamFn::Constant(g) => {
                let one_mark = single_mark(&spec.marks).is_some() && plain && unit_weight;
                if let (true, ParamFn::Constant(s2)) = (one_mark, &spec.gaussian_var) {
                    push(closed_form_fractional(rho, *s2, *g))?;
                }
                stable_like(&mut push, spec, kernel, rho)?;
            }
            _ => push(closed_form_supflp(gamma, spec))?,
        },
        (LevyField::Uniform(rho), KernelFamily::ExponentialOu) => {
            if spec.gaussian_var.is_zero() && spec.drift.is_zero() && kernel.scale == 1.0 {
                push(closed_form_supou(&spec.marks, rho))?;
            }
        }
        (LevyField::Uniform(rho), _) => stable_like(&mut push, spec, kernel, rho)?,
        (LevyField::MultiStable { alpha, c }, _) => push(closed_form_multistable(kernel, alpha, *c, &spec.marks))?,
        (LevyField::PerMark(_), _) => {}
    }
    Ok(out)
}

fn stable_like(
    push: &mut dyn FnMut(Result<CriteriaReport, CriteriaError>) -> Result<(), CliError>,
    spec: &RandomMeasureSpec,
    kernel: &KernelSpec,
    rho: &LevyMeasureSpec,
) -> Result<(), CliError> {
    let Some(mark) = single_mark(&spec.marks) else { return Ok(()) };
    if !(spec.gaussian_var.is_zero() && spec.drift.is_zero()) {
        return Ok(());
    }
    match rho.family() {
        LevyFamily::SymmetricStable { alpha, c } => push(closed_form_stable(kernel, &mark, *alpha, *c)),
        LevyFamily::SymmetricTemperedStable { alpha, lambda, c } => {
            push(closed_form_tempered(kernel, &mark, *alpha, *lambda, *c))
        }
        _ => Ok(()),
    }
}

/// General verdict first, then every applicable closed form. The exit verdict
/// is the general one unless it is inconclusive and a closed form decides.
pub fn check_reports(cfg: &InstanceConfig) -> Result<(Verdict, Vec<CriteriaReport>), CliError> {
    let spec = cfg.random_measure()?;
    let kernel = cfg.kernel_spec()?;
    let mut reports = vec![verdict(&spec, &kernel)];
    reports.extend(closed_forms(&spec, &kernel)?);
    let v = reports
        .iter()
        .map(|r| r.verdict)
        .find(|v| *v != Verdict::Inconclusive)
        .unwrap_or(Verdict::Inconclusive);
    Ok((v, reports))
}

pub fn cmd_check(cfg: &InstanceConfig, out: &Output) -> Result<Verdict, CliError> {
    let (v, reports) = check_reports(cfg)?;
    let mut cols = vec!["instance".to_string()];
    cols.extend(report_columns());
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![cfg.process.clone()];
            row.extend(report_row(r));
            row
        })
        .collect();
    write_table(out, "check.csv", Some(&echo_header(cfg)), &cols, &rows)?;
    Ok(v)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Per-path and ensemble CSVs for every path; returns the number of files.
pub fn cmd_simulate(cfg: &InstanceConfig, out: &Output) -> Result<usize, CliError> {
    let dir = out.dir().ok_or_else(|| CliError::Usage("simulate needs --out DIR".into()))?.to_path_buf();
    let spec = cfg.random_measure()?;
    let kernel = cfg.kernel_spec()?;
    let sc = cfg.series_config(spec.is_symmetric())?;
    let sim = Simulator::new(&sc, &spec, &kernel)?;
    let n_paths = cfg.simulation()?.paths;
    let header = echo_header(cfg);
    let sims = sim.simulate(n_paths)?;
    let out = Output::new(Some(dir));
    for (ens, b) in &sims {
        let rows: Vec<Vec<String>> = (0..b.grid.len())
            .map(|i| vec![fmt(b.grid[i]), fmt(b.x[i]), fmt(b.m[i]), fmt(b.a[i])])
            .collect();
        write_table(&out, &format!("path_{:05}.csv", ens.path), Some(&header), &strings(&["t", "x", "m", "a"]), &rows)?;
        let rows: Vec<Vec<String>> = (0..ens.len())
            .map(|j| {
                vec![
                    j.to_string(),
                    fmt(ens.gamma[j]),
                    ens.eps[j].to_string(),
                    fmt(ens.times[j]),
                    fmt(ens.marks[j].value),
                    fmt(ens.r[j]),
                ]
            })
            .collect();
        write_table(
            &out,
            &format!("ensemble_{:05}.csv", ens.path),
            Some(&header),
            &strings(&["i", "gamma", "eps", "t1", "t2", "r"]),
            &rows,
        )?;
    }
    Ok(2 * sims.len())
}

/// Verdict table of the fractional kernel over `(α, γ[, λ])`; returns the row count.
pub fn cmd_table(cfg: &InstanceConfig, out: &Output) -> Result<usize, CliError> {
    let t = cfg.table_block()?;
    let alphas = t.alpha.values("alpha")?;
    let gammas = t.gamma.values("gamma")?;
    let lambdas: Vec<Option<f64>> = match (t.driver, &t.lambda) {
        (TableDriver::Stable, _) => vec![None],
        (TableDriver::TemperedStable, Some(r)) => r.values("lambda")?.into_iter().map(Some).collect(),
        (TableDriver::TemperedStable, None) => vec![Some(1.0)],
    };
    let mut points = Vec::new();
    for &a in &alphas {
        for &g in &gammas {
            for &l in &lambdas {
                points.push((a, g, l));
            }
        }
    }
    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|&(a, g, l)| -> Result<Vec<String>, CliError> {
            let rho = match l {
                None => LevyMeasureSpec::stable(a, t.c),
                Some(l) => LevyMeasureSpec::tempered_stable(a, l, t.c),
            }
            .map_err(|e| CliError::Domain(format!("table: {e}")))?;
            if !(g > 0.0) {
                return Err(CliError::Domain(format!("table.gamma: {g} must be positive")));
            }
            let rep = verdict(&RandomMeasureSpec::levy_driven(rho), &KernelSpec::fractional(g));
            let mut row = vec![fmt(a), fmt(g), l.map(fmt).unwrap_or_default()];
            row.extend(report_row(&rep));
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut cols = strings(&["alpha", "gamma", "lambda"]);
    cols.extend(report_columns());
    write_table(out, "table.csv", Some(&echo_header(cfg)), &cols, &rows)?;
    Ok(rows.len())
}

fn stats_columns() -> Vec<String> {
    strings(&["instance", "series", "grid_size", "statistic", "value"])
}

fn variation_rows(instance: &str, series: &str, r: &VariationReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, &g) in r.grid_sizes.iter().enumerate() {
        rows.push(vec![instance.into(), series.into(), g.to_string(), "qv".into(), fmt(r.qv[k])]);
        rows.push(vec![instance.into(), series.into(), g.to_string(), "tv".into(), fmt(r.tv[k])]);
    }
    let finest = r.grid_sizes.last().map(|g| g.to_string()).unwrap_or_default();
    rows.push(vec![instance.into(), series.into(), finest, "verdict_fv".into(), r.verdict_fv.as_str().into()]);
    rows
}

/// Largest level count `≤ wanted` for which `intervals` halves evenly.
fn nested_levels(intervals: usize, wanted: usize) -> usize {
    let mut l = wanted.max(1);
    while l > 1 && (intervals % (1 << (l - 1)) != 0) {
        l -= 1;
    }
    l
}

/// Three disjoint interval pairs from the quarter points of an `n`-interval grid.
pub fn quarter_pairs(n: usize) -> Vec<(Interval, Interval)> {
    let q = n / 4;
    vec![((0, q), (q, 2 * q)), ((q, 2 * q), (2 * q, 3 * q)), ((0, 2 * q), (2 * q, n))]
}

pub fn cmd_stats(cfg: Option<&InstanceConfig>, inputs: &[PathBuf], out: &Output) -> Result<(), CliError> {
    if inputs.is_empty() {
        let cfg = cfg.ok_or_else(|| CliError::Usage("stats needs --config or --input".into()))?;
        let rows = stats_from_config(cfg)?;
        return write_table(out, "stats.csv", Some(&echo_header(cfg)), &stats_columns(), &rows);
    }
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(stats_from_file(p, cfg)?);
    }
    write_table(out, "stats.csv", None, &stats_columns(), &rows)
}

fn stats_from_config(cfg: &InstanceConfig) -> Result<Vec<Vec<String>>, CliError> {
    let spec = cfg.random_measure()?;
    let kernel = cfg.kernel_spec()?;
    let sc = cfg.series_config(spec.is_symmetric())?;
    let analysis = cfg.analysis();
    let n = sc.grid.len() - 1;
    let levels = analysis.levels.max(1);
    if n % (1 << (levels - 1)) != 0 {
        return Err(CliError::Config(format!(
            "simulation.grid_points = {n} must be divisible by 2^(analysis.levels − 1) = {}",
            1 << (levels - 1)
        )));
    }
    let sims: Vec<Simulator> = (0..levels)
        .rev()
        .map(|k| {
            let c = SeriesConfig { grid: uniform_grid(sc.horizon, n >> k), ..sc.clone() };
            Simulator::new(&c, &spec, &kernel)
        })
        .collect::<Result<_, _>>()?;
    let finest = sims.last().unwrap();
    let n_paths = cfg.simulation()?.paths;
    let per_path: Vec<(Vec<Vec<String>>, Vec<f64>)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<_, CliError> {
            let ens = finest.ensemble(p)?;
            let bundles = sims.iter().map(|s| s.bundle(&ens)).collect::<Result<Vec<_>, _>>()?;
            let fine = bundles.last().unwrap();
            let id = format!("path_{p:05}");
            let mut rows = Vec::new();
            for (series, v) in [("x", &fine.x), ("m", &fine.m), ("a", &fine.a)] {
                rows.extend(variation_rows(&id, series, &variation_report(v, levels)?));
            }
            let jm = jump_match(&bundles, &ens, &kernel, analysis.k_largest)?;
            for l in &jm.levels {
                let g = l.grid_size.to_string();
                for (stat, v) in [
                    ("jump_max_rel_error", l.max_rel_error),
                    ("jump_max_cell_error", l.max_cell_error),
                    ("jump_max_abs_measured", l.max_abs_measured),
                ] {
                    rows.push(vec![id.clone(), "x".into(), g.clone(), stat.into(), fmt(v)]);
                }
            }
            rows.push(vec![id.clone(), "x".into(), String::new(), "jump_match_pass".into(), jm.pass.to_string()]);
            let jumps = jump_square_sum(&ens, &kernel, sc.horizon)?;
            rows.push(vec![id, "m".into(), String::new(), "jump_square_sum".into(), fmt(jumps)]);
            Ok((rows, fine.m.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut m_paths = Vec::with_capacity(per_path.len());
    for (r, m) in per_path {
        rows.extend(r);
        m_paths.push(m);
    }
    if analysis.independence {
        let rep = independence_test(&m_paths, &quarter_pairs(n))?;
        let g = n.to_string();
        for (k, p) in rep.pairs.iter().enumerate() {
            for (stat, v) in [("correlation", p.correlation), ("cf_gap", p.cf_gap), ("cf_z", p.cf_z)] {
                rows.push(vec!["ensemble".into(), "m".into(), g.clone(), format!("{stat}_pair{k}"), fmt(v)]);
            }
        }
        rows.push(vec!["ensemble".into(), "m".into(), g.clone(), "correlation_bound".into(), fmt(rep.correlation_bound)]);
        rows.push(vec!["ensemble".into(), "m".into(), g, "independence_pass".into(), rep.pass.to_string()]);
    }
    Ok(rows)
}

fn read_csv(path: &Path) -> Result<(String, Vec<csv::StringRecord>, csv::StringRecord), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let head = rdr.headers()?.clone();
    let recs = rdr.records().collect::<Result<Vec<_>, _>>()?;
    Ok((text, recs, head))
}

fn column(head: &csv::StringRecord, recs: &[csv::StringRecord], name: &str, path: &Path) -> Result<Vec<f64>, CliError> {
    let i = head
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", path.display())))?;
    recs.iter()
        .map(|r| {
            r.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad value in column `{name}`", path.display())))
        })
        .collect()
}

fn stats_from_file(path: &Path, cfg: Option<&InstanceConfig>) -> Result<Vec<Vec<String>>, CliError> {
    let (text, recs, head) = read_csv(path)?;
    let echoed = parse_header(&text).ok();
    let analysis = cfg.or(echoed.as_ref()).map(|c| c.analysis()).unwrap_or_default();
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let t = column(&head, &recs, "t", path)?;
    let levels = nested_levels(t.len().saturating_sub(1), analysis.levels);
    let mut rows = Vec::new();
    for series in ["x", "m", "a"] {
        let v = column(&head, &recs, series, path)?;
        rows.extend(variation_rows(&id, series, &variation_report(&v, levels)?));
    }
    let ens_path = path.with_file_name(format!("{}.csv", id.replacen("path_", "ensemble_", 1)));
    if let (Some(c), true) = (echoed.as_ref(), ens_path != path && ens_path.exists()) {
        let kernel = c.kernel_spec()?;
        let horizon = *t.last().unwrap_or(&0.0);
        let (_, erecs, ehead) = read_csv(&ens_path)?;
        let t1 = column(&ehead, &erecs, "t1", &ens_path)?;
        let t2 = column(&ehead, &erecs, "t2", &ens_path)?;
        let r = column(&ehead, &erecs, "r", &ens_path)?;
        let mut s = 0.0;
        for j in 0..r.len() {
            if t1[j] > 0.0 && t1[j] <= horizon {
                let jump = r[j] * kernel.at(&Mark::new(t2[j])).map_err(|e| CliError::Domain(e.to_string()))?.f_at_zero();
                s += jump * jump;
            }
        }
        rows.push(vec![id, "m".into(), String::new(), "jump_square_sum".into(), fmt(s)]);
    }
    Ok(rows)
}

pub const DEMO_Y: (f64, f64, f64) = (-6.0, 6.0, 0.25);
pub const DEMO_CF: [f64; 9] = [-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0];

pub fn cmd_demo(out: &Output) -> Result<(), CliError> {
    let (lo, hi, step) = DEMO_Y;
    let n = ((hi - lo) / step).round() as usize;
    let rows: Vec<Vec<String>> = (0..=n)
        .map(|k| {
            let y = lo + step * k as f64;
            vec![fmt(y), fmt(conditional_mean(y)), fmt(conditional_mean_gap(y))]
        })
        .collect();
    write_table(out, "conditional_mean.csv", None, &strings(&["y", "conditional_mean", "gap_to_one"]), &rows)?;
    let mut rows = Vec::new();
    for &theta in &DEMO_CF {
        for &u in &DEMO_CF {
            let (lhs, rhs) = factorization_identity_sides(theta, u);
            rows.push(vec![fmt(theta), fmt(u), fmt(lhs), fmt(rhs), fmt(lhs - rhs), fmt(poisson_brownian_factorization_gap(theta, u))]);
        }
    }
    write_table(
        out,
        "factorization_gap.csv",
        None,
        &strings(&["theta", "u", "identity_lhs", "identity_rhs", "identity_gap", "cf_gap"]),
        &rows,
    )
}
