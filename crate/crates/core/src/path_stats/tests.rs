use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::counterexamples::poisson_brownian_paths;
use crate::levy_measure::{LevyMeasureSpec, MarkMeasure, RandomMeasureSpec, WeightedMark};
use crate::series_sim::{path_rng, uniform_grid, SeriesConfig, Simulator};

fn stable_spec(alpha: f64) -> RandomMeasureSpec {
    RandomMeasureSpec::levy_driven(LevyMeasureSpec::stable(alpha, 1.0).unwrap())
}

fn simulator(kernel: KernelSpec, spec: &RandomMeasureSpec, n_terms: usize, grid: usize, seed: u64) -> Simulator {
    Simulator::new(&SeriesConfig::new(1.0, n_terms, grid, seed), spec, &kernel).unwrap()
}

#[test]
fn trivial_variations() {
    assert_eq!(quadratic_variation(&[2.0; 7]), 0.0);
    assert_eq!(total_variation(&[2.0; 7]), 0.0);
    let step = [0.0, 0.0, 1.0, 1.0];
    assert_eq!(quadratic_variation(&step), 1.0);
    assert_eq!(total_variation(&step), 1.0);
    let mono = [0.0, 0.3, 0.35, 1.2, 4.0];
    assert!((total_variation(&mono) - 4.0).abs() < 1e-15);
}

#[test]
fn fv_verdict_rules() {
    assert_eq!(fv_verdict(&[1.0, 1.0]), FvVerdict::Inconclusive);
    assert_eq!(fv_verdict(&[1.0, 1.2, 1.21]), FvVerdict::Stabilizing);
    assert_eq!(fv_verdict(&[1.0, 1.5, 2.2]), FvVerdict::Diverging);
    assert_eq!(fv_verdict(&[1.0, 1.01, 1.2]), FvVerdict::Inconclusive);
    assert_eq!(fv_verdict(&[0.0, 0.0, 0.0]), FvVerdict::Stabilizing);
}

#[test]
fn variation_report_needs_nesting() {
    assert!(variation_report(&[0.0; 10], 3).is_err());
    let r = variation_report(&[0.0; 9], 4).unwrap();
    assert_eq!(r.grid_sizes, vec![1, 2, 4, 8]);
}

fn random_walk() -> impl Strategy<Value = Vec<f64>> {
    (2usize..6, prop::collection::vec(-5.0f64..5.0, 64)).prop_map(|(k, steps)| {
        let n = 1 << k;
        let mut x = vec![0.0];
        for s in steps.into_iter().take(n) {
            let last = *x.last().unwrap();
            x.push(last + s);
        }
        x
    })
}

proptest! {
    #[test]
    fn qv_bounded_by_tv_times_max_increment(path in random_walk()) {
        prop_assert!(quadratic_variation(&path) <= total_variation(&path) * max_increment(&path));
    }

    #[test]
    fn tv_non_decreasing_on_nested_grids(path in random_walk()) {
        let levels = (path.len() - 1).trailing_zeros() as usize + 1;
        let r = variation_report(&path, levels).unwrap();
        prop_assert!(r.tv.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
    }
}

#[test]
fn insufficient_paths() {
    let paths = vec![vec![0.0, 1.0, 2.0]; 999];
    assert_eq!(
        independence_test(&paths, &[((0, 1), (1, 2))]),
        Err(StatsError::InsufficientPaths { needed: 1000, got: 999 })
    );
}

#[test]
fn iid_increments_pass() {
    let paths: Vec<Vec<f64>> = (0..4000)
        .map(|p| {
            let mut rng = path_rng(5, p);
            let mut x = vec![0.0];
            for _ in 0..4 {
                let z: f64 = rng.sample(StandardNormal);
                x.push(x.last().unwrap() + z);
            }
            x
        })
        .collect();
    let r = independence_test(&paths, &[((0, 1), (1, 2)), ((0, 2), (2, 4))]).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn example_process_fails() {
    let paths = poisson_brownian_paths(10_000, &[0.0, 1.0, 2.0], 1.0, 9);
    let r = independence_test(&paths, &[((0, 1), (1, 2))]).unwrap();
    assert!(!r.pass);
    assert!(r.max_cf_z() > 5.0, "{r:?}");
    // Uncorrelated: the failure comes from the characteristic functions.
    assert!(r.max_abs_correlation() <= r.correlation_bound);
}

#[test]
fn stable_step_m_passes() {
    let sim = simulator(KernelSpec::step(), &stable_spec(1.5), 2000, 8, 21);
    let paths: Vec<Vec<f64>> = sim.simulate(2000).unwrap().into_iter().map(|(_, b)| b.m).collect();
    let r = independence_test(&paths, &[((0, 2), (2, 4)), ((1, 3), (5, 8)), ((0, 4), (4, 8))]).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn step_kernel_jumps_and_qv() {
    let spec = stable_spec(1.5);
    let ens = simulator(KernelSpec::step(), &spec, 3000, 10, 4).ensemble(0).unwrap();
    let bundles: Vec<PathBundle> = [250, 500, 1000]
        .iter()
        .map(|&g| simulator(KernelSpec::step(), &spec, 3000, g, 4).bundle(&ens).unwrap())
        .collect();
    let r = jump_match(&bundles, &ens, &KernelSpec::step(), 20).unwrap();
    assert_eq!(r.levels.len(), 3);
    for level in &r.levels {
        assert_eq!(level.records.len(), 20);
        assert!(level.max_cell_error < 1e-12, "{}", level.max_cell_error);
    }
    let qv_m = jump_square_sum(&ens, &KernelSpec::step(), 1.0).unwrap();
    let fine = bundles.last().unwrap();
    // Jumps sharing a cell alias into cross terms; the largest dominate.
    let qv = quadratic_variation(&fine.x);
    assert!((qv - qv_m).abs() < 0.1 * qv_m, "qv={qv} sum={qv_m}");
}

#[test]
fn ou_predicted_jump_is_r() {
    let spec = stable_spec(1.5).with_marks(MarkMeasure::Discrete(vec![WeightedMark { value: -1.0, weight: 1.0 }]));
    let kernel = KernelSpec::ou();
    let ens = simulator(kernel.clone(), &spec, 200, 10, 2).ensemble(0).unwrap();
    let bundles: Vec<PathBundle> =
        [200, 800, 3200].iter().map(|&g| simulator(kernel.clone(), &spec, 200, g, 2).bundle(&ens).unwrap()).collect();
    let r = jump_match(&bundles, &ens, &kernel, 5).unwrap();
    for rec in &r.levels[0].records {
        assert_eq!(rec.predicted, rec.r);
    }
    assert!(r.levels[2].max_rel_error < r.levels[0].max_rel_error);
}

#[test]
fn fractional_jumps_vanish() {
    let spec = stable_spec(1.5);
    let kernel = KernelSpec::fractional(0.25);
    let ens = simulator(kernel.clone(), &spec, 500, 10, 8).ensemble(0).unwrap();
    let bundles: Vec<PathBundle> =
        [250, 1000, 4000].iter().map(|&g| simulator(kernel.clone(), &spec, 500, g, 8).bundle(&ens).unwrap()).collect();
    let r = jump_match(&bundles, &ens, &kernel, 20).unwrap();
    assert!(r.levels[0].records.iter().all(|rec| rec.predicted == 0.0));
    assert!(r.pass);
    assert!(r.levels[2].max_abs_measured < r.levels[0].max_abs_measured);
}

#[test]
fn tempered_fractional_a_stabilizes() {
    // γ = 0.4 > 1 − 1/1.5: A has finite variation.
    let spec = RandomMeasureSpec::levy_driven(LevyMeasureSpec::tempered_stable(1.5, 1.0, 1.0).unwrap());
    let kernel = KernelSpec::fractional(0.4);
    let sim = Simulator::new(
        &SeriesConfig { grid: uniform_grid(1.0, 4096), ..SeriesConfig::new(1.0, 400, 4096, 3) },
        &spec,
        &kernel,
    )
    .unwrap();
    let b = sim.bundle(&sim.ensemble(0).unwrap()).unwrap();
    let r = variation_report(&b.a, 5).unwrap();
    assert_eq!(r.verdict_fv, FvVerdict::Stabilizing, "{r:?}");
}
