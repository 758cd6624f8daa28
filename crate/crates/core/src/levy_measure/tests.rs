use proptest::prelude::*;

use super::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn truncation_examples() {
    assert_eq!(truncate(0.5), 0.5);
    assert_eq!(truncate(-3.0), -1.0);
    assert_eq!(truncate(1.0), 1.0);
}

#[test]
fn stable_tail_mass_and_inverse() {
    let rho = LevyMeasureSpec::stable(1.5, 1.5).unwrap();
    assert!(close(rho.tail_mass(1.0, Side::Positive), 1.0, 1e-15));
    assert!(close(rho.tail_mass(4.0, Side::Positive), 0.125, 1e-15));
    assert!(close(rho.tail_inverse(1.0), 1.0, 1e-15));
    assert!(close(rho.tail_inverse(8.0), 0.25, 1e-15));
    assert!(close(rho.tail_inverse(-8.0), -0.25, 1e-15));
}

#[test]
fn compound_poisson_tail() {
    let rho = LevyMeasureSpec::compound_poisson(vec![Atom { position: 1.0, mass: 2.0 }]).unwrap();
    assert_eq!(rho.tail_mass(0.5, Side::Positive), 2.0);
    assert_eq!(rho.tail_inverse(3.0), 0.0);
    assert_eq!(rho.tail_inverse(1.0), 1.0);
    assert_eq!(rho.tail_inverse(-1.0), 0.0);
}

#[test]
fn compound_poisson_multiple_atoms() {
    let rho = LevyMeasureSpec::compound_poisson(vec![
        Atom { position: 2.0, mass: 0.5 },
        Atom { position: 1.0, mass: 1.0 },
        Atom { position: -3.0, mass: 0.25 },
    ])
    .unwrap();
    assert_eq!(rho.tail_inverse(0.4), 2.0);
    assert_eq!(rho.tail_inverse(0.5), 1.0);
    assert_eq!(rho.tail_inverse(1.49), 1.0);
    assert_eq!(rho.tail_inverse(1.5), 0.0);
    assert_eq!(rho.tail_inverse(-0.1), -3.0);
    assert!(!rho.is_symmetric());
}

#[test]
fn char_b_examples() {
    let cp = LevyMeasureSpec::compound_poisson(vec![Atom { position: 0.8, mass: 1.0 }]).unwrap();
    let spec = RandomMeasureSpec::levy_driven(cp);
    let v = Mark::indexed(0.0, 0);
    assert!(close(spec.char_b(2.0, &v).unwrap(), -0.6, 1e-14));
    assert_eq!(spec.char_b(1.0, &v).unwrap(), 0.0);

    let stable = RandomMeasureSpec::levy_driven(LevyMeasureSpec::stable(1.5, 1.0).unwrap());
    assert_eq!(stable.char_b(3.7, &v).unwrap(), 0.0);

    let with_drift = stable.clone().with_drift(ParamFn::Constant(1.0));
    assert_eq!(with_drift.char_b(0.0, &v).unwrap(), 0.0);
}

#[test]
fn char_k_examples() {
    let stable = RandomMeasureSpec::levy_driven(LevyMeasureSpec::stable(1.5, 1.0).unwrap());
    let v = Mark::indexed(0.0, 0);
    assert_eq!(stable.char_k(0.0, &v).unwrap(), 0.0);
    assert!(close(stable.char_k(1.0, &v).unwrap(), 16.0 / 3.0, 1e-14));
    let quad = stable.rho(&v).unwrap().profile_quadrature(Profile::TruncSquare, 1.0).unwrap();
    assert!(close(quad, 16.0 / 3.0, 1e-7), "{quad}");

    let gaussian = RandomMeasureSpec::levy_driven(LevyMeasureSpec::zero()).with_gaussian_var(ParamFn::Constant(1.0));
    assert_eq!(gaussian.char_k(1.0, &v).unwrap(), 1.0);
}

#[test]
fn psi_examples() {
    let rho = LevyMeasureSpec::stable(1.5, 1.0).unwrap();
    assert!(close(rho.psi_integral(1.0).unwrap(), 8.0, 1e-14));
    assert!(close(rho.psi_integral_quadrature(1.0).unwrap(), 8.0, 1e-7));
    assert_eq!(rho.psi_integral(0.0).unwrap(), 0.0);

    let tempered = LevyMeasureSpec::tempered_stable(1.5, 1.0, 1.0).unwrap();
    let t = tempered.psi_integral(1.0).unwrap();
    assert!(t > 0.0 && t < 8.0, "{t}");

    let low = LevyMeasureSpec::stable(0.8, 1.0).unwrap();
    assert_eq!(low.psi_integral(1.0).unwrap(), f64::INFINITY);
}

#[test]
fn stable_psi_constant_grid() {
    for alpha in [1.2, 1.5, 1.8] {
        for c in [0.5, 1.0] {
            let rho = LevyMeasureSpec::stable(alpha, c).unwrap();
            let constant = 2.0 * c * (1.0 / (2.0 - alpha) + 1.0 / (alpha - 1.0));
            for u in [0.1, 1.0, 10.0] {
                let q = rho.psi_integral_quadrature(u).unwrap() / u.powf(alpha);
                assert!((q / constant - 1.0).abs() < 1e-6, "α={alpha} c={c} u={u}: {q} vs {constant}");
            }
        }
    }
}

#[test]
fn tempered_psi_asymptotics() {
    // C₁ u^α at infinity, C₂ u² at zero.
    let rho = LevyMeasureSpec::tempered_stable(1.5, 1.0, 1.0).unwrap();
    let big = |u: f64| rho.psi_integral(u).unwrap() / u.powf(1.5);
    let small = |u: f64| rho.psi_integral(u).unwrap() / (u * u);
    assert!((big(1e6) / big(1e5) - 1.0).abs() < 0.01);
    assert!((small(1e-6) / small(1e-5) - 1.0).abs() < 0.01);
    assert_eq!(rho.growth(Profile::Psi), (Growth::Power(2.0), Growth::Power(1.5)));
}

#[test]
fn tempered_tail_mass_matches_quadrature() {
    let rho = LevyMeasureSpec::tempered_stable(1.5, 2.0, 0.7).unwrap();
    for x in [0.01, 0.3, 0.5, 1.0, 4.0] {
        let direct = quad::tail_segment(
            |y: f64| rho.side_density(y, Side::Positive).unwrap(),
            x,
            TailBehaviour::Exponential,
            Tolerance::new(0.0, 1e-13),
        )
        .value;
        let closed = rho.tail_mass(x, Side::Positive);
        assert!((direct / closed - 1.0).abs() < 1e-10, "x={x}: {direct} vs {closed}");
    }
}

#[test]
fn ratio_conditions() {
    let stable = LevyMeasureSpec::stable(1.5, 1.0).unwrap();
    assert_eq!(stable.ratio_u0(), Condition::Satisfied);
    for (_, r) in stable.ratio_witness() {
        assert!(close(r, 1.0, 1e-12));
    }
    assert_eq!(stable.ratio_bounded(), Condition::Satisfied);

    let tempered = LevyMeasureSpec::tempered_stable(1.2, 1.0, 1.0).unwrap();
    assert_eq!(tempered.ratio_u0(), Condition::Satisfied);
    assert_eq!(tempered.ratio_bounded(), Condition::Satisfied);
    let r = tempered.ratio_at(10.0).unwrap();
    assert!(r.is_finite() && r > 0.0);

    let cp = LevyMeasureSpec::compound_poisson(vec![Atom { position: 1.0, mass: 1.0 }]).unwrap();
    assert_eq!(cp.ratio_bounded(), Condition::Violated);
    assert_eq!(cp.ratio_at(0.5).unwrap(), f64::INFINITY);

    let heavy = LevyMeasureSpec::stable(0.8, 1.0).unwrap();
    assert_eq!(heavy.ratio_u0(), Condition::Violated);
}

#[test]
fn ratio_u00_for_fields() {
    let uniform = RandomMeasureSpec::levy_driven(LevyMeasureSpec::stable(1.5, 1.0).unwrap());
    assert_eq!(uniform.ratio_u00().unwrap(), Condition::Satisfied);

    let marks = MarkMeasure::Discrete(vec![
        WeightedMark { value: -1.0, weight: 0.5 },
        WeightedMark { value: -2.0, weight: 0.5 },
    ]);
    let multi = RandomMeasureSpec {
        marks: marks.clone(),
        drift: ParamFn::Constant(0.0),
        gaussian_var: ParamFn::Constant(0.0),
        levy: LevyField::MultiStable { alpha: ParamFn::PerMark { per_mark: vec![1.2, 1.8] }, c: 1.0 },
    };
    assert_eq!(multi.ratio_u00().unwrap(), Condition::Satisfied);

    let cp = RandomMeasureSpec::levy_driven(
        LevyMeasureSpec::compound_poisson(vec![Atom { position: 1.0, mass: 1.0 }]).unwrap(),
    );
    assert_eq!(cp.ratio_u00().unwrap(), Condition::Violated);
}

#[test]
fn declared_exponents_are_checked() {
    let s = LevyMeasureSpec::stable(1.5, 1.0).unwrap();
    assert!(s.clone().with_declared(Some(Exponent::Power(-2.5)), Some(Exponent::Power(-1.5))).is_ok());
    assert!(matches!(
        s.with_declared(Some(Exponent::Power(-2.0)), None),
        Err(LevyError::ExponentMismatch { .. })
    ));
}

#[test]
fn tabulated_density_matches_stable() {
    // Stable density on a grid with the stable exponents declared.
    let (alpha, c) = (1.5, 1.0);
    let mut points = Vec::new();
    for k in -200..=200 {
        let y = 10f64.powf(k as f64 / 50.0);
        let d = c * y.powf(-alpha - 1.0);
        points.push((y, d));
        points.push((-y, d));
    }
    let tab = LevyMeasureSpec::tabulated(&points, Exponent::Power(-alpha - 1.0), Exponent::Power(-alpha)).unwrap();
    assert!(tab.is_symmetric());
    let stable = LevyMeasureSpec::stable(alpha, c).unwrap();
    for x in [0.01, 0.5, 2.0, 50.0] {
        let a = tab.tail_mass(x, Side::Positive);
        let b = stable.tail_mass(x, Side::Positive);
        assert!((a / b - 1.0).abs() < 2e-3, "x={x}: {a} vs {b}");
    }
    for s in [0.1, 1.0, 30.0] {
        let a = tab.tail_inverse(s);
        let b = stable.tail_inverse(s);
        assert!((a / b - 1.0).abs() < 2e-3, "s={s}: {a} vs {b}");
    }
    let psi = tab.psi_integral(1.0).unwrap();
    assert!((psi / 8.0 - 1.0).abs() < 5e-3, "{psi}");
}

#[test]
fn tabulated_without_exponents_is_undecided() {
    let tab = LevyMeasureSpec::tabulated(&[(0.5, 1.0), (1.0, 1.0)], Exponent::Undeclared, Exponent::Undeclared).unwrap();
    assert!(matches!(tab.psi_integral(1.0), Err(LevyError::Undeclared(_))));
    assert_eq!(tab.growth(Profile::Psi), (Growth::Unknown, Growth::Unknown));
    assert_eq!(tab.ratio_u0(), Condition::Unknown);
}

#[test]
fn tabulated_asymmetric_drift_correction() {
    // Uniform density on (0.5, 2) only.
    let tab = LevyMeasureSpec::tabulated(&[(0.5, 1.0), (2.0, 1.0)], Exponent::Vanishing, Exponent::Vanishing).unwrap();
    // ∫_{0.5}^{2} (⟦xy⟧ − x⟦y⟧) dy with x = 1: ∫_1^2 (1 − 1) + ∫_{0.5}^{1} 0 = 0.
    assert!(tab.b_integral(1.0).unwrap().abs() < 1e-12);
    // x = 2: ∫_{0.5}^{2} (⟦2y⟧ − 2⟦y⟧) dy = ∫_{0.5}^{1} (1 − 2y) dy + ∫_1^2 (1 − 2) dy = −0.25 − 1.
    assert!(close(tab.b_integral(2.0).unwrap(), -1.25, 1e-10));
}

#[test]
fn mark_power_law_quantiles() {
    let p = PowerLawMarks::new(f64::NEG_INFINITY, -1.0, 1.0, -2.0).unwrap();
    assert!(close(p.total_mass(), 1.0, 1e-15));
    assert!(close(p.quantile(0.5), -2.0, 1e-14));
    let q = PowerLawMarks::new(-1.0, 0.0, 1.0, 1.6).unwrap();
    assert!(close(q.total_mass(), 1.0 / 2.6, 1e-15));
    let r = PowerLawMarks::new(-1.0, 0.0, 1.0, -1.4).unwrap();
    assert_eq!(r.total_mass(), f64::INFINITY);
}

#[test]
fn deterministic_specs_are_rejected() {
    let spec = RandomMeasureSpec::levy_driven(LevyMeasureSpec::zero());
    assert!(matches!(spec.validate(), Err(LevyError::Deterministic(_))));
}

fn family() -> impl Strategy<Value = LevyMeasureSpec> {
    prop_oneof![
        (0.2f64..1.95, 0.1f64..3.0).prop_map(|(a, c)| LevyMeasureSpec::stable(a, c).unwrap()),
        (0.2f64..1.95, 0.2f64..5.0, 0.1f64..3.0)
            .prop_map(|(a, l, c)| LevyMeasureSpec::tempered_stable(a, l, c).unwrap()),
        prop::collection::vec((-5.0f64..5.0, 0.01f64..3.0), 1..5).prop_map(|atoms| {
            LevyMeasureSpec::compound_poisson(
                atoms
                    .into_iter()
                    .map(|(x, m)| Atom { position: if x == 0.0 { 1.0 } else { x }, mass: m })
                    .collect(),
            )
            .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generalised_inverse_property(rho in family(), log_s in -4.0f64..4.0, negative in any::<bool>()) {
        let s = 10f64.powf(log_s) * if negative { -1.0 } else { 1.0 };
        let side = if negative { Side::Negative } else { Side::Positive };
        let r = rho.tail_inverse(s).abs();
        let level = s.abs();
        if r > 0.0 {
            let below = r * (1.0 - 1e-9);
            prop_assert!(rho.tail_mass(below, side) > level);
        }
        let above = r * (1.0 + 1e-9) + 1e-300;
        prop_assert!(rho.tail_mass(above, side) <= level * (1.0 + 1e-12));
    }

    #[test]
    fn symmetry_kills_b(x in -50.0f64..50.0, alpha in 0.2f64..1.95) {
        let spec = RandomMeasureSpec::levy_driven(LevyMeasureSpec::tempered_stable(alpha, 1.0, 1.0).unwrap());
        prop_assert_eq!(spec.char_b(x, &Mark::indexed(0.0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn psi_sandwich(rho in family(), u in 0.01f64..100.0) {
        // ψ(z) = ∫₀^z (w ∧ 1) dw satisfies ψ ≤ z ∧ z² ≤ 2ψ, hence Q_ψ ≤ ∫(|xu| ∧ |xu|²)ρ ≤ 2Q_ψ.
        let psi = |z: f64| if z <= 1.0 { 0.5 * z * z } else { z - 0.5 };
        let value = rho.psi_integral(u).unwrap();
        let q_psi = match rho.family() {
            LevyFamily::CompoundPoisson { atoms } => atoms.iter().map(|a| a.mass * psi((a.position * u).abs())).sum(),
            LevyFamily::SymmetricTemperedStable { alpha, .. } if *alpha > 1.0 => {
                2.0 * quad::half_line(
                    |y: f64| psi(y * u) * rho.side_density(y, Side::Positive).unwrap(),
                    &[1.0 / u],
                    OriginBehaviour::Power(1.0 - alpha),
                    TailBehaviour::Exponential,
                    Tolerance::new(1e-12, 1e-10),
                ).value
            }
            _ => return Ok(()),
        };
        prop_assert!(q_psi <= value * (1.0 + 1e-7));
        prop_assert!(value <= 2.0 * q_psi * (1.0 + 1e-7));
    }

    #[test]
    fn k_is_finite(rho in family(), x in -1e3f64..1e3) {
        let spec = RandomMeasureSpec::levy_driven(rho);
        let k = spec.char_k(x, &Mark::indexed(0.0, 0)).unwrap();
        prop_assert!(k.is_finite() && k >= 0.0);
    }

    #[test]
    fn symmetric_families_have_symmetric_tails(rho in family(), x in 0.01f64..10.0) {
        if rho.is_symmetric() {
            prop_assert_eq!(rho.tail_mass(x, Side::Positive), rho.tail_mass(x, Side::Negative));
        }
    }
}
