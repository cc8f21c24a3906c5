mod common;

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use swedge_core::*;

fn grid_from_seed(seed: u64) -> DesignGrid {
    random_grid(&mut StdRng::seed_from_u64(seed), 12, 6)
}

fn cs_from_seed(seed: u64, model: usize) -> CompoundSymmetry {
    random_cs(&mut StdRng::seed_from_u64(seed), model)
}

fn params_strategy() -> impl Strategy<Value = StandardizedParams> {
    prop_oneof![
        (0.0..0.95f64).prop_map(|rho_w| StandardizedParams::CrossSectional { rho_w }),
        (0.0..0.95f64, 0.0..0.95f64)
            .prop_map(|(rho_w, pi)| StandardizedParams::Cohort { rho_w, pi }),
        (0.0..0.95f64, 0.0..1.0f64).prop_map(|(rho_w, f)| StandardizedParams::NestedExchangeable {
            rho_w,
            rho_a: rho_w * f
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_and_json_round_trip(seed in any::<u64>(), label in "[A-Za-z0-9 _+-]{0,20}") {
        let g = grid_from_seed(seed).with_label(label).unwrap();
        prop_assert_eq!(parse_design(&serialize_design(&g)).unwrap(), g.clone());
        prop_assert_eq!(parse_design(&serialize_design_json(&g, Some(true))).unwrap(), g);
    }

    #[test]
    fn interaction_column_is_product(seed in any::<u64>()) {
        let g = grid_from_seed(seed);
        let z = build_design_matrix(&g);
        let m = z.matrix();
        let (x, w, xw) = (
            z.effect_column(Effect::Trt1),
            z.effect_column(Effect::Trt2),
            z.effect_column(Effect::Interaction),
        );
        for r in 0..m.nrows() {
            prop_assert_eq!(m[(r, xw)], m[(r, x)] * m[(r, w)]);
            prop_assert_eq!(m[(r, 0)], 1.0);
        }
    }

    #[test]
    fn generated_designs_are_strictly_valid(seed in any::<u64>()) {
        prop_assert!(grid_from_seed(seed).validate(TransitionPolicy::Strict).is_valid());
    }

    #[test]
    fn standard_swd_validates(s in 1usize..6, k in 1usize..4, trt in prop::sample::select(vec![Condition::Trt1, Condition::Trt2, Condition::Both])) {
        let g = generate_standard_swd(s, k, trt).unwrap();
        prop_assert_eq!((g.clusters(), g.periods()), (s * k, s + 1));
        prop_assert!(g.validate(TransitionPolicy::Strict).is_valid());
    }

    #[test]
    fn closed_form_matches_oracle(seed in any::<u64>(), model in 0usize..3) {
        let g = grid_from_seed(seed);
        let cs = cs_from_seed(seed ^ 0x5eed, model);
        for mean in [MeanModel::Interaction, MeanModel::Additive] {
            match (closed_form_covariance(&g, &cs, mean), oracle_covariance(&g, &cs, mean)) {
                (Ok(a), Ok(b)) => prop_assert!(max_relative_error(&a, &b) < 1e-10),
                (Err(a), Err(b)) => prop_assert!(a.is_estimability() && b.is_estimability()),
                (a, b) => prop_assert!(false, "disagree on estimability: {:?} vs {:?}", a.err(), b.err()),
            }
        }
    }

    #[test]
    fn swapping_labels_permutes_covariance(seed in any::<u64>(), model in 0usize..3) {
        let g = grid_from_seed(seed);
        let cs = cs_from_seed(seed ^ 1, model);
        let (Ok(a), Ok(b)) = (
            closed_form_covariance(&g, &cs, MeanModel::Interaction),
            closed_form_covariance(&g.swap_treatments(), &cs, MeanModel::Interaction),
        ) else {
            return Ok(());
        };
        let swap = |e: Effect| match e {
            Effect::Trt1 => Effect::Trt2,
            Effect::Trt2 => Effect::Trt1,
            Effect::Interaction => Effect::Interaction,
        };
        for &e in a.effects() {
            for &f in a.effects() {
                prop_assert_eq!(a.covariance(e, f), b.covariance(swap(e), swap(f)));
            }
        }
    }

    #[test]
    fn cluster_order_is_irrelevant(seed in any::<u64>(), model in 0usize..3, shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        let g = grid_from_seed(seed);
        let cs = cs_from_seed(seed ^ 2, model);
        let mut order: Vec<usize> = (0..g.clusters()).collect();
        order.shuffle(&mut StdRng::seed_from_u64(shuffle));
        let h = g.permute_clusters(&order).unwrap();
        if let (Ok(a), Ok(b)) = (
            closed_form_covariance(&g, &cs, MeanModel::Interaction),
            closed_form_covariance(&h, &cs, MeanModel::Interaction),
        ) {
            prop_assert!(max_relative_error(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn covariance_is_positive_definite(seed in any::<u64>(), model in 0usize..3) {
        let g = grid_from_seed(seed);
        let cs = cs_from_seed(seed ^ 3, model);
        if let Ok(c) = closed_form_covariance(&g, &cs, MeanModel::Interaction) {
            let m = c.matrix();
            prop_assert_eq!(m, &m.transpose());
            prop_assert!(m.clone().cholesky().is_some());
        }
    }

    #[test]
    fn control_cluster_never_hurts(seed in any::<u64>(), model in 0usize..3) {
        let g = grid_from_seed(seed);
        let cs = cs_from_seed(seed ^ 4, model);
        let extra = DesignGrid::new("", vec![vec![Condition::Control; g.periods()]]).unwrap();
        let bigger = g.stack(&extra).unwrap();
        if let Ok(before) = oracle_covariance(&g, &cs, MeanModel::Interaction) {
            let after = oracle_covariance(&bigger, &cs, MeanModel::Interaction).unwrap();
            for &e in before.effects() {
                let (v0, v1) = (before.variance(e).unwrap(), after.variance(e).unwrap());
                prop_assert!(v1 <= v0 * (1.0 + 1e-10), "{:?}: {} -> {}", e, v0, v1);
            }
        }
    }

    #[test]
    fn sherman_morrison_inverts(d in 0.01..10.0f64, frac in 0.0..0.99f64, t in 2usize..9) {
        let cs = CompoundSymmetry::new(d, d * frac).unwrap();
        let inv = sherman_morrison_entries(&cs, t);
        let v = nalgebra::DMatrix::from_fn(t, t, |i, j| if i == j { cs.diag() } else { cs.offdiag() });
        let vi = nalgebra::DMatrix::from_fn(t, t, |i, j| if i == j { inv.diag } else { inv.offdiag });
        let err = (v * vi - nalgebra::DMatrix::<f64>::identity(t, t)).amax();
        prop_assert!(err < 1e-12, "{}", err);
    }

    #[test]
    fn standardize_round_trips(params in params_strategy(), sigma_y_sq in 0.1..20.0f64) {
        let raw = unstandardize(&params, sigma_y_sq).unwrap();
        prop_assert!((raw.total() - sigma_y_sq).abs() < 1e-12 * sigma_y_sq);
        let back = standardize(&raw, params.model()).unwrap();
        prop_assert!((back.rho_w() - params.rho_w()).abs() < 1e-12);
        prop_assert!((back.rho_a() - params.rho_a()).abs() < 1e-12);
        if let StandardizedParams::Cohort { pi, .. } = params {
            if params.rho_w() < 1.0 {
                prop_assert!((back.pi() - pi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn companion_parameters_reduce_to_cross_sectional(rho_w in 0.0..0.95f64, n in 1u32..60) {
        let cs = cluster_cov_entries(&StandardizedParams::CrossSectional { rho_w }, n).unwrap();
        let co = cluster_cov_entries(&StandardizedParams::Cohort { rho_w, pi: 0.0 }, n).unwrap();
        let ne = cluster_cov_entries(&StandardizedParams::NestedExchangeable { rho_w, rho_a: rho_w }, n).unwrap();
        prop_assert_eq!(cs, co);
        prop_assert_eq!(cs, ne);
    }

    #[test]
    fn raw_and_standardized_scales_agree(seed in any::<u64>(), params in params_strategy(), sigma_y_sq in 0.1..20.0f64, delta in 0.05..1.0f64) {
        let g = catalog_design(["fig1", "fig2b", "fig8-design1", "fig8-design2"][(seed % 4) as usize]).unwrap().grid;
        let n = 1 + (seed % 40) as u32;
        let raw = unstandardize(&params, sigma_y_sq).unwrap();
        let sigma_y = sigma_y_sq.sqrt();
        let std_spec = CorrelationSpec::standardized(params, n);
        let raw_spec = CorrelationSpec::raw(params.model(), raw, n);
        let spec = |scale: f64| {
            let e = EffectSpec::default().with_effect(Effect::Trt1, delta * scale);
            if g.contains(Condition::Trt2) {
                e.with_contrast("c", [1.0, -1.0, 0.0], delta * scale)
            } else {
                e
            }
        };
        match (design_power(&g, &std_spec, &spec(1.0)), design_power(&g, &raw_spec, &spec(sigma_y))) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.entries.len(), b.entries.len());
                for (x, y) in a.entries.iter().zip(&b.entries) {
                    prop_assert!((x.power - y.power).abs() < 1e-12, "{} vs {}", x.power, y.power);
                    prop_assert!((x.se * sigma_y - y.se).abs() < 1e-12 * y.se);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.err(), b.err()),
        }
    }

    #[test]
    fn power_is_monotone(e in 0.0..3.0f64, de in 1e-3..1.0f64, se in 0.05..2.0f64, dse in 1e-3..1.0f64, alpha in 0.001..0.5f64) {
        let p = wald_power(e, se, alpha).unwrap();
        prop_assert!(wald_power(e + de, se, alpha).unwrap() > p || p == 1.0);
        prop_assert!(wald_power(e, se + dse, alpha).unwrap() <= p);
        prop_assert!(p >= alpha - 1e-15 && p <= 1.0);
    }

    #[test]
    fn null_power_equals_alpha(se in 1e-3..10.0f64, alpha in 1e-4..0.999f64) {
        prop_assert!((wald_power(0.0, se, alpha).unwrap() - alpha).abs() <= 1e-15);
    }
}

#[test]
fn sweep_order_is_input_order() {
    let g = catalog_design("fig2b").unwrap().grid;
    let eff = EffectSpec::default().with_effect(Effect::Trt1, 0.4);
    let mut rhos = default_rho_grid();
    rhos.reverse();
    let rows = sweep(
        &g,
        CovarianceModel::CrossSectional,
        15,
        &eff,
        &SweepPoint::series(&rhos, Pairing::None),
    );
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.index, i);
        assert_eq!(row.point.rho_w, rhos[i]);
        let single = design_power(
            &g,
            &CorrelationSpec::standardized(
                StandardizedParams::CrossSectional { rho_w: rhos[i] },
                15,
            ),
            &eff,
        )
        .unwrap();
        assert_eq!(row.result.as_ref().unwrap(), &single);
    }
}

#[test]
fn single_treatment_matches_hussey_hughes() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 50 {
        let g = random_single_treatment_grid(&mut rng, 12, 6);
        let cs = random_cs(&mut rng, 0);
        let Ok(c) = closed_form_covariance(&g, &cs, MeanModel::Interaction) else {
            continue;
        };
        let hh = hussey_hughes_variance(&g, &cs);
        let v = c.variance(Effect::Trt1).unwrap();
        assert!(((v - hh) / hh).abs() < 1e-10, "{v} vs {hh}");
        checked += 1;
    }
}
