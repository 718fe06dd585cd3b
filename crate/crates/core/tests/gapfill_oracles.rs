use chrono::{TimeZone, Utc};
use fairmet_core::gapfill::*;
use fairmet_core::obs::{Season, Step, TimeSeries, VariableKind};
use fairmet_core::rng::SplitMix64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn hourly(station: &str, start_day: u32, values: Vec<Option<f64>>) -> TimeSeries<f64> {
    TimeSeries::new(
        station,
        VariableKind::Ta,
        Utc.with_ymd_and_hms(2021, 1, start_day, 0, 0, 0).unwrap(),
        Step::HOURLY,
        values,
        chrono_tz::UTC,
    )
    .unwrap()
}

fn random_design(n: usize, p: usize, seed: u64) -> DesignMatrix<f64> {
    let mut rng = SplitMix64::new(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.next_gaussian() * 3.0).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| v * (j as f64 - 1.5)).sum::<f64>() + rng.next_gaussian())
        .collect();
    DesignMatrix::from_rows((0..p).map(|j| format!("x{j}")).collect(), rows, y)
}

#[test]
fn ols_matches_closed_form_ridge_solution() {
    for (p, seed) in [(1, 1), (3, 2), (7, 3), (10, 4)] {
        let x = random_design(60, p, seed);
        let params = ModelParams::default();
        let m = GapFillModel::fit(ModelKind::Ols, &x, None, &params, 0).unwrap();
        let Fitted::Ols(ols) = m.fitted() else { panic!() };

        let n = x.len();
        let a = DMatrix::from_fn(n, p + 1, |i, j| if j < p { x.features.rows[i][j] } else { 1.0 });
        let mut d = DMatrix::<f64>::zeros(p + 1, p + 1);
        for j in 0..p {
            d[(j, j)] = params.ridge;
        }
        let lhs = a.transpose() * &a + d;
        let rhs = a.transpose() * DVector::from_vec(x.target.clone());
        let beta = lhs.lu().solve(&rhs).unwrap();
        for j in 0..p {
            assert!((ols.coefficients[j] - beta[j]).abs() < 1e-8, "p={p} j={j}");
        }
        assert!((ols.intercept - beta[p]).abs() < 1e-8);
    }
}

#[test]
fn ols_recovers_line_and_predicts_seven() {
    let x = DesignMatrix::from_rows(
        vec!["x".into()],
        (0..50).map(|i| vec![i as f64]).collect(),
        (0..50).map(|i| 2.0 * i as f64 + 1.0).collect(),
    );
    // Ridge shrinkage on this spread is ~1e-11, well inside the tolerance.
    let m = GapFillModel::fit(ModelKind::Ols, &x, None, &ModelParams::default(), 0).unwrap();
    let Fitted::Ols(ols) = m.fitted() else { panic!() };
    assert!((ols.coefficients[0] - 2.0).abs() < 1e-9);
    assert!((ols.intercept - 1.0).abs() < 1e-9);
    assert!((m.predict_row(&[3.0]).unwrap() - 7.0).abs() < 1e-9);
}

#[test]
fn single_unbagged_unlimited_tree_memorises_training_rows() {
    let x = random_design(150, 4, 11);
    let params = ModelParams {
        forest: ForestParams {
            n_trees: 1,
            max_depth: None,
            min_leaf: 1,
            mtry: None,
            bootstrap: false,
        },
        ..Default::default()
    };
    let m = GapFillModel::fit(ModelKind::RandomForest, &x, None, &params, 9).unwrap();
    let pred = m.predict(&x.features).unwrap();
    assert_eq!(pred, x.target);
}

#[test]
fn forest_prediction_is_the_mean_of_its_trees() {
    let x = random_design(120, 3, 5);
    let params = ModelParams {
        forest: ForestParams {
            n_trees: 7,
            ..Default::default()
        },
        ..Default::default()
    };
    let m = GapFillModel::fit(ModelKind::RandomForest, &x, None, &params, 3).unwrap();
    let Fitted::Forest(f) = m.fitted() else { panic!() };
    assert_eq!(f.trees().len(), 7);
    let probe = random_design(30, 3, 99);
    for row in &probe.features.rows {
        let per_tree: Vec<f64> = f.trees().iter().map(|t| t.predict_row(row)).collect();
        let mean = per_tree.iter().sum::<f64>() / per_tree.len() as f64;
        assert!((m.predict_row(row).unwrap() - mean).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gbdt_training_rmse_never_increases(seed in any::<u64>(), n in 20usize..300, p in 1usize..5) {
        let x = random_design(n, p, seed);
        let params = GbdtParams { rounds: 40, min_leaf: 1 + (seed % 10) as usize, ..Default::default() };
        let g = Gbdt::fit(&x.features.rows, &x.target, params);
        let h = g.train_rmse();
        for r in 0..h.len() - 1 {
            prop_assert!(h[r + 1] <= h[r], "round {r}: {} > {}", h[r + 1], h[r]);
        }
        // Independent loss evaluation after all rounds.
        let pred: Vec<f64> = x.features.rows.iter().map(|r| g.predict_row(r)).collect();
        let rmse = (pred.iter().zip(&x.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt();
        prop_assert!((rmse - h[h.len() - 1]).abs() < 1e-9);
    }
}

#[test]
fn constant_target_gives_constant_predictions() {
    let mut x = random_design(50, 3, 2);
    x.target = vec![4.25; 50];
    let probe = random_design(20, 3, 77);
    for kind in ModelKind::ML {
        let m = GapFillModel::fit(kind, &x, None, &ModelParams::default(), 1).unwrap();
        for v in m.predict(&probe.features).unwrap() {
            assert!((v - 4.25).abs() < 1e-9, "{kind}: {v}");
        }
    }
}

#[test]
fn fitting_is_deterministic_for_a_seed() {
    let x = random_design(200, 5, 21);
    for kind in ModelKind::ML {
        let a = GapFillModel::fit(kind, &x, None, &ModelParams::default(), 17).unwrap();
        let b = GapFillModel::fit(kind, &x, None, &ModelParams::default(), 17).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn temporal_features_at_new_year_midnight() {
    let t = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
    let f: [f64; 4] = temporal_features(t, chrono_tz::UTC);
    assert_eq!(f, [0.0, 1.0, 0.0, 1.0]);
}

#[test]
fn features_drop_rows_with_missing_neighbours() {
    let target = hourly("T", 1, vec![Some(1.0); 5]);
    let n1 = hourly("A", 1, vec![Some(2.0); 5]);
    let n2 = hourly("B", 1, vec![Some(3.0), Some(3.0), None, Some(3.0), Some(3.0)]);
    let rea = hourly("REANALYSIS:g1", 1, vec![Some(0.5); 5]);
    let nbrs = [n1, n2];
    let ctx = FeatureContext::new(&nbrs, Some(&rea));
    let x = build_features(&target, &ctx, FeatureSetKind::TemporalNeighbors, &[0, 1, 2, 3, 4]).unwrap();
    assert_eq!(x.dropped_rows, 1);
    assert_eq!(x.len(), 4);
    assert!(!x.features.indices.contains(&2));

    let all = build_features(&target, &ctx, FeatureSetKind::All, &[0, 1]).unwrap();
    assert_eq!(all.features.n_columns(), 4 + 2 + 1);
    assert_eq!(all.features.column_names[4..], ["nbr:A", "nbr:B", "rea"]);
}

#[test]
fn feature_errors() {
    let target = hourly("T", 1, vec![Some(1.0); 5]);
    let err = build_features(&target, &FeatureContext::empty(), FeatureSetKind::All, &[0]).unwrap_err();
    assert_eq!(err, GapFillError::MissingReanalysis);
    let coarse = TimeSeries::new(
        "B",
        VariableKind::Ta,
        target.start(),
        Step::from_secs(7200).unwrap(),
        vec![Some(1.0); 5],
        chrono_tz::UTC,
    )
    .unwrap();
    let nbrs = [coarse];
    let err = build_features(
        &target,
        &FeatureContext::new(&nbrs, None),
        FeatureSetKind::TemporalNeighbors,
        &[0],
    )
    .unwrap_err();
    assert_eq!(err, GapFillError::StepMismatch("B".into()));
}

#[test]
fn debias_recovers_constant_offset_exactly() {
    let n = 24 * 400;
    let mut rng = SplitMix64::new(4);
    let truth: Vec<f64> = (0..n)
        .map(|i| 10.0 * ((i % 24) as f64 / 24.0 * std::f64::consts::TAU).sin() + rng.next_gaussian())
        .collect();
    let rea = hourly("REANALYSIS:g", 1, truth.iter().map(|v| Some(v + 2.0)).collect());
    let mut observed: Vec<Option<f64>> = truth.iter().copied().map(Some).collect();
    let hidden: Vec<usize> = (500..560).chain(7000..7040).collect();
    for &i in &hidden {
        observed[i] = None;
    }
    let obs = hourly("S", 1, observed);
    let table = fit_debias(&obs, &rea, DEFAULT_MIN_SAMPLES).unwrap();
    for h in 0..24 {
        for s in Season::ALL {
            if let Some(b) = table.cell(h, s) {
                assert!((b + 2.0).abs() < 1e-9);
            }
        }
    }
    let model = GapFillModel::debias(table, &obs);
    let r = fill_gaps(&obs, &[model], &FeatureContext::new(&[], Some(&rea)));
    for &i in &hidden {
        assert!((r.series.get(i).unwrap() - truth[i]).abs() < 1e-9);
    }
    assert_eq!(r.provenance.len(), hidden.len());
}

#[test]
fn absent_season_uses_hour_fallback() {
    // Jan–Apr: winter and spring only.
    let n = 24 * 110;
    let obs = hourly("S", 1, (0..n).map(|i| Some((i % 24) as f64)).collect());
    let rea = hourly("REANALYSIS:g", 1, vec![Some(0.0); n]);
    let t = fit_debias(&obs, &rea, 10).unwrap();
    for h in 0..24 {
        assert_eq!(t.cell(h, Season::Jja), None);
        assert_eq!(t.sample_count(h, Season::Jja), 0);
        assert_eq!(t.lookup(h, Season::Jja), t.hour_fallback(h).unwrap());
        assert!((t.lookup(h, Season::Jja) - h as f64).abs() < 1e-12);
    }
}

#[test]
fn diurnal_bias_is_recovered_within_sampling_error() {
    let days = 200;
    let n = 24 * days;
    let mut rng = SplitMix64::new(8);
    let rea_vals: Vec<f64> = (0..n).map(|_| rng.next_gaussian() * 5.0).collect();
    let obs_vals: Vec<f64> = (0..n)
        .map(|i| {
            let h = (i % 24) as f64;
            rea_vals[i] + (std::f64::consts::TAU * h / 24.0).sin() + rng.next_gaussian()
        })
        .collect();
    let obs = hourly("S", 1, obs_vals.into_iter().map(Some).collect());
    let rea = hourly("REANALYSIS:g", 1, rea_vals.into_iter().map(Some).collect());
    let t = fit_debias(&obs, &rea, 10).unwrap();
    let bound = 2.0 / (days as f64).sqrt();
    for h in 0..24 {
        let want = (std::f64::consts::TAU * h as f64 / 24.0).sin();
        let got = t.hour_fallback(h).unwrap();
        assert!((got - want).abs() < bound, "hour {h}: {got} vs {want}");
    }
}

#[test]
fn debias_needs_overlap() {
    let obs = hourly("S", 1, vec![Some(1.0), None]);
    let rea = hourly("REANALYSIS:g", 1, vec![None, Some(1.0)]);
    assert_eq!(fit_debias(&obs, &rea, 10).unwrap_err(), GapFillError::NoOverlap);
}

#[test]
fn fill_chain_falls_back_to_temporal_when_neighbour_missing() {
    let n = 24 * 30;
    let mut rng = SplitMix64::new(12);
    let base: Vec<f64> = (0..n)
        .map(|i| 5.0 * ((i % 24) as f64 * 0.26).sin() + 0.2 * rng.next_gaussian())
        .collect();
    let mut target_vals: Vec<Option<f64>> = base.iter().map(|v| Some(v + 1.0)).collect();
    let mut nbr_vals: Vec<Option<f64>> = base.iter().copied().map(Some).collect();
    for i in 100..110 {
        target_vals[i] = None;
    }
    for i in 105..110 {
        nbr_vals[i] = None;
    }
    let target = hourly("T", 1, target_vals);
    let nbrs = [hourly("N", 1, nbr_vals)];
    let rea = hourly("REANALYSIS:g", 1, base.iter().map(|v| Some(v - 1.0)).collect());
    let ctx = FeatureContext::new(&nbrs, Some(&rea));
    let chain = fit_with_fallbacks(
        ModelKind::Ols,
        &target,
        &ctx,
        FeatureSetKind::All,
        &ModelParams::default(),
        1,
    )
    .unwrap();
    assert_eq!(chain.len(), 3);
    let r = fill_gaps(&target, &chain, &ctx);
    assert!(r.unfillable.is_empty());
    let sources: Vec<String> = r.provenance.iter().map(|p| p.source.to_string()).collect();
    assert!(sources[..5].iter().all(|s| s == "OLS/ALL"));
    assert!(sources[5..].iter().all(|s| s == "OLS/TEMPORAL_REANALYSIS"));
    for i in 0..n {
        if target.get(i).is_some() {
            assert_eq!(r.series.get(i), target.get(i));
        }
    }
    assert!(chain[0].provenance_manifest().contains("feature_set=ALL"));
}
