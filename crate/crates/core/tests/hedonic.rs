mod common;

use chrono::NaiveDate;
use frontier_core::hedonic::{adjust_prices, fit_hedonic, quantity_table, HedonicModel, HedonicSpec};
use frontier_core::stats::ols::{dense_ids, fe_ols};
use frontier_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TRUTH: [(&str, f64); 18] = [
    ("floor", 0.0088),
    ("ground", 0.021),
    ("first", -0.012),
    ("second", -0.006),
    ("third", -0.002),
    ("ground_x_above4", 0.008),
    ("first_x_above4", -0.004),
    ("second_x_above4", 0.003),
    ("third_x_above4", 0.001),
    ("ground_x_above10", 0.006),
    ("first_x_above10", 0.002),
    ("second_x_above10", -0.003),
    ("third_x_above10", 0.002),
    ("floor_x_above10", -0.001),
    ("height", -0.0006),
    ("penthouse", 0.0361),
    ("penthouse_1", 0.0058),
    ("penthouse_x_height", 0.0027),
];

fn truth_model() -> HedonicModel {
    HedonicModel::restricted_from_coefficients(&TRUTH, -0.0037, 0.0030, 40).unwrap()
}

#[test]
fn restricted_coefficients_recovered_within_two_se() {
    // 8 replications × 5 coefficients; each should sit within 2 s.e. about 95% of the time.
    let truth = truth_model();
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let txs = common::hedonic_sample(&mut rng, 3000, 0.05, |f, h| truth.ln_premium(f, h).unwrap(), (-0.0037, 0.0030));
        let fit = fit_hedonic(&txs, HedonicSpec::Restricted).unwrap();
        for name in ["floor", "height", "penthouse", "penthouse_1", "penthouse_x_height"] {
            let (c, s) = (fit.coef(name).unwrap(), fit.se(name).unwrap());
            inside += ((c - truth.coef(name).unwrap()).abs() < 2.0 * s) as usize;
            total += 1;
        }
    }
    assert!(inside * 100 >= total * 88, "{inside}/{total} within 2 s.e.");
}

#[test]
fn unit_premia_give_zero_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let txs = common::hedonic_sample(&mut rng, 300, 0.0, |_, _| 0.0, (0.0, 0.0));
    let fit = fit_hedonic(&txs, HedonicSpec::Restricted).unwrap();
    for t in &fit.terms {
        if !t.name.starts_with("day_") {
            assert!(t.coef.abs() < 1e-8, "{} = {}", t.name, t.coef);
        }
    }
}

#[test]
fn within_transformation_matches_explicit_dummies() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let txs = common::hedonic_sample(&mut rng, 3, 0.05, |f, _| 0.01 * f as f64, (0.0, 0.0));
    let y: Vec<f64> = txs.iter().map(|t| t.log_price.unwrap()).collect();
    let floor: Vec<f64> = txs.iter().map(|t| t.floor as f64).collect();
    let height: Vec<f64> = txs.iter().map(|t| t.height as f64).collect();
    let parcels: Vec<&str> = txs.iter().map(|t| t.parcel_id.as_str()).collect();
    let (g, ng) = dense_ids(&parcels);
    assert_eq!(ng, 3);
    let names: Vec<String> = ["floor", "height"].iter().map(|s| s.to_string()).collect();
    let within = fe_ols(&y, &[floor.clone(), height.clone()], &names, Some(&g)).unwrap();

    let d1: Vec<f64> = g.iter().map(|&k| (k == 1) as u8 as f64).collect();
    let d2: Vec<f64> = g.iter().map(|&k| (k == 2) as u8 as f64).collect();
    let mut names2 = names.clone();
    names2.extend(["d1".to_string(), "d2".to_string()]);
    let dummies = fe_ols(&y, &[floor, height, d1, d2], &names2, None).unwrap();
    for i in 0..2 {
        assert!((within.coef[i] - dummies.coef[i]).abs() < 1e-8);
    }
}

#[test]
fn reference_cell_only_loses_timing() {
    let model = truth_model();
    let date = NaiveDate::from_ymd_opt(2009, 6, 1).unwrap();
    let t = common::sale("p", "b", 2, 4, date, 9.0);
    let out = adjust_prices(vec![t], &model).unwrap();
    assert!((out[0].adjusted_log_price.unwrap() - (9.0 - 0.0030)).abs() < 1e-15);
}

#[test]
fn restricted_composition_matches_saturated_lookup() {
    let truth = truth_model();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let txs = common::hedonic_sample(&mut rng, 1500, 0.0, |f, h| truth.ln_premium(f, h).unwrap(), (0.0, 0.0));
    let restricted = fit_hedonic(&txs, HedonicSpec::Restricted).unwrap();
    let saturated = fit_hedonic(&txs, HedonicSpec::Saturated).unwrap();
    let a = restricted.ln_premium(7, 12).unwrap();
    let b = saturated.ln_premium(7, 12).unwrap();
    assert!((a - truth.ln_premium(7, 12).unwrap()).abs() < 1e-8);
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    assert!(matches!(saturated.ln_premium(30, 31), Err(Error::CellOutOfRange { .. })));
}

#[test]
fn penthouse_terms_under_point_estimates() {
    let fitted = HedonicModel::restricted_from_coefficients(
        &[
            ("floor", 0.0088),
            ("height", -0.0006),
            ("penthouse", 0.0361),
            ("penthouse_1", 0.0058),
            ("penthouse_x_height", 0.0027),
        ],
        -0.0037,
        0.0030,
        35,
    )
    .unwrap();
    let want = 0.0088 * 18.0 - 0.0006 * 16.0 + 0.0361 + 0.0027 * 20.0;
    assert!((fitted.ln_premium(20, 20).unwrap() - want).abs() < 1e-15);
    let q = quantity_table(&fitted, 35).unwrap();
    assert!(q.values().windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn adjustment_is_idempotent() {
    let truth = truth_model();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let txs = common::hedonic_sample(&mut rng, 50, 0.05, |_, _| 0.0, (0.0, 0.0));
    let once = adjust_prices(txs, &truth).unwrap();
    let twice = adjust_prices(once.clone(), &truth).unwrap();
    assert_eq!(once, twice);
}

#[test]
fn single_building_parcels_leave_height_unidentified() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut txs = common::hedonic_sample(&mut rng, 200, 0.05, |_, _| 0.0, (0.0, 0.0));
    txs.retain(|t| t.building_id.as_deref().is_some_and(|b| b.ends_with("-0")));
    match fit_hedonic(&txs, HedonicSpec::Restricted) {
        Err(Error::RankDeficient(names)) => assert!(names.contains(&"height".to_string()), "{names:?}"),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn json_round_trip() {
    let model = truth_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hedonic.json");
    model.write_json(&path).unwrap();
    assert_eq!(HedonicModel::read_json(&path).unwrap().premia, model.premia);
}

