#![allow(dead_code)]

use chrono::NaiveDate;
use frontier_core::domain::Transaction;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn sale(parcel: &str, building: &str, floor: u32, height: u32, date: NaiveDate, log_price: f64) -> Transaction {
    Transaction {
        row: 0,
        parcel_id: parcel.into(),
        bloc_id: format!("bloc-{parcel}"),
        city_id: "c".into(),
        building_id: Some(building.into()),
        price: log_price.exp(),
        area: 1.0,
        floor,
        height,
        construction_year: 2008,
        transaction_date: date,
        legal_status: Some(0),
        ownership_share: 1.0,
        single_family: false,
        x: None,
        y: None,
        log_price: Some(log_price),
        adjusted_log_price: None,
    }
}

/// Sales on single- and two-building parcels with log price
/// `parcel effect + ln m(f, h) + timing + trend + noise`.
pub fn hedonic_sample(
    rng: &mut ChaCha8Rng,
    parcels: usize,
    noise: f64,
    ln_m: impl Fn(u32, u32) -> f64,
    timing: (f64, f64),
) -> Vec<Transaction> {
    let start = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
    let eps = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let mut out = Vec::new();
    for p in 0..parcels {
        let parcel = format!("p{p}");
        let effect = rng.gen_range(8.5..9.5);
        let n_buildings = if p % 3 == 0 { 2 } else { 1 };
        for b in 0..n_buildings {
            let height = rng.gen_range(1..=24u32);
            let building = format!("{parcel}-{b}");
            let n_sales = rng.gen_range(3..=9);
            for _ in 0..n_sales {
                let floor = rng.gen_range(0..=height);
                let date = start + chrono::Duration::days(rng.gen_range(0..3 * 365));
                let lag = chrono::Datelike::year(&date) - 2008;
                let t = match lag {
                    -1 => timing.0,
                    1 => timing.1,
                    _ => 0.0,
                };
                let day = (date - start).num_days() as f64;
                let trend = 2e-4 * day - 4e-8 * day * day;
                let e = if noise > 0.0 { eps.sample(rng) } else { 0.0 };
                out.push(sale(&parcel, &building, floor, height, date, effect + ln_m(floor, height) + t + trend + e));
            }
        }
    }
    for (i, t) in out.iter_mut().enumerate() {
        t.row = i + 1;
    }
    out
}

pub mod oracle;
