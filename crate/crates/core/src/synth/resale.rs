use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::Transaction;
use crate::error::{Error, Result};

/// Truth for resale prices: `ln P = parcel + γ(t) + δ γ(s) + α1 age + α2 age²`
/// with `γ(t) = γ1 t + γ2 t²`, `t` the sale and `s` the construction year, both
/// in years from 1997.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResaleTruth {
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub noise: f64,
}

impl ResaleTruth {
    /// Quadratic period effect with coefficient 0.311 on `t²/100`.
    pub fn reference(delta: f64) -> Self {
        Self {
            gamma1: 0.02,
            gamma2: 0.00311,
            delta,
            alpha1: -0.005,
            alpha2: 2e-5,
            noise: 0.1,
        }
    }

    fn gamma(&self, t: f64) -> f64 {
        self.gamma1 * t + self.gamma2 * t * t
    }
}

/// Resales on `parcels` parcels, each with three buildings of random vintage
/// (1982 to 2017) and height, and four to eight sales per building between
/// completion and 2022. `log_price` is set; `price` is its level for 80 m².
pub fn synthetic_resales(parcels: usize, truth: &ResaleTruth, seed: u64) -> Result<Vec<Transaction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = Normal::new(0.0, truth.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let epoch = NaiveDate::from_ymd_opt(1997, 1, 1).expect("valid epoch");
    let last = (25.0 * 365.25) as i64;
    let mut out = Vec::new();
    for p in 0..parcels {
        let parcel = format!("r{p}");
        let effect = rng.gen_range(8.5..9.5);
        for b in 0..3 {
            let s = rng.gen_range(-15..=20i32);
            let height = rng.gen_range(2..=12u32);
            let first = (s.max(0) as f64 * 365.25) as i64;
            for _ in 0..rng.gen_range(4..=8) {
                let date = epoch + chrono::Duration::days(rng.gen_range(first..=last));
                let t = (date - epoch).num_days() as f64 / 365.25;
                let age = t - s as f64;
                let y = effect
                    + truth.gamma(t)
                    + truth.delta * truth.gamma(s as f64)
                    + truth.alpha1 * age
                    + truth.alpha2 * age * age
                    + eps.sample(&mut rng);
                out.push(Transaction {
                    row: out.len() + 1,
                    parcel_id: parcel.clone(),
                    bloc_id: format!("rb{}", p / 10),
                    city_id: "c1".into(),
                    building_id: Some(format!("{parcel}-{b}")),
                    price: y.exp() * 80.0,
                    area: 80.0,
                    floor: rng.gen_range(0..=height),
                    height,
                    construction_year: 1997 + s,
                    transaction_date: date,
                    legal_status: Some(1),
                    ownership_share: 1.0,
                    single_family: false,
                    x: None,
                    y: None,
                    log_price: Some(y),
                    adjusted_log_price: None,
                });
            }
        }
    }
    Ok(out)
}
