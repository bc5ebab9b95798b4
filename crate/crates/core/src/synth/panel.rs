use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::calibration;
use crate::domain::{Apartment, Bloc, Building, HeightPanel, Panel, Transaction};
use crate::error::{Error, Result};
use crate::frontier::HeightParams;
use crate::stats::normal::sample_truncated_at_zero;

/// Target counts at one height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightCounts {
    pub height: u32,
    pub blocs: usize,
    pub buildings: usize,
    pub apartments: usize,
}

/// Counts from the reference calibration, each scaled by `scale` (at least one
/// bloc, one building per bloc and two sales per building).
pub fn reference_counts(scale: f64) -> Vec<HeightCounts> {
    (0..35)
        .map(|i| {
            let blocs = ((calibration::BLOCS_BY_HEIGHT[i] as f64 * scale).round() as usize).max(1);
            let buildings = ((calibration::BUILDINGS_BY_HEIGHT[i] as f64 * scale).round() as usize).max(blocs);
            let apartments =
                ((calibration::APARTMENTS_BY_HEIGHT[i] as f64 * scale).round() as usize).max(2 * buildings);
            HeightCounts {
                height: i as u32 + 1,
                blocs,
                buildings,
                apartments,
            }
        })
        .collect()
}

const SPAN_DAYS: i64 = 7305;

/// Split `total` into `parts` integers of at least `min` each, uniformly at random.
fn allocate(rng: &mut ChaCha8Rng, total: usize, parts: usize, min: usize) -> Vec<usize> {
    let mut out = vec![min; parts];
    for _ in 0..total.saturating_sub(min * parts) {
        out[rng.gen_range(0..parts)] += 1;
    }
    out
}

/// Panel skeleton with the requested counts. Apartment prices are zero. Each
/// building is completed on a day uniform over twenty years and its sales fall
/// within a year of completion. Blocs sit in a 20 km square with their
/// buildings within 200 m of the bloc centre.
pub fn panel_shape(counts: &[HeightCounts], seed: u64) -> Result<Panel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heights = Vec::with_capacity(counts.len());
    for c in counts {
        if c.blocs == 0 || c.buildings < c.blocs || c.apartments < 2 * c.buildings {
            return Err(Error::InvalidArgument(format!("degenerate counts at height {}", c.height)));
        }
        let per_bloc = allocate(&mut rng, c.buildings, c.blocs, 1);
        let mut per_building = allocate(&mut rng, c.apartments, c.buildings, 2);
        per_building.shuffle(&mut rng);
        let mut next = per_building.into_iter();
        let blocs = per_bloc
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let cx: f64 = rng.gen_range(0.0..20_000.0);
                let cy: f64 = rng.gen_range(0.0..20_000.0);
                let id = format!("h{}-k{k}", c.height);
                let buildings = (0..n)
                    .map(|i| {
                        let j = next.next().expect("allocated");
                        let completed = rng.gen_range(0..SPAN_DAYS);
                        Building {
                            id: format!("{id}-b{i}"),
                            parcel_id: format!("{id}-p{i}"),
                            height: c.height,
                            x: Some(cx + rng.gen_range(-200.0..200.0)),
                            y: Some(cy + rng.gen_range(-200.0..200.0)),
                            apartments: (0..j)
                                .map(|_| Apartment {
                                    y: 0.0,
                                    day: (completed + rng.gen_range(-365..=365)).clamp(0, SPAN_DAYS - 1) as f64,
                                })
                                .collect(),
                        }
                    })
                    .collect();
                Bloc { id, buildings }
            })
            .collect();
        heights.push(HeightPanel {
            height: c.height,
            blocs,
        });
    }
    Ok(Panel::new(heights))
}

/// A drawn panel with its latent bloc deviations.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: Panel,
    pub truth: Vec<HeightParams>,
    /// `u_k` per height (in panel order) and bloc.
    pub bloc_u: Vec<Vec<f64>>,
}

/// Redraw every price on `shape` as `g + u_k + w_ki + v_kij`.
pub fn draw_prices<R: Rng>(shape: &Panel, truth: &[HeightParams], rng: &mut R) -> Result<SyntheticPanel> {
    let mut panel = shape.clone();
    let mut bloc_u = Vec::with_capacity(panel.heights().len());
    for hp in panel.heights_mut() {
        let p = truth
            .iter()
            .find(|p| p.height == hp.height)
            .ok_or_else(|| Error::MissingParameter(format!("truth at height {}", hp.height)))?;
        let w_dist = Normal::new(0.0, p.sigma_w).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let v_dist = Normal::new(0.0, p.sigma_v).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut us = Vec::with_capacity(hp.blocs.len());
        for bloc in &mut hp.blocs {
            let u = sample_truncated_at_zero(rng, p.mu_u, p.sigma_u);
            us.push(u);
            for b in &mut bloc.buildings {
                let w = w_dist.sample(rng);
                for a in &mut b.apartments {
                    a.y = p.g + u + w + v_dist.sample(rng);
                }
            }
        }
        bloc_u.push(us);
    }
    Ok(SyntheticPanel {
        panel,
        truth: truth.to_vec(),
        bloc_u,
    })
}

/// Draw a panel with the given counts and parameters.
pub fn generate_panel(truth: &[HeightParams], counts: &[HeightCounts], seed: u64) -> Result<SyntheticPanel> {
    let shape = panel_shape(counts, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    draw_prices(&shape, truth, &mut rng)
}

/// Parameters with the reference frontier levels and common deviation scales.
pub fn reference_truth(mu_over_sigma: f64, sigma_u: f64, sigma_w: f64, sigma_v: f64) -> Vec<HeightParams> {
    calibration::FRONTIER_LEVELS
        .iter()
        .enumerate()
        .map(|(i, level)| HeightParams {
            height: i as u32 + 1,
            g: level.ln(),
            mu_u: mu_over_sigma * sigma_u,
            sigma_u,
            sigma_v,
            sigma_w,
        })
        .collect()
}

/// Apartment sales behind a panel, in the ingest schema. Areas are uniform on
/// 50 to 130 m², floors uniform on `0..=h`, and a building's construction year
/// is the year of its median sale. Every eighth building (in id order) shares
/// its parcel with a building of another height, so that parcel effects leave
/// height premia identified; those parcels drop out of the frontier panel.
pub fn panel_transactions(panel: &Panel, seed: u64) -> Vec<Transaction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let epoch = chrono::NaiveDate::from_ymd_opt(1997, 1, 1).expect("valid epoch");
    let mut buildings: Vec<(&str, &Building)> = panel
        .heights()
        .iter()
        .flat_map(|hp| hp.blocs.iter().flat_map(|b| b.buildings.iter().map(move |bd| (b.id.as_str(), bd))))
        .collect();
    buildings.sort_by(|a, b| a.1.id.cmp(&b.1.id));
    let n = buildings.len();
    let mut parcel: Vec<usize> = (0..n).collect();
    for i in (0..n).step_by(8) {
        let j = (i + n / 2 + 1) % n;
        if j != i && parcel[j] == j && parcel[i] == i && buildings[i].1.height != buildings[j].1.height {
            parcel[j] = i;
        }
    }
    let mut out = Vec::new();
    for (i, (bloc, b)) in buildings.iter().enumerate() {
        let mut days: Vec<f64> = b.apartments.iter().map(|a| a.day).collect();
        days.sort_by(f64::total_cmp);
        let median = days[days.len() / 2];
        let construction_year = {
            use chrono::Datelike;
            (epoch + chrono::Duration::days(median as i64)).year()
        };
        for a in &b.apartments {
            let area = (rng.gen_range(50.0..130.0f64) * 10.0).round() / 10.0;
            out.push(Transaction {
                row: out.len() + 1,
                parcel_id: format!("p{}", parcel[i]),
                bloc_id: bloc.to_string(),
                city_id: "c1".into(),
                building_id: Some(b.id.clone()),
                price: a.y.exp() * area,
                area,
                floor: rng.gen_range(0..=b.height),
                height: b.height,
                construction_year,
                transaction_date: epoch + chrono::Duration::days(a.day as i64),
                legal_status: Some(1),
                ownership_share: 1.0,
                single_family: false,
                x: b.x,
                y: b.y,
                log_price: None,
                adjusted_log_price: None,
            });
        }
    }
    out
}
