use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bound::{min_max_ramp, ramp_term};
use super::kappa::PeriodCurve;
use super::level::TaxFrontier;
use super::neighbors::build_neighbors;
use super::posterior::{posterior_u, sigma_eta, PosteriorU};
use crate::domain::Panel;
use crate::error::{Error, Result};
use crate::frontier::{FrontierEstimate, HeightParams};

/// A building or apartment whose tax is assessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxUnit {
    pub id: String,
    pub height: u32,
    /// Mean log price minus `g(h)`.
    pub deviation: f64,
    /// Apartments averaged into the unit; 1 for an apartment.
    pub count: usize,
    /// Mean sale day.
    pub day: f64,
    pub coordinates: Option<(f64, f64)>,
}

impl TaxUnit {
    /// One unit per building, priced at its mean log apartment price.
    pub fn buildings(panel: &Panel, estimate: &FrontierEstimate) -> Result<Vec<TaxUnit>> {
        panel
            .buildings()
            .map(|b| {
                Ok(TaxUnit {
                    id: b.id.clone(),
                    height: b.height,
                    deviation: b.mean_y() - estimate.g(b.height)?,
                    count: b.len(),
                    day: b.period(),
                    coordinates: b.coordinates(),
                })
            })
            .collect()
    }

    pub fn posterior(&self, params: &HeightParams) -> Result<PosteriorU> {
        if !params.sigma_u.is_finite() || !params.mu_u.is_finite() {
            return Err(Error::MissingParameter(format!("sigma_u at height {}", params.height)));
        }
        Ok(posterior_u(
            self.deviation,
            params.mu_u,
            params.sigma_u,
            sigma_eta(params.sigma_w, params.sigma_v, self.count),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub draws: usize,
}

fn params_at(estimate: &FrontierEstimate, h: u32) -> Result<&HeightParams> {
    estimate.at(h).ok_or(Error::HeightOutOfRange(h))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Monte Carlo mean of `RT(G(h)·U, h) / (G(h)·U)` with `ln U` drawn from the
/// unit's posterior, and its standard error.
pub fn expected_rt_rate(
    unit: &TaxUnit,
    frontier: &TaxFrontier,
    params: &HeightParams,
    draws: usize,
    seed: u64,
) -> Result<RateEstimate> {
    rate_with(unit, frontier, params, draws, &mut rng_for(seed, 0))
}

fn rate_with(
    unit: &TaxUnit,
    frontier: &TaxFrontier,
    params: &HeightParams,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RateEstimate> {
    if draws == 0 {
        return Err(Error::InvalidArgument("at least one draw is needed".into()));
    }
    let post = unit.posterior(params)?;
    let g = frontier.level(unit.height)?;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..draws {
        let price = g * post.sample(rng).exp();
        let r = frontier.rt_level(price, unit.height)? / price;
        sum += r;
        sum2 += r * r;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = if draws > 1 { (sum2 - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
    Ok(RateEstimate {
        rate: mean,
        se: (var / n).sqrt(),
        draws,
    })
}

/// Lower bound at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub radius: f64,
    /// Mean bound in currency.
    pub level: f64,
    /// `level` over the mean price of the unit.
    pub rate: f64,
    pub kappa_s_mean: f64,
    pub neighbors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxConfig {
    pub radii: Vec<f64>,
    pub draws: usize,
    pub seed: u64,
    /// Take every price as observed without error (one evaluation, no draws).
    pub error_free: bool,
}

impl Default for TaxConfig {
    fn default() -> Self {
        Self {
            radii: vec![250.0, 500.0, 1000.0],
            draws: 10_000,
            seed: 0,
            error_free: false,
        }
    }
}

/// Everything the per-unit computations share.
pub struct TaxContext<'a> {
    pub units: &'a [TaxUnit],
    pub frontier: &'a TaxFrontier,
    pub estimate: &'a FrontierEstimate,
    pub period: &'a PeriodCurve,
    pub kappa_t: f64,
    pub config: &'a TaxConfig,
}

impl TaxContext<'_> {
    fn observed_price(&self, k: usize) -> Result<f64> {
        let u = &self.units[k];
        Ok(self.frontier.level(u.height)? * u.deviation.exp())
    }

    /// Lower bounds for unit `i` at every configured radius, given its
    /// neighbours within the largest radius as `(index, distance)`.
    pub fn bounds(&self, i: usize, neighbors: &[(usize, f64)]) -> Result<Vec<BoundEstimate>> {
        let cfg = self.config;
        let ui = &self.units[i];
        let g_next = self.frontier.next_level(ui.height)?;
        let g_j: Vec<f64> = neighbors
            .iter()
            .map(|&(j, _)| self.frontier.level(self.units[j].height))
            .collect::<Result<_>>()?;
        let t_ij: Vec<f64> = neighbors
            .iter()
            .map(|&(j, _)| self.period.deflator(ui.day, self.units[j].day))
            .collect();
        let masks: Vec<Vec<bool>> = cfg
            .radii
            .iter()
            .map(|&r| neighbors.iter().map(|&(_, d)| d <= r).collect())
            .collect();
        let counts: Vec<usize> = masks.iter().map(|m| m.iter().filter(|b| **b).count()).collect();

        let mut level = vec![0.0; cfg.radii.len()];
        let mut kappa = vec![0.0; cfg.radii.len()];
        let mut price_sum = 0.0;
        let mut terms = Vec::with_capacity(neighbors.len());
        let mut prices_j = vec![0.0; neighbors.len()];
        let mut evaluate = |p_i: f64, prices_j: &[f64], level: &mut [f64], kappa: &mut [f64]| {
            for (r, mask) in masks.iter().enumerate() {
                terms.clear();
                for (n, _) in neighbors.iter().enumerate() {
                    if mask[n] {
                        terms.push(ramp_term(g_j[n], g_next, p_i, prices_j[n], t_ij[n], self.kappa_t));
                    }
                }
                let (v, k) = min_max_ramp(&terms);
                level[r] += v;
                kappa[r] += k;
            }
        };
        let draws = if cfg.error_free {
            let p_i = self.observed_price(i)?;
            for (n, &(j, _)) in neighbors.iter().enumerate() {
                prices_j[n] = self.observed_price(j)?;
            }
            price_sum = p_i;
            evaluate(p_i, &prices_j, &mut level, &mut kappa);
            1
        } else {
            if cfg.draws == 0 {
                return Err(Error::InvalidArgument("at least one draw is needed".into()));
            }
            let stream = (i as u64 + 1) << 32;
            let post_i = ui.posterior(params_at(self.estimate, ui.height)?)?;
            let g_i = self.frontier.level(ui.height)?;
            let mut rng_i = rng_for(cfg.seed, stream);
            let mut post_j = Vec::with_capacity(neighbors.len());
            let mut rng_j = Vec::with_capacity(neighbors.len());
            for &(j, _) in neighbors {
                let uj = &self.units[j];
                post_j.push(uj.posterior(params_at(self.estimate, uj.height)?)?);
                rng_j.push(rng_for(cfg.seed, stream | (j as u64 + 1)));
            }
            for _ in 0..cfg.draws {
                let p_i = g_i * post_i.sample(&mut rng_i).exp();
                for n in 0..neighbors.len() {
                    prices_j[n] = g_j[n] * post_j[n].sample(&mut rng_j[n]).exp();
                }
                price_sum += p_i;
                evaluate(p_i, &prices_j, &mut level, &mut kappa);
            }
            cfg.draws
        };
        let n = draws as f64;
        let mean_price = price_sum / n;
        Ok(cfg
            .radii
            .iter()
            .enumerate()
            .map(|(r, &radius)| BoundEstimate {
                radius,
                level: level[r] / n,
                rate: level[r] / n / mean_price,
                kappa_s_mean: kappa[r] / n,
                neighbors: counts[r],
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxRow {
    pub building_id: String,
    pub height: u32,
    pub rate: RateEstimate,
    pub bounds: Vec<BoundEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxReport {
    pub config: TaxConfig,
    pub rows: Vec<TaxRow>,
    /// Units left out of the bounds for lack of coordinates.
    pub without_coordinates: usize,
    pub top_carried: bool,
}

impl TaxReport {
    pub fn mean_rate(&self) -> f64 {
        self.rows.iter().map(|r| r.rate.rate).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn mean_bound(&self, r: usize) -> f64 {
        self.rows.iter().map(|row| row.bounds[r].rate).sum::<f64>() / self.rows.len().max(1) as f64
    }

    /// `building_id,h,rate,se,bound_<r>...,kappa_S_mean,draws,seed`; the κ_S
    /// column belongs to the largest radius.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["building_id".to_string(), "h".into(), "rate".into(), "se".into()];
        header.extend(self.config.radii.iter().map(|r| format!("bound_{r}")));
        header.extend(["kappa_S_mean".to_string(), "draws".into(), "seed".into()]);
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.building_id.clone(),
                row.height.to_string(),
                row.rate.rate.to_string(),
                row.rate.se.to_string(),
            ];
            rec.extend(row.bounds.iter().map(|b| b.rate.to_string()));
            rec.push(row.bounds.last().map_or(0.0, |b| b.kappa_s_mean).to_string());
            rec.push(row.rate.draws.to_string());
            rec.push(self.config.seed.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<tax report>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Expected tax rate and lower bounds for every building of `panel`.
pub fn tax_report(
    panel: &Panel,
    estimate: &FrontierEstimate,
    frontier: &TaxFrontier,
    period: &PeriodCurve,
    kappa_t: f64,
    config: &TaxConfig,
) -> Result<TaxReport> {
    if config.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let mut config = config.clone();
    config.radii.sort_by(f64::total_cmp);
    let units = TaxUnit::buildings(panel, estimate)?;
    let points: Vec<Option<(f64, f64)>> = units.iter().map(|u| u.coordinates).collect();
    let widest = config.radii.last().copied().unwrap_or(0.0);
    let near = if widest > 0.0 { Some(build_neighbors(&points, widest)) } else { None };
    let ctx = TaxContext {
        units: &units,
        frontier,
        estimate,
        period,
        kappa_t,
        config: &config,
    };
    let rows = (0..units.len())
        .into_par_iter()
        .map(|i| {
            let u = &units[i];
            let params = params_at(estimate, u.height)?;
            let rate = if config.error_free {
                let price = ctx.observed_price(i)?;
                RateEstimate {
                    rate: frontier.rt_level(price, u.height)? / price,
                    se: 0.0,
                    draws: 1,
                }
            } else {
                rate_with(u, frontier, params, config.draws, &mut rng_for(config.seed, i as u64 + 1))?
            };
            let neighbors: Vec<(usize, f64)> = match (&near, u.coordinates) {
                (Some(n), Some((x, y))) => n.neighbors[i]
                    .iter()
                    .map(|&j| {
                        let (xj, yj) = units[j].coordinates.expect("neighbour has coordinates");
                        (j, ((xj - x).powi(2) + (yj - y).powi(2)).sqrt())
                    })
                    .collect(),
                _ => Vec::new(),
            };
            Ok(TaxRow {
                building_id: u.id.clone(),
                height: u.height,
                rate,
                bounds: ctx.bounds(i, &neighbors)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaxReport {
        without_coordinates: near.as_ref().map_or(0, |n| n.excluded.len()),
        top_carried: frontier.top_carried,
        config,
        rows,
    })
}
