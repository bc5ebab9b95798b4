use std::io::Write;

use serde::Serialize;

use super::estimate::{Bands, FitMode, FrontierEstimate};
use crate::error::{Error, Result};
use crate::hedonic::QuantityTable;

#[derive(Serialize)]
struct Row {
    h: u32,
    q: Option<f64>,
    g_log: f64,
    #[serde(rename = "G_level")]
    g_level: f64,
    mu_u: f64,
    sigma_u: f64,
    sigma_v: f64,
    sigma_w: f64,
}

#[derive(Serialize)]
struct Document<'a> {
    mode: FitMode,
    mes: u32,
    loglik: f64,
    per_height: Vec<Row>,
    interpolated: &'a [u32],
    quartic: Option<[f64; 5]>,
    bands: Option<&'a Bands>,
}

fn rows(est: &FrontierEstimate, quantity: Option<&QuantityTable>) -> Vec<Row> {
    est.params
        .iter()
        .map(|p| Row {
            h: p.height,
            q: quantity.and_then(|t| t.q(p.height).ok()),
            g_log: p.g,
            g_level: p.g.exp(),
            mu_u: p.mu_u,
            sigma_u: p.sigma_u,
            sigma_v: p.sigma_v,
            sigma_w: p.sigma_w,
        })
        .collect()
}

/// JSON document `{mode, mes, per_height: [...], quartic, bands}`.
pub fn estimate_json(est: &FrontierEstimate, quantity: Option<&QuantityTable>) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(Document {
        mode: est.mode,
        mes: est.mes,
        loglik: est.loglik,
        per_height: rows(est, quantity),
        interpolated: &est.interpolated,
        quartic: est.quartic.map(|c| c.beta),
        bands: est.bands.as_ref(),
    })?)
}

/// Table with one row per height: height, quantity, frontier level, and
/// quartic AC/MC and bootstrap band levels where available.
pub fn write_estimate_csv<W: Write>(est: &FrontierEstimate, quantity: Option<&QuantityTable>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "height", "quantity", "G_level", "g_log", "mu_u", "sigma_u", "sigma_v", "sigma_w", "AC", "MC", "band_lower",
        "band_upper", "interpolated",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in &est.params {
        let q = quantity.and_then(|t| t.q(p.height).ok());
        let (ac, mc) = match (est.quartic, q) {
            (Some(c), Some(q)) => (Some(c.ac(q)), Some(c.mc(q))),
            _ => (None, None),
        };
        let band = est.bands.as_ref().and_then(|b| {
            b.heights
                .iter()
                .position(|&h| h == p.height)
                .map(|i| (b.lower[i].exp(), b.upper[i].exp()))
        });
        w.write_record([
            p.height.to_string(),
            opt(q),
            p.g.exp().to_string(),
            p.g.to_string(),
            p.mu_u.to_string(),
            p.sigma_u.to_string(),
            p.sigma_v.to_string(),
            p.sigma_w.to_string(),
            opt(ac),
            opt(mc),
            opt(band.map(|b| b.0)),
            opt(band.map(|b| b.1)),
            est.interpolated.contains(&p.height).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
