//! Elasticity of substitution, isoquants and consolidation counterfactuals
//! derived from a fitted cost curve.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::Panel;
use crate::error::{Error, Result};
use crate::frontier::CostCurve;
use crate::hedonic::QuantityTable;

/// `σ(q) = d ln AC / d ln MC = (AC′/AC) / (MC′/MC)`.
pub fn elasticity(curve: &CostCurve, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("quantity must be positive, got {q}")));
    }
    let mc = curve.mc(q);
    let dmc = curve.mc_prime(q);
    if dmc.abs() <= f64::EPSILON * mc.abs().max(1.0) {
        return Err(Error::FlatMarginalCost(q));
    }
    Ok(curve.ac_prime(q) / curve.ac(q) * mc / dmc)
}

/// Continuous minimiser of AC inside `[lo, hi]`, by bisection on the sign of AC′.
pub fn ac_minimizer(curve: &CostCurve, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    if !(curve.ac_prime(a) < 0.0 && curve.ac_prime(b) > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if curve.ac_prime(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityPoint {
    pub q: f64,
    pub ac: f64,
    pub mc: f64,
    /// `None` where MC is flat.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityCurve {
    pub points: Vec<ElasticityPoint>,
}

impl ElasticityCurve {
    pub fn evaluate(curve: &CostCurve, qs: &[f64]) -> Result<Self> {
        let points = qs
            .iter()
            .map(|&q| {
                let sigma = match elasticity(curve, q) {
                    Ok(s) => Some(s),
                    Err(Error::FlatMarginalCost(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok(ElasticityPoint {
                    q,
                    ac: curve.ac(q),
                    mc: curve.mc(q),
                    sigma,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { points })
    }

    /// `n` evenly spaced quantities over `[lo, hi]`.
    pub fn on_range(curve: &CostCurve, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let qs: Vec<f64> = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        };
        Self::evaluate(curve, &qs)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["q", "ac", "mc", "sigma"])?;
        for p in &self.points {
            let sigma = p.sigma.map_or_else(String::new, |s| s.to_string());
            out.write_record([p.q.to_string(), p.ac.to_string(), p.mc.to_string(), sigma])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// One point on the unit-housing isoquant: land `1/q(h)` and non-land cost `C(q(h))/q(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoquantPoint {
    pub height: u32,
    pub q: f64,
    pub land: f64,
    pub capital: f64,
}

pub fn isoquant(curve: &CostCurve, quantity: &QuantityTable) -> Vec<IsoquantPoint> {
    (1..=quantity.max_height())
        .zip(quantity.values())
        .map(|(height, &q)| IsoquantPoint {
            height,
            q,
            land: 1.0 / q,
            capital: curve.total(q) / q,
        })
        .collect()
}

pub fn write_isoquant_csv<W: Write>(points: &[IsoquantPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["h", "q", "land_per_unit_housing", "capital_per_unit_housing"])?;
    for p in points {
        out.write_record([p.height.to_string(), p.q.to_string(), p.land.to_string(), p.capital.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Percentage changes from rebuilding a height band at a single height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consolidation {
    pub band_lo: u32,
    pub band_hi: u32,
    pub target: u32,
    pub buildings_before: f64,
    pub buildings_after: f64,
    pub cost_before: f64,
    pub cost_after: f64,
    pub land_delta_pct: f64,
    pub cost_delta_pct: f64,
}

/// Reassign the floors of `counts` (height, building count) in `[band_lo, band_hi]`
/// to `target`-story buildings. Land is the building count; non-land cost is
/// `C(q(h))` per building. Fractional target buildings are allowed.
pub fn consolidate(
    counts: &[(u32, f64)],
    curve: &CostCurve,
    quantity: &QuantityTable,
    band_lo: u32,
    band_hi: u32,
    target: u32,
) -> Result<Consolidation> {
    if band_lo > band_hi {
        return Err(Error::InvalidArgument(format!("empty band {band_lo}..{band_hi}")));
    }
    let target_cost = curve.total(quantity.q(target)?);
    let (mut buildings, mut floors, mut cost) = (0.0, 0.0, 0.0);
    for &(h, n) in counts.iter().filter(|(h, _)| (band_lo..=band_hi).contains(h)) {
        buildings += n;
        floors += n * h as f64;
        cost += n * curve.total(quantity.q(h)?);
    }
    if buildings <= 0.0 {
        return Err(Error::InsufficientData(format!("no buildings between {band_lo} and {band_hi} stories")));
    }
    let after = floors / target as f64;
    let cost_after = after * target_cost;
    Ok(Consolidation {
        band_lo,
        band_hi,
        target,
        buildings_before: buildings,
        buildings_after: after,
        cost_before: cost,
        cost_after,
        land_delta_pct: 100.0 * (after - buildings) / buildings,
        cost_delta_pct: 100.0 * (cost_after - cost) / cost,
    })
}

/// Building counts by height taken from a panel.
pub fn panel_counts(panel: &Panel) -> Vec<(u32, f64)> {
    panel
        .heights()
        .iter()
        .map(|h| (h.height, h.counts().buildings as f64))
        .collect()
}

pub fn consolidation_counterfactual(
    panel: &Panel,
    curve: &CostCurve,
    quantity: &QuantityTable,
    band_lo: u32,
    band_hi: u32,
    target: u32,
) -> Result<Consolidation> {
    consolidate(&panel_counts(panel), curve, quantity, band_lo, band_hi, target)
}
