use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{CostCurve, FrontierEstimate};
use crate::hedonic::QuantityTable;

/// Frontier quantities a regulatory tax needs at each height `1..=H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxFrontier {
    pub mes: u32,
    /// `G(h)`.
    pub levels: Vec<f64>,
    /// `G(h + 1)`.
    pub next_levels: Vec<f64>,
    /// Marginal cost of the next floor, `MC(q(h + 1))`, or `G(h + 1)` without a cost curve.
    pub next_mc: Vec<f64>,
    /// Least average cost, the benchmark below the MES.
    pub min_ac: f64,
    /// True when the value above the tallest height was carried forward.
    pub top_carried: bool,
}

impl TaxFrontier {
    /// From a cost curve over `q(1..=max_height)`. `q(H + 1)` is used when the
    /// table has it; otherwise the top height's values are carried forward.
    pub fn from_quartic(curve: &CostCurve, quantity: &QuantityTable, max_height: u32, mes: u32) -> Result<Self> {
        if max_height == 0 || max_height > quantity.max_height() {
            return Err(Error::HeightOutOfRange(max_height));
        }
        let q = |h: u32| quantity.q(h);
        let mut levels = Vec::new();
        let mut min_ac = f64::INFINITY;
        for h in 1..=max_height {
            let qh = q(h)?;
            levels.push(curve.ac(qh).max(curve.mc(qh)));
            min_ac = min_ac.min(curve.ac(qh));
        }
        let top_carried = quantity.max_height() <= max_height;
        let next = |h: u32| -> Result<f64> { q((h + 1).min(quantity.max_height())) };
        let mut next_levels = Vec::new();
        let mut next_mc = Vec::new();
        for h in 1..=max_height {
            let qn = next(h)?;
            next_levels.push(curve.ac(qn).max(curve.mc(qn)));
            next_mc.push(curve.mc(qn));
        }
        Ok(Self {
            mes,
            levels,
            next_levels,
            next_mc,
            min_ac,
            top_carried,
        })
    }

    /// From an estimate. With a quartic and a quantity table the curve is used;
    /// otherwise `G(h + 1)` stands in for the next floor's marginal cost and the
    /// tallest height carries its own level forward.
    pub fn from_estimate(estimate: &FrontierEstimate, quantity: Option<&QuantityTable>) -> Result<Self> {
        let max_h = estimate.max_height();
        if let (Some(curve), Some(q)) = (&estimate.quartic, quantity) {
            return Self::from_quartic(curve, q, max_h, estimate.mes);
        }
        let levels: Vec<f64> = (1..=max_h).map(|h| estimate.level(h)).collect::<Result<_>>()?;
        let next_levels: Vec<f64> = (1..=max_h).map(|h| levels[h.min(max_h - 1) as usize]).collect();
        let min_ac = estimate.level(estimate.mes)?;
        Ok(Self {
            mes: estimate.mes,
            next_mc: next_levels.clone(),
            next_levels,
            levels,
            min_ac,
            top_carried: true,
        })
    }

    pub fn max_height(&self) -> u32 {
        self.levels.len() as u32
    }

    fn index(&self, h: u32) -> Result<usize> {
        if h == 0 || h > self.max_height() {
            return Err(Error::HeightOutOfRange(h));
        }
        Ok(h as usize - 1)
    }

    pub fn level(&self, h: u32) -> Result<f64> {
        Ok(self.levels[self.index(h)?])
    }

    pub fn next_level(&self, h: u32) -> Result<f64> {
        Ok(self.next_levels[self.index(h)?])
    }

    /// Regulatory tax in currency: the excess of price over least average cost
    /// below the MES, over the next floor's marginal cost from the MES up.
    /// Never negative.
    pub fn rt_level(&self, price: f64, h: u32) -> Result<f64> {
        let i = self.index(h)?;
        let benchmark = if h < self.mes { self.min_ac } else { self.next_mc[i] };
        Ok((price - benchmark).max(0.0))
    }
}
