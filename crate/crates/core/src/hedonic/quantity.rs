use serde::{Deserialize, Serialize};

use super::HedonicModel;
use crate::error::{Error, Result};

/// Housing quantity per parcel, `q(h) = Σ_{f=1..h} m(f, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityTable {
    /// `q[h - 1]` for `h = 1..=H`.
    q: Vec<f64>,
}

impl QuantityTable {
    /// From `q(1), …, q(H)`; must be positive and strictly increasing.
    pub fn from_values(q: Vec<f64>) -> Result<Self> {
        let bad: Vec<u32> = q
            .iter()
            .enumerate()
            .filter(|&(i, &v)| !(v > 0.0 && v.is_finite()) || (i > 0 && v <= q[i - 1]))
            .map(|(i, _)| i as u32 + 1)
            .collect();
        if !bad.is_empty() || q.is_empty() {
            return Err(Error::NonMonotoneQuantity(bad));
        }
        Ok(Self { q })
    }

    /// `q(h) = h`.
    pub fn identity(max_height: u32) -> Self {
        Self {
            q: (1..=max_height).map(f64::from).collect(),
        }
    }

    pub fn max_height(&self) -> u32 {
        self.q.len() as u32
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn q(&self, h: u32) -> Result<f64> {
        if h == 0 || h as usize > self.q.len() {
            return Err(Error::HeightOutOfRange(h));
        }
        Ok(self.q[h as usize - 1])
    }

    /// Height whose quantity equals `q` (to within 1e-9 relative).
    pub fn height_of(&self, q: f64) -> Option<u32> {
        let i = self.q.partition_point(|&v| v < q * (1.0 - 1e-9));
        (i < self.q.len() && (self.q[i] - q).abs() <= 1e-9 * q.abs().max(1.0)).then_some(i as u32 + 1)
    }

    /// Continuous inverse, linear between tabulated heights.
    pub fn inverse(&self, q: f64) -> Option<f64> {
        let first = self.q[0];
        let last = *self.q.last()?;
        if q < first || q > last {
            return None;
        }
        let i = self.q.partition_point(|&v| v < q);
        if i == 0 {
            return Some(1.0);
        }
        let (a, b) = (self.q[i - 1], self.q[i]);
        Some(i as f64 + (q - a) / (b - a))
    }

    /// `(q(h) − h)/h` per height.
    pub fn sanity_ratios(&self) -> Vec<(u32, f64)> {
        self.q
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let h = (i + 1) as f64;
                (i as u32 + 1, (v - h) / h)
            })
            .collect()
    }
}

/// Tabulate `q(h)` for `h = 1..=max_height` from the fitted premia.
pub fn quantity_table(model: &HedonicModel, max_height: u32) -> Result<QuantityTable> {
    let mut q = Vec::with_capacity(max_height as usize);
    let mut bad_cells = Vec::new();
    for h in 1..=max_height {
        let mut total = 0.0;
        for f in 1..=h {
            let m = model.ln_premium(f, h)?.exp();
            if !(m > 0.0 && m.is_finite()) {
                bad_cells.push((f, h));
            }
            total += m;
        }
        q.push(total);
    }
    if !bad_cells.is_empty() {
        return Err(Error::NonPositivePremium(bad_cells));
    }
    QuantityTable::from_values(q)
}
