use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::Transaction;
use crate::error::{Error, Result};

/// A published price index, stepped between observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceIndexSeries {
    pub name: String,
    points: Vec<(NaiveDate, f64)>,
}

fn month_end(date: NaiveDate) -> NaiveDate {
    let (y, m) = if date.month() == 12 {
        (date.year() + 1, 1)
    } else {
        (date.year(), date.month() + 1)
    };
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start") - chrono::Duration::days(1)
}

impl PriceIndexSeries {
    pub fn new(name: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let name = name.into();
        if points.is_empty() {
            return Err(Error::InvalidIndex {
                index: name,
                reason: "no observations".into(),
            });
        }
        if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidIndex {
                index: name,
                reason: format!("dates not strictly increasing at {}", w[1].0),
            });
        }
        if let Some(p) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
            return Err(Error::InvalidIndex {
                index: name,
                reason: format!("non-positive value at {}", p.0),
            });
        }
        Ok(Self { name, points })
    }

    /// Read a `date,index` CSV.
    pub fn read<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let name = name.into();
        let mut rdr = csv::Reader::from_reader(reader);
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let bad = |what: &str| Error::InvalidIndex {
                index: name.clone(),
                reason: format!("unparseable {what} in {:?}", rec),
            };
            let date = rec
                .get(0)
                .and_then(|s| NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok())
                .ok_or_else(|| bad("date"))?;
            let value: f64 = rec
                .get(1)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("index"))?;
            points.push((date, value));
        }
        Self::new(name, points)
    }

    pub fn load(name: impl Into<String>, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(name, file)
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    /// Index level on `date`: the latest observation on or before it.
    pub fn value_at(&self, date: NaiveDate) -> Result<f64> {
        let last = self.points.last().expect("non-empty series");
        if date < self.points[0].0 || date > month_end(last.0) {
            return Err(Error::IndexCoverage {
                index: self.name.clone(),
                date: date.to_string(),
            });
        }
        let pos = self.points.partition_point(|p| p.0 <= date);
        Ok(self.points[pos - 1].1)
    }

    /// Mean level over the observations falling in `year`.
    pub fn base_level(&self, year: i32) -> Result<f64> {
        let in_year: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.0.year() == year)
            .map(|p| p.1)
            .collect();
        if in_year.is_empty() {
            return Err(Error::IndexCoverage {
                index: self.name.clone(),
                date: format!("base year {year}"),
            });
        }
        Ok(in_year.iter().sum::<f64>() / in_year.len() as f64)
    }
}

/// Converts nominal prices per m² into real, construction-cost-adjusted prices.
#[derive(Debug, Clone)]
pub struct Deflator<'a> {
    cpi: &'a PriceIndexSeries,
    cost: Option<&'a PriceIndexSeries>,
    cpi_base: f64,
    cost_base: f64,
}

impl<'a> Deflator<'a> {
    pub fn new(
        cpi: &'a PriceIndexSeries,
        cost: Option<&'a PriceIndexSeries>,
        base_year: i32,
    ) -> Result<Self> {
        Ok(Self {
            cpi,
            cost,
            cpi_base: cpi.base_level(base_year)?,
            cost_base: match cost {
                Some(c) => c.base_level(base_year)?,
                None => 1.0,
            },
        })
    }

    /// Multiplicative factor applied to a nominal price on `date`.
    pub fn factor(&self, date: NaiveDate) -> Result<f64> {
        let mut f = self.cpi_base / self.cpi.value_at(date)?;
        if let Some(cost) = self.cost {
            f *= self.cost_base / cost.value_at(date)?;
        }
        Ok(f)
    }

    pub fn real(&self, nominal: f64, date: NaiveDate) -> Result<f64> {
        Ok(nominal * self.factor(date)?)
    }

    pub fn nominal(&self, real: f64, date: NaiveDate) -> Result<f64> {
        Ok(real / self.factor(date)?)
    }
}

/// Attach `log_price = ln(price/area × CPI(base)/CPI(date) × cost(base)/cost(date))`.
pub fn deflate_prices(
    mut txs: Vec<Transaction>,
    cpi: &PriceIndexSeries,
    cost: Option<&PriceIndexSeries>,
    base_year: i32,
) -> Result<Vec<Transaction>> {
    let deflator = Deflator::new(cpi, cost, base_year)?;
    for t in &mut txs {
        let factor = deflator.factor(t.transaction_date)?;
        t.log_price = Some((t.price / t.area).ln() + factor.ln());
    }
    Ok(txs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn monthly(name: &str, from: i32, to: i32, f: impl Fn(i32) -> f64) -> PriceIndexSeries {
        let mut pts = Vec::new();
        let mut k = 0;
        for y in from..=to {
            for m in 1..=12 {
                pts.push((d(y, m, 1), f(k)));
                k += 1;
            }
        }
        PriceIndexSeries::new(name, pts).unwrap()
    }

    fn sale(price: f64, area: f64, date: NaiveDate) -> Transaction {
        Transaction {
            row: 1,
            parcel_id: "p".into(),
            bloc_id: "b".into(),
            city_id: "c".into(),
            building_id: None,
            price,
            area,
            floor: 1,
            height: 2,
            construction_year: date.year(),
            transaction_date: date,
            legal_status: Some(0),
            ownership_share: 1.0,
            single_family: false,
            x: None,
            y: None,
            log_price: None,
            adjusted_log_price: None,
        }
    }

    #[test]
    fn constant_index_leaves_price_per_sqm() {
        let cpi = monthly("cpi", 2010, 2012, |_| 100.0);
        let cost = monthly("cost", 2010, 2012, |_| 7.0);
        let out = deflate_prices(vec![sale(1e6, 80.0, d(2011, 7, 19))], &cpi, Some(&cost), 2012).unwrap();
        assert!((out[0].log_price.unwrap() - (1e6f64 / 80.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn doubling_cost_index_halves_level() {
        let cpi = monthly("cpi", 2010, 2012, |_| 100.0);
        let cost = monthly("cost", 2010, 2012, |k| if k == 18 { 200.0 } else { 100.0 });
        let deflator = Deflator::new(&cpi, Some(&cost), 2010).unwrap();
        let normal = deflator.real(1000.0, d(2011, 6, 10)).unwrap();
        let doubled = deflator.real(1000.0, d(2011, 7, 10)).unwrap();
        assert!((normal / doubled - 2.0).abs() < 1e-14);
    }

    #[test]
    fn known_inflation_path_round_trips() {
        // 0.3% monthly CPI inflation and 0.2% monthly cost growth.
        let cpi = monthly("cpi", 2000, 2017, |k| 80.0 * 1.003f64.powi(k));
        let cost = monthly("cost", 2000, 2017, |k| 50.0 * 1.002f64.powi(k));
        let deflator = Deflator::new(&cpi, Some(&cost), 2017).unwrap();
        let date = d(2005, 3, 17);
        let k = 5 * 12 + 2;
        let base_cpi: f64 = (0..12).map(|m| 80.0 * 1.003f64.powi(17 * 12 + m)).sum::<f64>() / 12.0;
        let base_cost: f64 = (0..12).map(|m| 50.0 * 1.002f64.powi(17 * 12 + m)).sum::<f64>() / 12.0;
        let expected = 12_000.0 * base_cpi / (80.0 * 1.003f64.powi(k)) * base_cost / (50.0 * 1.002f64.powi(k));
        let real = deflator.real(12_000.0, date).unwrap();
        assert!((real / expected - 1.0).abs() < 1e-12);
        let back = deflator.nominal(real, date).unwrap();
        assert!((back - 12_000.0).abs() < 1e-12 * 12_000.0);
    }

    #[test]
    fn homogeneity_in_price_scale() {
        let cpi = monthly("cpi", 2010, 2011, |k| 100.0 + k as f64);
        let a = deflate_prices(vec![sale(1e6, 90.0, d(2010, 9, 9))], &cpi, None, 2011).unwrap();
        let b = deflate_prices(vec![sale(3e6, 90.0, d(2010, 9, 9))], &cpi, None, 2011).unwrap();
        assert!((b[0].log_price.unwrap() - a[0].log_price.unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn uncovered_date_is_an_error() {
        let cpi = monthly("cpi", 2010, 2011, |_| 100.0);
        assert!(cpi.value_at(d(2011, 12, 31)).is_ok());
        assert!(matches!(cpi.value_at(d(2012, 1, 1)), Err(Error::IndexCoverage { .. })));
        assert!(matches!(cpi.value_at(d(2009, 12, 31)), Err(Error::IndexCoverage { .. })));
    }

    #[test]
    fn unordered_series_is_rejected() {
        let err = PriceIndexSeries::new("x", vec![(d(2010, 2, 1), 1.0), (d(2010, 1, 1), 1.0)]);
        assert!(err.is_err());
        let csv = "date,index\n2010-01-01,100\n2010-02-01,101.5\n";
        let s = PriceIndexSeries::read("cpi", csv.as_bytes()).unwrap();
        assert_eq!(s.value_at(d(2010, 2, 20)).unwrap(), 101.5);
    }
}
