use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Transaction;
use crate::error::{Error, Result};
use crate::stats::ols::{dense_ids, fe_ols};
use crate::stats::poly::legendre_into;

const DAY_DEGREE: usize = 9;
const REFERENCE: (u32, u32) = (2, 4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedonicSpec {
    /// Dummy for every observed floor × height cell.
    Saturated,
    /// Linear floor and height with low-floor, penthouse and elevator-cutoff terms.
    Restricted,
}

impl std::str::FromStr for HedonicSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saturated" => Ok(Self::Saturated),
            "restricted" => Ok(Self::Restricted),
            other => Err(Error::InvalidArgument(format!("unknown hedonic spec `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub coef: f64,
    /// Robust standard error; absent for coefficients supplied directly.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PremiumCell {
    pub floor: u32,
    pub height: u32,
    pub ln_m: f64,
}

/// Fitted premium model. `ln m(2, 4) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedonicModel {
    pub spec: HedonicSpec,
    pub terms: Vec<Term>,
    /// Restricted-design terms that never vary in the data; held at zero.
    pub absent_terms: Vec<String>,
    pub year_before: f64,
    pub year_after: f64,
    pub max_height: u32,
    /// `ln m(f, h)` for `0 ≤ f ≤ h ≤ max_height` (observed cells only when saturated).
    pub premia: Vec<PremiumCell>,
    pub n_obs: usize,
    pub n_parcels: usize,
}

pub(crate) const RESTRICTED_TERMS: [&str; 18] = [
    "floor",
    "ground",
    "first",
    "second",
    "third",
    "ground_x_above4",
    "first_x_above4",
    "second_x_above4",
    "third_x_above4",
    "ground_x_above10",
    "first_x_above10",
    "second_x_above10",
    "third_x_above10",
    "floor_x_above10",
    "height",
    "penthouse",
    "penthouse_1",
    "penthouse_x_height",
];

/// Premium regressors of the restricted design, in `RESTRICTED_TERMS` order.
pub(crate) fn restricted_row(floor: u32, height: u32) -> [f64; 18] {
    let f = floor as f64;
    let h = height as f64;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let low = [ind(floor == 0), ind(floor == 1), ind(floor == 2), ind(floor == 3)];
    let above4 = ind(height > 4);
    let above10 = ind(height > 10);
    let pent = ind(floor == height);
    let pent1 = ind(height >= 1 && floor + 1 == height);
    [
        f,
        low[0],
        low[1],
        low[2],
        low[3],
        low[0] * above4,
        low[1] * above4,
        low[2] * above4,
        low[3] * above4,
        low[0] * above10,
        low[1] * above10,
        low[2] * above10,
        low[3] * above10,
        f * above10,
        h,
        pent,
        pent1,
        (pent + pent1) * h,
    ]
}

fn timing(t: &Transaction) -> (f64, f64) {
    match t.years_after_construction() {
        -1 => (1.0, 0.0),
        1 => (0.0, 1.0),
        _ => (0.0, 0.0),
    }
}

fn cell_name(floor: u32, height: u32) -> String {
    format!("cell_f{floor}_h{height}")
}

/// Fixed-effects fit of deflated log price on the premium design, timing
/// dummies, a degree-9 calendar-day polynomial and legal-status dummies, with
/// parcel effects absorbed.
pub fn fit_hedonic(txs: &[Transaction], spec: HedonicSpec) -> Result<HedonicModel> {
    let y: Vec<f64> = txs
        .iter()
        .map(|t| {
            t.log_price
                .ok_or_else(|| Error::InvalidArgument(format!("row {} has no deflated price", t.row)))
        })
        .collect::<Result<_>>()?;
    let n = txs.len();

    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut absent_terms = Vec::new();

    let cells: BTreeSet<(u32, u32)> = txs.iter().map(|t| (t.floor, t.height)).collect();
    match spec {
        HedonicSpec::Restricted => {
            let rows: Vec<[f64; 18]> = txs.iter().map(|t| restricted_row(t.floor, t.height)).collect();
            for (j, name) in RESTRICTED_TERMS.iter().enumerate() {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                if col.iter().all(|&v| v == 0.0) {
                    absent_terms.push(name.to_string());
                } else {
                    names.push(name.to_string());
                    columns.push(col);
                }
            }
        }
        HedonicSpec::Saturated => {
            if !cells.contains(&REFERENCE) {
                return Err(Error::InsufficientData(
                    "reference cell (floor 2, height 4) not observed".into(),
                ));
            }
            for &(f, h) in cells.iter().filter(|&&c| c != REFERENCE) {
                names.push(cell_name(f, h));
                columns.push(
                    txs.iter()
                        .map(|t| if (t.floor, t.height) == (f, h) { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
    }

    let (before, after): (Vec<f64>, Vec<f64>) = txs.iter().map(timing).unzip();
    for (name, col) in [("year_before", before), ("year_after", after)] {
        if col.iter().any(|&v| v != 0.0) {
            names.push(name.into());
            columns.push(col);
        }
    }

    let days: Vec<f64> = txs.iter().map(|t| t.day()).collect();
    let lo = days.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = days.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        let mut basis = vec![0.0; DAY_DEGREE + 1];
        let mut day_cols = vec![Vec::with_capacity(n); DAY_DEGREE];
        for &d in &days {
            legendre_into(2.0 * (d - lo) / (hi - lo) - 1.0, DAY_DEGREE, &mut basis);
            for (k, col) in day_cols.iter_mut().enumerate() {
                col.push(basis[k + 1]);
            }
        }
        // Fewer distinct days than terms would make high powers collinear.
        let distinct = days.iter().map(|d| d.to_bits()).collect::<BTreeSet<_>>().len();
        for (k, col) in day_cols.into_iter().enumerate().take(distinct.saturating_sub(1)) {
            names.push(format!("day_p{}", k + 1));
            columns.push(col);
        }
    }

    let statuses: BTreeSet<u8> = txs.iter().filter_map(|t| t.legal_status).collect();
    for &s in statuses.iter().skip(1) {
        names.push(format!("legal_{s}"));
        columns.push(
            txs.iter()
                .map(|t| if t.legal_status == Some(s) { 1.0 } else { 0.0 })
                .collect(),
        );
    }

    let parcels: Vec<&str> = txs.iter().map(|t| t.parcel_id.as_str()).collect();
    let (groups, n_parcels) = dense_ids(&parcels);
    let fit = fe_ols(&y, &columns, &names, Some(&groups))?;

    let terms: Vec<Term> = fit
        .names
        .iter()
        .zip(fit.coef.iter().zip(&fit.se))
        .map(|(name, (&coef, &se))| Term {
            name: name.clone(),
            coef,
            se: Some(se),
        })
        .collect();
    let max_height = txs.iter().map(|t| t.height).max().unwrap_or(0);
    let mut model = HedonicModel {
        spec,
        year_before: fit.coef_of("year_before").unwrap_or(0.0),
        year_after: fit.coef_of("year_after").unwrap_or(0.0),
        terms,
        absent_terms,
        max_height,
        premia: Vec::new(),
        n_obs: n,
        n_parcels,
    };
    model.premia = match spec {
        HedonicSpec::Restricted => (1..=max_height)
            .flat_map(|h| (0..=h).map(move |f| (f, h)))
            .map(|(f, h)| PremiumCell {
                floor: f,
                height: h,
                ln_m: model.restricted_ln_premium(f, h),
            })
            .collect(),
        HedonicSpec::Saturated => cells
            .iter()
            .map(|&(f, h)| PremiumCell {
                floor: f,
                height: h,
                ln_m: if (f, h) == REFERENCE {
                    0.0
                } else {
                    model.coef(&cell_name(f, h)).unwrap_or(0.0)
                },
            })
            .collect(),
    };
    Ok(model)
}

impl HedonicModel {
    /// Model built directly from restricted-design coefficients (missing names count as zero).
    pub fn restricted_from_coefficients(
        coefficients: &[(&str, f64)],
        year_before: f64,
        year_after: f64,
        max_height: u32,
    ) -> Result<Self> {
        let mut terms = Vec::new();
        for &(name, coef) in coefficients {
            if !RESTRICTED_TERMS.contains(&name) {
                return Err(Error::InvalidArgument(format!("unknown restricted term `{name}`")));
            }
            terms.push(Term {
                name: name.to_string(),
                coef,
                se: None,
            });
        }
        let mut model = HedonicModel {
            spec: HedonicSpec::Restricted,
            terms,
            absent_terms: Vec::new(),
            year_before,
            year_after,
            max_height,
            premia: Vec::new(),
            n_obs: 0,
            n_parcels: 0,
        };
        model.premia = (1..=max_height)
            .flat_map(|h| (0..=h).map(move |f| (f, h)))
            .map(|(f, h)| PremiumCell {
                floor: f,
                height: h,
                ln_m: model.restricted_ln_premium(f, h),
            })
            .collect();
        Ok(model)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.coef)
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).and_then(|t| t.se)
    }

    fn restricted_ln_premium(&self, floor: u32, height: u32) -> f64 {
        let x = restricted_row(floor, height);
        let x0 = restricted_row(REFERENCE.0, REFERENCE.1);
        RESTRICTED_TERMS
            .iter()
            .enumerate()
            .map(|(j, name)| self.coef(name).unwrap_or(0.0) * (x[j] - x0[j]))
            .sum()
    }

    /// `ln m(floor, height)`.
    pub fn ln_premium(&self, floor: u32, height: u32) -> Result<f64> {
        if height == 0 || floor > height {
            return Err(Error::CellOutOfRange { floor, height });
        }
        match self.spec {
            HedonicSpec::Restricted => Ok(self.restricted_ln_premium(floor, height)),
            HedonicSpec::Saturated => self
                .premia
                .iter()
                .find(|c| c.floor == floor && c.height == height)
                .map(|c| c.ln_m)
                .ok_or(Error::CellOutOfRange { floor, height }),
        }
    }

    /// Premium table as `height → [ln m(0,h), …, ln m(h,h)]` over fitted cells.
    pub fn premium_table(&self) -> BTreeMap<u32, Vec<(u32, f64)>> {
        let mut out: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
        for c in &self.premia {
            out.entry(c.height).or_default().push((c.floor, c.ln_m));
        }
        out
    }

    pub fn timing_effect(&self, t: &Transaction) -> f64 {
        let (b, a) = timing(t);
        self.year_before * b + self.year_after * a
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Set `adjusted_log_price = log_price − ln m(f, h) − timing effect`.
pub fn adjust_prices(mut txs: Vec<Transaction>, model: &HedonicModel) -> Result<Vec<Transaction>> {
    for t in &mut txs {
        let y = t
            .log_price
            .ok_or_else(|| Error::InvalidArgument(format!("row {} has no deflated price", t.row)))?;
        t.adjusted_log_price = Some(y - model.ln_premium(t.floor, t.height)? - model.timing_effect(t));
    }
    Ok(txs)
}
