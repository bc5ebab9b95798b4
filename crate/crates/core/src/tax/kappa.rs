use serde::{Deserialize, Serialize};

use crate::domain::{years_since_epoch, Transaction};
use crate::error::{Error, Result};
use crate::hedonic::RESTRICTED_TERMS;
use crate::stats::ols::{dense_ids, fe_ols};
use crate::stats::poly::PolyFit;

/// Period, cohort and age effects from resales of existing homes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEffects {
    /// `γ(t) = γ1 t + γ2 t²`, `t` in years since 1997-01-01.
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
    pub delta_se: f64,
    pub kappa_t: f64,
    pub kappa_t_se: f64,
    pub n_obs: usize,
    /// Hedonic terms left in the regression.
    pub controls: Vec<String>,
}

impl PeriodEffects {
    pub fn gamma(&self, t: f64) -> f64 {
        self.gamma1 * t + self.gamma2 * t * t
    }
}

/// Time path of prices used to move a price between periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PeriodCurve {
    Quadratic { gamma1: f64, gamma2: f64 },
    /// Fitted price trend on sale days (the detrending series).
    Series(PolyFit),
    Flat,
}

impl PeriodCurve {
    pub fn from_effects(p: &PeriodEffects) -> Self {
        PeriodCurve::Quadratic {
            gamma1: p.gamma1,
            gamma2: p.gamma2,
        }
    }

    /// `γ` at a sale day.
    pub fn at_day(&self, day: f64) -> f64 {
        match self {
            PeriodCurve::Quadratic { gamma1, gamma2 } => {
                let t = years_since_epoch(day);
                gamma1 * t + gamma2 * t * t
            }
            PeriodCurve::Series(fit) => fit.eval(day),
            PeriodCurve::Flat => 0.0,
        }
    }

    /// `T_ij = exp(γ(t_i) − γ(t_j))`.
    pub fn deflator(&self, day_i: f64, day_j: f64) -> f64 {
        (self.at_day(day_i) - self.at_day(day_j)).exp()
    }
}

const CORE: [&str; 5] = ["t", "t2_100", "s2_100", "age", "age2_100"];

/// Within-parcel regression of log price on `t, t²/100, s²/100, age,
/// age²/100` and the restricted floor/height terms, where `t` is the sale
/// year, `s` the construction year (both from 1997) and `age = t − s`.
/// `δ = coef(s²)/coef(t²)` and `κ_T = δ/(1 + δ)` with delta-method errors.
///
/// Hedonic terms that are constant or collinear within parcels are dropped.
/// The cohort effect is unidentified when `coef(t²)` is within two standard
/// errors of zero.
pub fn fit_kappa_t(txs: &[Transaction]) -> Result<PeriodEffects> {
    let rows: Vec<&Transaction> = txs.iter().filter(|t| t.log_price.is_some()).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no priced resales".into()));
    }
    let y: Vec<f64> = rows.iter().map(|t| t.log_price.expect("filtered")).collect();
    let (groups, _) = dense_ids(&rows.iter().map(|t| t.parcel_id.clone()).collect::<Vec<_>>());
    let mut names: Vec<String> = CORE.iter().map(|s| s.to_string()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); 5];
    for t in &rows {
        let tt = years_since_epoch(t.day());
        let s = (t.construction_year - 1997) as f64;
        let age = tt - s;
        for (c, v) in columns.iter_mut().zip([tt, tt * tt / 100.0, s * s / 100.0, age, age * age / 100.0]) {
            c.push(v);
        }
    }
    for (k, name) in RESTRICTED_TERMS.iter().enumerate() {
        let col: Vec<f64> = rows
            .iter()
            .map(|t| crate::hedonic::restricted_row(t.floor, t.height)[k])
            .collect();
        if col.iter().any(|v| *v != 0.0) {
            names.push(name.to_string());
            columns.push(col);
        }
    }

    let fit = loop {
        match fe_ols(&y, &columns, &names, Some(&groups)) {
            Ok(fit) => break fit,
            Err(Error::RankDeficient(bad)) => {
                if let Some(core) = bad.iter().find(|b| CORE.contains(&b.as_str())) {
                    return Err(if core == "t2_100" || core == "s2_100" {
                        Error::Unidentified(format!("{core} is collinear with the other regressors"))
                    } else {
                        Error::RankDeficient(vec![core.clone()])
                    });
                }
                let keep: Vec<usize> = (0..names.len()).filter(|&i| !bad.contains(&names[i])).collect();
                names = keep.iter().map(|&i| names[i].clone()).collect();
                columns = keep.iter().map(|&i| columns[i].clone()).collect();
            }
            Err(e) => return Err(e),
        }
    };

    let bt = fit.coef[1];
    let bs = fit.coef[2];
    let se_t = fit.se[1];
    if !(bt.abs() > 2.0 * se_t) {
        return Err(Error::Unidentified(format!(
            "coefficient on t²/100 is {bt:.3e} with standard error {se_t:.3e}"
        )));
    }
    let delta = bs / bt;
    let var = fit.cov_at(2, 2) / (bt * bt) + bs * bs * fit.cov_at(1, 1) / bt.powi(4)
        - 2.0 * bs * fit.cov_at(1, 2) / bt.powi(3);
    let delta_se = var.max(0.0).sqrt();
    Ok(PeriodEffects {
        gamma1: fit.coef[0],
        gamma2: bt / 100.0,
        alpha1: fit.coef[3],
        alpha2: fit.coef[4] / 100.0,
        delta,
        delta_se,
        kappa_t: delta / (1.0 + delta),
        kappa_t_se: delta_se / (1.0 + delta).powi(2),
        n_obs: fit.n_obs,
        controls: names[5..].to_vec(),
    })
}
