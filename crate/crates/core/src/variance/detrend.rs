use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::Panel;
use crate::error::{Error, Result};
use crate::stats::poly::{fit_canonical, select_degree_kfold, DegreeSelection, PolyFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetrendConfig {
    pub max_degree: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for DetrendConfig {
    fn default() -> Self {
        Self {
            max_degree: 12,
            folds: 10,
            seed: 0,
        }
    }
}

/// Panel of residuals from a series regression of price on sale day.
#[derive(Debug, Clone)]
pub struct Detrended {
    pub residuals: Panel,
    /// Fitted price index γ̂(day).
    pub trend: PolyFit,
    pub selection: DegreeSelection,
}

/// Regress every apartment price on its sale day with a polynomial series,
/// degree picked by K-fold cross-validation, and keep the residuals.
pub fn time_detrend(panel: &Panel, config: &DetrendConfig) -> Result<Detrended> {
    let (days, ys): (Vec<f64>, Vec<f64>) = panel
        .heights()
        .iter()
        .flat_map(|h| h.apartments().map(|a| (a.day, a.y)))
        .unzip();
    let distinct = days.iter().map(|d| d.to_bits()).collect::<BTreeSet<_>>().len();
    let max_degree = config.max_degree.min(distinct.saturating_sub(1));
    if days.len() < max_degree + 1 + config.folds.max(2) {
        return Err(Error::InsufficientData(format!(
            "{} apartments for a degree-{} trend",
            days.len(),
            config.max_degree
        )));
    }
    let selection = select_degree_kfold(&days, &ys, max_degree, config.folds, config.seed)?;
    let trend = fit_canonical(&days, &ys, selection.degree)?;
    let mut residuals = panel.clone();
    residuals.map_prices(|_, a| a.y - trend.eval(a.day));
    Ok(Detrended {
        residuals,
        trend,
        selection,
    })
}

/// Detrend with a fixed polynomial degree.
pub fn time_detrend_with_degree(panel: &Panel, degree: usize) -> Result<Detrended> {
    let (days, ys): (Vec<f64>, Vec<f64>) = panel
        .heights()
        .iter()
        .flat_map(|h| h.apartments().map(|a| (a.day, a.y)))
        .unzip();
    if days.len() < degree + 1 {
        return Err(Error::InsufficientData(format!(
            "{} apartments for a degree-{degree} trend",
            days.len()
        )));
    }
    let trend = fit_canonical(&days, &ys, degree)?;
    let mut residuals = panel.clone();
    residuals.map_prices(|_, a| a.y - trend.eval(a.day));
    Ok(Detrended {
        residuals,
        trend,
        selection: DegreeSelection {
            degree,
            cv_error: Vec::new(),
        },
    })
}
