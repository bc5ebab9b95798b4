use serde::{Deserialize, Serialize};

use super::{VarianceEstimates, VarianceFlag};
use crate::error::{Error, Result};
use crate::stats::poly::{select_degree_loo, PolyFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothConfig {
    pub max_degree: usize,
    /// Floor for fitted variances.
    pub epsilon: f64,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            max_degree: 6,
            epsilon: 1e-6,
        }
    }
}

/// Weighted series fit across heights, degree by leave-one-out CV.
fn smooth_series(points: &[(f64, f64, f64)], max_degree: usize) -> Result<PolyFit> {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let w: Vec<f64> = points.iter().map(|p| p.2).collect();
    let degree = if points.len() < 2 {
        0
    } else {
        select_degree_loo(&x, &y, &w, max_degree)?.degree
    };
    PolyFit::fit(&x, &y, Some(&w), degree)
}

/// Fill `var_v_smooth` and `var_w_smooth` at every height. Absent and negative
/// raw values are left out of the fit and imputed from it. The Var(u) moment is
/// not smoothed.
pub fn smooth_variances(mut est: VarianceEstimates, config: &SmoothConfig) -> Result<VarianceEstimates> {
    let v_points: Vec<(f64, f64, f64)> = est
        .heights
        .iter()
        .filter_map(|h| h.var_v.map(|v| (h.height as f64, v, h.dof_v as f64)))
        .filter(|p| p.2 > 0.0)
        .collect();
    let w_points: Vec<(f64, f64, f64)> = est
        .heights
        .iter()
        .filter_map(|h| h.var_w.filter(|&w| w >= 0.0).map(|w| (h.height as f64, w, h.dof_w as f64)))
        .filter(|p| p.2 > 0.0)
        .collect();
    if v_points.is_empty() {
        return Err(Error::InsufficientData("no height has a within-building variance".into()));
    }
    if w_points.is_empty() {
        return Err(Error::InsufficientData("no height has a usable building-level variance".into()));
    }
    let v_fit = smooth_series(&v_points, config.max_degree)?;
    let w_fit = smooth_series(&w_points, config.max_degree)?;
    for h in &mut est.heights {
        let x = h.height as f64;
        let v = v_fit.eval(x);
        let w = w_fit.eval(x);
        if h.var_v.is_none() {
            h.flag(VarianceFlag::VarVImputed);
        }
        if h.var_w.map_or(true, |w| w < 0.0) {
            h.flag(VarianceFlag::VarWImputed);
        }
        if v < config.epsilon {
            h.flag(VarianceFlag::VarVFloored);
        }
        if w < config.epsilon {
            h.flag(VarianceFlag::VarWFloored);
        }
        h.var_v_smooth = Some(v.max(config.epsilon));
        h.var_w_smooth = Some(w.max(config.epsilon));
    }
    Ok(est)
}
