use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::{HeightData, HeightSummary};
use super::tn::solve_sigma_u;
use crate::error::{Error, Result};

/// Profiled log likelihood over a grid of frontier values at one height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfiledHeight {
    pub height: u32,
    /// Ascending.
    pub g_grid: Vec<f64>,
    /// `max_μ L(g, μ)`; `-inf` where no `μ` is feasible.
    pub loglik: Vec<f64>,
    pub mu_u: Vec<f64>,
    pub sigma_u: Vec<f64>,
}

impl ProfiledHeight {
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.loglik.iter().enumerate() {
            if v.is_finite() && best.map_or(true, |b| v > self.loglik[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// `(μ_u, σ_u)` candidates: σ_u matches the Var(u) moment for each μ_u.
pub(crate) fn mu_sigma_pairs(mu_grid: &[f64], var_u: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let s = solve_sigma_u(mu, var_u)?;
        if s.is_finite() && s > 0.0 {
            out.push((mu, s));
        }
    }
    Ok(out)
}

/// Best `(loglik, μ_u, σ_u)` over the candidate pairs at one frontier value.
/// Ties go to the first (smallest) μ_u.
pub(crate) fn best_mu(summary: &HeightSummary, g: f64, pairs: &[(f64, f64)]) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
    for &(mu, s) in pairs {
        let ll = summary.loglik(g, mu, s);
        if ll.is_finite() && ll > best.0 {
            best = (ll, mu, s);
        }
    }
    best
}

/// For each `g` in `g_grid`, maximize the height likelihood over `mu_grid`,
/// with `σ_u` solved from the Var(u) moment.
pub fn profile_height(
    data: &HeightData,
    g_grid: &[f64],
    mu_grid: &[f64],
    sigma_v: f64,
    sigma_w: f64,
    var_u_moment: f64,
) -> Result<ProfiledHeight> {
    if g_grid.is_empty() || mu_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(sigma_v > 0.0 && sigma_w > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "measurement scales must be positive (σ_v={sigma_v}, σ_w={sigma_w})"
        )));
    }
    let pairs = mu_sigma_pairs(mu_grid, var_u_moment)?;
    let summary = data.summarize(sigma_v * sigma_v, sigma_w * sigma_w);
    let cells: Vec<(f64, f64, f64)> = g_grid.par_iter().map(|&g| best_mu(&summary, g, &pairs)).collect();
    Ok(ProfiledHeight {
        height: data.height,
        g_grid: g_grid.to_vec(),
        loglik: cells.iter().map(|c| c.0).collect(),
        mu_u: cells.iter().map(|c| c.1).collect(),
        sigma_u: cells.iter().map(|c| c.2).collect(),
    })
}
