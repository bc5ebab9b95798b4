use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dp::constrained_argmax;
use super::likelihood::HeightData;
use super::profile::{profile_height, ProfiledHeight};
use super::quartic::CostCurve;
use crate::domain::Panel;
use crate::error::{Error, Result};
use crate::variance::VarianceEstimates;

/// Frontier and deviation parameters at one height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightParams {
    pub height: u32,
    /// Frontier log price.
    pub g: f64,
    pub mu_u: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Constrained,
    PerHeight,
    Quartic,
}

impl std::str::FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constrained" => Ok(Self::Constrained),
            "per-height" | "per_height" => Ok(Self::PerHeight),
            "quartic" => Ok(Self::Quartic),
            other => Err(Error::InvalidArgument(format!("unknown frontier mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub g_points: usize,
    pub mu_points: usize,
    /// Lower edge of the frontier grid, in standard deviations of building means below the lowest one.
    pub g_sd_below: f64,
    /// Upper edge of the μ_u grid in units of `√Var(u)`.
    pub mu_sd_above: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            g_points: 200,
            mu_points: 60,
            g_sd_below: 2.0,
            mu_sd_above: 4.0,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl GridConfig {
    /// Evenly spaced log-price grid from `min ȳ_ki − c·sd(ȳ_ki)` to the median building mean.
    pub fn g_grid(&self, data: &HeightData) -> Vec<f64> {
        let mut means: Vec<f64> = data.buildings().iter().map(|b| b.mean).collect();
        if means.is_empty() {
            return Vec::new();
        }
        means.sort_by(f64::total_cmp);
        let n = means.len();
        let avg = means.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let median = if n % 2 == 1 {
            means[n / 2]
        } else {
            0.5 * (means[n / 2 - 1] + means[n / 2])
        };
        let mut lo = means[0] - self.g_sd_below * sd;
        if median - lo < 1e-6 {
            lo = median - 0.5;
        }
        linspace(lo, median, self.g_points)
    }

    pub fn mu_grid(&self, var_u: f64) -> Vec<f64> {
        linspace(0.0, self.mu_sd_above * var_u.sqrt(), self.mu_points)
    }
}

/// Per-height likelihood inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightInput {
    pub data: HeightData,
    pub sigma_v: f64,
    pub sigma_w: f64,
    /// Var(u) moment; `None` when absent or not positive.
    pub var_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierInput {
    pub heights: Vec<HeightInput>,
}

impl FrontierInput {
    /// Pair each height of `panel` (undetrended prices) with its variance estimates.
    pub fn new(panel: &Panel, variances: &VarianceEstimates) -> Result<Self> {
        let mut heights = Vec::with_capacity(panel.heights().len());
        for hp in panel.heights() {
            let est = variances
                .at(hp.height)
                .ok_or_else(|| Error::MissingParameter(format!("variances at height {}", hp.height)))?;
            let v2 = est
                .sigma_v2()
                .filter(|v| *v > 0.0)
                .ok_or_else(|| Error::MissingParameter(format!("σ_v at height {}", hp.height)))?;
            let w2 = est
                .sigma_w2()
                .filter(|v| *v > 0.0)
                .ok_or_else(|| Error::MissingParameter(format!("σ_w at height {}", hp.height)))?;
            heights.push(HeightInput {
                data: HeightData::from_panel(hp),
                sigma_v: v2.sqrt(),
                sigma_w: w2.sqrt(),
                var_u: est.var_u_moment.filter(|v| *v > 0.0),
            });
        }
        Ok(Self { heights })
    }

    pub fn at(&self, height: u32) -> Option<&HeightInput> {
        self.heights.iter().find(|h| h.data.height == height)
    }
}

/// Profiled tables for every height with a usable Var(u) moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub profiles: Vec<ProfiledHeight>,
    /// Heights left out of the likelihood (no usable Var(u) moment).
    pub excluded: Vec<u32>,
    pub grid: GridConfig,
}

pub fn profile_all(input: &FrontierInput, grid: &GridConfig) -> Result<ProfileSet> {
    profile_with(input, grid, |h| grid.g_grid(&h.data))
}

/// Profiles on one frontier grid spanning every height's own grid, so that a
/// flat frontier is always on the grid.
pub fn profile_shared(input: &FrontierInput, grid: &GridConfig) -> Result<ProfileSet> {
    let (lo, hi) = input
        .heights
        .iter()
        .filter(|h| h.var_u.is_some())
        .map(|h| grid.g_grid(&h.data))
        .filter(|g| !g.is_empty())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
            (lo.min(g[0]), hi.max(g[g.len() - 1]))
        });
    let shared = if lo <= hi { linspace(lo, hi, grid.g_points) } else { Vec::new() };
    profile_with(input, grid, |_| shared.clone())
}

fn profile_with(
    input: &FrontierInput,
    grid: &GridConfig,
    g_grid: impl Fn(&HeightInput) -> Vec<f64> + Sync,
) -> Result<ProfileSet> {
    let profiles: Vec<ProfiledHeight> = input
        .heights
        .par_iter()
        .filter_map(|h| {
            h.var_u
                .map(|vu| profile_height(&h.data, &g_grid(h), &grid.mu_grid(vu), h.sigma_v, h.sigma_w, vu))
        })
        .collect::<Result<_>>()?;
    for p in &profiles {
        if p.loglik.iter().all(|v| !v.is_finite()) {
            return Err(Error::InfeasibleHeight(p.height));
        }
    }
    if profiles.is_empty() {
        return Err(Error::InsufficientData("no height has a positive Var(u) moment".into()));
    }
    let excluded = input
        .heights
        .iter()
        .filter(|h| h.var_u.is_none())
        .map(|h| h.data.height)
        .collect();
    Ok(ProfileSet {
        profiles,
        excluded,
        grid: *grid,
    })
}

/// Pointwise percentile bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub level: f64,
    pub replicates: usize,
    pub heights: Vec<u32>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEstimate {
    pub mode: FitMode,
    /// Height of minimum average cost.
    pub mes: u32,
    pub params: Vec<HeightParams>,
    /// Total log likelihood over included heights.
    pub loglik: f64,
    /// Heights whose parameters were interpolated from neighbours.
    pub interpolated: Vec<u32>,
    pub quartic: Option<CostCurve>,
    pub bands: Option<Bands>,
}

impl FrontierEstimate {
    pub fn at(&self, height: u32) -> Option<&HeightParams> {
        self.params.iter().find(|p| p.height == height)
    }

    pub fn g(&self, height: u32) -> Result<f64> {
        self.at(height).map(|p| p.g).ok_or(Error::HeightOutOfRange(height))
    }

    /// Frontier price level `G(h) = exp g(h)`.
    pub fn level(&self, height: u32) -> Result<f64> {
        self.g(height).map(f64::exp)
    }

    pub fn max_height(&self) -> u32 {
        self.params.iter().map(|p| p.height).max().unwrap_or(0)
    }
}

/// Fill parameters at every height from 1 to the tallest input height,
/// interpolating linearly in height where no fit exists (nearest fitted value
/// beyond the ends). Heights missing from the input take interpolated
/// variances as well.
pub(crate) fn complete_params(input: &FrontierInput, fitted: &[HeightParams]) -> (Vec<HeightParams>, Vec<u32>) {
    let max_h = input.heights.iter().map(|h| h.data.height).max().unwrap_or(0);
    let mut out = Vec::with_capacity(max_h as usize);
    let mut interpolated = Vec::new();
    let known: Vec<(u32, f64, f64)> = input.heights.iter().map(|h| (h.data.height, h.sigma_v, h.sigma_w)).collect();
    for height in 1..=max_h {
        if let Some(p) = fitted.iter().find(|p| p.height == height) {
            out.push(*p);
            continue;
        }
        interpolated.push(height);
        let (g, mu_u, sigma_u) = interpolate(fitted.iter().map(|p| (p.height, [p.g, p.mu_u, p.sigma_u])), height)
            .map_or((f64::NAN, f64::NAN, f64::NAN), |v| (v[0], v[1], v[2]));
        let (sigma_v, sigma_w) = match known.iter().find(|k| k.0 == height) {
            Some(k) => (k.1, k.2),
            None => interpolate(known.iter().map(|k| (k.0, [k.1, k.2])), height)
                .map_or((f64::NAN, f64::NAN), |v| (v[0], v[1])),
        };
        out.push(HeightParams {
            height,
            g,
            mu_u,
            sigma_u,
            sigma_v,
            sigma_w,
        });
    }
    (out, interpolated)
}

/// Linear interpolation at `height` over points sorted by height.
fn interpolate<const N: usize>(points: impl Iterator<Item = (u32, [f64; N])> + Clone, height: u32) -> Option<[f64; N]> {
    let below = points.clone().filter(|p| p.0 < height).last();
    let above = points.clone().find(|p| p.0 > height);
    match (below, above) {
        (Some(a), Some(b)) => {
            let t = (height - a.0) as f64 / (b.0 - a.0) as f64;
            Some(std::array::from_fn(|i| a.1[i] + t * (b.1[i] - a.1[i])))
        }
        (Some(a), None) | (None, Some(a)) => Some(a.1),
        (None, None) => None,
    }
}

fn fitted_params(input: &FrontierInput, p: &ProfiledHeight, i: usize) -> HeightParams {
    let h = input.at(p.height).expect("profiled height in input");
    HeightParams {
        height: p.height,
        g: p.g_grid[i],
        mu_u: p.mu_u[i],
        sigma_u: p.sigma_u[i],
        sigma_v: h.sigma_v,
        sigma_w: h.sigma_w,
    }
}

/// Maximize the summed profiled likelihood over frontier values on the grid,
/// subject to falling weakly to the minimum efficient scale and rising weakly after it.
///
/// When the per-height grids admit no such path (a height whose whole grid
/// sits above both neighbours' grids), the heights are profiled again on a
/// shared grid.
pub fn fit_constrained(input: &FrontierInput, profiles: &ProfileSet) -> Result<FrontierEstimate> {
    match fit_chain(input, profiles) {
        Err(Error::InfeasibleShape) => fit_chain(input, &profile_shared(input, &profiles.grid)?),
        other => other,
    }
}

fn fit_chain(input: &FrontierInput, profiles: &ProfileSet) -> Result<FrontierEstimate> {
    let grids: Vec<Vec<f64>> = profiles.profiles.iter().map(|p| p.g_grid.clone()).collect();
    let scores: Vec<Vec<f64>> = profiles.profiles.iter().map(|p| p.loglik.clone()).collect();
    let sol = constrained_argmax(&grids, &scores)?;
    let fitted: Vec<HeightParams> = profiles
        .profiles
        .iter()
        .zip(&sol.indices)
        .map(|(p, &i)| fitted_params(input, p, i))
        .collect();
    let (params, interpolated) = complete_params(input, &fitted);
    Ok(FrontierEstimate {
        mode: FitMode::Constrained,
        mes: profiles.profiles[sol.turn].height,
        params,
        loglik: sol.objective,
        interpolated,
        quartic: None,
        bands: None,
    })
}

/// Height-by-height maximizers with no shape restriction.
pub fn fit_per_height(input: &FrontierInput, profiles: &ProfileSet) -> Result<FrontierEstimate> {
    let mut fitted = Vec::with_capacity(profiles.profiles.len());
    let mut loglik = 0.0;
    for p in &profiles.profiles {
        let i = p.argmax().ok_or(Error::InfeasibleHeight(p.height))?;
        loglik += p.loglik[i];
        fitted.push(fitted_params(input, p, i));
    }
    let mut mes = fitted[0];
    for p in &fitted {
        if p.g < mes.g {
            mes = *p;
        }
    }
    let (params, interpolated) = complete_params(input, &fitted);
    Ok(FrontierEstimate {
        mode: FitMode::PerHeight,
        mes: mes.height,
        params,
        loglik,
        interpolated,
        quartic: None,
        bands: None,
    })
}
