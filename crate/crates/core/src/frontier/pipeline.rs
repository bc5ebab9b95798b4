use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{
    fit_constrained, fit_per_height, profile_all, Bands, FitMode, FrontierEstimate, FrontierInput, GridConfig,
    ProfileSet,
};
use super::quartic::{fit_quartic, QuarticConfig};
use crate::domain::Panel;
use crate::error::{Error, Result};
use crate::hedonic::QuantityTable;
use crate::synth::draw_prices;
use crate::variance::{
    estimate_variances, smooth_variances, time_detrend, time_detrend_with_degree, DetrendConfig, Detrended,
    SmoothConfig, VarianceEstimates,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontierConfig {
    pub detrend: DetrendConfig,
    pub smooth: SmoothConfig,
    pub grid: GridConfig,
    pub quartic: QuarticConfig,
}

/// Every intermediate of one estimation run.
#[derive(Debug, Clone)]
pub struct FrontierRun {
    pub detrended: Detrended,
    pub variances: VarianceEstimates,
    pub input: FrontierInput,
    pub profiles: ProfileSet,
    pub estimate: FrontierEstimate,
}

/// Detrend, estimate and smooth variances, profile, and fit in `mode`.
/// `trend_degree` fixes the detrending degree instead of cross-validating it.
pub fn estimate_frontier(
    panel: &Panel,
    config: &FrontierConfig,
    mode: FitMode,
    quantity: Option<&QuantityTable>,
    trend_degree: Option<usize>,
) -> Result<FrontierRun> {
    let detrended = match trend_degree {
        Some(d) => time_detrend_with_degree(panel, d)?,
        None => time_detrend(panel, &config.detrend)?,
    };
    let variances = smooth_variances(estimate_variances(&detrended.residuals, panel)?, &config.smooth)?;
    let input = FrontierInput::new(panel, &variances)?;
    let profiles = profile_all(&input, &config.grid)?;
    let estimate = match mode {
        FitMode::Constrained => fit_constrained(&input, &profiles)?,
        FitMode::PerHeight => fit_per_height(&input, &profiles)?,
        FitMode::Quartic => {
            let q = quantity.ok_or_else(|| Error::MissingParameter("quantity table".into()))?;
            let start = fit_constrained(&input, &profiles)?;
            fit_quartic(&input, &start, q, &config.grid, &config.quartic)?
        }
    };
    Ok(FrontierRun {
        detrended,
        variances,
        input,
        profiles,
        estimate,
    })
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Parametric bootstrap: redraw prices on the panel's shape from the fitted
/// parameters, rerun the pipeline from the detrending degree of `run`, and
/// take pointwise percentile bands of the refitted frontier.
pub fn bootstrap_ci(
    panel: &Panel,
    run: &FrontierRun,
    config: &FrontierConfig,
    quantity: Option<&QuantityTable>,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<Bands> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one replicate".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("band level {level} outside (0, 1)")));
    }
    let estimate = &run.estimate;
    let degree = run.detrended.selection.degree;
    let heights: Vec<u32> = estimate.params.iter().map(|p| p.height).collect();
    let draws: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let synthetic = draw_prices(panel, &estimate.params, &mut rng)?;
            let refit = estimate_frontier(&synthetic.panel, config, estimate.mode, quantity, Some(degree))?;
            heights.iter().map(|&h| refit.estimate.g(h)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let alpha = (1.0 - level) / 2.0;
    let mut lower = Vec::with_capacity(heights.len());
    let mut upper = Vec::with_capacity(heights.len());
    for j in 0..heights.len() {
        let mut col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        col.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&col, alpha));
        upper.push(quantile_sorted(&col, 1.0 - alpha));
    }
    Ok(Bands {
        level,
        replicates,
        heights,
        lower,
        upper,
    })
}
