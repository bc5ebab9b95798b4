//! Truncated-normal frontier likelihood and the constrained, per-height and
//! quartic maximum likelihood fits.

mod dp;
mod estimate;
mod export;
mod likelihood;
mod pipeline;
mod profile;
mod quartic;
mod tn;

pub use dp::{constrained_argmax, ChainSolution};
pub use estimate::{
    fit_constrained, fit_per_height, profile_all, profile_shared, Bands, FitMode, FrontierEstimate, FrontierInput, GridConfig,
    HeightInput, HeightParams, ProfileSet,
};
pub use export::{estimate_json, write_estimate_csv};
pub use likelihood::{loglik_height, BlocSummary, BuildingStat, HeightData, HeightSummary};
pub use pipeline::{bootstrap_ci, estimate_frontier, FrontierConfig, FrontierRun};
pub use profile::{profile_height, ProfiledHeight};
pub use quartic::{fit_quartic, CostCurve, QuarticConfig};
pub use tn::{solve_sigma_u, tn_mean, tn_variance};
