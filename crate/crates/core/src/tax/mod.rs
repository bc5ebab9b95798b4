//! Regulatory tax: posterior deviations, expected tax rates, the cohort
//! regression behind κ_T and spatial lower bounds.

mod bound;
mod kappa;
mod level;
mod neighbors;
mod posterior;
mod report;

pub use bound::{min_max_ramp, ramp_term};
pub use kappa::{fit_kappa_t, PeriodCurve, PeriodEffects};
pub use level::TaxFrontier;
pub use neighbors::{build_neighbors, NeighborSet};
pub use posterior::{posterior_u, sigma_eta, PosteriorU};
pub use report::{
    expected_rt_rate, tax_report, BoundEstimate, RateEstimate, TaxConfig, TaxContext, TaxReport, TaxRow, TaxUnit,
};
