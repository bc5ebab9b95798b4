//! Apartment, building and bloc variance components per height.

mod detrend;
mod estimate;
mod smooth;

pub use detrend::{time_detrend, time_detrend_with_degree, DetrendConfig, Detrended};
pub use estimate::{estimate_variances, HeightVariances, VarianceEstimates, VarianceFlag};
pub use smooth::{smooth_variances, SmoothConfig};
