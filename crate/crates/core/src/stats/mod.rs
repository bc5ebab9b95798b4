//! Numerical building blocks shared by the estimators.

pub mod normal;
pub mod ols;
pub mod poly;
