//! Moments of the normal distribution truncated below at zero.

use crate::error::{Error, Result};
use crate::stats::normal::inv_mills;

/// Below this standardized location the closed forms lose digits to
/// cancellation; a Mills-ratio continued fraction takes over.
const CF_CUTOFF: f64 = -3.0;
const CF_TERMS: u32 = 200;

/// First two tails `(t1, t2)` of the continued fraction
/// `Φ(-x)/φ(x) = 1/(x + 1/(x + 2/(x + 3/(x + …))))`, where `t_n = n/(x + t_{n+1})`.
fn mills_cf(x: f64) -> (f64, f64) {
    let mut t = 0.0;
    let mut t2 = 0.0;
    for n in (1..=CF_TERMS).rev() {
        t = n as f64 / (x + t);
        if n == 2 {
            t2 = t;
        }
    }
    (t, t2)
}

/// Standardized variance factor `1 − aλ(a) − λ(a)²`.
fn variance_factor(a: f64) -> f64 {
    if a < CF_CUTOFF {
        let (t1, t2) = mills_cf(-a);
        t1 * (t2 - t1)
    } else {
        let lam = inv_mills(a);
        1.0 - a * lam - lam * lam
    }
}

/// Variance of `N(mu, sigma²)` truncated below at zero.
pub fn tn_variance(mu: f64, sigma: f64) -> f64 {
    sigma * sigma * variance_factor(mu / sigma)
}

/// Mean of `N(mu, sigma²)` truncated below at zero.
pub fn tn_mean(mu: f64, sigma: f64) -> f64 {
    let a = mu / sigma;
    if a < CF_CUTOFF {
        sigma * mills_cf(-a).0
    } else {
        sigma * (a + inv_mills(a))
    }
}

/// Scale `σ` at which `tn_variance(mu, σ)` equals `target`, by bisection.
pub fn solve_sigma_u(mu: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::NonPositiveVariance(target));
    }
    let mut lo = 1e-8_f64;
    let mut hi = 10.0 * target.sqrt() + mu.abs();
    if tn_variance(mu, lo) >= target {
        return Ok(lo);
    }
    while tn_variance(mu, hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tn_variance(mu, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
