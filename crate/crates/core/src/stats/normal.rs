//! Standard normal functions with stable tails, and truncated-normal sampling.

use rand::Rng;
use libm::erfc;
use statrs::function::erf::erfc_inv;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Φ` and `φ/Φ` switch to the asymptotic Mills-ratio series.
const TAIL_CUTOFF: f64 = -8.0;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Sum of the asymptotic series `1 - 1/x² + 3/x⁴ - 15/x⁶ + ...`, truncated at
/// its smallest term. Valid for large negative `x`.
fn mills_series(x: f64) -> f64 {
    let inv_x2 = 1.0 / (x * x);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut n = 1.0;
    loop {
        let next = -term * (2.0 * n - 1.0) * inv_x2;
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            break;
        }
        sum += next;
        term = next;
        n += 1.0;
    }
    sum
}

/// `ln Φ(x)`, accurate in both tails.
pub fn ln_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        (-0.5 * erfc(x / std::f64::consts::SQRT_2)).ln_1p()
    } else if x > TAIL_CUTOFF {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        ln_pdf(x) - (-x).ln() + mills_series(x).ln()
    }
}

/// Inverse Mills ratio `λ(x) = φ(x)/Φ(x)`.
pub fn inv_mills(x: f64) -> f64 {
    if x > TAIL_CUTOFF {
        (ln_pdf(x) - ln_cdf(x)).exp()
    } else {
        -x / mills_series(x)
    }
}

/// Standard normal quantile.
pub fn quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish on whichever tail keeps the residual well conditioned.
    for _ in 0..2 {
        let resid = if x < 0.0 {
            cdf(x) - p
        } else {
            (1.0 - p) - cdf(-x)
        };
        let dens = pdf(x);
        if dens <= 0.0 || !resid.is_finite() {
            break;
        }
        x = if x < 0.0 { x - resid / dens } else { x + resid / dens };
    }
    x
}

/// Draw `z ~ N(0, 1)` conditioned on `z >= lower`.
///
/// Inverse-CDF on the upper tail for moderate bounds, exponential rejection
/// for `lower >= 8` where the survival function is below `1e-15`.
pub fn sample_std_truncated<R: Rng + ?Sized>(rng: &mut R, lower: f64) -> f64 {
    if lower >= 8.0 {
        let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
        loop {
            let e: f64 = 1.0 - rng.gen::<f64>();
            let z = lower - e.ln() / rate;
            let accept = (-0.5 * (z - rate) * (z - rate)).exp();
            if rng.gen::<f64>() <= accept {
                return z;
            }
        }
    }
    let survival = cdf(-lower);
    let v = 1.0 - rng.gen::<f64>();
    let p = (v * survival).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    (-quantile(p)).max(lower)
}

/// Draw from `N(mu, sigma²)` truncated below at zero.
pub fn sample_truncated_at_zero<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return mu.max(0.0);
    }
    mu + sigma * sample_std_truncated(rng, -mu / sigma)
}
