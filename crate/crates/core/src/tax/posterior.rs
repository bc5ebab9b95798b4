use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stats::normal::{ln_cdf, ln_pdf, sample_truncated_at_zero};

/// `u | u + η = y − g` with `u ~ TN(μ_u, σ_u²)` truncated at zero and
/// `η ~ N(0, σ_η²)`: again normal truncated at zero, `TN(μ*, σ*²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorU {
    pub mu_star: f64,
    pub sigma_star: f64,
    pub deviation: f64,
    pub mu_u: f64,
    pub sigma_u: f64,
    pub sigma_eta: f64,
}

/// Noise scale of a unit averaging `count` apartments: `σ_w² + σ_v²/J`.
pub fn sigma_eta(sigma_w: f64, sigma_v: f64, count: usize) -> f64 {
    (sigma_w * sigma_w + sigma_v * sigma_v / count.max(1) as f64).sqrt()
}

pub fn posterior_u(deviation: f64, mu_u: f64, sigma_u: f64, sigma_eta: f64) -> PosteriorU {
    let su2 = sigma_u * sigma_u;
    let se2 = sigma_eta * sigma_eta;
    let (mu_star, sigma_star) = if se2 == 0.0 {
        (deviation, 0.0)
    } else if su2 == 0.0 {
        (mu_u, 0.0)
    } else {
        let total = su2 + se2;
        ((mu_u * se2 + deviation * su2) / total, (su2 * se2 / total).sqrt())
    };
    PosteriorU {
        mu_star,
        sigma_star,
        deviation,
        mu_u,
        sigma_u,
        sigma_eta,
    }
}

impl PosteriorU {
    /// One draw of `u` (a log price deviation).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_truncated_at_zero(rng, self.mu_star, self.sigma_star)
    }

    pub fn ln_density(&self, u: f64) -> f64 {
        if u < 0.0 || self.sigma_star <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = self.sigma_star;
        ln_pdf((u - self.mu_star) / s) - s.ln() - ln_cdf(self.mu_star / s)
    }

    pub fn density(&self, u: f64) -> f64 {
        self.ln_density(u).exp()
    }
}
