//! Closed-form log likelihood of one height's bloc/building/apartment prices.

use serde::{Deserialize, Serialize};

use crate::domain::HeightPanel;
use crate::error::{Error, Result};
use crate::stats::normal::ln_cdf;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Sufficient statistics of one building: count, mean and within sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingStat {
    pub j: usize,
    pub mean: f64,
    pub ssw: f64,
}

impl BuildingStat {
    pub fn from_prices(y: &[f64]) -> Self {
        let j = y.len();
        let mean = y.iter().sum::<f64>() / j as f64;
        let ssw = y.iter().map(|v| (v - mean).powi(2)).sum();
        Self { j, mean, ssw }
    }
}

/// Per-building statistics of one height, grouped by bloc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightData {
    pub height: u32,
    pub bloc_ids: Vec<String>,
    buildings: Vec<BuildingStat>,
    /// `buildings[starts[k]..starts[k + 1]]` belong to bloc `k`.
    starts: Vec<usize>,
}

impl HeightData {
    pub fn new(height: u32, blocs: Vec<(String, Vec<BuildingStat>)>) -> Self {
        let mut bloc_ids = Vec::with_capacity(blocs.len());
        let mut buildings = Vec::new();
        let mut starts = vec![0];
        for (id, bs) in blocs {
            bloc_ids.push(id);
            buildings.extend(bs);
            starts.push(buildings.len());
        }
        Self {
            height,
            bloc_ids,
            buildings,
            starts,
        }
    }

    pub fn from_panel(hp: &HeightPanel) -> Self {
        Self::new(
            hp.height,
            hp.blocs
                .iter()
                .map(|bloc| {
                    let stats = bloc
                        .buildings
                        .iter()
                        .map(|b| {
                            let y: Vec<f64> = b.apartments.iter().map(|a| a.y).collect();
                            BuildingStat::from_prices(&y)
                        })
                        .collect();
                    (bloc.id.clone(), stats)
                })
                .collect(),
        )
    }

    pub fn n_blocs(&self) -> usize {
        self.bloc_ids.len()
    }

    pub fn n_apartments(&self) -> usize {
        self.buildings.iter().map(|b| b.j).sum()
    }

    pub fn bloc(&self, k: usize) -> &[BuildingStat] {
        &self.buildings[self.starts[k]..self.starts[k + 1]]
    }

    pub fn buildings(&self) -> &[BuildingStat] {
        &self.buildings
    }

    /// Collapse to per-bloc summaries at fixed measurement-error variances.
    pub fn summarize(&self, sigma_v2: f64, sigma_w2: f64) -> HeightSummary {
        let mut blocs = Vec::with_capacity(self.n_blocs());
        let mut constant = 0.0;
        for k in 0..self.n_blocs() {
            let bs = self.bloc(k);
            let mut a = 0.0;
            let mut b = 0.0;
            let mut konst = 0.0;
            for s in bs {
                let jf = s.j as f64;
                let d = sigma_v2 + jf * sigma_w2;
                a += jf / d;
                b += jf * s.mean / d;
                konst += s.ssw / sigma_v2 + d.ln() + (jf - 1.0) * sigma_v2.ln() + jf * LN_2PI;
            }
            let r = b / a;
            let m2 = bs
                .iter()
                .map(|s| {
                    let jf = s.j as f64;
                    jf / (sigma_v2 + jf * sigma_w2) * (s.mean - r).powi(2)
                })
                .sum();
            constant -= 0.5 * konst;
            blocs.push(BlocSummary { a, r, m2 });
        }
        HeightSummary { blocs, constant }
    }
}

/// `a = Σ J/D`, `r` the `J/D`-weighted mean of building means, `m2 = Σ J/D (ȳ − r)²`,
/// with `D = σ_v² + J σ_w²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlocSummary {
    pub a: f64,
    pub r: f64,
    pub m2: f64,
}

impl BlocSummary {
    /// Bloc log likelihood net of the terms that do not involve `(g, μ_u, σ_u)`.
    ///
    /// Uses `μ_k²/σ_k² − μ_u²/σ_u² − a(r − g)² = −(a/σ_u²)(r − g − μ_u)²/(a + 1/σ_u²)`.
    #[inline]
    pub fn kernel(&self, g: f64, mu: f64, inv_su2: f64, ln_su2: f64, ln_phi_u: f64) -> f64 {
        let dev = self.r - g;
        let sk2 = 1.0 / (inv_su2 + self.a);
        let muk = sk2 * (mu * inv_su2 + self.a * dev);
        let gap = dev - mu;
        0.5 * (-self.a * inv_su2 * sk2 * gap * gap - self.m2 + sk2.ln() - ln_su2) + ln_cdf(muk / sk2.sqrt())
            - ln_phi_u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightSummary {
    pub blocs: Vec<BlocSummary>,
    /// Sum of the `(g, μ_u, σ_u)`-free terms, including `−N/2 ln 2π`.
    pub constant: f64,
}

impl HeightSummary {
    /// Terms shared by every bloc at a given `(μ_u, σ_u)`.
    #[inline]
    fn shared(mu: f64, sigma_u: f64) -> (f64, f64, f64) {
        let su2 = sigma_u * sigma_u;
        let inv = 1.0 / su2;
        (inv, su2.ln(), ln_cdf(mu / sigma_u))
    }

    pub fn loglik(&self, g: f64, mu: f64, sigma_u: f64) -> f64 {
        let (inv, ln_su2, ln_phi_u) = Self::shared(mu, sigma_u);
        self.constant
            + self
                .blocs
                .iter()
                .map(|b| b.kernel(g, mu, inv, ln_su2, ln_phi_u))
                .sum::<f64>()
    }

    /// Index of the first non-finite bloc term, if any.
    pub fn first_bad_bloc(&self, g: f64, mu: f64, sigma_u: f64) -> Option<usize> {
        let (inv, ln_su2, ln_phi_u) = Self::shared(mu, sigma_u);
        self.blocs
            .iter()
            .position(|b| !b.kernel(g, mu, inv, ln_su2, ln_phi_u).is_finite())
    }
}

/// Log likelihood of the prices at one height under
/// `y = g + u + w + v`, `u ~ TN(μ_u, σ_u²)` truncated at zero,
/// `w ~ N(0, σ_w²)`, `v ~ N(0, σ_v²)`.
pub fn loglik_height(
    data: &HeightData,
    g: f64,
    mu_u: f64,
    sigma_u: f64,
    sigma_v: f64,
    sigma_w: f64,
) -> Result<f64> {
    if !(sigma_u > 0.0 && sigma_v > 0.0 && sigma_w > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scales must be positive (σ_u={sigma_u}, σ_v={sigma_v}, σ_w={sigma_w})"
        )));
    }
    if data.n_blocs() == 0 {
        return Err(Error::InsufficientData(format!("no blocs at height {}", data.height)));
    }
    let summary = data.summarize(sigma_v * sigma_v, sigma_w * sigma_w);
    let ll = summary.loglik(g, mu_u, sigma_u);
    if ll.is_finite() {
        Ok(ll)
    } else {
        let k = summary.first_bad_bloc(g, mu_u, sigma_u).unwrap_or(0);
        Err(Error::NonFinite(data.bloc_ids[k].clone()))
    }
}
