//! Quartic total-cost curve and its constrained likelihood fit.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{complete_params, FitMode, FrontierEstimate, FrontierInput, GridConfig, HeightParams};
use super::likelihood::HeightSummary;
use super::profile::{best_mu, mu_sigma_pairs};
use crate::error::{Error, Result};
use crate::hedonic::QuantityTable;

/// `C(q) = β0 + β1 q + β2 q² + β3 q³ + β4 q⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub beta: [f64; 5],
}

impl CostCurve {
    pub fn new(beta: [f64; 5]) -> Self {
        Self { beta }
    }

    pub fn total(&self, q: f64) -> f64 {
        let b = &self.beta;
        b[0] + q * (b[1] + q * (b[2] + q * (b[3] + q * b[4])))
    }

    pub fn ac(&self, q: f64) -> f64 {
        let b = &self.beta;
        b[0] / q + b[1] + q * (b[2] + q * (b[3] + q * b[4]))
    }

    pub fn mc(&self, q: f64) -> f64 {
        let b = &self.beta;
        b[1] + q * (2.0 * b[2] + q * (3.0 * b[3] + q * 4.0 * b[4]))
    }

    pub fn ac_prime(&self, q: f64) -> f64 {
        let b = &self.beta;
        -b[0] / (q * q) + b[2] + q * (2.0 * b[3] + q * 3.0 * b[4])
    }

    pub fn mc_prime(&self, q: f64) -> f64 {
        let b = &self.beta;
        2.0 * b[2] + q * (6.0 * b[3] + q * 12.0 * b[4])
    }

    /// Frontier log price `ln max{AC(q), MC(q)}`; NaN when both are non-positive.
    pub fn g(&self, q: f64) -> f64 {
        let m = self.ac(q).max(self.mc(q));
        if m > 0.0 {
            m.ln()
        } else {
            f64::NAN
        }
    }

    /// Least-squares quartic matching `levels` as average cost up to `mes` and
    /// as marginal cost above it.
    pub fn fit_levels(q: &[f64], levels: &[f64], mes: usize) -> Result<Self> {
        let n = q.len();
        if n < 5 {
            return Err(Error::InsufficientData(format!("{n} heights for a quartic")));
        }
        let mut x = DMatrix::<f64>::zeros(n, 5);
        for (r, (&qq, h)) in q.iter().zip(1..).enumerate() {
            let row: [f64; 5] = if h <= mes {
                [1.0 / qq, 1.0, qq, qq * qq, qq * qq * qq]
            } else {
                [0.0, 1.0, 2.0 * qq, 3.0 * qq * qq, 4.0 * qq * qq * qq]
            };
            for (c, v) in row.iter().enumerate() {
                x[(r, c)] = *v;
            }
        }
        // Column scaling keeps the SVD well conditioned across powers of q.
        let scale: Vec<f64> = (0..5).map(|c| x.column(c).norm().max(1e-300)).collect();
        for (c, s) in scale.iter().enumerate() {
            x.column_mut(c).scale_mut(1.0 / s);
        }
        let y = DVector::from_column_slice(levels);
        let sol = x
            .svd(true, true)
            .solve(&y, 1e-12)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut beta = [0.0; 5];
        for c in 0..5 {
            beta[c] = sol[c] / scale[c];
        }
        Ok(Self { beta })
    }

    /// Summed positive parts of the shape-constraint violations for a given
    /// minimum efficient scale `mes` (1-based), relative to `scale`.
    pub fn violation_at(&self, q: &[f64], mes: usize, scale: f64) -> f64 {
        let ac: Vec<f64> = q.iter().map(|&v| self.ac(v)).collect();
        let mc: Vec<f64> = q.iter().map(|&v| self.mc(v)).collect();
        let over = |lhs: f64, rhs: f64| (lhs - rhs).max(0.0);
        let mut v = 0.0;
        for i in 0..q.len() {
            v += over(0.0, ac[i]) + over(0.0, mc[i]);
        }
        let m = mes - 1;
        if m >= 1 {
            v += over(mc[m - 1], ac[m - 1]);
            for i in 1..m {
                v += over(ac[i], ac[i - 1]);
            }
        }
        v += over(ac[m], mc[m]);
        for i in m + 1..q.len() {
            v += over(mc[i - 1], mc[i]);
        }
        v / scale
    }

    /// Smallest violation over `mes ∈ 1..H−1`, with the lowest minimizing `mes`.
    pub fn violation(&self, q: &[f64], scale: f64) -> (f64, usize) {
        let mut best = (f64::INFINITY, 1);
        for mes in 1..q.len().max(2) {
            let v = self.violation_at(q, mes, scale);
            if v < best.0 {
                best = (v, mes);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuarticConfig {
    pub starts: usize,
    pub max_iters: u64,
    pub penalty: f64,
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    pub seed: u64,
}

impl Default for QuarticConfig {
    fn default() -> Self {
        Self {
            starts: 4,
            max_iters: 3000,
            penalty: 1e3,
            penalty_growth: 10.0,
            penalty_rounds: 6,
            seed: 0,
        }
    }
}

struct Layer {
    /// Index into the quantity grid.
    q_index: usize,
    summary: HeightSummary,
    pairs: Vec<(f64, f64)>,
}

struct Problem<'a> {
    layers: &'a [Layer],
    q: &'a [f64],
    scale: f64,
    unit: [f64; 5],
    penalty: f64,
}

impl Problem<'_> {
    fn curve(&self, theta: &[f64]) -> CostCurve {
        let mut beta = [0.0; 5];
        for i in 0..5 {
            beta[i] = theta[i] * self.unit[i];
        }
        CostCurve { beta }
    }

    /// Summed profiled log likelihood, or `None` where the curve has no log.
    fn loglik(&self, curve: &CostCurve) -> Option<(f64, Vec<(f64, f64, f64)>)> {
        let cells: Vec<(f64, f64, f64)> = self
            .layers
            .par_iter()
            .map(|l| {
                let g = curve.g(self.q[l.q_index]);
                if g.is_finite() {
                    best_mu(&l.summary, g, &l.pairs)
                } else {
                    (f64::NEG_INFINITY, f64::NAN, f64::NAN)
                }
            })
            .collect();
        let total: f64 = cells.iter().map(|c| c.0).sum();
        total.is_finite().then_some((total, cells))
    }
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let curve = self.curve(theta);
        let (viol, _) = curve.violation(self.q, self.scale);
        Ok(match self.loglik(&curve) {
            Some((ll, _)) => -ll + self.penalty * viol,
            None => 1e300,
        })
    }
}

fn nelder_mead(problem: Problem<'_>, start: &[f64], step: f64, max_iters: u64) -> Result<Vec<f64>> {
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut p = start.to_vec();
        p[i] += if p[i] == 0.0 { step } else { step * p[i].abs() };
        simplex.push(p);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(res.state().get_best_param().cloned().unwrap_or_else(|| start.to_vec()))
}

/// Maximize the summed profiled likelihood over quartic cost curves whose
/// average cost falls to the minimum efficient scale and whose marginal cost
/// rises after it, checked at `q(1)..q(H)`.
///
/// `init` (normally the constrained grid fit) seeds a least-squares start.
pub fn fit_quartic(
    input: &FrontierInput,
    init: &FrontierEstimate,
    quantity: &QuantityTable,
    grid: &GridConfig,
    config: &QuarticConfig,
) -> Result<FrontierEstimate> {
    let max_h = input.heights.iter().map(|h| h.data.height).max().unwrap_or(0);
    if max_h > quantity.max_height() {
        return Err(Error::HeightOutOfRange(max_h));
    }
    let q: Vec<f64> = quantity.values()[..max_h as usize].to_vec();

    let layers: Vec<Layer> = input
        .heights
        .iter()
        .filter_map(|h| {
            h.var_u.map(|vu| {
                Ok(Layer {
                    q_index: h.data.height as usize - 1,
                    summary: h.data.summarize(h.sigma_v * h.sigma_v, h.sigma_w * h.sigma_w),
                    pairs: mu_sigma_pairs(&grid.mu_grid(vu), vu)?,
                })
            })
        })
        .collect::<Result<_>>()?;
    if layers.is_empty() {
        return Err(Error::InsufficientData("no height has a positive Var(u) moment".into()));
    }

    let levels: Vec<f64> = (1..=max_h)
        .map(|h| init.level(h))
        .collect::<Result<_>>()?;
    let scale = levels.iter().sum::<f64>() / levels.len() as f64;
    let start_curve = CostCurve::fit_levels(&q, &levels, init.mes as usize)?;
    let unit: [f64; 5] = std::array::from_fn(|i| {
        let b = start_curve.beta[i].abs();
        if b > 0.0 {
            b
        } else {
            scale / q[q.len() - 1].powi(i as i32).max(1.0)
        }
    });
    let theta0: Vec<f64> = (0..5).map(|i| start_curve.beta[i] / unit[i]).collect();

    let problem = |penalty| Problem {
        layers: &layers,
        q: &q,
        scale,
        unit,
        penalty,
    };

    // Best feasible point seen, as (log likelihood, θ).
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |theta: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        let p = problem(0.0);
        let curve = p.curve(theta);
        if curve.violation(&q, scale).0 > 1e-9 {
            return;
        }
        if let Some((ll, _)) = p.loglik(&curve) {
            if best.as_ref().map_or(true, |b| ll > b.0) {
                *best = Some((ll, theta.to_vec()));
            }
        }
    };
    consider(&theta0, &mut best);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for start in 0..config.starts.max(1) {
        let mut theta: Vec<f64> = if start == 0 {
            theta0.clone()
        } else {
            theta0.iter().map(|t| t * (1.0 + 0.1 * rng.gen_range(-1.0..1.0))).collect()
        };
        let mut penalty = config.penalty;
        for _ in 0..config.penalty_rounds.max(1) {
            theta = nelder_mead(problem(penalty), &theta, 0.05, config.max_iters)?;
            let curve = problem(0.0).curve(&theta);
            if curve.violation(&q, scale).0 <= 1e-9 {
                break;
            }
            penalty *= config.penalty_growth;
        }
        consider(&theta, &mut best);
    }

    let (loglik, theta) = best.ok_or(Error::NoFeasibleQuartic)?;
    let p = problem(0.0);
    let curve = p.curve(&theta);
    let (_, mes) = curve.violation(&q, scale);
    let (_, cells) = p.loglik(&curve).ok_or(Error::NoFeasibleQuartic)?;
    let fitted: Vec<HeightParams> = layers
        .iter()
        .zip(&cells)
        .map(|(l, c)| {
            let h = &input.heights.iter().find(|h| h.data.height as usize == l.q_index + 1).expect("layer height");
            HeightParams {
                height: h.data.height,
                g: curve.g(q[l.q_index]),
                mu_u: c.1,
                sigma_u: c.2,
                sigma_v: h.sigma_v,
                sigma_w: h.sigma_w,
            }
        })
        .collect();
    let (mut params, interpolated) = complete_params(input, &fitted);
    for p in &mut params {
        p.g = curve.g(q[p.height as usize - 1]);
    }
    Ok(FrontierEstimate {
        mode: FitMode::Quartic,
        mes: mes as u32,
        params,
        loglik,
        interpolated,
        quartic: Some(curve),
        bands: None,
    })
}
