//! Step-supply housing markets: a continuous decreasing inverse demand over
//! height meets the developer's step inverse supply.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration;
use crate::error::{Error, Result};
use crate::frontier::CostCurve;

/// Family of inverse demand curves `P_d(x, ε)` over continuous height `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Demand {
    /// `P = a − b·x` with `a` and `b` uniform on the given ranges.
    Linear { intercept: (f64, f64), slope: (f64, f64) },
    /// Piecewise-linear curve through `(heights, prices)` plus a uniform shift.
    /// Extrapolated with the end slopes.
    Tabulated {
        heights: Vec<f64>,
        prices: Vec<f64>,
        shift: (f64, f64),
    },
}

impl Demand {
    pub fn validate(&self) -> Result<()> {
        match self {
            Demand::Linear { intercept, slope } => {
                if !(slope.0 > 0.0 && slope.1 >= slope.0 && intercept.1 >= intercept.0) {
                    return Err(Error::NonMonotoneDemand);
                }
            }
            Demand::Tabulated { heights, prices, shift } => {
                let ok = heights.len() >= 2
                    && heights.len() == prices.len()
                    && heights.windows(2).all(|w| w[1] > w[0])
                    && prices.windows(2).all(|w| w[1] < w[0])
                    && shift.1 >= shift.0;
                if !ok {
                    return Err(Error::NonMonotoneDemand);
                }
            }
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DemandCurve {
        let uniform = |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
        match self {
            Demand::Linear { intercept, slope } => DemandCurve::Linear {
                a: uniform(rng, *intercept),
                b: uniform(rng, *slope),
            },
            Demand::Tabulated { heights, prices, shift } => DemandCurve::Tabulated {
                heights: heights.clone(),
                prices: prices.clone(),
                shift: uniform(rng, *shift),
            },
        }
    }
}

/// One realized inverse demand curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DemandCurve {
    Linear { a: f64, b: f64 },
    Tabulated { heights: Vec<f64>, prices: Vec<f64>, shift: f64 },
}

fn segment(heights: &[f64], x: f64) -> usize {
    let n = heights.len();
    heights[1..n - 1].iter().take_while(|&&h| h <= x).count()
}

impl DemandCurve {
    pub fn price(&self, x: f64) -> f64 {
        match self {
            DemandCurve::Linear { a, b } => a - b * x,
            DemandCurve::Tabulated { heights, prices, shift } => {
                let i = segment(heights, x);
                let t = (x - heights[i]) / (heights[i + 1] - heights[i]);
                prices[i] + t * (prices[i + 1] - prices[i]) + shift
            }
        }
    }

    /// The `x` with `price(x) = p`.
    pub fn height_at(&self, p: f64) -> f64 {
        match self {
            DemandCurve::Linear { a, b } => (a - p) / b,
            DemandCurve::Tabulated { heights, prices, shift } => {
                let target = p - shift;
                let n = prices.len();
                let i = prices[1..n - 1].iter().take_while(|&&v| v >= target).count();
                let t = (target - prices[i]) / (prices[i + 1] - prices[i]);
                heights[i] + t * (heights[i + 1] - heights[i])
            }
        }
    }
}

/// How regulation is drawn per market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Regulation {
    /// Probability that a market is unregulated and supplies on the frontier.
    pub frontier_prob: f64,
    /// Among regulated markets, the share facing a pure height cap (uniform
    /// over `1..=H`); the rest face log-normal markups on every jump.
    pub cap_share: f64,
    /// Markups are `p_f[h]·exp(N(mean, sd²))`.
    pub markup_log_mean: f64,
    pub markup_log_sd: f64,
}

impl Default for Regulation {
    fn default() -> Self {
        Self {
            frontier_prob: 0.3,
            cap_share: 0.5,
            markup_log_mean: 0.1f64.ln(),
            markup_log_sd: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegulationDraw {
    Frontier,
    Cap(u32),
    Markups(Vec<f64>),
}

impl RegulationDraw {
    pub fn label(&self) -> String {
        match self {
            RegulationDraw::Frontier => "frontier".into(),
            RegulationDraw::Cap(c) => format!("cap_{c}"),
            RegulationDraw::Markups(_) => "markups".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    /// `p_f[h]` for `h = 1..=H`: average cost at heights up to the minimum
    /// efficient scale, the frontier jump price above it.
    pub frontier: Vec<f64>,
    pub mes: u32,
    pub demand: Demand,
    #[serde(default)]
    pub regulation: Regulation,
}

impl MarketConfig {
    /// Frontier from a total cost curve on a quantity grid. The minimum
    /// efficient scale is the height of least average cost; above it the jump
    /// price is the incremental cost per unit of added housing.
    pub fn from_cost_curve(curve: &CostCurve, quantities: &[f64], demand: Demand) -> Result<Self> {
        if quantities.is_empty() {
            return Err(Error::InvalidArgument("empty quantity grid".into()));
        }
        let ac: Vec<f64> = quantities.iter().map(|&q| curve.ac(q)).collect();
        let mes = ac
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        let frontier = (0..quantities.len())
            .map(|i| {
                if i <= mes {
                    ac[i]
                } else {
                    (curve.total(quantities[i]) - curve.total(quantities[i - 1])) / (quantities[i] - quantities[i - 1])
                }
            })
            .collect();
        let config = Self {
            frontier,
            mes: mes as u32 + 1,
            demand,
            regulation: Regulation::default(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Calibrated reference market: the reference quartic on the reference
    /// quantity grid with broad linear demand.
    pub fn reference() -> Self {
        let demand = Demand::Linear {
            intercept: (6_000.0, 20_000.0),
            slope: (20.0, 1_500.0),
        };
        Self::from_cost_curve(
            &CostCurve::new(calibration::COST_QUARTIC),
            &calibration::QUANTITIES,
            demand,
        )
        .expect("reference market is well formed")
    }

    pub fn max_height(&self) -> u32 {
        self.frontier.len() as u32
    }

    pub fn p_f(&self, h: u32) -> f64 {
        self.frontier[h as usize - 1]
    }

    pub fn validate(&self) -> Result<()> {
        self.demand.validate()?;
        let h = self.frontier.len();
        let m = self.mes as usize;
        if m == 0 || m > h {
            return Err(Error::InvalidArgument(format!("MES {m} outside 1..={h}")));
        }
        if self.frontier.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidArgument("frontier prices must be positive".into()));
        }
        if self.frontier[..m].windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument("average cost must fall up to the MES".into()));
        }
        if self.frontier[m - 1..].windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("frontier jumps must rise above the MES".into()));
        }
        let r = &self.regulation;
        if !(0.0..=1.0).contains(&r.frontier_prob) || !(0.0..=1.0).contains(&r.cap_share) || r.markup_log_sd < 0.0 {
            return Err(Error::InvalidArgument("regulation probabilities out of range".into()));
        }
        Ok(())
    }

    pub fn draw_regulation<R: Rng + ?Sized>(&self, rng: &mut R) -> RegulationDraw {
        let r = &self.regulation;
        if rng.gen::<f64>() < r.frontier_prob {
            return RegulationDraw::Frontier;
        }
        if rng.gen::<f64>() < r.cap_share {
            return RegulationDraw::Cap(rng.gen_range(1..=self.max_height()));
        }
        let noise = Normal::new(r.markup_log_mean, r.markup_log_sd).expect("validated scale");
        RegulationDraw::Markups(self.frontier.iter().map(|p| p * noise.sample(rng).exp()).collect())
    }

    /// Step supply under a regulation draw.
    pub fn supply(&self, draw: &RegulationDraw) -> Supply {
        let m = self.mes;
        let (top, markups): (u32, Option<&[f64]>) = match draw {
            RegulationDraw::Frontier => (self.max_height(), None),
            RegulationDraw::Cap(c) if *c < m => {
                return Supply {
                    heights: vec![*c],
                    jumps: vec![self.p_f(*c)],
                }
            }
            RegulationDraw::Cap(c) => ((*c).min(self.max_height()), None),
            RegulationDraw::Markups(v) => (self.max_height(), Some(v.as_slice())),
        };
        let mut heights = Vec::new();
        let mut jumps: Vec<f64> = Vec::new();
        for h in m..=top {
            let raw = self.p_f(h) + markups.map_or(0.0, |v| v[h as usize - 1]);
            let jump = jumps.last().map_or(raw, |&prev: &f64| prev.max(raw));
            heights.push(h);
            jumps.push(jump);
        }
        Supply { heights, jumps }
    }
}

/// Step inverse supply: nothing is built below `jumps[0]`; `heights[i]` is
/// supplied at prices in `[jumps[i], jumps[i + 1]]` (unbounded for the last);
/// at `jumps[i]` developers are indifferent between `heights[i]` and the next
/// lower supplied height (0 for the first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supply {
    pub heights: Vec<u32>,
    pub jumps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Demand crosses a vertical segment: one height, price off the jumps.
    Interior,
    /// Demand crosses a flat segment between two built heights.
    Indifference,
    /// Demand crosses the lowest jump: some parcels stay empty.
    MinAcMixing,
    NoBuild,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::Indifference => "indifference",
            Regime::MinAcMixing => "min-ac-mixing",
            Regime::NoBuild => "no-build",
        }
    }
}

/// Market-clearing outcome. A fraction `alpha` of parcels is built to `lower`
/// and the rest to `height`, so the market clears at
/// `alpha·lower + (1 − alpha)·height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub price: f64,
    pub height: u32,
    pub lower: u32,
    pub alpha: f64,
    pub regime: Regime,
}

impl EquilibriumOutcome {
    pub fn cleared_height(&self) -> f64 {
        self.alpha * self.lower as f64 + (1.0 - self.alpha) * self.height as f64
    }
}

/// Intersection of a decreasing demand curve with a step supply.
pub fn solve_equilibrium(supply: &Supply, demand: &DemandCurve) -> Result<EquilibriumOutcome> {
    if let DemandCurve::Linear { b, .. } = demand {
        if *b <= 0.0 {
            return Err(Error::NonMonotoneDemand);
        }
    }
    if supply.heights.is_empty() || supply.heights.len() != supply.jumps.len() {
        return Err(Error::InvalidArgument("empty supply schedule".into()));
    }
    let m = supply.heights.len();
    if demand.price(0.0) < supply.jumps[0] {
        return Ok(EquilibriumOutcome {
            price: demand.price(0.0),
            height: 0,
            lower: 0,
            alpha: 0.0,
            regime: Regime::NoBuild,
        });
    }
    let mut below = 0u32;
    for i in 0..m {
        let h = supply.heights[i];
        let jump = supply.jumps[i];
        let at_h = demand.price(h as f64);
        if at_h < jump {
            // Flat segment between `below` and `h`: demand fell through `jump`.
            let x = demand.height_at(jump).clamp(below as f64, h as f64);
            let alpha = (h as f64 - x) / (h - below) as f64;
            return Ok(EquilibriumOutcome {
                price: jump,
                height: h,
                lower: below,
                alpha,
                regime: if below == 0 { Regime::MinAcMixing } else { Regime::Indifference },
            });
        }
        if i + 1 == m || at_h <= supply.jumps[i + 1] {
            return Ok(EquilibriumOutcome {
                price: at_h,
                height: h,
                lower: below,
                alpha: 0.0,
                regime: Regime::Interior,
            });
        }
        below = h;
    }
    unreachable!("the last supplied height is unbounded above")
}

/// One simulated market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub market: usize,
    pub demand: DemandCurve,
    pub regulation: RegulationDraw,
    pub outcome: EquilibriumOutcome,
}

/// `n` independent markets. Market `i` uses stream `i` of a generator seeded
/// with `seed`, so the result does not depend on thread count.
pub fn simulate_markets(config: &MarketConfig, n: usize, seed: u64) -> Result<Vec<MarketOutcome>> {
    config.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let demand = config.demand.draw(&mut rng);
            let regulation = config.draw_regulation(&mut rng);
            let outcome = solve_equilibrium(&config.supply(&regulation), &demand)?;
            Ok(MarketOutcome {
                market: i,
                demand,
                regulation,
                outcome,
            })
        })
        .collect()
}

/// Lowest observed price at each height `1..=max_height`. Both heights of a
/// mixed outcome count as observed at the clearing price.
pub fn min_price_by_height(outcomes: &[MarketOutcome], max_height: u32) -> Vec<Option<f64>> {
    let mut out: Vec<Option<f64>> = vec![None; max_height as usize];
    let mut record = |h: u32, p: f64| {
        if h >= 1 && h <= max_height {
            let slot = &mut out[h as usize - 1];
            *slot = Some(slot.map_or(p, |v: f64| v.min(p)));
        }
    };
    for m in outcomes {
        let o = &m.outcome;
        if o.regime == Regime::NoBuild {
            continue;
        }
        record(o.height, o.price);
        if o.alpha > 0.0 {
            record(o.lower, o.price);
        }
    }
    out
}

pub fn write_outcomes<W: Write>(out: W, outcomes: &[MarketOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["market", "regulation", "regime", "height", "lower", "alpha", "price"])?;
    for m in outcomes {
        let o = &m.outcome;
        w.write_record([
            m.market.to_string(),
            m.regulation.label(),
            o.regime.as_str().to_string(),
            o.height.to_string(),
            o.lower.to_string(),
            o.alpha.to_string(),
            o.price.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<outcomes>", e))?;
    Ok(())
}
