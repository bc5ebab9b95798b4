//! Synthetic panels and a step-supply equilibrium simulator.

pub mod calibration;
mod market;
mod panel;
mod resale;

pub use market::{
    min_price_by_height, simulate_markets, solve_equilibrium, write_outcomes, Demand, DemandCurve,
    EquilibriumOutcome, MarketConfig, MarketOutcome, Regime, Regulation, RegulationDraw, Supply,
};
pub use panel::{
    draw_prices, generate_panel, panel_shape, panel_transactions, reference_counts, reference_truth, HeightCounts, SyntheticPanel,
};
pub use resale::{synthetic_resales, ResaleTruth};
