//! Transactions, sample rules, deflation and the bloc → building → apartment panel.

mod deflate;
mod filters;
mod panel;
mod transactions;

pub use deflate::{deflate_prices, Deflator, PriceIndexSeries};
pub use filters::{apply_sample_filters, FilterConfig, FilterReport, SampleRule};
pub use panel::{build_panel, Apartment, Bloc, Building, HeightPanel, Panel, PanelBuild, PanelCounts};
pub use transactions::{
    load_transactions, read_transactions, write_rejects, write_transactions, ColumnMapping,
    LoadOutcome, Reject, RejectReason, Transaction,
};

use chrono::NaiveDate;

/// Day number used for all time arithmetic: days since 1997-01-01.
pub fn day_number(date: NaiveDate) -> f64 {
    let epoch = NaiveDate::from_ymd_opt(1997, 1, 1).expect("valid epoch");
    (date - epoch).num_days() as f64
}

/// Years since 1997-01-01 (the unit of the period/cohort regression).
pub fn years_since_epoch(day: f64) -> f64 {
    day / 365.25
}
