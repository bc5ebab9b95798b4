use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::Transaction;

/// The sample rules, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleRule {
    /// Sold the year before, of, or after construction.
    ConstructionTiming,
    /// Sale covers 100% of the asset.
    FullOwnership,
    /// Not a single-family home.
    NotSingleFamily,
    /// No missing attributes.
    Complete,
    /// Bottom/top share of nominal prices removed.
    PriceTrim,
    /// At least one other transaction in the building.
    RepeatBuilding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Maximum |transaction year − construction year|.
    pub max_years_from_construction: i32,
    pub require_full_ownership: bool,
    pub exclude_single_family: bool,
    pub require_complete: bool,
    /// Share trimmed from each end of the nominal price distribution.
    pub price_trim: f64,
    pub min_building_transactions: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_years_from_construction: 1,
            require_full_ownership: true,
            exclude_single_family: true,
            require_complete: true,
            price_trim: 0.01,
            min_building_transactions: 2,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub dropped: BTreeMap<SampleRule, usize>,
}

/// Apply the sample rules in order and report how many rows each rule removed.
pub fn apply_sample_filters(
    txs: Vec<Transaction>,
    rules: &FilterConfig,
) -> (Vec<Transaction>, FilterReport) {
    let mut report = FilterReport {
        input: txs.len(),
        ..FilterReport::default()
    };
    let mut drop_where = |txs: Vec<Transaction>, rule: SampleRule, keep: &dyn Fn(&Transaction) -> bool| {
        let before = txs.len();
        let kept: Vec<Transaction> = txs.into_iter().filter(|t| keep(t)).collect();
        *report.dropped.entry(rule).or_default() += before - kept.len();
        kept
    };

    let window = rules.max_years_from_construction;
    let mut txs = drop_where(txs, SampleRule::ConstructionTiming, &|t| {
        t.years_after_construction().abs() <= window
    });
    if rules.require_full_ownership {
        txs = drop_where(txs, SampleRule::FullOwnership, &|t| {
            (t.ownership_share - 1.0).abs() < 1e-9
        });
    }
    if rules.exclude_single_family {
        txs = drop_where(txs, SampleRule::NotSingleFamily, &|t| !t.single_family);
    }
    if rules.require_complete {
        txs = drop_where(txs, SampleRule::Complete, &|t| t.legal_status.is_some());
    }

    let trim = trimmed_rows(&txs, rules.price_trim);
    txs = drop_where(txs, SampleRule::PriceTrim, &|t| !trim.contains(&t.row));

    let mut per_building: HashMap<String, usize> = HashMap::new();
    for t in &txs {
        *per_building.entry(t.building_key()).or_default() += 1;
    }
    let min = rules.min_building_transactions;
    txs = drop_where(txs, SampleRule::RepeatBuilding, &|t| per_building[&t.building_key()] >= min);

    report.kept = txs.len();
    (txs, report)
}

/// Rows in the lowest and highest `share` of nominal prices, by count.
fn trimmed_rows(txs: &[Transaction], share: f64) -> std::collections::HashSet<usize> {
    let n_trim = (txs.len() as f64 * share).floor() as usize;
    let mut order: Vec<&Transaction> = txs.iter().collect();
    order.sort_by(|a, b| a.price.total_cmp(&b.price).then(a.row.cmp(&b.row)));
    let mut rows = std::collections::HashSet::new();
    if n_trim > 0 {
        for t in order.iter().take(n_trim).chain(order.iter().rev().take(n_trim)) {
            rows.insert(t.row);
        }
    }
    rows
}
