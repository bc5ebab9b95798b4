use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate};
use frontier_core::domain::{
    apply_sample_filters, build_panel, deflate_prices, read_transactions, write_rejects, write_transactions, Panel,
    PriceIndexSeries, Transaction,
};
use frontier_core::econ::{consolidation_counterfactual, isoquant, write_isoquant_csv, ElasticityCurve};
use frontier_core::frontier::{
    bootstrap_ci, estimate_frontier, estimate_json, write_estimate_csv, FitMode, FrontierEstimate, FrontierRun,
};
use frontier_core::hedonic::{adjust_prices, fit_hedonic, quantity_table, QuantityTable};
use frontier_core::synth::{
    generate_panel, min_price_by_height, panel_transactions, reference_counts, reference_truth, simulate_markets,
    synthetic_resales, write_outcomes, MarketConfig, ResaleTruth,
};
use frontier_core::tax::{fit_kappa_t, tax_report, PeriodCurve, PeriodEffects, TaxFrontier};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{read_uncommented, Workspace};
use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

pub const INGESTED: &str = "ingested.csv";
pub const ADJUSTED: &str = "adjusted.csv";
pub const HEDONIC: &str = "hedonic.json";
pub const QUANTITY: &str = "quantity.csv";

pub fn mode_name(mode: FitMode) -> &'static str {
    match mode {
        FitMode::Constrained => "constrained",
        FitMode::PerHeight => "per_height",
        FitMode::Quartic => "quartic",
    }
}

fn frontier_json(mode: FitMode) -> String {
    format!("frontier_{}.json", mode_name(mode))
}

pub struct Context {
    pub config: PipelineConfig,
    pub ws: Workspace,
    pub out: PathBuf,
}

impl Context {
    fn input(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }

    fn read_input(&self, path: &PathBuf) -> Result<Vec<u8>> {
        if !path.is_file() {
            return Err(CliError::Config(format!(
                "input {} not found (set it in the config or run `frontier simulate`)",
                path.display()
            )));
        }
        read_uncommented(path)
    }

    fn index(&self, path: &PathBuf, name: &str) -> Result<PriceIndexSeries> {
        Ok(PriceIndexSeries::read(name, self.read_input(path)?.as_slice())?)
    }

    fn load_raw(&self, path: &PathBuf) -> Result<Vec<Transaction>> {
        let bytes = self.read_input(path)?;
        let loaded = read_transactions(
            bytes.as_slice(),
            &self.config.input.columns,
            self.config.max_unparseable_fraction,
        )?;
        Ok(loaded.transactions)
    }

    fn deflate(&self, txs: Vec<Transaction>) -> Result<Vec<Transaction>> {
        let cpi = self.index(&self.input(&self.config.input.cpi, "cpi.csv"), "cpi")?;
        let cost = match &self.config.input.cost_index {
            Some(p) => Some(self.index(p, "cost")?),
            None => None,
        };
        Ok(deflate_prices(txs, &cpi, cost.as_ref(), self.config.base_year)?)
    }

    fn panel(&self) -> Result<Panel> {
        let txs = self.ws.read_transactions(ADJUSTED, "hedonic")?;
        let built = build_panel(&txs);
        if built.panel.heights().is_empty() {
            return Err(CliError::Config("no building with two or more sales on a single-building parcel".into()));
        }
        Ok(built.panel)
    }

    fn quantity(&self) -> Result<QuantityTable> {
        let path = self.ws.require(QUANTITY, "hedonic")?;
        let bytes = read_uncommented(&path)?;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let mut q = Vec::new();
        for row in r.deserialize() {
            let (_, v): (u32, f64) = row?;
            q.push(v);
        }
        Ok(QuantityTable::from_values(q)?)
    }

    fn estimate(&self, mode: FitMode) -> Result<FrontierEstimate> {
        let doc: FrontierDoc = self.ws.read_json(&frontier_json(mode), "frontier")?;
        Ok(doc.estimate)
    }

    fn run(&self, panel: &Panel, mode: FitMode) -> Result<FrontierRun> {
        let quantity = match mode {
            FitMode::Quartic => Some(self.quantity()?),
            _ => None,
        };
        Ok(estimate_frontier(panel, &self.config.frontier, mode, quantity.as_ref(), None)?)
    }
}

#[derive(Serialize, serde::Deserialize)]
struct FrontierDoc {
    summary: serde_json::Value,
    estimate: FrontierEstimate,
}

pub fn ingest(cx: &Context) -> Result<()> {
    let raw = cx.read_input(&cx.input(&cx.config.input.transactions, "transactions.csv"))?;
    let loaded = read_transactions(raw.as_slice(), &cx.config.input.columns, cx.config.max_unparseable_fraction)?;
    let (kept, report) = apply_sample_filters(loaded.transactions, &cx.config.filters);
    let deflated = cx.deflate(kept)?;
    cx.ws.write_transactions(INGESTED, &deflated)?;
    cx.ws.write_csv("rejects.csv", |b| write_rejects(b, &loaded.rejects))?;
    cx.ws.write_json(
        "ingest.json",
        &json!({ "rejected_rows": loaded.rejects.len(), "filters": report }),
    )?;
    eprintln!("ingest: kept {} of {} rows", report.kept, report.input);
    Ok(())
}

pub fn hedonic(cx: &Context) -> Result<()> {
    let txs = cx.ws.read_transactions(INGESTED, "ingest")?;
    let model = fit_hedonic(&txs, cx.config.hedonic)?;
    let q = quantity_table(&model, model.max_height)?;
    let adjusted = adjust_prices(txs, &model)?;
    cx.ws.write_json(HEDONIC, &model)?;
    cx.ws.write_csv(QUANTITY, |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["h", "q"])?;
        for (h, v) in (1..).zip(q.values()) {
            w.write_record([h.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| frontier_core::Error::Io { path: QUANTITY.into(), source: e })
    })?;
    cx.ws.write_transactions(ADJUSTED, &adjusted)?;
    eprintln!("hedonic: {} observations, {} parcels", model.n_obs, model.n_parcels);
    Ok(())
}

pub fn variances(cx: &Context) -> Result<()> {
    let panel = cx.panel()?;
    let run = cx.run(&panel, FitMode::PerHeight)?;
    cx.ws.write_csv("variances.csv", |b| run.variances.write_csv(b))?;
    cx.ws.write_json(
        "detrend.json",
        &json!({ "selection": run.detrended.selection, "trend": run.detrended.trend }),
    )?;
    Ok(())
}

pub fn frontier(cx: &Context, mode: FitMode) -> Result<()> {
    let panel = cx.panel()?;
    let quantity = cx.quantity().ok();
    let run = cx.run(&panel, mode)?;
    let est = run.estimate;
    let name = mode_name(mode);
    cx.ws.write_csv(&format!("frontier_{name}.csv"), |b| write_estimate_csv(&est, quantity.as_ref(), b))?;
    let doc = FrontierDoc {
        summary: estimate_json(&est, quantity.as_ref())?,
        estimate: est,
    };
    cx.ws.write_json(&frontier_json(mode), &doc)?;
    eprintln!("frontier ({name}): MES {} of {} heights", doc.estimate.mes, doc.estimate.params.len());
    Ok(())
}

pub fn bootstrap(cx: &Context, mode: FitMode, replicates: Option<usize>) -> Result<()> {
    cx.ws.require(&frontier_json(mode), "frontier")?;
    let panel = cx.panel()?;
    let quantity = match mode {
        FitMode::Quartic => Some(cx.quantity()?),
        _ => None,
    };
    let run = cx.run(&panel, mode)?;
    let b = &cx.config.bootstrap;
    let bands = bootstrap_ci(
        &panel,
        &run,
        &cx.config.frontier,
        quantity.as_ref(),
        replicates.unwrap_or(b.replicates),
        b.level,
        cx.config.seed,
    )?;
    let mut est = run.estimate;
    est.bands = Some(bands);
    let name = mode_name(mode);
    cx.ws.write_csv(&format!("bootstrap_{name}.csv"), |w| write_estimate_csv(&est, quantity.as_ref(), w))?;
    cx.ws.write_json(&format!("bootstrap_{name}.json"), &est.bands)?;
    Ok(())
}

fn tax_frontier(cx: &Context, est: &FrontierEstimate) -> Result<TaxFrontier> {
    let quantity = cx.quantity().ok();
    Ok(TaxFrontier::from_estimate(est, quantity.as_ref())?)
}

pub fn tax(cx: &Context, mode: FitMode) -> Result<()> {
    let est = cx.estimate(mode)?;
    let panel = cx.panel()?;
    let frontier = tax_frontier(cx, &est)?;
    let mut config = cx.config.tax.clone();
    config.radii.clear();
    let report = tax_report(&panel, &est, &frontier, &PeriodCurve::Flat, 0.0, &config)?;
    cx.ws.write_csv("tax.csv", |b| report.write_csv(b))?;
    cx.ws.write_json(
        "tax.json",
        &json!({ "mode": mode_name(mode), "buildings": report.rows.len(), "mean_rate": report.mean_rate(),
                 "top_carried": report.top_carried }),
    )?;
    eprintln!("tax: mean rate {:.4} over {} buildings", report.mean_rate(), report.rows.len());
    Ok(())
}

fn period_effects(cx: &Context) -> Result<Option<PeriodEffects>> {
    let path = cx.input(&cx.config.input.resales, "resales.csv");
    if cx.config.input.resales.is_none() && !path.is_file() {
        return Ok(None);
    }
    let txs = cx.deflate(cx.load_raw(&path)?)?;
    Ok(Some(fit_kappa_t(&txs)?))
}

pub fn bounds(cx: &Context, mode: FitMode) -> Result<()> {
    let est = cx.estimate(mode)?;
    let panel = cx.panel()?;
    let frontier = tax_frontier(cx, &est)?;
    let effects = period_effects(cx)?;
    let (period, kappa_t) = match (&effects, cx.config.kappa_t) {
        (_, Some(k)) => (effects.as_ref().map_or(PeriodCurve::Flat, PeriodCurve::from_effects), k),
        (Some(e), None) => (PeriodCurve::from_effects(e), e.kappa_t),
        (None, None) => {
            return Err(CliError::Config(
                "bounds need resales (input.resales) or a fixed kappa_t in the config".into(),
            ))
        }
    };
    let report = tax_report(&panel, &est, &frontier, &period, kappa_t, &cx.config.tax)?;
    cx.ws.write_csv("bounds.csv", |b| report.write_csv(b))?;
    let mut radii = report.config.radii.clone();
    radii.sort_by(f64::total_cmp);
    let mean_bounds: Vec<_> = radii
        .iter()
        .enumerate()
        .map(|(i, r)| json!({ "radius": r, "mean_bound": report.mean_bound(i) }))
        .collect();
    cx.ws.write_json(
        "bounds.json",
        &json!({ "mode": mode_name(mode), "kappa_t": kappa_t, "period_effects": effects,
                 "mean_rate": report.mean_rate(), "bounds": mean_bounds,
                 "without_coordinates": report.without_coordinates }),
    )?;
    Ok(())
}

fn quartic(cx: &Context) -> Result<(FrontierEstimate, frontier_core::frontier::CostCurve)> {
    let est = cx.estimate(FitMode::Quartic).map_err(|e| match e {
        CliError::MissingArtifact { path, .. } => CliError::MissingArtifact {
            path,
            prerequisite: "frontier --mode quartic",
        },
        other => other,
    })?;
    let curve = est.quartic.ok_or_else(|| CliError::Internal("quartic estimate without a cost curve".into()))?;
    Ok((est, curve))
}

pub fn elasticity(cx: &Context) -> Result<()> {
    let (_, curve) = quartic(cx)?;
    let e = &cx.config.elasticity;
    let sigma = ElasticityCurve::on_range(&curve, e.q_min, e.q_max, e.points)?;
    let points = isoquant(&curve, &cx.quantity()?);
    cx.ws.write_csv("elasticity.csv", |b| sigma.write_csv(b))?;
    cx.ws.write_csv("isoquant.csv", |b| write_isoquant_csv(&points, b))?;
    cx.ws.write_json(
        "elasticity.json",
        &json!({ "cost_curve": curve.beta,
                 "isoquant_normalisation": "one unit of housing: land 1/q(h), non-land cost C(q(h))/q(h)" }),
    )?;
    Ok(())
}

pub fn counterfactual(cx: &Context, band_lo: u32, band_hi: u32, target: u32) -> Result<()> {
    let (_, curve) = quartic(cx)?;
    let quantity = cx.quantity()?;
    let panel = cx.panel()?;
    let result = consolidation_counterfactual(&panel, &curve, &quantity, band_lo, band_hi, target)?;
    cx.ws.write_json("counterfactual.json", &result)?;
    eprintln!(
        "counterfactual: land {:+.2}%, non-land cost {:+.2}%",
        result.land_delta_pct, result.cost_delta_pct
    );
    Ok(())
}

/// Flat monthly CPI covering the simulated sales.
fn flat_cpi(w: &mut Vec<u8>) -> frontier_core::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "index"])?;
    for year in 1996..=2023 {
        for month in 1..=12 {
            let d = NaiveDate::from_ymd_opt(year, month, 1).expect("valid date");
            out.write_record([d.format("%Y-%m-%d").to_string(), "100".into()])?;
        }
    }
    out.flush().map_err(|e| frontier_core::Error::Io { path: "cpi.csv".into(), source: e })
}

pub fn simulate(cx: &Context, markets: Option<usize>, panel: bool) -> Result<()> {
    let s = &cx.config.simulate;
    let seed = cx.config.seed;
    if panel {
        let truth = reference_truth(s.mu_over_sigma, s.sigma_u, s.sigma_w, s.sigma_v);
        let synthetic = generate_panel(&truth, &reference_counts(s.scale), seed)?;
        let txs = panel_transactions(&synthetic.panel, seed);
        let resales = synthetic_resales(s.resale_parcels, &ResaleTruth::reference(s.cohort_delta), seed)?;
        cx.ws.write_csv("transactions.csv", |b| write_transactions(b, &txs))?;
        cx.ws.write_csv("resales.csv", |b| write_transactions(b, &resales))?;
        cx.ws.write_csv("cpi.csv", flat_cpi)?;
        cx.ws.write_json("truth.json", &json!({ "frontier": synthetic.truth, "resales": ResaleTruth::reference(s.cohort_delta) }))?;
        let years: BTreeMap<i32, usize> = txs.iter().fold(BTreeMap::new(), |mut m, t| {
            *m.entry(t.transaction_date.year()).or_insert(0) += 1;
            m
        });
        eprintln!("simulate: {} sales over {} years", txs.len(), years.len());
    }
    let n = markets.unwrap_or(s.markets);
    if n > 0 {
        let mut config = MarketConfig::reference();
        config.regulation = s.regulation;
        let outcomes = simulate_markets(&config, n, seed)?;
        cx.ws.write_csv("markets.csv", |b| write_outcomes(b, &outcomes))?;
        let mins = min_price_by_height(&outcomes, config.max_height());
        cx.ws.write_csv("market_frontier.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["h", "frontier_price", "min_observed_price"])?;
            for (h, m) in (1..=config.max_height()).zip(&mins) {
                w.write_record([h.to_string(), config.p_f(h).to_string(), m.map_or_else(String::new, |v| v.to_string())])?;
            }
            w.flush().map_err(|e| frontier_core::Error::Io { path: "market_frontier.csv".into(), source: e })
        })?;
    }
    Ok(())
}

/// Index of every artifact present, keyed by the view it supports.
pub fn report(cx: &Context) -> Result<()> {
    cx.ws.require(&frontier_json(FitMode::Constrained), "frontier")?;
    let views: [(&str, &[&str]); 9] = [
        ("sample", &["ingest.json", "rejects.csv"]),
        ("premia", &[HEDONIC, QUANTITY]),
        ("variances", &["variances.csv", "detrend.json"]),
        ("frontier", &["frontier_constrained.csv", "frontier_per_height.csv", "frontier_quartic.csv"]),
        ("bands", &["bootstrap_constrained.csv", "bootstrap_quartic.csv"]),
        ("tax", &["tax.csv", "tax.json"]),
        ("bounds", &["bounds.csv", "bounds.json"]),
        ("substitution", &["elasticity.csv", "isoquant.csv", "elasticity.json", "counterfactual.json"]),
        ("markets", &["markets.csv", "market_frontier.csv"]),
    ];
    let mut index = serde_json::Map::new();
    let mut missing = Vec::new();
    for (view, files) in views {
        let present: Vec<&str> = files.iter().copied().filter(|f| cx.ws.exists(f)).collect();
        missing.extend(files.iter().filter(|f| !cx.ws.exists(f)).map(|f| f.to_string()));
        index.insert(view.into(), json!(present));
    }
    let est = cx.estimate(FitMode::Constrained)?;
    let levels: Vec<_> = est.params.iter().map(|p| json!({ "h": p.height, "G": p.g.exp() })).collect();
    cx.ws.write_json(
        "report.json",
        &json!({ "views": index, "missing": missing, "mes": est.mes, "frontier": levels }),
    )?;
    Ok(())
}
