//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. Set
//! `ACCEPTANCE_ONLY` to a comma-separated list of criterion keys to run a
//! subset.

mod common;

use std::time::{Duration, Instant};

use frontier_core::econ::{ac_minimizer, elasticity};
use frontier_core::frontier::{
    bootstrap_ci, constrained_argmax, estimate_frontier, loglik_height, solve_sigma_u, tn_variance, BuildingStat,
    CostCurve, FitMode, FrontierConfig, FrontierEstimate, GridConfig, HeightData, HeightParams,
};
use frontier_core::stats::normal;
use frontier_core::synth::{
    calibration, draw_prices, generate_panel, min_price_by_height, panel_shape, reference_counts, reference_truth,
    simulate_markets, synthetic_resales, HeightCounts, MarketConfig, ResaleTruth,
};
use frontier_core::tax::{fit_kappa_t, min_max_ramp, posterior_u, PeriodCurve, TaxConfig, TaxContext, TaxFrontier, TaxUnit};
use frontier_core::variance::{estimate_variances, time_detrend_with_degree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data_from(blocs: &[Vec<Vec<f64>>]) -> HeightData {
    HeightData::new(
        1,
        blocs
            .iter()
            .enumerate()
            .map(|(k, b)| (format!("k{k}"), b.iter().map(|y| BuildingStat::from_prices(y)).collect()))
            .collect(),
    )
}

fn frontier_recovery() -> Outcome {
    let truth = reference_truth(1.9, 0.29, 0.0725, 0.116);
    let counts = reference_counts(1.0);
    let config = FrontierConfig::default();
    let runs = 50;
    let mut good = 0;
    let mut slowest = Duration::ZERO;
    let mut worst_big = 0.0f64;
    let mut worst_small = 0.0f64;
    for r in 0..runs {
        let panel = generate_panel(&truth, &counts, 1000 + r).expect("panel").panel;
        let start = Instant::now();
        let est = estimate_frontier(&panel, &config, FitMode::Constrained, None, None).expect("fit").estimate;
        slowest = slowest.max(start.elapsed());
        let mut ok = true;
        for (c, t) in counts.iter().zip(&truth) {
            let err = (est.g(t.height).expect("height") - t.g).abs();
            if c.buildings >= 500 {
                worst_big = worst_big.max(err);
                ok &= err <= 0.02;
            } else {
                worst_small = worst_small.max(err);
                ok &= err <= 0.05;
            }
        }
        good += ok as usize;
    }
    outcome(
        good >= 45 && slowest < Duration::from_secs(300),
        format!(
            "{good}/{runs} runs within tolerance; worst error {worst_big:.4} (>=500 buildings), \
             {worst_small:.4} (others); slowest fit {:.1}s",
            slowest.as_secs_f64()
        ),
    )
}

/// Best V-shaped chain by enumeration.
fn enumerate_chains(grid: &[f64], scores: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let h = scores.len();
    let m = grid.len();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut idx = vec![0usize; h];
    loop {
        let feasible = (0..h.saturating_sub(1).max(1)).any(|t| {
            (1..=t).all(|l| grid[idx[l]] <= grid[idx[l - 1]]) && (t + 1..h).all(|l| grid[idx[l]] >= grid[idx[l - 1]])
        });
        if feasible {
            let total: f64 = (0..h).map(|l| scores[l][idx[l]]).sum();
            if total > best.0 {
                best = (total, idx.clone());
            }
        }
        let mut l = 0;
        loop {
            if l == h {
                return best;
            }
            idx[l] += 1;
            if idx[l] < m {
                break;
            }
            idx[l] = 0;
            l += 1;
        }
    }
}

fn dp_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..200 {
        let h = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=8);
        let grid: Vec<f64> = (0..m).map(|i| 8.5 + 0.05 * i as f64).collect();
        let scores: Vec<Vec<f64>> = (0..h).map(|_| (0..m).map(|_| rng.gen_range(-50.0..0.0)).collect()).collect();
        let sol = constrained_argmax(&vec![grid.clone(); h], &scores).expect("feasible");
        let (best, path) = enumerate_chains(&grid, &scores);
        if sol.objective != best || sol.indices != path {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 200 instances differ from enumeration"))
}

fn likelihood() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let blocs: Vec<Vec<Vec<f64>>> = (0..rng.gen_range(1..3))
            .map(|_| {
                (0..rng.gen_range(1..4))
                    .map(|_| (0..rng.gen_range(1..5)).map(|_| 9.0 + rng.gen_range(-0.5..0.8)).collect())
                    .collect()
            })
            .collect();
        let g = 9.0 + rng.gen_range(-0.3..0.3);
        let su = rng.gen_range(0.05..0.6);
        // Cover the whole ratio range, both ends included.
        let ratio = match i {
            0 => -4.0,
            1 => 4.0,
            _ => rng.gen_range(-4.0..4.0),
        };
        let mu = su * ratio;
        let sv = rng.gen_range(0.03..0.4);
        let sw = rng.gen_range(0.03..0.4);
        let got = loglik_height(&data_from(&blocs), g, mu, su, sv, sw).expect("finite");
        let want: f64 = blocs.iter().map(|b| common::oracle::bloc_loglik(b, g, mu, su, sv, sw)).sum();
        let n: usize = blocs.iter().flatten().map(Vec::len).sum();
        worst = worst.max((got - want).abs() / n as f64);
    }
    outcome(worst < 1e-8, format!("max |difference| per observation {worst:.2e}"))
}

fn tn_machinery() -> Outcome {
    let settings = [(0.551, 0.29), (-0.5, 0.3), (1.0, 0.2), (-1.2, 0.4)];
    let mc: Vec<f64> = settings
        .par_iter()
        .enumerate()
        .map(|(i, &(mu, s))| {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
            let n = 10_000_000;
            let (mut m1, mut m2) = (0.0, 0.0);
            for _ in 0..n {
                let x = normal::sample_truncated_at_zero(&mut rng, mu, s);
                m1 += x;
                m2 += x * x;
            }
            let mean = m1 / n as f64;
            let var = m2 / n as f64 - mean * mean;
            (tn_variance(mu, s) / var - 1.0).abs()
        })
        .collect();
    let worst_mc = mc.iter().copied().fold(0.0, f64::max);

    let mut worst_trip = 0.0f64;
    for i in 0..=40 {
        let ratio = -4.0 + 0.2 * i as f64;
        for s in [0.05, 0.29, 1.0] {
            let back = solve_sigma_u(ratio * s, tn_variance(ratio * s, s)).expect("solvable");
            worst_trip = worst_trip.max((back - s).abs() / s);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_post = 0.0f64;
    for _ in 0..20 {
        let su = rng.gen_range(0.05..0.5);
        let mu = su * rng.gen_range(-3.0..3.0);
        let se = rng.gen_range(0.02..0.4);
        let dev = rng.gen_range(-0.5..1.5);
        let post = posterior_u(dev, mu, su, se);
        let upper = mu.max(dev).max(0.0) + 12.0 * (su + se);
        let n = 200_000;
        let h = upper / n as f64;
        let kernel = |u: f64| normal::pdf((u - mu) / su) * normal::pdf((dev - u) / se);
        let mut z = 0.5 * (kernel(0.0) + kernel(upper));
        for i in 1..n {
            z += kernel(i as f64 * h);
        }
        z *= h;
        for k in 1..10 {
            let u = post.mu_star.max(0.0) + (k as f64 - 5.0) * post.sigma_star;
            if u >= 0.0 {
                let want = kernel(u) / z;
                worst_post = worst_post.max((post.density(u) - want).abs() / want.max(1.0));
            }
        }
    }
    outcome(
        worst_mc < 0.002 && worst_trip < 1e-8 && worst_post < 1e-6,
        format!(
            "variance vs 1e7 draws {:.3}%; round trip {worst_trip:.1e}; posterior density {worst_post:.1e}",
            100.0 * worst_mc
        ),
    )
}

fn kappa_t() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (j, delta) in [0.0, 0.0016, 0.05].into_iter().enumerate() {
        let covered: usize = (0..100u64)
            .into_par_iter()
            .map(|r| {
                let txs = synthetic_resales(300, &ResaleTruth::reference(delta), 10_000 * (j as u64 + 1) + r)
                    .expect("resales");
                match fit_kappa_t(&txs) {
                    Ok(fit) => ((fit.delta - delta).abs() <= 2.0 * fit.delta_se) as usize,
                    Err(_) => 0,
                }
            })
            .sum();
        pass &= covered >= 95;
        lines.push(format!("δ={delta}: {covered}/100"));
    }
    outcome(pass, format!("within 2 s.e.: {}", lines.join(", ")))
}

fn bound_engine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut misses = 0;
    for _ in 0..100 {
        let terms: Vec<(f64, f64)> = (0..rng.gen_range(1..12))
            .map(|_| (rng.gen_range(-3000.0..3000.0), rng.gen_range(-4000.0..4000.0)))
            .collect();
        let (exact, k) = min_max_ramp(&terms);
        let f = |x: f64| terms.iter().map(|(a, b)| a + b * x).fold(0.0, f64::max);
        let n = 10_000;
        let grid = (0..=n).map(|i| f(i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
        let slope = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
        let ok = (f(k) - exact).abs() < 1e-9 && exact <= grid + 1e-9 && grid - exact <= slope / n as f64 + 1e-9;
        misses += !ok as usize;
    }

    let levels = [6000.0, 6500.0, 6744.0, 7013.0];
    let est = FrontierEstimate {
        mode: FitMode::Constrained,
        mes: 1,
        params: levels
            .iter()
            .zip(1..)
            .map(|(l, h)| HeightParams {
                height: h,
                g: f64::ln(*l),
                mu_u: 0.5,
                sigma_u: 0.3,
                sigma_v: 0.1,
                sigma_w: 0.05,
            })
            .collect(),
        loglik: 0.0,
        interpolated: Vec::new(),
        quartic: None,
        bands: None,
    };
    let frontier = TaxFrontier::from_estimate(&est, None).expect("frontier");
    let unit = |id: &str, h: u32, price: f64, level: f64, day: f64, x: f64| TaxUnit {
        id: id.into(),
        height: h,
        deviation: (price / level).ln(),
        count: 4,
        day,
        coordinates: Some((x, 0.0)),
    };
    let units = vec![unit("i", 2, 12_000.0, 6500.0, 0.0, 0.0), unit("j", 4, 11_000.0, 7013.0, 365.25, 100.0)];
    let period = PeriodCurve::Quadratic {
        gamma1: -(1.2f64.ln()),
        gamma2: 0.0,
    };
    let config = TaxConfig {
        radii: vec![250.0],
        error_free: true,
        ..TaxConfig::default()
    };
    let ctx = TaxContext {
        units: &units,
        frontier: &frontier,
        estimate: &est,
        period: &period,
        kappa_t: 0.0,
        config: &config,
    };
    let bound = ctx.bounds(0, &[(1, 100.0)]).expect("bound")[0].level;
    outcome(
        misses == 0 && (bound - 1269.0).abs() < 1e-8,
        format!("{misses} of 100 instances off the grid scan; hand example bound {bound:.6}"),
    )
}

fn identification() -> Outcome {
    let config = MarketConfig::reference();
    let outcomes = simulate_markets(&config, 10_000, 31).expect("markets");
    let mins = min_price_by_height(&outcomes, config.max_height());
    let curve = CostCurve::new(calibration::COST_QUARTIC);
    let mut worst_above = 0.0f64;
    let mut worst_below = 0.0f64;
    let mut missing = 0;
    for h in 1..=config.max_height() {
        let Some(p) = mins[h as usize - 1] else {
            missing += 1;
            continue;
        };
        if h >= config.mes {
            worst_above = worst_above.max((p - config.p_f(h)) / config.p_f(h));
        } else {
            let ac = curve.ac(calibration::QUANTITIES[h as usize - 1]);
            worst_below = worst_below.max(((p - ac) / ac).abs());
        }
    }
    outcome(
        missing == 0 && worst_above < 0.005 && worst_below < 0.005,
        format!(
            "MES {}; max gap {:.3}% at h>=MES, {:.3}% from AC below; {missing} heights unobserved",
            config.mes,
            100.0 * worst_above,
            100.0 * worst_below
        ),
    )
}

fn quartic_analytics() -> Outcome {
    let c = CostCurve::new([900.0, 6472.0, 78.43, -4.1, 0.0823]);
    let q_star = ac_minimizer(&c, 4.09, 5.03);
    let sigma = elasticity(&c, 20.0).expect("sigma");
    let step = 1e-5;
    let fd = (c.ac(20.0 + step).ln() - c.ac(20.0 - step).ln()) / (c.mc(20.0 + step).ln() - c.mc(20.0 - step).ln());
    // Independent evaluation of MC from the power form.
    let b = [900.0, 6472.0, 78.43, -4.1, 0.0823];
    let q: f64 = 11.18;
    let mc = b[1] + 2.0 * b[2] * q + 3.0 * b[3] * q.powi(2) + 4.0 * b[4] * q.powi(3);
    let pass_min = q_star.is_some_and(|q| q > 4.09 && q < 5.03);
    let pass_sigma = (sigma - 0.19).abs() <= 0.01 && (sigma - fd).abs() < 1e-5;
    let pass_mc = (c.mc(q) - 7148.6).abs() <= 0.1 && (mc - c.mc(q)).abs() < 1e-9;
    outcome(
        pass_min && pass_sigma && pass_mc,
        format!(
            "AC minimiser {:.4}; σ(20) {sigma:.4} (finite differences {fd:.4}); MC(11.18) {:.4} (expected 7148.6 ± 0.1)",
            q_star.unwrap_or(f64::NAN),
            c.mc(q)
        ),
    )
}

fn bootstrap_coverage() -> Outcome {
    let truth: Vec<HeightParams> = [8.86, 8.8, 8.84]
        .iter()
        .zip(1..)
        .map(|(&g, h)| HeightParams {
            height: h,
            g,
            mu_u: 0.551,
            sigma_u: 0.29,
            sigma_v: 0.116,
            sigma_w: 0.0725,
        })
        .collect();
    let counts: Vec<HeightCounts> = (1..=3)
        .map(|h| HeightCounts {
            height: h,
            blocs: 500,
            buildings: 1000,
            apartments: 6000,
        })
        .collect();
    let mut config = FrontierConfig::default();
    config.grid = GridConfig {
        g_points: 60,
        mu_points: 15,
        ..GridConfig::default()
    };
    let outer = 200;
    let hits: Vec<[bool; 3]> = (0..outer as u64)
        .map(|r| {
            let panel = generate_panel(&truth, &counts, 7000 + r).expect("panel").panel;
            let run = estimate_frontier(&panel, &config, FitMode::Constrained, None, Some(0)).expect("fit");
            let bands = bootstrap_ci(&panel, &run, &config, None, 99, 0.95, r).expect("bootstrap");
            std::array::from_fn(|j| bands.lower[j] <= truth[j].g && truth[j].g <= bands.upper[j])
        })
        .collect();
    let rates: Vec<f64> = (0..3).map(|j| hits.iter().filter(|h| h[j]).count() as f64 / outer as f64).collect();
    outcome(
        rates.iter().all(|&c| (0.90..=0.99).contains(&c)),
        format!(
            "coverage by height {}",
            rates.iter().map(|c| format!("{:.1}%", 100.0 * c)).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn variance_estimators() -> Outcome {
    let truth = HeightParams {
        height: 1,
        g: 8.8,
        mu_u: 0.551,
        sigma_u: 0.29,
        sigma_v: 0.116,
        sigma_w: 0.0725,
    };
    let counts = HeightCounts {
        height: 1,
        blocs: 120,
        buildings: 360,
        apartments: 2400,
    };
    let shape = panel_shape(&[counts], 5).expect("shape");
    let reps = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let draws: Vec<[f64; 3]> = (0..reps)
        .map(|_| {
            let panel = draw_prices(&shape, &[truth], &mut rng).expect("draw").panel;
            let detrended = time_detrend_with_degree(&panel, 0).expect("detrend");
            let h = estimate_variances(&detrended.residuals, &panel).expect("variances").heights.remove(0);
            [h.var_v.unwrap(), h.var_w.unwrap(), h.var_u_moment.unwrap()]
        })
        .collect();
    let want = [truth.sigma_v.powi(2), truth.sigma_w.powi(2), tn_variance(truth.mu_u, truth.sigma_u)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, name) in ["σ_v²", "σ_w²", "Var(u)"].iter().enumerate() {
        let mean = draws.iter().map(|d| d[c]).sum::<f64>() / reps as f64;
        let sd = (draws.iter().map(|d| (d[c] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        let z = (mean - want[c]) / (sd / (reps as f64).sqrt());
        pass &= z.abs() < 2.0;
        parts.push(format!("{name} z={z:+.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("recovery", "frontier recovery", frontier_recovery),
        ("dp", "DP exactness", dp_exactness),
        ("likelihood", "likelihood correctness", likelihood),
        ("tn", "truncated-normal machinery", tn_machinery),
        ("kappa", "κ_T regression", kappa_t),
        ("bound", "bound engine", bound_engine),
        ("identification", "identification simulation", identification),
        ("quartic", "quartic analytics", quartic_analytics),
        ("bootstrap", "bootstrap coverage", bootstrap_coverage),
        ("variance", "variance estimators", variance_estimators),
    ];
    let only: Option<Vec<String>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(|k| k.trim().to_string()).collect());
    let mut passed = 0;
    let mut ran = 0;
    for (key, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|k| k == key)) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        ran += 1;
        passed += result.pass as usize;
        println!(
            "{} {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{ran} criteria met");
}
