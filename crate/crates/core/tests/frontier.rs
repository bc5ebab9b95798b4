mod common;

use frontier_core::frontier::{
    constrained_argmax, estimate_frontier, fit_constrained, fit_per_height, fit_quartic, loglik_height,
    profile_all, profile_height, solve_sigma_u, tn_variance, BuildingStat, CostCurve, FitMode, FrontierConfig,
    FrontierInput, GridConfig, HeightData, HeightParams, QuarticConfig,
};
use frontier_core::hedonic::QuantityTable;
use frontier_core::Error;
use frontier_core::synth::{generate_panel, HeightCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data_from(blocs: &[Vec<Vec<f64>>]) -> HeightData {
    HeightData::new(
        3,
        blocs
            .iter()
            .enumerate()
            .map(|(k, b)| (format!("k{k}"), b.iter().map(|y| BuildingStat::from_prices(y)).collect()))
            .collect(),
    )
}

#[test]
fn single_apartment_matches_quadrature() {
    let y = 9.3;
    let data = data_from(&[vec![vec![y]]]);
    for &(g, mu, su, sv, sw) in &[(8.9, 0.5, 0.3, 0.1, 0.05), (9.0, -0.4, 0.1, 0.2, 0.2), (9.5, 1.2, 0.3, 0.05, 0.01)] {
        let got = loglik_height(&data, g, mu, su, sv, sw).unwrap();
        let want = common::oracle::bloc_loglik(&[vec![y]], g, mu, su, sv, sw);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn random_blocs_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let blocs: Vec<Vec<Vec<f64>>> = (0..rng.gen_range(1..3))
            .map(|_| {
                (0..rng.gen_range(1..4))
                    .map(|_| (0..rng.gen_range(1..5)).map(|_| 9.0 + rng.gen_range(-0.5..0.8)).collect())
                    .collect()
            })
            .collect();
        let g = 9.0 + rng.gen_range(-0.3..0.3);
        let su = rng.gen_range(0.05..0.6);
        let mu = su * rng.gen_range(-4.0..4.0);
        let sv = rng.gen_range(0.03..0.4);
        let sw = rng.gen_range(0.03..0.4);
        let got = loglik_height(&data_from(&blocs), g, mu, su, sv, sw).unwrap();
        let want: f64 = blocs.iter().map(|b| common::oracle::bloc_loglik(b, g, mu, su, sv, sw)).sum();
        let n: usize = blocs.iter().flatten().map(Vec::len).sum();
        assert!((got - want).abs() / (n as f64) < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn identical_blocs_double() {
    let bloc = vec![vec![9.1, 9.2, 9.05], vec![9.4, 9.35]];
    let one = loglik_height(&data_from(&[bloc.clone()]), 8.9, 0.3, 0.25, 0.1, 0.06).unwrap();
    let two = loglik_height(&data_from(&[bloc.clone(), bloc]), 8.9, 0.3, 0.25, 0.1, 0.06).unwrap();
    assert!((two - 2.0 * one).abs() <= 1e-12 * one.abs());
}

#[test]
fn translation_invariance() {
    let blocs = vec![vec![vec![9.1, 9.2], vec![9.4, 9.35, 9.3]], vec![vec![8.95, 9.0]]];
    let shifted: Vec<Vec<Vec<f64>>> =
        blocs.iter().map(|b| b.iter().map(|y| y.iter().map(|v| v + 1.7).collect()).collect()).collect();
    let a = loglik_height(&data_from(&blocs), 8.9, 0.3, 0.25, 0.1, 0.06).unwrap();
    let b = loglik_height(&data_from(&shifted), 10.6, 0.3, 0.25, 0.1, 0.06).unwrap();
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn single_point_profile_is_the_likelihood() {
    let data = data_from(&[vec![vec![9.1, 9.2], vec![9.4]], vec![vec![8.95, 9.0]]]);
    let var_u = 0.05;
    let mu = 0.2;
    let p = profile_height(&data, &[8.9], &[mu], 0.1, 0.06, var_u).unwrap();
    let su = solve_sigma_u(mu, var_u).unwrap();
    assert_eq!(p.loglik[0], loglik_height(&data, 8.9, mu, su, 0.1, 0.06).unwrap());
    assert!((tn_variance(mu, su) - var_u).abs() < 1e-12);
}

fn one_height(g: f64, blocs: usize, seed: u64) -> (HeightData, HeightParams) {
    let truth = HeightParams {
        height: 5,
        g,
        mu_u: 0.55,
        sigma_u: 0.29,
        sigma_v: 0.116,
        sigma_w: 0.0725,
    };
    let counts = [HeightCounts {
        height: 5,
        blocs,
        buildings: 3 * blocs,
        apartments: 24 * blocs,
    }];
    let synth = generate_panel(&[truth], &counts, seed).unwrap();
    (HeightData::from_panel(&synth.panel.heights()[0]), truth)
}

#[test]
fn profile_peaks_near_truth() {
    let (data, truth) = one_height(8.8, 3000, 4);
    let var_u = tn_variance(truth.mu_u, truth.sigma_u);
    let g_grid: Vec<f64> = (0..41).map(|i| truth.g - 0.1 + 0.005 * i as f64).collect();
    let mu_grid: Vec<f64> = (0..41).map(|i| 0.3 + 0.0125 * i as f64).collect();
    let p = profile_height(&data, &g_grid, &mu_grid, truth.sigma_v, truth.sigma_w, var_u).unwrap();
    let i = p.argmax().unwrap();
    assert!((p.g_grid[i] - truth.g).abs() <= 0.03, "g {}", p.g_grid[i]);
    assert!((p.mu_u[i] - truth.mu_u).abs() <= 0.06, "mu {}", p.mu_u[i]);
}

#[test]
fn profile_translation_invariance() {
    let (data, truth) = one_height(8.8, 50, 5);
    let shifted = HeightData::new(
        5,
        (0..data.n_blocs())
            .map(|k| {
                let stats = data.bloc(k).iter().map(|b| BuildingStat { mean: b.mean + 0.5, ..*b }).collect();
                (data.bloc_ids[k].clone(), stats)
            })
            .collect(),
    );
    let g: Vec<f64> = (0..9).map(|i| 8.6 + 0.05 * i as f64).collect();
    let gs: Vec<f64> = g.iter().map(|v| v + 0.5).collect();
    let mu: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
    let a = profile_height(&data, &g, &mu, truth.sigma_v, truth.sigma_w, 0.07).unwrap();
    let b = profile_height(&shifted, &gs, &mu, truth.sigma_v, truth.sigma_w, 0.07).unwrap();
    assert_eq!(a.argmax(), b.argmax());
    assert_eq!(a.mu_u, b.mu_u);
    for (x, y) in a.loglik.iter().zip(&b.loglik) {
        assert!((x - y).abs() < 1e-9 * x.abs());
    }
}

/// All chains over a shared grid, by enumeration.
pub fn brute_force(grid: &[f64], scores: &[Vec<f64>]) -> (f64, Vec<usize>) {
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

#[test]
fn chain_program_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..60 {
        let h = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=8);
        let grid: Vec<f64> = (0..m).map(|i| i as f64 * 0.1).collect();
        let scores: Vec<Vec<f64>> = (0..h).map(|_| (0..m).map(|_| rng.gen_range(-5.0..0.0)).collect()).collect();
        let sol = constrained_argmax(&vec![grid.clone(); h], &scores).unwrap();
        let (want, path) = brute_force(&grid, &scores);
        assert_eq!(sol.objective, want);
        assert_eq!(sol.indices, path);
    }
}

fn small_config() -> FrontierConfig {
    let mut c = FrontierConfig::default();
    c.grid = GridConfig {
        g_points: 60,
        mu_points: 25,
        ..GridConfig::default()
    };
    c
}

fn u_shaped(heights: u32, blocs: usize, seed: u64) -> (frontier_core::domain::Panel, Vec<HeightParams>) {
    let truth: Vec<HeightParams> = (1..=heights)
        .map(|h| HeightParams {
            height: h,
            g: 8.8 + 0.02 * (h as f64 - 3.0).powi(2),
            mu_u: 0.55,
            sigma_u: 0.29,
            sigma_v: 0.116,
            sigma_w: 0.0725,
        })
        .collect();
    let counts: Vec<HeightCounts> = (1..=heights)
        .map(|h| HeightCounts {
            height: h,
            blocs,
            buildings: 2 * blocs,
            apartments: 12 * blocs,
        })
        .collect();
    (generate_panel(&truth, &counts, seed).unwrap().panel, truth)
}

#[test]
fn constrained_fit_is_u_shaped_and_below_per_height() {
    let (panel, truth) = u_shaped(6, 600, 2);
    let run = estimate_frontier(&panel, &small_config(), FitMode::Constrained, None, None).unwrap();
    let per = fit_per_height(&run.input, &run.profiles).unwrap();
    let con = &run.estimate;
    assert!(con.loglik <= per.loglik + 1e-9);
    let g: Vec<f64> = con.params.iter().map(|p| p.g).collect();
    let m = con.mes as usize - 1;
    assert!(g[..=m].windows(2).all(|w| w[1] <= w[0]));
    assert!(g[m..].windows(2).all(|w| w[1] >= w[0]));
    for (p, t) in con.params.iter().zip(&truth) {
        assert!((p.g - t.g).abs() < 0.08, "h={} {} vs {}", p.height, p.g, t.g);
    }
    // With the per-height optimum already V-shaped the two coincide.
    let per_g: Vec<f64> = per.params.iter().map(|p| p.g).collect();
    let pm = per.mes as usize - 1;
    if per_g[..=pm].windows(2).all(|w| w[1] <= w[0]) && per_g[pm..].windows(2).all(|w| w[1] >= w[0]) {
        assert_eq!(per_g, g);
    }
}

#[test]
fn quartic_fit_contract() {
    let curve = CostCurve::new([900.0, 6472.0, 78.43, -4.1, 0.0823]);
    let q: Vec<f64> = (1..=8).map(|h| h as f64 * 1.04).collect();
    let truth: Vec<HeightParams> = (1..=8u32)
        .map(|h| HeightParams {
            height: h,
            g: curve.g(q[h as usize - 1]),
            mu_u: 0.55,
            sigma_u: 0.29,
            sigma_v: 0.116,
            sigma_w: 0.0725,
        })
        .collect();
    let counts: Vec<HeightCounts> = (1..=8)
        .map(|h| HeightCounts {
            height: h,
            blocs: 120,
            buildings: 240,
            apartments: 1400,
        })
        .collect();
    let panel = generate_panel(&truth, &counts, 12).unwrap().panel;
    let table = QuantityTable::from_values(q.clone()).unwrap();
    let config = small_config();
    let run = estimate_frontier(&panel, &config, FitMode::Constrained, None, None).unwrap();
    let quartic = QuarticConfig {
        starts: 2,
        max_iters: 800,
        ..QuarticConfig::default()
    };
    let fit = fit_quartic(&run.input, &run.estimate, &table, &config.grid, &quartic).unwrap();
    let c = fit.quartic.unwrap();
    let scale = curve.ac(q[7]);
    assert!(c.violation(&q, scale).0 <= 1e-9);
    for &v in &q {
        assert!((c.ac(v) / curve.ac(v) - 1.0).abs() < 0.1, "AC at {v}: {} vs {}", c.ac(v), curve.ac(v));
    }

    // The optimum is at least as good as the least-squares start when that start is feasible.
    let levels: Vec<f64> = (1..=8).map(|h| run.estimate.level(h).unwrap()).collect();
    let start = CostCurve::fit_levels(&q, &levels, run.estimate.mes as usize).unwrap();
    let scale = levels.iter().sum::<f64>() / 8.0;
    if start.violation(&q, scale).0 <= 1e-9 {
        let profiles = profile_all(&run.input, &config.grid).unwrap();
        let _ = profiles;
        let mut init_ll = 0.0;
        for h in &run.input.heights {
            let g = start.g(q[h.data.height as usize - 1]);
            let vu = h.var_u.unwrap();
            let best = config
                .grid
                .mu_grid(vu)
                .iter()
                .map(|&mu| loglik_height(&h.data, g, mu, solve_sigma_u(mu, vu).unwrap(), h.sigma_v, h.sigma_w).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            init_ll += best;
        }
        assert!(fit.loglik >= init_ll - 1e-9);
    }
}

#[test]
fn frontier_input_requires_variances() {
    let (panel, _) = u_shaped(3, 20, 1);
    let empty = frontier_core::variance::VarianceEstimates::default();
    assert!(FrontierInput::new(&panel, &empty).is_err());
    let run = estimate_frontier(&panel, &small_config(), FitMode::PerHeight, None, None).unwrap();
    let again = fit_constrained(&run.input, &run.profiles).unwrap();
    assert_eq!(again.params.len(), 3);
}

#[test]
fn infeasible_grids_fall_back_to_a_shared_grid() {
    let truth: Vec<HeightParams> = [8.8, 10.8, 8.8]
        .iter()
        .zip(1..)
        .map(|(&g, h)| HeightParams {
            height: h,
            g,
            mu_u: 0.55,
            sigma_u: 0.29,
            sigma_v: 0.116,
            sigma_w: 0.0725,
        })
        .collect();
    let counts: Vec<HeightCounts> = (1..=3)
        .map(|h| HeightCounts {
            height: h,
            blocs: 40,
            buildings: 80,
            apartments: 480,
        })
        .collect();
    let panel = generate_panel(&truth, &counts, 9).unwrap().panel;
    let run = estimate_frontier(&panel, &small_config(), FitMode::Constrained, None, None).unwrap();
    let grids: Vec<Vec<f64>> = run.profiles.profiles.iter().map(|p| p.g_grid.clone()).collect();
    let scores: Vec<Vec<f64>> = run.profiles.profiles.iter().map(|p| p.loglik.clone()).collect();
    assert!(matches!(constrained_argmax(&grids, &scores), Err(Error::InfeasibleShape)));
    let g: Vec<f64> = run.estimate.params.iter().map(|p| p.g).collect();
    let m = run.estimate.mes as usize - 1;
    assert!(g[..=m].windows(2).all(|w| w[1] <= w[0]));
    assert!(g[m..].windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn missing_heights_are_interpolated() {
    let (panel, _) = u_shaped(5, 200, 4);
    let kept: Vec<_> = panel.heights().iter().filter(|h| h.height != 3).cloned().collect();
    let panel = frontier_core::domain::Panel::new(kept);
    let run = estimate_frontier(&panel, &small_config(), FitMode::Constrained, None, None).unwrap();
    let est = &run.estimate;
    assert_eq!(est.params.len(), 5);
    assert!(est.interpolated.contains(&3));
    let p = |h: u32| *est.at(h).unwrap();
    assert!((p(3).g - 0.5 * (p(2).g + p(4).g)).abs() < 1e-12);
    assert!((p(3).sigma_w - 0.5 * (p(2).sigma_w + p(4).sigma_w)).abs() < 1e-12);
}
