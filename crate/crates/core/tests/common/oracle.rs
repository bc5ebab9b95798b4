//! Numerical-integration references for the frontier likelihood.

use nalgebra::{DMatrix, DVector};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson integral of `exp(log_f)` over `[a, b]`, returned as a log.
pub fn log_integral(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // Locate the peak on a dense grid and integrate the rescaled integrand.
    let n = 20_000;
    let mut peak = f64::NEG_INFINITY;
    let mut at = a;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = log_f(x);
        if v > peak {
            peak = v;
            at = x;
        }
    }
    let f = |x: f64| (log_f(x) - peak).exp();
    let mut total = 0.0;
    let mut edges = vec![a];
    if at > a && at < b {
        edges.push(at);
    }
    edges.push(b);
    for w in edges.windows(2) {
        let (l, r) = (w[0], w[1]);
        let (fl, fm, fr) = (f(l), f(0.5 * (l + r)), f(r));
        let whole = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
        total += simpson(&f, l, r, fl, fm, fr, whole, 1e-12, 40);
    }
    peak + total.ln()
}

/// Log likelihood of one bloc by integrating over `u` with explicit
/// multivariate normal building densities. `buildings[i]` lists prices.
pub fn bloc_loglik(buildings: &[Vec<f64>], g: f64, mu: f64, su: f64, sv: f64, sw: f64) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    // ln P(u ≥ 0) under N(μ, σ_u²), by the same integrator.
    let ln_norm = log_integral(
        &|u: f64| -0.5 * ((u - mu) / su).powi(2) - 0.5 * ln_2pi - su.ln(),
        0.0,
        mu.max(0.0) + 40.0 * su,
    );
    let parts: Vec<(DMatrix<f64>, f64, DVector<f64>)> = buildings
        .iter()
        .map(|y| {
            let j = y.len();
            let cov = DMatrix::from_fn(j, j, |r, c| sw * sw + if r == c { sv * sv } else { 0.0 });
            let inv = cov.clone().try_inverse().unwrap();
            let logdet = cov.determinant().ln();
            (inv, logdet, DVector::from_iterator(j, y.iter().map(|v| v - g)))
        })
        .collect();
    let log_f = |u: f64| {
        let mut s = -0.5 * ((u - mu) / su).powi(2) - 0.5 * ln_2pi - su.ln() - ln_norm;
        for (inv, logdet, e) in &parts {
            let d = e.add_scalar(-u);
            s += -0.5 * (e.len() as f64 * ln_2pi + logdet + (d.transpose() * inv * &d)[0]);
        }
        s
    };
    let spread: f64 = buildings.iter().flatten().map(|y| (y - g).abs()).fold(0.0, f64::max);
    let upper = mu.max(0.0) + 40.0 * su + spread + 40.0 * (sv + sw);
    log_integral(&log_f, 0.0, upper)
}
