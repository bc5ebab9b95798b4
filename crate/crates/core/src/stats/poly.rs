//! Polynomial series regression in a Legendre basis, with cross-validated
//! degree selection.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted polynomial `Σ c_k P_k(t)` with `t` the argument mapped onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    pub lo: f64,
    pub hi: f64,
    pub coef: Vec<f64>,
}

fn scale(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        2.0 * (x - lo) / (hi - lo) - 1.0
    } else {
        0.0
    }
}

/// Legendre polynomials `P_0..=P_degree` at `t`, written into `out`.
pub fn legendre_into(t: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = t;
    }
    for n in 1..degree {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * t * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        let t = scale(x, self.lo, self.hi);
        let mut basis = vec![0.0; self.degree + 1];
        legendre_into(t, self.degree, &mut basis);
        basis.iter().zip(&self.coef).map(|(b, c)| b * c).sum()
    }

    /// Weighted least-squares fit of the given degree over the data range.
    pub fn fit(x: &[f64], y: &[f64], weights: Option<&[f64]>, degree: usize) -> Result<Self> {
        let (lo, hi) = range(x);
        Self::fit_on(x, y, weights, degree, lo, hi)
    }

    pub fn fit_on(
        x: &[f64],
        y: &[f64],
        weights: Option<&[f64]>,
        degree: usize,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument("x and y lengths differ".into()));
        }
        if x.len() < degree + 1 {
            return Err(Error::InsufficientData(format!(
                "{} observations for a degree-{degree} polynomial",
                x.len()
            )));
        }
        let p = degree + 1;
        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        let mut basis = vec![0.0; p];
        for i in 0..x.len() {
            let w = weights.map_or(1.0, |w| w[i]);
            legendre_into(scale(x[i], lo, hi), degree, &mut basis);
            for a in 0..p {
                rhs[a] += w * basis[a] * y[i];
                for b in 0..=a {
                    gram[(a, b)] += w * basis[a] * basis[b];
                }
            }
        }
        symmetrize(&mut gram);
        let coef = solve_spd(gram, rhs)?;
        Ok(Self {
            degree,
            lo,
            hi,
            coef,
        })
    }
}

fn range(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for a in 0..p {
        for b in 0..a {
            m[(b, a)] = m[(a, b)];
        }
    }
}

/// Solve a symmetric positive semi-definite system; falls back to a
/// pseudo-inverse when the Cholesky factorisation fails.
fn solve_spd(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<Vec<f64>> {
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(chol.solve(&rhs).iter().copied().collect());
    }
    let svd = gram.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

/// Outcome of a cross-validated degree search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeSelection {
    pub degree: usize,
    pub cv_error: Vec<f64>,
}

/// Smallest degree whose error is within rounding of the minimum.
fn pick_degree(cv: &[f64], y: &[f64]) -> usize {
    let best = cv.iter().copied().fold(f64::INFINITY, f64::min);
    let y_scale = y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64;
    let slack = best.abs() * 1e-9 + y_scale * 1e-20 + 1e-300;
    cv.iter().position(|&e| e <= best + slack).unwrap_or(0)
}

/// K-fold cross-validation over degrees `0..=max_degree`.
///
/// Fold membership is assigned on the observations sorted by `(x, y)`, so the
/// result does not depend on input order.
pub fn select_degree_kfold(
    x: &[f64],
    y: &[f64],
    max_degree: usize,
    folds: usize,
    seed: u64,
) -> Result<DegreeSelection> {
    let n = x.len();
    let folds = folds.max(2);
    if n < max_degree + 1 + folds {
        return Err(Error::InsufficientData(format!(
            "{n} observations for degree {max_degree} with {folds}-fold cross-validation"
        )));
    }
    let (lo, hi) = range(x);
    let order = canonical_order(x, y);
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // fold_of[canonical rank] = fold
    let mut fold_of = vec![0usize; n];
    for (slot, &rank) in positions.iter().enumerate() {
        fold_of[rank] = slot % folds;
    }

    let p = max_degree + 1;
    let mut basis = vec![0.0; n * p];
    for (rank, &i) in order.iter().enumerate() {
        legendre_into(scale(x[i], lo, hi), max_degree, &mut basis[rank * p..(rank + 1) * p]);
    }
    let mut fold_gram = vec![DMatrix::<f64>::zeros(p, p); folds];
    let mut fold_rhs = vec![DVector::<f64>::zeros(p); folds];
    for (rank, &i) in order.iter().enumerate() {
        let f = fold_of[rank];
        let b = &basis[rank * p..(rank + 1) * p];
        for a in 0..p {
            fold_rhs[f][a] += b[a] * y[i];
            for c in 0..=a {
                fold_gram[f][(a, c)] += b[a] * b[c];
            }
        }
    }
    let total_gram = fold_gram.iter().fold(DMatrix::zeros(p, p), |acc, g| acc + g);
    let total_rhs = fold_rhs.iter().fold(DVector::zeros(p), |acc, r| acc + r);

    let mut cv_error = vec![0.0; p];
    for (degree, err) in cv_error.iter_mut().enumerate() {
        let d = degree + 1;
        for f in 0..folds {
            let mut g = (&total_gram - &fold_gram[f]).view((0, 0), (d, d)).into_owned();
            symmetrize(&mut g);
            let r = (&total_rhs - &fold_rhs[f]).rows(0, d).into_owned();
            let coef = solve_spd(g, r)?;
            for (rank, &i) in order.iter().enumerate() {
                if fold_of[rank] != f {
                    continue;
                }
                let b = &basis[rank * p..rank * p + d];
                let fit: f64 = b.iter().zip(&coef).map(|(u, v)| u * v).sum();
                *err += (y[i] - fit).powi(2);
            }
        }
        *err /= n as f64;
    }
    Ok(DegreeSelection {
        degree: pick_degree(&cv_error, y),
        cv_error,
    })
}

/// Weighted leave-one-out cross-validation over degrees `0..=max_degree`.
/// Degrees that leave fewer than `degree + 1` points in a training set are skipped.
pub fn select_degree_loo(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    max_degree: usize,
) -> Result<DegreeSelection> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} points for leave-one-out")));
    }
    let (lo, hi) = range(x);
    let wsum: f64 = weights.iter().sum();
    let mut cv_error = vec![f64::INFINITY; max_degree + 1];
    for (degree, err) in cv_error.iter_mut().enumerate() {
        if n < degree + 2 {
            break;
        }
        let mut total = 0.0;
        for leave in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&i| i != leave).collect();
            let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
            let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
            let ws: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
            let fit = PolyFit::fit_on(&xs, &ys, Some(&ws), degree, lo, hi)?;
            total += weights[leave] * (y[leave] - fit.eval(x[leave])).powi(2);
        }
        *err = total / wsum;
    }
    Ok(DegreeSelection {
        degree: pick_degree(&cv_error, y),
        cv_error,
    })
}

fn canonical_order(x: &[f64], y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    order
}

/// Fit in canonical order so that results are bitwise independent of input order.
pub fn fit_canonical(x: &[f64], y: &[f64], degree: usize) -> Result<PolyFit> {
    let order = canonical_order(x, y);
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    PolyFit::fit(&xs, &ys, None, degree)
}
