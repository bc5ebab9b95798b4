//! Least squares with absorbed group fixed effects and heteroskedasticity-robust
//! (HC1) standard errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot below which a column is treated as collinear with earlier ones.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    /// Row-major `k × k` robust covariance.
    pub cov: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n_obs: usize,
    pub n_groups: usize,
}

impl OlsFit {
    pub fn coef_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coef[i])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.se[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cov_at(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.coef.len() + j]
    }
}

/// Subtract group means from `values` in place. `group` holds dense ids `0..n_groups`.
pub fn demean_by_group(values: &mut [f64], group: &[usize], n_groups: usize) {
    let mut sum = vec![0.0; n_groups];
    let mut count = vec![0usize; n_groups];
    for (v, &g) in values.iter().zip(group) {
        sum[g] += v;
        count[g] += 1;
    }
    for (v, &g) in values.iter_mut().zip(group) {
        *v -= sum[g] / count[g] as f64;
    }
}

/// Map arbitrary group keys onto dense ids.
pub fn dense_ids<K: std::hash::Hash + Eq + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let ids = keys
        .iter()
        .map(|k| {
            let next = map.len();
            *map.entry(k.clone()).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

/// Columns that are (numerically) linear combinations of earlier columns,
/// found by an incremental Cholesky of the Gram matrix.
fn collinear_columns(gram: &DMatrix<f64>) -> Vec<usize> {
    let k = gram.nrows();
    let mut l = DMatrix::<f64>::zeros(k, k);
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..k {
        // Solve L_kept * z = gram[kept, j]
        let mut z = vec![0.0; kept.len()];
        for (a, &ca) in kept.iter().enumerate() {
            let mut s = gram[(ca, j)];
            for b in 0..a {
                s -= l[(ca, kept[b])] * z[b];
            }
            z[a] = s / l[(ca, ca)];
        }
        let pivot = gram[(j, j)] - z.iter().map(|v| v * v).sum::<f64>();
        if gram[(j, j)] <= 0.0 || pivot <= RANK_TOL * gram[(j, j)] {
            dropped.push(j);
            continue;
        }
        for (a, &ca) in kept.iter().enumerate() {
            l[(j, ca)] = z[a];
        }
        l[(j, j)] = pivot.sqrt();
        kept.push(j);
    }
    dropped
}

/// Least squares of `y` on the columns of `x` after absorbing `groups` fixed
/// effects by the within transformation. `groups = None` fits with an intercept
/// absorbed (one group).
pub fn fe_ols(
    y: &[f64],
    columns: &[Vec<f64>],
    names: &[String],
    groups: Option<&[usize]>,
) -> Result<OlsFit> {
    let n = y.len();
    let k = columns.len();
    let (group, n_groups) = match groups {
        Some(g) => {
            let n_groups = g.iter().copied().max().map_or(0, |m| m + 1);
            (g.to_vec(), n_groups)
        }
        None => (vec![0; n], 1),
    };
    if n <= k + n_groups {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} regressors and {n_groups} groups"
        )));
    }
    let mut yd = y.to_vec();
    demean_by_group(&mut yd, &group, n_groups);
    let mut x = DMatrix::<f64>::zeros(n, k);
    for (j, col) in columns.iter().enumerate() {
        let mut c = col.clone();
        demean_by_group(&mut c, &group, n_groups);
        x.set_column(j, &DVector::from_vec(c));
    }
    let gram = x.tr_mul(&x);
    let bad = collinear_columns(&gram);
    if !bad.is_empty() {
        return Err(Error::RankDeficient(bad.iter().map(|&j| names[j].clone()).collect()));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let yv = DVector::from_vec(yd);
    let coef = chol.solve(&x.tr_mul(&yv));
    let resid = &yv - &x * &coef;
    let bread = chol.inverse();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let e2 = resid[i] * resid[i];
        let row = x.row(i);
        for a in 0..k {
            let ra = row[a] * e2;
            for b in 0..=a {
                meat[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            meat[(b, a)] = meat[(a, b)];
        }
    }
    let dof = (n - k - n_groups) as f64;
    let cov = &bread * meat * &bread * (n as f64 / dof);
    let se = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let mut cov_flat = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            cov_flat.push(cov[(a, b)]);
        }
    }
    Ok(OlsFit {
        names: names.to_vec(),
        coef: coef.iter().copied().collect(),
        se,
        cov: cov_flat,
        residuals: resid.iter().copied().collect(),
        n_obs: n,
        n_groups,
    })
}
