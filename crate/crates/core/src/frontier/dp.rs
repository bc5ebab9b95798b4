//! Exact maximization of a sum of per-layer scores over chains that fall
//! weakly to a turning layer and rise weakly after it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSolution {
    /// Chosen grid index per layer.
    pub indices: Vec<usize>,
    /// Turning layer (0-based), in `0..layers-1` (0 when there is one layer).
    pub turn: usize,
    /// Sum of the chosen scores, added in layer order.
    pub objective: f64,
}

/// Suffix maxima of `values`, returning for each position the best value at or
/// after it and its index; ties keep the lowest index.
fn suffix_best(values: &[f64]) -> Vec<(f64, usize)> {
    let mut out = vec![(f64::NEG_INFINITY, usize::MAX); values.len()];
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for i in (0..values.len()).rev() {
        if values[i] >= best.0 && values[i] > f64::NEG_INFINITY {
            best = (values[i], i);
        }
        out[i] = best;
    }
    out
}

/// One sweep: `acc[l][i] = score[l][i] + max{acc[prev][j] : grid[prev][j] ≥ grid[l][i]}`.
fn sweep(grids: &[Vec<f64>], scores: &[Vec<f64>], order: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let n = grids.len();
    let mut acc: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut back: Vec<Vec<usize>> = vec![Vec::new(); n];
    let first = order[0];
    acc[first] = scores[first].clone();
    back[first] = vec![usize::MAX; scores[first].len()];
    for w in order.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        let best = suffix_best(&acc[prev]);
        let mut a = Vec::with_capacity(grids[cur].len());
        let mut b = Vec::with_capacity(grids[cur].len());
        for (i, &g) in grids[cur].iter().enumerate() {
            let start = grids[prev].partition_point(|&x| x < g);
            let (v, j) = best.get(start).copied().unwrap_or((f64::NEG_INFINITY, usize::MAX));
            if j == usize::MAX || scores[cur][i] == f64::NEG_INFINITY {
                a.push(f64::NEG_INFINITY);
                b.push(usize::MAX);
            } else {
                a.push(scores[cur][i] + v);
                b.push(j);
            }
        }
        acc[cur] = a;
        back[cur] = b;
    }
    (acc, back)
}

/// Maximize `Σ_l scores[l][i_l]` over index chains whose grid values satisfy
/// `g_0 ≥ … ≥ g_t ≤ … ≤ g_last` for some turning layer `t`.
///
/// Each `grids[l]` must be ascending. Ties go to lower grid values and then to
/// the earliest turning layer.
pub fn constrained_argmax(grids: &[Vec<f64>], scores: &[Vec<f64>]) -> Result<ChainSolution> {
    let n = grids.len();
    if n == 0 || grids.iter().any(Vec::is_empty) {
        return Err(Error::EmptyGrid);
    }
    debug_assert!(grids.iter().all(|g| g.windows(2).all(|w| w[0] < w[1])));

    let forward: Vec<usize> = (0..n).collect();
    let backward: Vec<usize> = (0..n).rev().collect();
    let (left, left_back) = sweep(grids, scores, &forward);
    let (right, right_back) = sweep(grids, scores, &backward);

    let turns = if n == 1 { 1 } else { n - 1 };
    let mut best: Option<(f64, usize, usize)> = None;
    for t in 0..turns {
        for i in 0..grids[t].len() {
            let s = scores[t][i];
            if s == f64::NEG_INFINITY || left[t][i] == f64::NEG_INFINITY || right[t][i] == f64::NEG_INFINITY {
                continue;
            }
            let total = left[t][i] + right[t][i] - s;
            if best.map_or(true, |b| total > b.0) {
                best = Some((total, t, i));
            }
        }
    }
    let (_, turn, at) = best.ok_or(Error::InfeasibleShape)?;

    let mut path = vec![0usize; n];
    path[turn] = at;
    for l in (1..=turn).rev() {
        path[l - 1] = left_back[l][path[l]];
    }
    for l in turn..n - 1 {
        path[l + 1] = right_back[l][path[l]];
    }
    let objective = (0..n).map(|l| scores[l][path[l]]).sum();
    Ok(ChainSolution {
        indices: path,
        turn,
        objective,
    })
}
