use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Indices of points within `radius` of each point, itself excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub radius: f64,
    /// Ascending indices per point; empty for points without coordinates.
    pub neighbors: Vec<Vec<usize>>,
    /// Points without coordinates.
    pub excluded: Vec<usize>,
}

impl NeighborSet {
    pub fn mean_count(&self) -> f64 {
        let n = self.neighbors.len() - self.excluded.len();
        if n == 0 {
            return 0.0;
        }
        self.neighbors.iter().map(Vec::len).sum::<usize>() as f64 / n as f64
    }
}

/// Bucket points on a square grid of side `radius` and compare each point
/// with the nine surrounding cells.
pub fn build_neighbors(points: &[Option<(f64, f64)>], radius: f64) -> NeighborSet {
    let cell = |v: f64| (v / radius).floor() as i64;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut excluded = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match p {
            Some((x, y)) if x.is_finite() && y.is_finite() => buckets.entry((cell(*x), cell(*y))).or_default().push(i),
            _ => excluded.push(i),
        }
    }
    let r2 = radius * radius;
    let neighbors = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let Some((x, y)) = p.filter(|(x, y)| x.is_finite() && y.is_finite()) else {
                return Vec::new();
            };
            let (cx, cy) = (cell(x), cell(y));
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(b) = buckets.get(&(cx + dx, cy + dy)) {
                        for &j in b {
                            if j == i {
                                continue;
                            }
                            let (xj, yj) = points[j].expect("bucketed");
                            if (xj - x).powi(2) + (yj - y).powi(2) <= r2 {
                                out.push(j);
                            }
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect();
    NeighborSet {
        radius,
        neighbors,
        excluded,
    }
}
