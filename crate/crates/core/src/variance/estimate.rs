use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{HeightPanel, Panel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceFlag {
    VarVAbsent,
    VarWAbsent,
    VarWNegative,
    VarUAbsent,
    VarUNegative,
    VarVFloored,
    VarWFloored,
    VarVImputed,
    VarWImputed,
}

impl fmt::Display for VarianceFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// Variance components at one height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightVariances {
    pub height: u32,
    pub var_v: Option<f64>,
    pub var_w: Option<f64>,
    /// Right-hand side of the Var(u) moment; may be negative.
    pub var_u_moment: Option<f64>,
    pub var_v_smooth: Option<f64>,
    pub var_w_smooth: Option<f64>,
    /// Σ(J − 1).
    pub dof_v: usize,
    /// Σ(n_k − 1).
    pub dof_w: usize,
    /// K − 1.
    pub dof_u: usize,
    pub flags: Vec<VarianceFlag>,
}

impl HeightVariances {
    pub fn flag(&mut self, f: VarianceFlag) {
        if !self.flags.contains(&f) {
            self.flags.push(f);
            self.flags.sort();
        }
    }

    pub fn has(&self, f: VarianceFlag) -> bool {
        self.flags.contains(&f)
    }

    /// Smoothed value when present, else the raw estimate.
    pub fn sigma_v2(&self) -> Option<f64> {
        self.var_v_smooth.or(self.var_v)
    }

    pub fn sigma_w2(&self) -> Option<f64> {
        self.var_w_smooth.or(self.var_w)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimates {
    pub heights: Vec<HeightVariances>,
}

impl VarianceEstimates {
    pub fn at(&self, height: u32) -> Option<&HeightVariances> {
        self.heights.iter().find(|h| h.height == height)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "height",
            "varV",
            "varW",
            "varU_moment",
            "varV_smooth",
            "varW_smooth",
            "dofV",
            "dofW",
            "flags",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for h in &self.heights {
            let flags: Vec<String> = h.flags.iter().map(|f| f.to_string()).collect();
            w.write_record([
                h.height.to_string(),
                opt(h.var_v),
                opt(h.var_w),
                opt(h.var_u_moment),
                opt(h.var_v_smooth),
                opt(h.var_w_smooth),
                h.dof_v.to_string(),
                h.dof_w.to_string(),
                flags.join("|"),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// Raw estimates at one height. `detrended` and `raw` share the same shape.
fn estimate_height(detrended: &HeightPanel, raw: &HeightPanel) -> HeightVariances {
    let mut out = HeightVariances {
        height: raw.height,
        var_v: None,
        var_w: None,
        var_u_moment: None,
        var_v_smooth: None,
        var_w_smooth: None,
        dof_v: 0,
        dof_w: 0,
        dof_u: raw.blocs.len().saturating_sub(1),
        flags: Vec::new(),
    };

    // Apartment level.
    let mut ss_v = 0.0;
    for b in detrended.buildings() {
        let m = b.mean_y();
        ss_v += b.apartments.iter().map(|a| (a.y - m).powi(2)).sum::<f64>();
        out.dof_v += b.len() - 1;
    }
    let var_v = (out.dof_v > 0).then(|| ss_v / out.dof_v as f64);
    out.var_v = var_v;

    // Building level.
    let mut ss_w = 0.0;
    let mut corr_w = 0.0;
    for bloc in &detrended.blocs {
        let n = bloc.buildings.len() as f64;
        let means: Vec<f64> = bloc.buildings.iter().map(|b| b.mean_y()).collect();
        let bloc_mean = means.iter().sum::<f64>() / n;
        ss_w += means.iter().map(|m| (m - bloc_mean).powi(2)).sum::<f64>();
        corr_w += bloc
            .buildings
            .iter()
            .map(|b| (n - 1.0) / (n * b.len() as f64))
            .sum::<f64>();
        out.dof_w += bloc.buildings.len() - 1;
    }
    let var_w = match var_v {
        Some(v) if out.dof_w > 0 => Some((ss_w - v * corr_w) / out.dof_w as f64),
        _ => None,
    };
    out.var_w = var_w;

    // Bloc level, on prices not adjusted for time.
    let k = raw.blocs.len();
    if let (Some(v), Some(w)) = (var_v, var_w) {
        if k >= 2 {
            let kf = k as f64;
            let bloc_means: Vec<f64> = raw
                .blocs
                .iter()
                .map(|bloc| {
                    bloc.buildings.iter().map(|b| b.mean_y()).sum::<f64>() / bloc.buildings.len() as f64
                })
                .collect();
            let grand = bloc_means.iter().sum::<f64>() / kf;
            let between = bloc_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (kf - 1.0);
            let inv_n: f64 = raw.blocs.iter().map(|b| 1.0 / b.buildings.len() as f64).sum();
            let inv_n2j: f64 = raw
                .blocs
                .iter()
                .map(|bloc| {
                    let n = bloc.buildings.len() as f64;
                    bloc.buildings.iter().map(|b| 1.0 / (n * n * b.len() as f64)).sum::<f64>()
                })
                .sum();
            out.var_u_moment = Some(between - w / kf * inv_n - v / kf * inv_n2j);
        }
    }

    if out.var_v.is_none() {
        out.flag(VarianceFlag::VarVAbsent);
    }
    match out.var_w {
        None => out.flag(VarianceFlag::VarWAbsent),
        Some(w) if w < 0.0 => out.flag(VarianceFlag::VarWNegative),
        _ => {}
    }
    match out.var_u_moment {
        None => out.flag(VarianceFlag::VarUAbsent),
        Some(u) if u <= 0.0 => out.flag(VarianceFlag::VarUNegative),
        _ => {}
    }
    out
}

/// Apartment (v), building (w) and bloc (u) variance estimates at every height.
/// `detrended` holds time-detrended residuals; `raw` the same panel before
/// detrending.
pub fn estimate_variances(detrended: &Panel, raw: &Panel) -> Result<VarianceEstimates> {
    if detrended.counts() != raw.counts() {
        return Err(Error::InvalidArgument(
            "detrended and raw panels differ in shape".into(),
        ));
    }
    let heights = detrended
        .heights()
        .par_iter()
        .zip(raw.heights().par_iter())
        .map(|(d, r)| estimate_height(d, r))
        .collect();
    Ok(VarianceEstimates { heights })
}
