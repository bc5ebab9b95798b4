use std::path::{Path, PathBuf};

use frontier_core::domain::{ColumnMapping, FilterConfig};
use frontier_core::frontier::FrontierConfig;
use frontier_core::hedonic::HedonicSpec;
use frontier_core::synth::Regulation;
use frontier_core::tax::TaxConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Transactions CSV; `<out>/transactions.csv` when unset.
    pub transactions: Option<PathBuf>,
    /// Consumer price index (`date,index`); `<out>/cpi.csv` when unset.
    pub cpi: Option<PathBuf>,
    pub cost_index: Option<PathBuf>,
    /// Resales of existing homes for the cohort regression; `<out>/resales.csv` when unset.
    pub resales: Option<PathBuf>,
    pub columns: ColumnMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 200,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticityConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub points: usize,
}

impl Default for ElasticityConfig {
    fn default() -> Self {
        Self {
            q_min: 1.0,
            q_max: 36.0,
            points: 351,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Share of the reference sample size drawn at each height.
    pub scale: f64,
    pub mu_over_sigma: f64,
    pub sigma_u: f64,
    pub sigma_w: f64,
    pub sigma_v: f64,
    pub resale_parcels: usize,
    pub cohort_delta: f64,
    pub markets: usize,
    pub regulation: Regulation,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            scale: 0.05,
            mu_over_sigma: 1.9,
            sigma_u: 0.29,
            sigma_w: 0.0725,
            sigma_v: 0.116,
            resale_parcels: 300,
            cohort_delta: 0.05,
            markets: 0,
            regulation: Regulation::default(),
        }
    }
}

/// Everything that determines the artifacts. The seed given on the command
/// line overrides the one in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub input: Inputs,
    pub max_unparseable_fraction: f64,
    pub base_year: i32,
    pub filters: FilterConfig,
    pub hedonic: HedonicSpec,
    pub frontier: FrontierConfig,
    pub bootstrap: BootstrapConfig,
    pub tax: TaxConfig,
    /// Used when no resales are available.
    pub kappa_t: Option<f64>,
    pub elasticity: ElasticityConfig,
    pub simulate: SimulateConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            input: Inputs::default(),
            max_unparseable_fraction: 0.01,
            base_year: 2000,
            filters: FilterConfig::default(),
            hedonic: HedonicSpec::Restricted,
            frontier: FrontierConfig::default(),
            bootstrap: BootstrapConfig::default(),
            tax: TaxConfig::default(),
            kappa_t: None,
            elasticity: ElasticityConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut config: Self = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        if let Some(s) = seed {
            config.seed = s;
        }
        config.propagate_seed();
        Ok(config)
    }

    /// One seed drives every stochastic step.
    fn propagate_seed(&mut self) {
        self.frontier.detrend.seed = self.seed;
        self.frontier.quartic.seed = self.seed;
        self.tax.seed = self.seed;
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
