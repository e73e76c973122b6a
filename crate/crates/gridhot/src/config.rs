//! Pipeline configuration: one JSON file, overridable by CLI flags.

use crate::detect::DetectionParams;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::sim::Mechanism;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationConfig {
    /// Levels carried into the metrics and simulation stages.
    #[serde(default = "default_levels_kept")]
    pub levels_kept: usize,
}

fn default_levels_kept() -> usize {
    4
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            levels_kept: default_levels_kept(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_r_step")]
    pub r_step: f64,
    #[serde(default = "default_d_counts")]
    pub d_counts: Vec<f64>,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
}

fn default_k_max() -> usize {
    20
}
fn default_r_max() -> f64 {
    2000.0
}
fn default_r_step() -> f64 {
    50.0
}
fn default_d_counts() -> Vec<f64> {
    vec![500.0, 1000.0, 2000.0]
}
fn default_n_runs() -> usize {
    100
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            k_max: default_k_max(),
            r_max: default_r_max(),
            r_step: default_r_step(),
            d_counts: default_d_counts(),
            n_runs: default_n_runs(),
        }
    }
}

impl MetricsConfig {
    /// Radius grid 0, r_step, ..., r_max.
    pub fn radii(&self) -> Vec<f64> {
        let n = (self.r_max / self.r_step).floor() as usize;
        (0..=n).map(|i| i as f64 * self.r_step).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<Mechanism>,
    #[serde(default = "default_k_nearest")]
    pub k_nearest: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_d_cut")]
    pub d_cut: f64,
    /// Exclusion half-width; defaults to the detection radius when absent.
    #[serde(default)]
    pub x_radius_cells: Option<usize>,
    #[serde(default = "default_d_rmse_grid")]
    pub d_rmse_grid: Vec<f64>,
    #[serde(default = "default_n_sims")]
    pub n_sims: usize,
}

fn default_mechanisms() -> Vec<Mechanism> {
    Mechanism::ALL.to_vec()
}
fn default_k_nearest() -> usize {
    3
}
fn default_alpha() -> f64 {
    1.0
}
fn default_d_cut() -> f64 {
    1000.0
}
fn default_d_rmse_grid() -> Vec<f64> {
    vec![250.0, 500.0, 1000.0]
}
fn default_n_sims() -> usize {
    100
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            mechanisms: default_mechanisms(),
            k_nearest: default_k_nearest(),
            alpha: default_alpha(),
            d_cut: default_d_cut(),
            x_radius_cells: None,
            d_rmse_grid: default_d_rmse_grid(),
            n_sims: default_n_sims(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default)]
    pub classification: ClassificationConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    /// Chebyshev dilation applied when rasterizing GeoJSON roads.
    #[serde(default)]
    pub road_buffer_cells: usize,
    /// Mandatory: there is no wall-clock fallback.
    pub master_seed: u64,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))?;
        config.grid.validate()?;
        Ok(config)
    }

    pub fn with_grid_and_seed(grid: GridSpec, master_seed: u64) -> Self {
        PipelineConfig {
            grid,
            detection: DetectionParams::default(),
            classification: ClassificationConfig::default(),
            metrics: MetricsConfig::default(),
            simulation: SimulationConfig::default(),
            road_buffer_cells: 0,
            master_seed,
        }
    }
}
