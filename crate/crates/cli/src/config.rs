//! Run configuration: one strictly parsed JSON document per run.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use spinquench::hilbert::{Boundary, ChainSpec};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub spectrum: SpectrumConfig,
    pub evolve: EvolveConfig,
    pub sweep: SweepConfig,
    pub scaling: ScalingConfig,
    pub eth: EthConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub boundary: Boundary,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n: 10,
            j: 1.0,
            g: ChainSpec::REFERENCE_FIELD,
            boundary: Boundary::Periodic,
        }
    }
}

impl ModelConfig {
    pub fn chain(&self) -> spinquench::Result<ChainSpec> {
        ChainSpec::new(self.n, self.j, self.g, self.boundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Total `z` magnetization.
    Mz,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub gap_tolerance: f64,
    pub gap_max_dimension: usize,
    pub gap_samples: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let d = spinquench::eigensolve::GapOptions::default();
        SpectrumConfig {
            gap_tolerance: d.tolerance,
            gap_max_dimension: d.max_dimension,
            gap_samples: d.samples,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub theta: f64,
    pub phi: f64,
    pub t_max: f64,
    pub dt: f64,
    pub observable: Observable,
    /// Start from this eigenvector instead of the product state.
    pub eigenstate_index: Option<usize>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            theta: 0.0,
            phi: 0.0,
            t_max: spinquench::dynamics::DEFAULT_T_MAX,
            dt: spinquench::dynamics::DEFAULT_DT,
            observable: Observable::Mz,
            eigenstate_index: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub theta_points: usize,
    pub phi_points: usize,
    /// Explicit grids override the point counts.
    pub thetas: Option<Vec<f64>>,
    pub phis: Option<Vec<f64>>,
    /// Also write the exact `M_z` fluctuation per grid point.
    pub fluctuations: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            theta_points: spinquench::scaling::DEFAULT_GRID_POINTS,
            phi_points: spinquench::scaling::DEFAULT_GRID_POINTS,
            thetas: None,
            phis: None,
            fluctuations: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub theta: f64,
    pub phi_points: usize,
    pub phis: Option<Vec<f64>>,
    pub n_values: Vec<usize>,
    /// Test mode: replace the physics by `d_eff = e^{βN}` with this `β`.
    pub synthetic_beta: Option<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            theta: FRAC_PI_2,
            phi_points: 16,
            phis: None,
            n_values: spinquench::scaling::DEFAULT_N_RANGE.collect(),
            synthetic_beta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EthConfig {
    pub observable: Observable,
    /// Shell center; the middle of the spectrum when absent.
    pub shell_center: Option<f64>,
    /// Shell half-width; 5% of the spectral width when absent.
    pub shell_half_width: Option<f64>,
    pub offdiag: bool,
    /// Mean-energy window for off-diagonal pairs; the central half of the
    /// spectrum when absent.
    pub offdiag_window: Option<(f64, f64)>,
    pub bin_width: f64,
    pub nullity_tolerance: f64,
}

impl Default for EthConfig {
    fn default() -> Self {
        EthConfig {
            observable: Observable::Mz,
            shell_center: None,
            shell_half_width: None,
            offdiag: false,
            offdiag_window: None,
            bin_width: spinquench::eth::DEFAULT_BIN_WIDTH,
            nullity_tolerance: 1e-8,
        }
    }
}

/// Provenance block written next to every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub command: String,
    pub version: String,
    pub chain: ChainSpec,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

/// `manifest.json`: the resolved configuration plus provenance. It is itself
/// a valid `--config` input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config: RunConfig,
    pub run: RunInfo,
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let is_manifest = value
        .as_object()
        .is_some_and(|o| o.contains_key("config") && o.contains_key("run"));
    let config = if is_manifest {
        serde_json::from_value::<Manifest>(value)?.config
    } else {
        serde_json::from_value::<RunConfig>(value)?
    };
    if config.workers == Some(0) {
        bail!("workers must be at least 1");
    }
    config.model.chain()?;
    Ok(config)
}
