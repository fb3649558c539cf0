//! Parameter sweeps over initial states and system sizes, and the
//! exponential fit `d_eff ~ e^{βN}`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{exact_fluctuation, EnergyMatrix};
use crate::eigensolve::{cache, diagonalize, Spectrum};
use crate::error::{Error, Result};
use crate::hilbert::{build_hamiltonian, Boundary, ChainSpec, HermitianOperator};
use crate::states::{product_state, OverlapProfile, ProductStateParams};

/// Default system sizes for exponent fits.
pub const DEFAULT_N_RANGE: std::ops::RangeInclusive<usize> = 6..=13;

/// Default heatmap resolution per axis.
pub const DEFAULT_GRID_POINTS: usize = 64;

/// Hamiltonian and its eigendecomposition for one chain.
#[derive(Debug)]
pub struct Model {
    pub spec: ChainSpec,
    pub hamiltonian: HermitianOperator,
    pub spectrum: Spectrum,
}

impl Model {
    pub fn build(spec: ChainSpec) -> Result<Self> {
        let hamiltonian = build_hamiltonian(&spec)?;
        let spectrum = diagonalize(&hamiltonian)?;
        Ok(Model {
            spec,
            hamiltonian,
            spectrum,
        })
    }

    /// Loads the spectrum from `dir` when present, otherwise computes and
    /// stores it. Returns whether the spectrum came from disk.
    pub fn load_or_build(spec: ChainSpec, dir: Option<&Path>) -> Result<(Self, bool)> {
        let Some(dir) = dir else {
            return Ok((Self::build(spec)?, false));
        };
        let path = cache::cache_path(dir, &spec);
        let hamiltonian = build_hamiltonian(&spec)?;
        if path.exists() {
            match cache::load(&path, &spec) {
                Ok(spectrum) => {
                    return Ok((
                        Model {
                            spec,
                            hamiltonian,
                            spectrum,
                        },
                        true,
                    ))
                }
                Err(e) => log::warn!("ignoring cache file {}: {e}", path.display()),
            }
        }
        let spectrum = diagonalize(&hamiltonian)?;
        cache::save(&path, &spec, &spectrum)?;
        Ok((
            Model {
                spec,
                hamiltonian,
                spectrum,
            },
            false,
        ))
    }

    pub fn profile(&self, theta: f64, phi: f64) -> Result<OverlapProfile> {
        let params = ProductStateParams::new(theta, phi, self.spec.n)?;
        OverlapProfile::new(&product_state(&params), &self.spectrum)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct ModelKey {
    n: usize,
    j: u64,
    g: u64,
    boundary: Boundary,
}

impl From<&ChainSpec> for ModelKey {
    fn from(s: &ChainSpec) -> Self {
        ModelKey {
            n: s.n,
            j: s.j.to_bits(),
            g: s.g.to_bits(),
            boundary: s.boundary,
        }
    }
}

type Slot = Arc<Mutex<Option<Arc<Model>>>>;

/// Shares one diagonalization per chain across sweeps, optionally backed by
/// the on-disk spectrum cache.
#[derive(Debug, Default)]
pub struct ModelCache {
    dir: Option<PathBuf>,
    slots: Mutex<HashMap<ModelKey, Slot>>,
}

impl ModelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        ModelCache {
            dir: Some(dir.into()),
            slots: Mutex::default(),
        }
    }

    pub fn get(&self, spec: &ChainSpec) -> Result<Arc<Model>> {
        let slot = self
            .slots
            .lock()
            .unwrap()
            .entry(spec.into())
            .or_default()
            .clone();
        let mut guard = slot.lock().unwrap();
        if let Some(model) = guard.as_ref() {
            return Ok(model.clone());
        }
        let (model, _) = Model::load_or_build(*spec, self.dir.as_deref())?;
        let model = Arc::new(model);
        *guard = Some(model.clone());
        Ok(model)
    }
}

/// `k` points spanning `[0, π]` inclusive.
pub fn theta_grid(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![PI / 2.0],
        _ => (0..k).map(|i| PI * i as f64 / (k - 1) as f64).collect(),
    }
}

/// `k` points spanning `[0, 2π)`.
pub fn phi_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| TAU * i as f64 / k as f64).collect()
}

/// Maps over a `(θ, φ)` grid; row index is `θ`, column index `φ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub theta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub ne_map: Vec<f64>,
    /// `log₁₀ d_eff`.
    pub log_deff_map: Vec<f64>,
    /// Exact infinite-time fluctuation, when an observable was supplied.
    pub fluctuation_map: Option<Vec<f64>>,
}

impl SweepResult {
    fn index(&self, i: usize, j: usize) -> usize {
        i * self.phi_grid.len() + j
    }

    pub fn ne(&self, i: usize, j: usize) -> f64 {
        self.ne_map[self.index(i, j)]
    }

    pub fn log_deff(&self, i: usize, j: usize) -> f64 {
        self.log_deff_map[self.index(i, j)]
    }

    pub fn fluctuation(&self, i: usize, j: usize) -> Option<f64> {
        self.fluctuation_map.as_ref().map(|f| f[self.index(i, j)])
    }

    /// `theta,phi,NE,log10_deff` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,phi,NE,log10_deff")?;
        for (i, t) in self.theta_grid.iter().enumerate() {
            for (j, p) in self.phi_grid.iter().enumerate() {
                writeln!(w, "{t},{p},{},{}", self.ne(i, j), self.log_deff(i, j))?;
            }
        }
        Ok(())
    }

    /// `theta,phi,exact_fluctuation` rows, if computed.
    pub fn write_fluctuation_csv<W: Write>(&self, mut w: W) -> std::io::Result<bool> {
        if self.fluctuation_map.is_none() {
            return Ok(false);
        }
        writeln!(w, "theta,phi,exact_fluctuation")?;
        for (i, t) in self.theta_grid.iter().enumerate() {
            for (j, p) in self.phi_grid.iter().enumerate() {
                writeln!(w, "{t},{p},{}", self.fluctuation(i, j).unwrap())?;
            }
        }
        Ok(true)
    }
}

/// Normalized energy and effective dimension over a `(θ, φ)` grid, reusing
/// one diagonalization for every point.
pub fn sweep_grid(
    model: &Model,
    theta_grid: &[f64],
    phi_grid: &[f64],
    observable: Option<&EnergyMatrix>,
) -> Result<SweepResult> {
    let points: Vec<(f64, f64)> = theta_grid
        .iter()
        .flat_map(|&t| phi_grid.iter().map(move |&p| (t, p)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(theta, phi)| {
            let p = model.profile(theta, phi)?;
            let fluct = observable
                .map(|em| exact_fluctuation(&p.weights, em))
                .transpose()?;
            Ok((p.normalized_energy, p.d_eff.log10(), fluct))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult {
        n: model.spec.n,
        theta_grid: theta_grid.to_vec(),
        phi_grid: phi_grid.to_vec(),
        ne_map: Vec::with_capacity(rows.len()),
        log_deff_map: Vec::with_capacity(rows.len()),
        fluctuation_map: observable.map(|_| Vec::with_capacity(rows.len())),
    };
    for (ne, ld, fl) in rows {
        result.ne_map.push(ne);
        result.log_deff_map.push(ld);
        if let (Some(map), Some(v)) = (result.fluctuation_map.as_mut(), fl) {
            map.push(v);
        }
    }
    Ok(result)
}

/// Ordinary least-squares fit of `ln d_eff = intercept + β N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub beta: f64,
    pub intercept: f64,
    pub beta_stderr: f64,
    /// `σ̂² (XᵀX)⁻¹` in the order `(β, intercept)`.
    pub covariance: [[f64; 2]; 2],
    /// `None` when `ln d_eff` has no variance.
    pub r_squared: Option<f64>,
    pub n_values: Vec<usize>,
}

pub fn fit_exponent(n_values: &[usize], deff_values: &[f64]) -> Result<ScalingFit> {
    if n_values.len() != deff_values.len() {
        return Err(Error::DimensionMismatch {
            expected: n_values.len(),
            found: deff_values.len(),
        });
    }
    let k = n_values.len();
    if k < 3 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs at least 3 points, got {k}"
        )));
    }
    if let Some(bad) = deff_values.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(Error::invalid(format!("non-positive effective dimension {bad}")));
    }
    let x: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = deff_values.iter().map(|d| d.ln()).collect();
    let kf = k as f64;
    let x_mean = x.iter().sum::<f64>() / kf;
    let y_mean = y.iter().sum::<f64>() / kf;
    let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all system sizes are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - x_mean) * (b - y_mean)).sum();
    let beta = sxy / sxx;
    let intercept = y_mean - beta * x_mean;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - beta * a).powi(2))
        .sum();
    let sst: f64 = y.iter().map(|b| (b - y_mean).powi(2)).sum();
    let sigma2 = sse / (kf - 2.0);
    let sum_x2: f64 = x.iter().map(|v| v * v).sum();
    // (XᵀX)⁻¹ with det = k · Sxx
    let det = kf * sxx;
    let var_beta = sigma2 * kf / det;
    let var_icpt = sigma2 * sum_x2 / det;
    let cov = -sigma2 * (kf * x_mean) / det;
    let r_squared = if sst > 1e-300 {
        Some((1.0 - sse / sst).clamp(0.0, 1.0))
    } else {
        None
    };
    Ok(ScalingFit {
        beta,
        intercept,
        beta_stderr: var_beta.sqrt(),
        covariance: [[var_beta, cov], [cov, var_icpt]],
        r_squared,
        n_values: n_values.to_vec(),
    })
}

/// `d_eff` of one product state across system sizes.
pub fn deff_series(
    models: &ModelCache,
    template: &ChainSpec,
    theta: f64,
    phi: f64,
    n_values: &[usize],
) -> Result<Vec<f64>> {
    n_values
        .iter()
        .map(|&n| Ok(models.get(&template.with_sites(n)?)?.profile(theta, phi)?.d_eff))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaPoint {
    pub phi: f64,
    /// `d_eff` for each size in `fit.n_values`.
    pub deff: Vec<f64>,
    pub fit: ScalingFit,
}

/// One exponent fit per `φ` at fixed `θ`, ordered as `phi_grid`.
pub fn beta_curve(
    models: &ModelCache,
    template: &ChainSpec,
    theta: f64,
    phi_grid: &[f64],
    n_values: &[usize],
) -> Result<Vec<BetaPoint>> {
    let mut table = vec![Vec::with_capacity(n_values.len()); phi_grid.len()];
    for &n in n_values {
        let model = models.get(&template.with_sites(n)?)?;
        let column = phi_grid
            .par_iter()
            .map(|&phi| Ok(model.profile(theta, phi)?.d_eff))
            .collect::<Result<Vec<_>>>()?;
        for (row, d) in table.iter_mut().zip(column) {
            row.push(d);
        }
    }
    phi_grid
        .iter()
        .zip(table)
        .map(|(&phi, deff)| {
            Ok(BetaPoint {
                phi,
                fit: fit_exponent(n_values, &deff)?,
                deff,
            })
        })
        .collect()
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            out[k] = rank;
        }
        i = j;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("rank correlation needs 2 points".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("constant input has no rank correlation".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
