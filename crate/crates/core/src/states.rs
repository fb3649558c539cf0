//! Product initial states and their diagonal-ensemble description.

use std::f64::consts::{PI, TAU};

use faer::c64;
use serde::Serialize;

use crate::eigensolve::Spectrum;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{BasisIndex, HermitianOperator, MAX_SITES};

/// Slack allowed on `Σ w_n = 1` and on state norms.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Bloch angles of the single-site state repeated on every site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductStateParams {
    theta: f64,
    phi: f64,
    n: usize,
}

impl ProductStateParams {
    /// `theta` must lie in `[0, π]`; `phi` is reduced into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64, n: usize) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("theta = {theta} outside [0, π]")));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi must be finite"));
        }
        if n == 0 || n > MAX_SITES {
            return Err(Error::invalid(format!("invalid site count {n}")));
        }
        Ok(ProductStateParams {
            theta,
            phi: phi.rem_euclid(TAU),
            n,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Normalized state in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<c64>);

impl StateVector {
    pub fn new(amplitudes: Vec<c64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("state has norm {norm}")));
        }
        Ok(StateVector(amplitudes))
    }

    /// The computational basis state `|code>`.
    pub fn basis(dim: usize, code: BasisIndex) -> Result<Self> {
        if code.0 >= dim {
            return Err(Error::invalid(format!("code {} outside dimension {dim}", code.0)));
        }
        let mut v = vec![c64::new(0.0, 0.0); dim];
        v[code.0] = c64::new(1.0, 0.0);
        Ok(StateVector(v))
    }

    /// Eigenvector `n` of `spectrum`.
    pub fn eigenstate(spectrum: &Spectrum, n: usize) -> Result<Self> {
        if n >= spectrum.dim() {
            return Err(Error::invalid(format!("eigenstate index {n} out of range")));
        }
        Ok(StateVector(spectrum.eigenvector(n)))
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<c64> {
        self.0
    }
}

/// `⊗_j (cos(θ/2)|↑> + e^{-iφ} sin(θ/2)|↓>)`.
pub fn product_state(params: &ProductStateParams) -> StateVector {
    let n = params.n;
    let up = (params.theta / 2.0).cos();
    let down = c64::from_polar((params.theta / 2.0).sin(), -params.phi);
    let up_pow: Vec<f64> = (0..=n).map(|k| up.powi(k as i32)).collect();
    let down_pow: Vec<c64> = (0..=n).map(|k| down.powi(k as i32)).collect();
    StateVector(
        (0..1usize << n)
            .map(|code| {
                let k = BasisIndex(code).down_count() as usize;
                down_pow[k] * up_pow[n - k]
            })
            .collect(),
    )
}

/// `c_n = <E_n|ψ>`.
pub fn overlap_coefficients(psi: &StateVector, spectrum: &Spectrum) -> Result<Vec<c64>> {
    spectrum.to_energy_basis(psi.amplitudes())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid("weights must be non-negative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// `1 / Σ_n w_n²`, the inverse participation ratio of the energy weights.
pub fn effective_dimension(weights: &[f64]) -> Result<f64> {
    check_weights(weights)?;
    Ok(1.0 / weights.iter().map(|w| w * w).sum::<f64>())
}

/// `(<ψ|H|ψ> − E_min) / (E_max − E_min)`, evaluated by applying `H`.
pub fn normalized_energy(
    psi: &StateVector,
    h: &HermitianOperator,
    spectrum: &Spectrum,
) -> Result<f64> {
    check_dim(spectrum.dim(), h.dim())?;
    let energy = h.expectation(psi.amplitudes())?.re;
    scale_energy(energy, spectrum)
}

pub(crate) fn scale_energy(energy: f64, spectrum: &Spectrum) -> Result<f64> {
    let width = spectrum.width();
    if !(width > 0.0) {
        return Err(Error::ZeroSpectralWidth);
    }
    Ok(((energy - spectrum.min_energy()) / width).clamp(0.0, 1.0))
}

/// `Σ_n w_n A_nn`, the diagonal-ensemble (infinite-time) average.
pub fn diagonal_average(weights: &[f64], a_diag_energy: &[f64]) -> Result<f64> {
    check_dim(weights.len(), a_diag_energy.len())?;
    Ok(weights.iter().zip(a_diag_energy).map(|(w, a)| w * a).sum())
}

/// Energy-basis description of an initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapProfile {
    pub coefficients: Vec<c64>,
    pub weights: Vec<f64>,
    pub d_eff: f64,
    pub mean_energy: f64,
    pub energy_variance: f64,
    pub normalized_energy: f64,
}

impl OverlapProfile {
    pub fn new(psi: &StateVector, spectrum: &Spectrum) -> Result<Self> {
        let coefficients = overlap_coefficients(psi, spectrum)?;
        let weights: Vec<f64> = coefficients.iter().map(|c| c.norm_sqr()).collect();
        let d_eff = effective_dimension(&weights)?;
        let e = spectrum.eigenvalues();
        let mean_energy: f64 = weights.iter().zip(e).map(|(w, e)| w * e).sum();
        let second: f64 = weights.iter().zip(e).map(|(w, e)| w * e * e).sum();
        Ok(OverlapProfile {
            d_eff,
            mean_energy,
            energy_variance: (second - mean_energy * mean_energy).max(0.0),
            normalized_energy: scale_energy(mean_energy, spectrum)?,
            coefficients,
            weights,
        })
    }

    /// `1 / Tr(ρ̄²)` with `ρ̄` the diagonal ensemble; same as `d_eff`.
    pub fn purity(&self) -> f64 {
        1.0 / self.d_eff
    }
}
