//! Unitary evolution of observable expectations, finite-time averages, the
//! exact infinite-time fluctuation and the effective-dimension bound.
//!
//! With `c_n = <E_n|ψ₀>` the state at time `t` is `Σ_n c_n e^{-iE_n t}|E_n>`.
//! For a spectrum without degenerate gaps the time average of
//! `(<A(t)> − <A>‾)²` is `Σ_{n≠m} w_n w_m |A_nm|²` with `w_n = |c_n|²`, which
//! never exceeds `‖A‖² / d_eff`.

use std::io::Write;

use faer::{c64, get_global_parallelism, Accum, Mat};
use faer::linalg::matmul::matmul;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigensolve::{EigenBasis, Spectrum};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{HermitianOperator, Storage};
use crate::states::NORMALIZATION_TOL;

/// Largest dimension for which the dense energy-basis observable is built.
pub const ENERGY_MATRIX_MAX_DIM: usize = 4096;

/// Default time grid: `[0, 40]` in steps of `0.05` (units of `1/J`).
pub const DEFAULT_T_MAX: f64 = 40.0;
pub const DEFAULT_DT: f64 = 0.05;

const TIME_BLOCK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeTrace {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_dim(times.len(), values.len())?;
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        Ok(TimeTrace { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t,value` rows, shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Uniform grid `0, dt, 2dt, …` up to and including `t_max` (within `dt/2`).
pub fn uniform_times(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::invalid("time grid needs dt > 0 and finite t_max >= 0"));
    }
    let steps = (t_max / dt + 0.5).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

/// Upper bound on `‖A‖` that is cheap to evaluate: exact for diagonal
/// storage, Frobenius norm otherwise.
fn norm_bound(a: &HermitianOperator) -> f64 {
    match a.as_diagonal() {
        Some(d) => d.iter().fold(0.0, |m, v| m.max(v.abs())),
        None => a.frobenius_norm(),
    }
}

/// `ψ(t) = Σ_n c_n e^{-iE_n t} |E_n>`.
pub fn evolve_state(c: &[c64], spectrum: &Spectrum, t: f64) -> Result<Vec<c64>> {
    check_dim(spectrum.dim(), c.len())?;
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    let phased: Vec<c64> = c
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(c, e)| c * c64::from_polar(1.0, -e * t))
        .collect();
    spectrum.from_energy_basis(&phased)
}

/// `<ψ(t)|A|ψ(t)>` on a time grid.
///
/// Times are processed in blocks; each block is one product of the
/// eigenvector matrix with the phased coefficients.
pub fn evolve_expectation(
    c: &[c64],
    spectrum: &Spectrum,
    a: &HermitianOperator,
    times: &[f64],
) -> Result<TimeTrace> {
    let d = spectrum.dim();
    check_dim(d, c.len())?;
    check_dim(d, a.dim())?;
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("times must be finite"));
    }
    let tol = 1e-10 * norm_bound(a).max(1.0);
    let blocks: Vec<Result<Vec<f64>>> = times
        .par_chunks(TIME_BLOCK)
        .map(|block| {
            let coeffs = Mat::from_fn(d, block.len(), |n, k| {
                c[n] * c64::from_polar(1.0, -spectrum.eigenvalues()[n] * block[k])
            });
            let states = spectrum.from_energy_basis_batch(&coeffs)?;
            (0..block.len())
                .map(|k| {
                    let z = a.expectation(states.col_as_slice(k))?;
                    if z.im.abs() > tol {
                        return Err(Error::invalid(format!(
                            "expectation has imaginary part {:e}; observable not Hermitian?",
                            z.im
                        )));
                    }
                    Ok(z.re)
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(times.len());
    for block in blocks {
        values.extend(block?);
    }
    TimeTrace::new(times.to_vec(), values)
}

fn trapezoid(times: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..times.len())
        .map(|k| 0.5 * (times[k] - times[k - 1]) * (f(k) + f(k - 1)))
        .sum()
}

/// Trapezoidal estimate of `(1/T) ∫ <A(t)> dt` over the sampled window.
pub fn time_average(trace: &TimeTrace) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::InsufficientData(
            "time average needs at least two samples".into(),
        ));
    }
    let span = trace.times[trace.len() - 1] - trace.times[0];
    Ok(trapezoid(&trace.times, |k| trace.values[k]) / span)
}

/// Trapezoidal `(1/T) ∫ (<A(t)> − mean)² dt`, with `mean` the window average.
pub fn time_variance(trace: &TimeTrace) -> Result<f64> {
    let mean = time_average(trace)?;
    let span = trace.times[trace.len() - 1] - trace.times[0];
    Ok(trapezoid(&trace.times, |k| (trace.values[k] - mean).powi(2)) / span)
}

/// `|A_nm|²` and `A_nn` of an observable in the energy eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMatrix {
    diag: Vec<f64>,
    abs_sq: Mat<f64>,
}

impl EnergyMatrix {
    /// `V† A V` for the eigenbasis of `spectrum`.
    pub fn new(spectrum: &Spectrum, a: &HermitianOperator) -> Result<Self> {
        let d = spectrum.dim();
        check_dim(d, a.dim())?;
        if d > ENERGY_MATRIX_MAX_DIM {
            return Err(Error::CapabilityExceeded {
                operation: "energy-basis observable",
                dimension: d,
                limit: ENERGY_MATRIX_MAX_DIM,
            });
        }
        let par = get_global_parallelism();
        match spectrum.basis() {
            EigenBasis::Gauged { phases, vectors } => {
                let entries: Vec<(usize, usize, c64)> = a
                    .entries()
                    .into_iter()
                    .map(|(r, c, v)| (r, c, phases[r].conj() * v * phases[c]))
                    .collect();
                let scale = a.max_abs().max(f64::MIN_POSITIVE);
                if entries.iter().all(|(_, _, v)| v.im.abs() <= 1e-14 * scale) {
                    let av = real_product(a, &entries, vectors);
                    let mut m = Mat::<f64>::zeros(d, d);
                    matmul(&mut m, Accum::Replace, vectors.transpose(), &av, 1.0, par);
                    drop(av);
                    let diag = (0..d).map(|n| m[(n, n)]).collect();
                    for n in 0..d {
                        for x in m.col_as_slice_mut(n) {
                            *x *= *x;
                        }
                    }
                    return Ok(EnergyMatrix { diag, abs_sq: m });
                }
            }
            EigenBasis::Complex(_) => {}
        }
        let v = spectrum.dense_eigenvectors();
        let av = match a.storage() {
            Storage::Diagonal(diag) => Mat::from_fn(d, d, |r, n| v[(r, n)] * diag[r]),
            Storage::Dense(m) => {
                let mut out = Mat::<c64>::zeros(d, d);
                matmul(&mut out, Accum::Replace, m, &v, c64::new(1.0, 0.0), par);
                out
            }
            Storage::Sparse(_) => {
                let mut out = Mat::<c64>::zeros(d, d);
                for (r, c, x) in a.entries() {
                    for n in 0..d {
                        out[(r, n)] += x * v[(c, n)];
                    }
                }
                out
            }
        };
        let mut m = Mat::<c64>::zeros(d, d);
        matmul(&mut m, Accum::Replace, v.adjoint(), &av, c64::new(1.0, 0.0), par);
        Self::from_dense(&m)
    }

    /// From an operator already expressed in the energy basis.
    pub fn from_dense(m: &Mat<c64>) -> Result<Self> {
        let d = m.nrows();
        check_dim(d, m.ncols())?;
        Ok(EnergyMatrix {
            diag: (0..d).map(|n| m[(n, n)].re).collect(),
            abs_sq: Mat::from_fn(d, d, |i, j| m[(i, j)].norm_sqr()),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `A_nn`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `|A_nm|²`.
    pub fn abs_sq(&self, n: usize, m: usize) -> f64 {
        self.abs_sq[(n, m)]
    }

    /// Column `m` of `|A_nm|²` (symmetric, so also row `m`).
    pub fn abs_sq_col(&self, m: usize) -> &[f64] {
        self.abs_sq.col_as_slice(m)
    }
}

/// `A' W` for a real gauge-frame observable `A'`.
fn real_product(a: &HermitianOperator, entries: &[(usize, usize, c64)], w: &Mat<f64>) -> Mat<f64> {
    let d = w.nrows();
    match a.storage() {
        Storage::Diagonal(diag) => Mat::from_fn(d, d, |r, n| w[(r, n)] * diag[r]),
        _ => {
            let mut out = Mat::<f64>::zeros(d, d);
            for n in 0..d {
                let col = w.col_as_slice(n).to_vec();
                let dst = out.col_as_slice_mut(n);
                for &(r, c, x) in entries {
                    dst[r] += x.re * col[c];
                }
            }
            out
        }
    }
}

/// `Σ_{n≠m} w_n w_m |A_nm|²`: the infinite-time average of
/// `(<A(t)> − <A>‾)²` when no gaps are degenerate.
pub fn exact_fluctuation(weights: &[f64], a_energy: &EnergyMatrix) -> Result<f64> {
    let d = a_energy.dim();
    check_dim(d, weights.len())?;
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    // Column terms are summed in index order so the result is bitwise
    // reproducible regardless of thread scheduling.
    let terms: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|m| {
            if weights[m] == 0.0 {
                return 0.0;
            }
            let col = a_energy.abs_sq_col(m);
            let row: f64 = weights.iter().zip(col).map(|(w, s)| w * s).sum();
            weights[m] * (row - weights[m] * col[m])
        })
        .collect();
    Ok(terms.iter().sum::<f64>().max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub exact_variance: Option<f64>,
    /// `‖A‖² / d_eff`.
    pub bound: f64,
    pub d_eff: f64,
    /// Spectral norm `‖A‖`.
    pub operator_norm: f64,
}

impl FluctuationReport {
    pub fn with_exact(mut self, variance: f64) -> Self {
        self.exact_variance = Some(variance);
        self
    }

    /// `‖A‖ / d_eff`, the unsquared variant.
    pub fn linear_norm_bound(&self) -> f64 {
        self.operator_norm / self.d_eff
    }

    /// `None` until an exact variance has been attached.
    pub fn bound_holds(&self) -> Option<bool> {
        self.exact_variance.map(|v| v <= self.bound)
    }
}

/// `‖A‖² / d_eff` with `‖A‖` the spectral norm.
pub fn fluctuation_bound(a: &HermitianOperator, d_eff: f64) -> Result<FluctuationReport> {
    if !(d_eff >= 1.0) {
        return Err(Error::invalid(format!("d_eff = {d_eff} below 1")));
    }
    let operator_norm = a.spectral_norm()?;
    Ok(FluctuationReport {
        exact_variance: None,
        bound: operator_norm * operator_norm / d_eff,
        d_eff,
        operator_norm,
    })
}
