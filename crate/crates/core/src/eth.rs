//! Eigenstate-thermalization diagnostics: eigenstate expectation values,
//! microcanonical averages, binned off-diagonal statistics and a symmetry
//! certificate for observables whose diagonal must vanish.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::EnergyMatrix;
use crate::eigensolve::{Spectrum, DEGENERACY_TOL};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{HermitianOperator, SignedPermutation};

/// Default shell half-width as a fraction of the spectral width.
pub const DEFAULT_SHELL_FRACTION: f64 = 0.05;

/// Default off-diagonal bin width, in units of `J`.
pub const DEFAULT_BIN_WIDTH: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenExpectations {
    pub energies: Vec<f64>,
    pub diag_values: Vec<f64>,
    /// `(E_n − E_min) / (E_max − E_min)`.
    pub normalized_energies: Vec<f64>,
}

impl EigenExpectations {
    /// `E,NE,A_nn` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "E,NE,A_nn")?;
        for ((e, ne), a) in self
            .energies
            .iter()
            .zip(&self.normalized_energies)
            .zip(&self.diag_values)
        {
            writeln!(w, "{e},{ne},{a}")?;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.diag_values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `<E_n|A|E_n>` for every eigenstate.
pub fn eigenstate_expectations(
    spectrum: &Spectrum,
    a: &HermitianOperator,
) -> Result<EigenExpectations> {
    check_dim(spectrum.dim(), a.dim())?;
    let diag_values = match a.as_diagonal() {
        Some(d) => spectrum.diagonal_expectations(d)?,
        None => (0..spectrum.dim())
            .into_par_iter()
            .map(|n| Ok(a.expectation(&spectrum.eigenvector(n))?.re))
            .collect::<Result<Vec<_>>>()?,
    };
    let (lo, width) = (spectrum.min_energy(), spectrum.width());
    let normalized_energies = spectrum
        .eigenvalues()
        .iter()
        .map(|e| if width > 0.0 { ((e - lo) / width).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    Ok(EigenExpectations {
        energies: spectrum.eigenvalues().to_vec(),
        diag_values,
        normalized_energies,
    })
}

/// Energy window `[E₀ − ΔE, E₀ + ΔE]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MicrocanonicalShell {
    pub center_energy: f64,
    pub half_width: f64,
    pub member_count: usize,
}

impl MicrocanonicalShell {
    pub fn new(energies: &[f64], center_energy: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center_energy.is_finite() {
            return Err(Error::invalid("shell needs a finite center and positive half-width"));
        }
        let member_count = energies
            .iter()
            .filter(|e| (*e - center_energy).abs() <= half_width)
            .count();
        Ok(MicrocanonicalShell {
            center_energy,
            half_width,
            member_count,
        })
    }

    /// Shell of half-width `0.05 · (E_max − E_min)`.
    pub fn with_default_width(spectrum: &Spectrum, center_energy: f64) -> Result<Self> {
        Self::new(
            spectrum.eigenvalues(),
            center_energy,
            DEFAULT_SHELL_FRACTION * spectrum.width(),
        )
    }

    pub fn contains(&self, energy: f64) -> bool {
        (energy - self.center_energy).abs() <= self.half_width
    }
}

/// Unweighted mean of `A_nn` over the eigenstates inside the shell.
pub fn microcanonical_average(
    expect: &EigenExpectations,
    shell: &MicrocanonicalShell,
) -> Result<f64> {
    let (sum, count) = expect
        .energies
        .iter()
        .zip(&expect.diag_values)
        .filter(|(e, _)| shell.contains(**e))
        .fold((0.0, 0usize), |(s, c), (_, a)| (s + a, c + 1));
    if count == 0 {
        return Err(Error::EmptyShell {
            low: shell.center_energy - shell.half_width,
            high: shell.center_energy + shell.half_width,
        });
    }
    Ok(sum / count as f64)
}

/// `⟨|A_nm|²⟩` binned by `ω = |E_n − E_m|`; only non-empty bins are listed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffDiagProfile {
    /// Bin centers.
    pub omega_bins: Vec<f64>,
    pub mean_sq_magnitude: Vec<f64>,
    pub counts: Vec<u64>,
    pub bin_width: f64,
}

impl OffDiagProfile {
    /// `omega,mean_sq,count` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega,mean_sq,count")?;
        for ((o, m), c) in self.omega_bins.iter().zip(&self.mean_sq_magnitude).zip(&self.counts) {
            writeln!(w, "{o},{m},{c}")?;
        }
        Ok(())
    }
}

/// Off-diagonal statistics for pairs `n < m` with `(E_n + E_m)/2` inside
/// `energy_window`.
pub fn offdiagonal_stats(
    spectrum: &Spectrum,
    a: &HermitianOperator,
    energy_window: (f64, f64),
    bin_width: f64,
) -> Result<OffDiagProfile> {
    let em = EnergyMatrix::new(spectrum, a)?;
    offdiagonal_stats_from(spectrum, &em, energy_window, bin_width)
}

/// As [`offdiagonal_stats`], reusing a precomputed energy-basis observable.
pub fn offdiagonal_stats_from(
    spectrum: &Spectrum,
    em: &EnergyMatrix,
    energy_window: (f64, f64),
    bin_width: f64,
) -> Result<OffDiagProfile> {
    check_dim(spectrum.dim(), em.dim())?;
    let (low, high) = energy_window;
    if !(low <= high) || !(bin_width > 0.0) {
        return Err(Error::invalid("need low <= high and a positive bin width"));
    }
    let e = spectrum.eigenvalues();
    let columns: Vec<BTreeMap<usize, (f64, u64)>> = (0..e.len())
        .into_par_iter()
        .map(|m| {
            let mut acc = BTreeMap::new();
            let col = em.abs_sq_col(m);
            for n in 0..m {
                let mid = 0.5 * (e[n] + e[m]);
                if mid < low || mid > high {
                    continue;
                }
                let bin = ((e[m] - e[n]).abs() / bin_width).floor() as usize;
                let slot = acc.entry(bin).or_insert((0.0, 0));
                slot.0 += col[n];
                slot.1 += 1;
            }
            acc
        })
        .collect();
    // Merged in column order for reproducible sums.
    let mut bins = BTreeMap::<usize, (f64, u64)>::new();
    for column in columns {
        for (k, (s, c)) in column {
            let slot = bins.entry(k).or_insert((0.0, 0));
            slot.0 += s;
            slot.1 += c;
        }
    }
    let mut profile = OffDiagProfile {
        omega_bins: Vec::with_capacity(bins.len()),
        mean_sq_magnitude: Vec::with_capacity(bins.len()),
        counts: Vec::with_capacity(bins.len()),
        bin_width,
    };
    for (k, (sum, count)) in bins {
        profile.omega_bins.push((k as f64 + 0.5) * bin_width);
        profile.mean_sq_magnitude.push(sum / count as f64);
        profile.counts.push(count);
    }
    Ok(profile)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullityReport {
    pub tolerance: f64,
    /// `max |R H R† − H|`.
    pub hamiltonian_defect: f64,
    /// `max |R A R† + A|`.
    pub observable_defect: f64,
    /// Levels with another eigenvalue within the degeneracy tolerance.
    pub degenerate_levels: Vec<usize>,
    pub certified: Vec<usize>,
    /// Non-degenerate levels with `|A_nn| > tolerance`.
    pub failures: Vec<usize>,
    pub max_abs_nondegenerate: f64,
}

impl NullityReport {
    pub fn is_certified(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `max |a_rc − sign · b_rc|` over the union of non-zero patterns.
fn max_entry_difference(a: &HermitianOperator, b: &HermitianOperator, sign: f64) -> f64 {
    let from_a = a
        .entries()
        .into_iter()
        .map(|(r, c, v)| (v - b.get(r, c) * sign).norm());
    let from_b = b
        .entries()
        .into_iter()
        .map(|(r, c, v)| (a.get(r, c) - v * sign).norm());
    from_a.chain(from_b).fold(0.0, f64::max)
}

/// Certifies `<E_n|A|E_n> = 0` for non-degenerate levels when a unitary `R`
/// commutes with `H` and anticommutes with `A`: then `R|E_n>` is the same
/// eigenvector up to a phase and `A_nn = −A_nn`.
pub fn certify_nullity(
    h: &HermitianOperator,
    spectrum: &Spectrum,
    r: &SignedPermutation,
    a: &HermitianOperator,
    tol: f64,
) -> Result<NullityReport> {
    check_dim(spectrum.dim(), h.dim())?;
    check_dim(spectrum.dim(), a.dim())?;
    let hamiltonian_defect = max_entry_difference(&r.conjugate(h)?, h, 1.0);
    let observable_defect = max_entry_difference(&r.conjugate(a)?, a, -1.0);
    if hamiltonian_defect > tol || observable_defect > tol {
        return Err(Error::SymmetryViolation {
            hamiltonian_defect,
            observable_defect,
        });
    }
    let expect = eigenstate_expectations(spectrum, a)?;
    let degenerate = spectrum.degenerate_levels(DEGENERACY_TOL);
    let mut report = NullityReport {
        tolerance: tol,
        hamiltonian_defect,
        observable_defect,
        degenerate_levels: Vec::new(),
        certified: Vec::new(),
        failures: Vec::new(),
        max_abs_nondegenerate: 0.0,
    };
    for (n, (&deg, &value)) in degenerate.iter().zip(&expect.diag_values).enumerate() {
        if deg {
            report.degenerate_levels.push(n);
            continue;
        }
        report.max_abs_nondegenerate = report.max_abs_nondegenerate.max(value.abs());
        if value.abs() <= tol {
            report.certified.push(n);
        } else {
            report.failures.push(n);
        }
    }
    Ok(report)
}
