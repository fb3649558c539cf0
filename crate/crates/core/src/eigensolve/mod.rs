//! Dense Hermitian eigendecomposition and spectral diagnostics.
//!
//! Before solving, [`diagonalize`] looks for a diagonal unitary `U` such that
//! `U† H U` is real. Such a gauge exists for the spin-chain Hamiltonian (a
//! `π/2` rotation about `z` on every site maps `σ^y` to `σ^x` and leaves the
//! flip-flop term alone), and the real symmetric solve is several times
//! cheaper than the complex one. The eigenvectors are then stored as
//! `V = U · W` with `W` real orthogonal.

pub mod cache;

use faer::linalg::matmul::matmul;
use faer::{c64, get_global_parallelism, Accum, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{HermitianOperator, Storage, HERMITICITY_TOL};

/// Levels closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Largest relative eigen-residual accepted from the dense solver.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Default dimension up to which gap pairs are enumerated exhaustively.
pub const GAP_EXHAUSTIVE_MAX_DIMENSION: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub enum EigenBasis {
    /// Column `n` is `|E_n>` in the computational basis.
    Complex(Mat<c64>),
    /// `|E_n>_a = phases[a] · vectors[(a, n)]`, with `vectors` real orthogonal.
    Gauged { phases: Vec<c64>, vectors: Mat<f64> },
}

/// Eigenvalues in ascending order and the matching eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    basis: EigenBasis,
    residual: f64,
}

impl Spectrum {
    pub fn from_parts(eigenvalues: Vec<f64>, basis: EigenBasis, residual: f64) -> Result<Self> {
        let dim = eigenvalues.len();
        let (rows, cols) = match &basis {
            EigenBasis::Complex(v) => (v.nrows(), v.ncols()),
            EigenBasis::Gauged { phases, vectors } => {
                check_dim(dim, phases.len())?;
                (vectors.nrows(), vectors.ncols())
            }
        };
        check_dim(dim, rows)?;
        check_dim(dim, cols)?;
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("eigenvalues must be sorted ascending"));
        }
        Ok(Spectrum {
            eigenvalues,
            basis,
            residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest `|H v_n − E_n v_n|_∞` relative to `max |H_ab|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn min_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn width(&self) -> f64 {
        self.max_energy() - self.min_energy()
    }

    /// Component `<a|E_n>`.
    pub fn component(&self, a: usize, n: usize) -> c64 {
        match &self.basis {
            EigenBasis::Complex(v) => v[(a, n)],
            EigenBasis::Gauged { phases, vectors } => phases[a] * vectors[(a, n)],
        }
    }

    pub fn eigenvector(&self, n: usize) -> Vec<c64> {
        (0..self.dim()).map(|a| self.component(a, n)).collect()
    }

    pub fn dense_eigenvectors(&self) -> Mat<c64> {
        match &self.basis {
            EigenBasis::Complex(v) => v.clone(),
            EigenBasis::Gauged { phases, vectors } => {
                Mat::from_fn(self.dim(), self.dim(), |a, n| phases[a] * vectors[(a, n)])
            }
        }
    }

    /// `c_n = <E_n|ψ>`.
    pub fn to_energy_basis(&self, psi: &[c64]) -> Result<Vec<c64>> {
        check_dim(self.dim(), psi.len())?;
        let c = match &self.basis {
            EigenBasis::Complex(v) => (0..self.dim())
                .into_par_iter()
                .map(|n| {
                    v.col_as_slice(n)
                        .iter()
                        .zip(psi)
                        .map(|(e, p)| e.conj() * p)
                        .sum()
                })
                .collect(),
            EigenBasis::Gauged { phases, vectors } => {
                let w: Vec<c64> = phases.iter().zip(psi).map(|(u, p)| u.conj() * p).collect();
                (0..self.dim())
                    .into_par_iter()
                    .map(|n| {
                        let (mut re, mut im) = (0.0, 0.0);
                        for (x, p) in vectors.col_as_slice(n).iter().zip(&w) {
                            re += x * p.re;
                            im += x * p.im;
                        }
                        c64::new(re, im)
                    })
                    .collect()
            }
        };
        Ok(c)
    }

    /// `ψ = Σ_n c_n |E_n>`.
    pub fn from_energy_basis(&self, c: &[c64]) -> Result<Vec<c64>> {
        check_dim(self.dim(), c.len())?;
        let cols = Mat::from_fn(self.dim(), 1, |n, _| c[n]);
        let out = self.from_energy_basis_batch(&cols)?;
        Ok(out.col_as_slice(0).to_vec())
    }

    /// Applies `V` to every column of `coeffs`.
    pub fn from_energy_basis_batch(&self, coeffs: &Mat<c64>) -> Result<Mat<c64>> {
        check_dim(self.dim(), coeffs.nrows())?;
        let par = get_global_parallelism();
        let (d, k) = (self.dim(), coeffs.ncols());
        match &self.basis {
            EigenBasis::Complex(v) => {
                let mut out = Mat::<c64>::zeros(d, k);
                matmul(&mut out, Accum::Replace, v, coeffs, c64::new(1.0, 0.0), par);
                Ok(out)
            }
            EigenBasis::Gauged { phases, vectors } => {
                let re = Mat::from_fn(d, k, |i, j| coeffs[(i, j)].re);
                let im = Mat::from_fn(d, k, |i, j| coeffs[(i, j)].im);
                let mut out_re = Mat::<f64>::zeros(d, k);
                let mut out_im = Mat::<f64>::zeros(d, k);
                matmul(&mut out_re, Accum::Replace, vectors, &re, 1.0, par);
                matmul(&mut out_im, Accum::Replace, vectors, &im, 1.0, par);
                Ok(Mat::from_fn(d, k, |a, j| {
                    phases[a] * c64::new(out_re[(a, j)], out_im[(a, j)])
                }))
            }
        }
    }

    /// `<E_n|A|E_n>` for a diagonal observable, in `O(D^2)`.
    pub fn diagonal_expectations(&self, diag: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), diag.len())?;
        let out = (0..self.dim())
            .into_par_iter()
            .map(|n| match &self.basis {
                EigenBasis::Complex(v) => v
                    .col_as_slice(n)
                    .iter()
                    .zip(diag)
                    .map(|(e, a)| e.norm_sqr() * a)
                    .sum(),
                EigenBasis::Gauged { vectors, .. } => vectors
                    .col_as_slice(n)
                    .iter()
                    .zip(diag)
                    .map(|(e, a)| e * e * a)
                    .sum(),
            })
            .collect();
        Ok(out)
    }

    /// Unordered level pairs `(k, l)` with `|E_k − E_l| <= tol`.
    pub fn degeneracy_count(&self, tol: f64) -> usize {
        count_close_pairs(&self.eigenvalues, tol)
    }

    /// `true` for each level that has another level within `tol`.
    pub fn degenerate_levels(&self, tol: f64) -> Vec<bool> {
        let e = &self.eigenvalues;
        (0..e.len())
            .map(|n| {
                (n > 0 && e[n] - e[n - 1] <= tol) || (n + 1 < e.len() && e[n + 1] - e[n] <= tol)
            })
            .collect()
    }

    /// `max |V†V − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let par = get_global_parallelism();
        let d = self.dim();
        match &self.basis {
            EigenBasis::Complex(v) => {
                let mut g = Mat::<c64>::zeros(d, d);
                matmul(&mut g, Accum::Replace, v.adjoint(), v, c64::new(1.0, 0.0), par);
                max_identity_defect(d, |i, j| g[(i, j)])
            }
            EigenBasis::Gauged { phases, vectors } => {
                let mut g = Mat::<f64>::zeros(d, d);
                matmul(&mut g, Accum::Replace, vectors.transpose(), vectors, 1.0, par);
                let phase_defect = phases.iter().fold(0.0f64, |a, u| a.max((u.norm() - 1.0).abs()));
                max_identity_defect(d, |i, j| c64::new(g[(i, j)], 0.0)).max(phase_defect)
            }
        }
    }

    /// `max |H − V diag(E) V†| / max |H|`.
    pub fn reconstruction_defect(&self, h: &HermitianOperator) -> Result<f64> {
        check_dim(self.dim(), h.dim())?;
        let v = self.dense_eigenvectors();
        let d = self.dim();
        let ve = Mat::from_fn(d, d, |a, n| v[(a, n)] * self.eigenvalues[n]);
        let mut rebuilt = Mat::<c64>::zeros(d, d);
        matmul(
            &mut rebuilt,
            Accum::Replace,
            &ve,
            v.adjoint(),
            c64::new(1.0, 0.0),
            get_global_parallelism(),
        );
        let mut worst: f64 = 0.0;
        for c in 0..d {
            for r in 0..d {
                worst = worst.max((rebuilt[(r, c)] - h.get(r, c)).norm());
            }
        }
        Ok(worst / h.max_abs().max(f64::MIN_POSITIVE))
    }
}

fn max_identity_defect(d: usize, g: impl Fn(usize, usize) -> c64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..d {
        for i in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g(i, j) - c64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Diagonal phases `u` making `conj(u_a) H_ab u_b` real, if they exist.
///
/// Phases are fixed along a breadth-first spanning forest of the non-zero
/// pattern so that tree edges become real positive; every remaining entry is
/// then checked. A real gauge exists iff this check passes.
pub fn real_gauge(dim: usize, entries: &[(usize, usize, c64)], scale: f64) -> Option<Vec<c64>> {
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut adjacency: Vec<Vec<(usize, c64)>> = vec![Vec::new(); dim];
    for &(r, c, v) in entries {
        if r != c && v.norm() > tol {
            adjacency[r].push((c, v));
        }
    }
    let mut phase: Vec<Option<c64>> = vec![None; dim];
    let mut queue = std::collections::VecDeque::new();
    for root in 0..dim {
        if phase[root].is_some() {
            continue;
        }
        phase[root] = Some(c64::new(1.0, 0.0));
        queue.push_back(root);
        while let Some(a) = queue.pop_front() {
            let ua = phase[a].unwrap();
            for &(b, v) in &adjacency[a] {
                if phase[b].is_none() {
                    // conj(u_a) v u_b = |v|
                    phase[b] = Some(ua * v.conj() / v.norm());
                    queue.push_back(b);
                }
            }
        }
    }
    let phases: Vec<c64> = phase.into_iter().map(Option::unwrap).collect();
    let real = entries
        .iter()
        .all(|&(r, c, v)| (phases[r].conj() * v * phases[c]).im.abs() <= tol);
    real.then_some(phases)
}

/// Full eigendecomposition of a Hermitian operator.
///
/// Degenerate levels (within [`DEGENERACY_TOL`]) are logged as a warning;
/// downstream quantities then use the non-degenerate formulas in whatever
/// orthonormal basis the solver returned for each eigenspace.
pub fn diagonalize(h: &HermitianOperator) -> Result<Spectrum> {
    let defect = h.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let dim = h.dim();
    if dim == 0 {
        return Err(Error::invalid("cannot diagonalize an empty operator"));
    }
    if let Some(diag) = h.as_diagonal() {
        let spectrum = diagonal_spectrum(diag);
        warn_if_degenerate(&spectrum);
        return Ok(spectrum);
    }
    let scale = h.max_abs();
    let entries = h.entries();
    let spectrum = match real_gauge(dim, &entries, scale) {
        Some(phases) => {
            let gauged: Vec<(usize, usize, f64)> = entries
                .iter()
                .map(|&(r, c, v)| (r, c, (phases[r].conj() * v * phases[c]).re))
                .collect();
            let mut m = Mat::<f64>::zeros(dim, dim);
            for &(r, c, v) in &gauged {
                m[(r, c)] = v;
            }
            let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::EigenSolver {
                message: format!("{e:?}"),
                residual: f64::NAN,
            })?;
            let eigenvalues: Vec<f64> = evd.S().column_vector().iter().copied().collect();
            let vectors = evd.U().to_owned();
            drop(m);
            let residual = if matches!(h.storage(), Storage::Dense(_)) {
                dense_residual_real(&gauged, dim, &vectors, &eigenvalues)
            } else {
                sparse_residual(
                    &gauged
                        .iter()
                        .map(|&(r, c, v)| (r, c, c64::new(v, 0.0)))
                        .collect::<Vec<_>>(),
                    |a, n| c64::new(vectors[(a, n)], 0.0),
                    &eigenvalues,
                )
            } / scale.max(f64::MIN_POSITIVE);
            Spectrum::from_parts(eigenvalues, EigenBasis::Gauged { phases, vectors }, residual)?
        }
        None => {
            let m = h.to_dense();
            let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::EigenSolver {
                message: format!("{e:?}"),
                residual: f64::NAN,
            })?;
            let eigenvalues: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
            let vectors = evd.U().to_owned();
            let residual = if matches!(h.storage(), Storage::Dense(_)) {
                dense_residual_complex(&m, &vectors, &eigenvalues)
            } else {
                sparse_residual(&entries, |a, n| vectors[(a, n)], &eigenvalues)
            } / scale.max(f64::MIN_POSITIVE);
            Spectrum::from_parts(eigenvalues, EigenBasis::Complex(vectors), residual)?
        }
    };
    if !(spectrum.residual <= RESIDUAL_LIMIT) {
        return Err(Error::EigenSolver {
            message: "eigen-residual above limit".into(),
            residual: spectrum.residual,
        });
    }
    warn_if_degenerate(&spectrum);
    Ok(spectrum)
}

fn warn_if_degenerate(spectrum: &Spectrum) {
    let degenerate = spectrum.degeneracy_count(DEGENERACY_TOL);
    if degenerate > 0 {
        log::warn!(
            "spectrum has {degenerate} degenerate level pairs (tol {DEGENERACY_TOL:e}); \
             non-degenerate formulas are applied in the computed eigenbasis"
        );
    }
}

/// A diagonal operator is already diagonal in the computational basis; its
/// eigenvectors are basis states sorted by value.
fn diagonal_spectrum(diag: &[f64]) -> Spectrum {
    let dim = diag.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let mut vectors = Mat::<f64>::zeros(dim, dim);
    for (n, &a) in order.iter().enumerate() {
        vectors[(a, n)] = 1.0;
    }
    Spectrum {
        eigenvalues: order.iter().map(|&a| diag[a]).collect(),
        basis: EigenBasis::Gauged {
            phases: vec![c64::new(1.0, 0.0); dim],
            vectors,
        },
        residual: 0.0,
    }
}

fn sparse_residual(
    entries: &[(usize, usize, c64)],
    v: impl Fn(usize, usize) -> c64 + Sync,
    eigenvalues: &[f64],
) -> f64 {
    let dim = eigenvalues.len();
    (0..dim)
        .into_par_iter()
        .map(|n| {
            let mut hv: Vec<c64> = (0..dim).map(|a| -v(a, n) * eigenvalues[n]).collect();
            for &(r, c, x) in entries {
                hv[r] += x * v(c, n);
            }
            hv.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
        })
        .reduce(|| 0.0, f64::max)
}

fn dense_residual_real(entries: &[(usize, usize, f64)], dim: usize, v: &Mat<f64>, e: &[f64]) -> f64 {
    let mut m = Mat::<f64>::zeros(dim, dim);
    for &(r, c, x) in entries {
        m[(r, c)] = x;
    }
    let mut hv = Mat::<f64>::zeros(dim, dim);
    matmul(&mut hv, Accum::Replace, &m, v, 1.0, get_global_parallelism());
    let mut worst: f64 = 0.0;
    for n in 0..dim {
        for a in 0..dim {
            worst = worst.max((hv[(a, n)] - v[(a, n)] * e[n]).abs());
        }
    }
    worst
}

fn dense_residual_complex(m: &Mat<c64>, v: &Mat<c64>, e: &[f64]) -> f64 {
    let dim = e.len();
    let mut hv = Mat::<c64>::zeros(dim, dim);
    matmul(&mut hv, Accum::Replace, m, v, c64::new(1.0, 0.0), get_global_parallelism());
    let mut worst: f64 = 0.0;
    for n in 0..dim {
        for a in 0..dim {
            worst = worst.max((hv[(a, n)] - v[(a, n)] * e[n]).norm());
        }
    }
    worst
}

/// Counts unordered pairs in `values` whose difference is at most `tol`.
fn count_close_pairs(values: &[f64], tol: f64) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut hi = 0;
    let mut count = 0;
    for lo in 0..sorted.len() {
        if hi < lo + 1 {
            hi = lo + 1;
        }
        while hi < sorted.len() && sorted[hi] - sorted[lo] <= tol {
            hi += 1;
        }
        count += hi - lo - 1;
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapOptions {
    pub tolerance: f64,
    /// Exhaustive enumeration up to this dimension, sampling above it.
    pub max_dimension: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            tolerance: DEGENERACY_TOL,
            max_dimension: GAP_EXHAUSTIVE_MAX_DIMENSION,
            samples: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapReport {
    /// Unordered level pairs closer than `tolerance`.
    pub degeneracy_count: usize,
    /// Coinciding gap pairs (all of them, or among the sampled ones).
    pub degenerate_gap_count: u64,
    pub tolerance: f64,
    pub pairs_examined: u64,
    pub exhaustive: bool,
}

/// Degeneracies and degenerate gaps.
///
/// A gap is `E_k − E_l` for `k > l` with `E_k − E_l > tol`; zero gaps are
/// degeneracies and are counted separately. Two distinct gaps coincide when
/// they differ by at most `tol`. Restricting to `k > l` with non-zero gaps
/// removes the trivial identifications (`k = m, l = n` and `k = l, m = n`).
pub fn gap_diagnostics(eigenvalues: &[f64], opts: &GapOptions) -> GapReport {
    let tol = opts.tolerance;
    let degeneracy_count = count_close_pairs(eigenvalues, tol);
    let d = eigenvalues.len();
    if d <= opts.max_dimension {
        let mut gaps = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        for k in 0..d {
            for l in 0..k {
                let gap = (eigenvalues[k] - eigenvalues[l]).abs();
                if gap > tol {
                    gaps.push(gap);
                }
            }
        }
        let g = gaps.len() as u64;
        GapReport {
            degeneracy_count,
            degenerate_gap_count: count_close_pairs(&gaps, tol) as u64,
            tolerance: tol,
            pairs_examined: g * g.saturating_sub(1) / 2,
            exhaustive: true,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let pick = |rng: &mut ChaCha8Rng| loop {
            let k = rng.random_range(0..d);
            let l = rng.random_range(0..d);
            if k != l {
                return (k.max(l), k.min(l));
            }
        };
        let mut hits = 0u64;
        let mut examined = 0u64;
        for _ in 0..opts.samples {
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            if a == b {
                continue;
            }
            let ga = (eigenvalues[a.0] - eigenvalues[a.1]).abs();
            let gb = (eigenvalues[b.0] - eigenvalues[b.1]).abs();
            if ga <= tol || gb <= tol {
                continue;
            }
            examined += 1;
            if (ga - gb).abs() <= tol {
                hits += 1;
            }
        }
        GapReport {
            degeneracy_count,
            degenerate_gap_count: hits,
            tolerance: tol,
            pairs_examined: examined,
            exhaustive: false,
        }
    }
}
