//! Computational basis, model Hamiltonian and observables on the `2^N`
//! dimensional spin-1/2 Hilbert space.
//!
//! A basis state is labelled by a bit code: bit `j` (site `j + 1`) is `0` for
//! spin up along `z` and `1` for spin down. The Hamiltonian is
//!
//! ```text
//! H = (J/2) Σ_j (σ^x_j σ^x_{j+1} + σ^y_j σ^y_{j+1}) + g Σ_j σ^y_j
//! ```
//!
//! where the bond term only flips anti-aligned neighbours (`01 <-> 10`) with
//! amplitude `J`.

use std::fmt;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Largest chain the dense machinery is expected to handle.
pub const MAX_SITES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Open => f.write_str("open"),
        }
    }
}

/// Parameters of the spin chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub boundary: Boundary,
}

impl ChainSpec {
    /// Field value used throughout the reference study: `g = J/2 + 0.01`.
    pub const REFERENCE_FIELD: f64 = 0.51;

    pub fn new(n: usize, j: f64, g: f64, boundary: Boundary) -> Result<Self> {
        let spec = ChainSpec { n, j, g, boundary };
        spec.validate()?;
        Ok(spec)
    }

    /// Periodic chain with `J = 1`, `g = 0.51`.
    pub fn reference(n: usize) -> Result<Self> {
        Self::new(n, 1.0, Self::REFERENCE_FIELD, Boundary::Periodic)
    }

    pub fn with_sites(&self, n: usize) -> Result<Self> {
        Self::new(n, self.j, self.g, self.boundary)
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.boundary {
            Boundary::Open => 2,
            // N = 2 would count the single bond twice.
            Boundary::Periodic => 3,
        };
        if self.n < min {
            return Err(Error::invalid(format!(
                "{} chain needs at least {min} sites, got {}",
                self.boundary, self.n
            )));
        }
        if self.n > MAX_SITES {
            return Err(Error::invalid(format!(
                "{} sites exceeds the supported maximum of {MAX_SITES}",
                self.n
            )));
        }
        if !self.j.is_finite() || !self.g.is_finite() {
            return Err(Error::invalid("J and g must be finite"));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        1 << self.n
    }

    /// Nearest-neighbour bonds `(j, j + 1)`, wrapping for periodic chains.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let count = match self.boundary {
            Boundary::Periodic => self.n,
            Boundary::Open => self.n - 1,
        };
        (0..count).map(move |j| (j, (j + 1) % self.n))
    }
}

/// Label of a product basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(pub usize);

impl BasisIndex {
    /// Assembles a code from per-site bits (`false` = up, `true` = down).
    pub fn from_bits(bits: &[bool]) -> Self {
        BasisIndex(
            bits.iter()
                .enumerate()
                .fold(0, |acc, (j, &b)| acc | (usize::from(b) << j)),
        )
    }

    pub fn bit(self, site: usize) -> bool {
        (self.0 >> site) & 1 == 1
    }

    pub fn bits(self, n: usize) -> Vec<bool> {
        (0..n).map(|j| self.bit(j)).collect()
    }

    pub fn flip(self, site: usize) -> Self {
        BasisIndex(self.0 ^ (1 << site))
    }

    /// Number of down spins.
    pub fn down_count(self) -> u32 {
        self.0.count_ones()
    }
}

/// Compressed-row sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, c64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::invalid(format!(
                "entry ({r}, {c}) outside a {dim}x{dim} matrix"
            )));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<c64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = CsrMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        };
        m.prune_zeros();
        Ok(m)
    }

    fn prune_zeros(&mut self) {
        if self.vals.iter().all(|v| *v != c64::new(0.0, 0.0)) {
            return;
        }
        let mut row_ptr = vec![0; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != c64::new(0.0, 0.0) {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> c64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => c64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(Mat<c64>),
    /// Real diagonal; all off-diagonal entries are exactly zero.
    Diagonal(Vec<f64>),
    Sparse(CsrMatrix),
}

/// A Hermitian matrix on the spin Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    storage: Storage,
}

/// Relative Hermiticity tolerance accepted by the constructors.
pub const HERMITICITY_TOL: f64 = 1e-12;

impl HermitianOperator {
    pub fn diagonal(values: Vec<f64>) -> Self {
        HermitianOperator {
            storage: Storage::Diagonal(values),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![1.0; dim])
    }

    pub fn from_dense(m: Mat<c64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid("operator matrix must be square"));
        }
        Self::checked(Storage::Dense(m))
    }

    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, c64)>) -> Result<Self> {
        Self::checked(Storage::Sparse(CsrMatrix::from_triplets(dim, triplets)?))
    }

    fn checked(storage: Storage) -> Result<Self> {
        let op = HermitianOperator { storage };
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(op)
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Diagonal(d) => d.len(),
            Storage::Sparse(s) => s.dim(),
        }
    }

    /// The real diagonal, if this operator is stored diagonally.
    pub fn as_diagonal(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    /// Non-zero entries as `(row, col, value)`.
    pub fn entries(&self) -> Vec<(usize, usize, c64)> {
        match &self.storage {
            Storage::Dense(m) => {
                let mut out = Vec::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let v = m[(r, c)];
                        if v != c64::new(0.0, 0.0) {
                            out.push((r, c, v));
                        }
                    }
                }
                out
            }
            Storage::Diagonal(d) => d
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, i, c64::new(v, 0.0)))
                .collect(),
            Storage::Sparse(s) => s.triplets().collect(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> c64 {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Diagonal(d) => {
                if r == c {
                    c64::new(d[r], 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }
            Storage::Sparse(s) => s.get(r, c),
        }
    }

    pub fn to_dense(&self) -> Mat<c64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            _ => {
                let n = self.dim();
                let mut m = Mat::<c64>::zeros(n, n);
                for (r, c, v) in self.entries() {
                    m[(r, c)] = v;
                }
                m
            }
        }
    }

    /// `max |M_ab - conj(M_ba)| / max |M_ab|`, zero for the zero matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let defect = match &self.storage {
            Storage::Diagonal(_) => 0.0,
            Storage::Dense(m) => {
                let mut worst: f64 = 0.0;
                for c in 0..m.ncols() {
                    for r in 0..=c {
                        worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
                    }
                }
                worst
            }
            Storage::Sparse(s) => s
                .triplets()
                .map(|(r, c, v)| (v - s.get(c, r).conj()).norm())
                .fold(0.0, f64::max),
        };
        defect / scale
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => {
                let mut worst: f64 = 0.0;
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        worst = worst.max(m[(r, c)].norm());
                    }
                }
                worst
            }
            Storage::Diagonal(d) => d.iter().fold(0.0, |a, v| a.max(v.abs())),
            Storage::Sparse(s) => s.vals.iter().fold(0.0, |a, v| a.max(v.norm())),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries()
            .iter()
            .map(|(_, _, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute eigenvalue. Exact for diagonal storage; otherwise
    /// obtained from a dense eigenvalue solve.
    pub fn spectral_norm(&self) -> Result<f64> {
        if let Some(d) = self.as_diagonal() {
            return Ok(d.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
        let evals = self
            .to_dense()
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::EigenSolver {
                message: format!("{e:?}"),
                residual: f64::NAN,
            })?;
        Ok(evals.iter().fold(0.0, |a, v| a.max(v.abs())))
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[c64]) -> Result<Vec<c64>> {
        check_dim(self.dim(), x.len())?;
        let y = match &self.storage {
            Storage::Diagonal(d) => d.iter().zip(x).map(|(&a, &v)| v * a).collect(),
            Storage::Sparse(s) => (0..s.dim())
                .map(|r| s.row(r).map(|(c, v)| v * x[c]).sum())
                .collect(),
            Storage::Dense(m) => (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * x[c]).sum())
                .collect(),
        };
        Ok(y)
    }

    /// `<x|M|x>`. The imaginary part is round-off for Hermitian `M`.
    pub fn expectation(&self, x: &[c64]) -> Result<c64> {
        check_dim(self.dim(), x.len())?;
        if let Some(d) = self.as_diagonal() {
            return Ok(c64::new(
                d.iter().zip(x).map(|(&a, v)| a * v.norm_sqr()).sum(),
                0.0,
            ));
        }
        let y = self.apply(x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum())
    }

    /// `self + shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        match &self.storage {
            Storage::Diagonal(d) => Self::diagonal(d.iter().map(|v| v + shift).collect()),
            Storage::Dense(m) => {
                let mut m = m.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += c64::new(shift, 0.0);
                }
                HermitianOperator {
                    storage: Storage::Dense(m),
                }
            }
            Storage::Sparse(s) => {
                let mut t: Vec<_> = s.triplets().collect();
                t.extend((0..s.dim()).map(|i| (i, i, c64::new(shift, 0.0))));
                HermitianOperator {
                    storage: Storage::Sparse(
                        CsrMatrix::from_triplets(s.dim(), t).expect("indices in range"),
                    ),
                }
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let storage = match &self.storage {
            Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|v| v * factor).collect()),
            Storage::Dense(m) => Storage::Dense(m * faer::Scale(c64::new(factor, 0.0))),
            Storage::Sparse(s) => {
                let mut s = s.clone();
                s.vals.iter_mut().for_each(|v| *v *= factor);
                s.prune_zeros();
                Storage::Sparse(s)
            }
        };
        HermitianOperator { storage }
    }
}

/// Assembles the model Hamiltonian as a sparse matrix.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    let dim = spec.dimension();
    let bonds: Vec<_> = spec.bonds().collect();
    let mut triplets = Vec::with_capacity(dim * (bonds.len() + spec.n));
    for code in 0..dim {
        let state = BasisIndex(code);
        for &(a, b) in &bonds {
            if spec.j != 0.0 && state.bit(a) != state.bit(b) {
                let partner = state.flip(a).flip(b);
                triplets.push((partner.0, code, c64::new(spec.j, 0.0)));
            }
        }
        if spec.g != 0.0 {
            for site in 0..spec.n {
                // σ^y |0> = i |1>,  σ^y |1> = -i |0>
                let amp = if state.bit(site) { -spec.g } else { spec.g };
                triplets.push((state.flip(site).0, code, c64::new(0.0, amp)));
            }
        }
    }
    HermitianOperator::from_triplets(dim, triplets)
}

/// Total `z` magnetization `Σ_j σ^z_j`, diagonal with entries `N - 2·popcount`.
pub fn build_magnetization(n: usize) -> Result<HermitianOperator> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::invalid(format!("invalid site count {n}")));
    }
    Ok(HermitianOperator::diagonal(
        (0..1usize << n)
            .map(|code| n as f64 - 2.0 * BasisIndex(code).down_count() as f64)
            .collect(),
    ))
}

/// A unitary of the form `R|b> = sign_b |image_b>`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedPermutation {
    image: Vec<usize>,
    sign: Vec<f64>,
}

impl SignedPermutation {
    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, x: &[c64]) -> Result<Vec<c64>> {
        check_dim(self.dim(), x.len())?;
        let mut y = vec![c64::new(0.0, 0.0); x.len()];
        for (b, &v) in x.iter().enumerate() {
            y[self.image[b]] = v * self.sign[b];
        }
        Ok(y)
    }

    /// `R A R^dag`.
    pub fn conjugate(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        check_dim(self.dim(), a.dim())?;
        if let Some(d) = a.as_diagonal() {
            let mut out = vec![0.0; d.len()];
            for (b, &v) in d.iter().enumerate() {
                out[self.image[b]] = v;
            }
            return Ok(HermitianOperator::diagonal(out));
        }
        let triplets = a
            .entries()
            .into_iter()
            .map(|(r, c, v)| (self.image[r], self.image[c], v * (self.sign[r] * self.sign[c])))
            .collect();
        match a.storage() {
            Storage::Dense(_) => {
                let sparse = CsrMatrix::from_triplets(a.dim(), triplets)?;
                let mut m = Mat::<c64>::zeros(a.dim(), a.dim());
                for (r, c, v) in sparse.triplets() {
                    m[(r, c)] = v;
                }
                HermitianOperator::from_dense(m)
            }
            _ => HermitianOperator::from_triplets(a.dim(), triplets),
        }
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        let mut m = Mat::<c64>::zeros(n, n);
        for b in 0..n {
            m[(self.image[b], b)] = c64::new(self.sign[b], 0.0);
        }
        m
    }
}

/// Global π rotation about `y`, `R = ⊗_j (i σ^y_j)`.
///
/// Per site `iσ^y = [[0, 1], [-1, 0]]`, so every spin flips and each up spin
/// contributes a factor `-1`. `R` commutes with the model Hamiltonian and
/// anticommutes with the `z` magnetization.
pub fn build_parity_y(n: usize) -> Result<SignedPermutation> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::invalid(format!("invalid site count {n}")));
    }
    let dim = 1usize << n;
    let all = dim - 1;
    let (image, sign) = (0..dim)
        .map(|code| {
            let ups = n as u32 - BasisIndex(code).down_count();
            (code ^ all, if ups % 2 == 0 { 1.0 } else { -1.0 })
        })
        .unzip();
    Ok(SignedPermutation { image, sign })
}
