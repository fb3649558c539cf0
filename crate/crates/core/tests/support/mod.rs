//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's linear algebra: matrices are built
//! from Kronecker products of Pauli matrices with nalgebra, eigenvalues come
//! from a cyclic Jacobi sweep and propagators from a Taylor series with
//! scaling and squaring.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn pauli_x() -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `op` on `site` of an `n`-site chain. Site 0 is the least significant bit
/// of the basis code, so it is the rightmost Kronecker factor.
pub fn site_op(op: &DMatrix<C>, site: usize, n: usize) -> DMatrix<C> {
    let id = DMatrix::<C>::identity(2, 2);
    let mut out = DMatrix::<C>::identity(1, 1);
    for k in (0..n).rev() {
        out = out.kronecker(if k == site { op } else { &id });
    }
    out
}

pub fn kron_hamiltonian(n: usize, j: f64, g: f64, periodic: bool) -> DMatrix<C> {
    let d = 1 << n;
    let (x, y) = (pauli_x(), pauli_y());
    let mut h = DMatrix::<C>::zeros(d, d);
    let bonds = if periodic { n } else { n - 1 };
    for s in 0..bonds {
        let t = (s + 1) % n;
        let xx = site_op(&x, s, n) * site_op(&x, t, n);
        let yy = site_op(&y, s, n) * site_op(&y, t, n);
        h += (xx + yy) * c(j / 2.0, 0.0);
    }
    for s in 0..n {
        h += site_op(&y, s, n) * c(g, 0.0);
    }
    h
}

pub fn kron_magnetization(n: usize) -> DMatrix<C> {
    let z = pauli_z();
    (0..n).fold(DMatrix::zeros(1 << n, 1 << n), |acc, s| acc + site_op(&z, s, n))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_symmetric(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigenvalues of a Hermitian `H = A + iB` from the real embedding
/// `[[A, −B], [B, A]]`, whose spectrum is that of `H` with every level doubled.
pub fn jacobi_hermitian(h: &DMatrix<C>) -> Vec<f64> {
    let d = h.nrows();
    let big = DMatrix::from_fn(2 * d, 2 * d, |r, s| {
        let z = h[(r % d, s % d)];
        match (r < d, s < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    jacobi_symmetric(big).into_iter().step_by(2).collect()
}

/// `exp(m)` by Taylor series after scaling `m` below unit norm.
pub fn expm(m: &DMatrix<C>) -> DMatrix<C> {
    let norm = m.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = m / c(2f64.powi(squarings as i32), 0.0);
    let d = m.nrows();
    let mut term = DMatrix::<C>::identity(d, d);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `<ψ|A|ψ>` for `ψ(t) = exp(−iHt) ψ₀` by direct propagation.
pub fn propagated_expectation(h: &DMatrix<C>, a: &DMatrix<C>, psi0: &DVector<C>, t: f64) -> f64 {
    let u = expm(&(h * c(0.0, -t)));
    let psi = u * psi0;
    (psi.adjoint() * a * &psi)[(0, 0)].re
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Product state of the library's convention, built site by site.
pub fn kron_product_state(theta: f64, phi: f64, n: usize) -> DVector<C> {
    let single = DVector::from_vec(vec![
        c((theta / 2.0).cos(), 0.0),
        C::from_polar((theta / 2.0).sin(), -phi),
    ]);
    let mut out = DVector::from_vec(vec![c(1.0, 0.0)]);
    for _ in 0..n {
        out = single.kronecker(&out);
    }
    out
}

pub fn to_nalgebra(m: &faer::Mat<C>) -> DMatrix<C> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, s| m[(r, s)])
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
