mod support;

use faer::c64;
use spinquench::hilbert::*;
use support::*;

fn dense_equal(op: &HermitianOperator, reference: &nalgebra::DMatrix<c64>) -> f64 {
    let m = op.to_dense();
    let mut worst = 0.0f64;
    for r in 0..reference.nrows() {
        for s in 0..reference.ncols() {
            worst = worst.max((m[(r, s)] - reference[(r, s)]).norm());
        }
    }
    worst
}

#[test]
fn hamiltonian_matches_kronecker_construction() {
    for (n, periodic) in [(2, false), (3, true), (3, false), (4, true), (5, true), (6, false)] {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let h = build_hamiltonian(&ChainSpec::new(n, 1.0, 0.51, boundary).unwrap()).unwrap();
        let reference = kron_hamiltonian(n, 1.0, 0.51, periodic);
        assert!(dense_equal(&h, &reference) < 1e-14, "n={n} periodic={periodic}");
    }
}

#[test]
fn three_site_spectrum_matches_jacobi() {
    let reference = jacobi_hermitian(&kron_hamiltonian(3, 1.0, 0.51, true));
    let h = build_hamiltonian(&ChainSpec::reference(3).unwrap()).unwrap();
    let s = spinquench::eigensolve::diagonalize(&h).unwrap();
    assert!(max_abs_diff(s.eigenvalues(), &reference) < 1e-10);
}

#[test]
fn magnetization_matches_kronecker_construction() {
    for n in 1..=6 {
        let m = build_magnetization(n).unwrap();
        assert!(m.as_diagonal().is_some());
        assert!(dense_equal(&m, &kron_magnetization(n)) == 0.0);
    }
    let m = build_magnetization(12).unwrap();
    assert_eq!(m.spectral_norm().unwrap(), 12.0);
    assert_eq!(m.trace().re, 0.0);
}

#[test]
fn parity_is_tensor_power_of_i_sigma_y() {
    let i_sy = pauli_y() * c64::new(0.0, 1.0);
    for n in 1..=4 {
        let mut reference = nalgebra::DMatrix::<c64>::identity(1, 1);
        for _ in 0..n {
            reference = i_sy.kronecker(&reference);
        }
        let r = build_parity_y(n).unwrap().to_dense();
        for a in 0..1 << n {
            for b in 0..1 << n {
                assert_eq!(r[(a, b)], reference[(a, b)]);
            }
        }
    }
}

#[test]
fn hamiltonian_invariants() {
    for n in 3..=9 {
        for boundary in [Boundary::Periodic, Boundary::Open] {
            let spec = ChainSpec::new(n, 1.0, 0.51, boundary).unwrap();
            let h = build_hamiltonian(&spec).unwrap();
            assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs());
            assert_eq!(h.trace(), c64::new(0.0, 0.0));

            let r = build_parity_y(n).unwrap();
            let rhr = r.conjugate(&h).unwrap();
            let diff: f64 = h
                .entries()
                .into_iter()
                .map(|(a, b, v)| (rhr.get(a, b) - v).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-12 * h.frobenius_norm());
            assert_eq!(rhr.entries().len(), h.entries().len());
        }
    }
}

fn commutator_with_mz(h: &HermitianOperator, n: usize) -> f64 {
    let mz = build_magnetization(n).unwrap();
    let z = mz.as_diagonal().unwrap();
    h.entries()
        .into_iter()
        .map(|(a, b, v)| (v * (z[b] - z[a])).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn magnetization_conserved_only_without_field() {
    for n in 2..=8 {
        let h = build_hamiltonian(&ChainSpec::new(n, 1.0, 0.0, Boundary::Open).unwrap()).unwrap();
        assert!(commutator_with_mz(&h, n) <= 1e-12 * h.frobenius_norm() * n as f64);
        let h = build_hamiltonian(&ChainSpec::new(n, 1.0, 0.51, Boundary::Open).unwrap()).unwrap();
        assert!(commutator_with_mz(&h, n) > 0.1);
    }
}

#[test]
fn bond_term_connects_adjacent_flip_flops() {
    let n = 7;
    let spec = ChainSpec::new(n, 1.0, 0.0, Boundary::Periodic).unwrap();
    let h = build_hamiltonian(&spec).unwrap();
    assert!(!h.entries().is_empty());
    for (a, b, v) in h.entries() {
        let diff = a ^ b;
        assert_eq!(diff.count_ones(), 2, "{a:b} -> {b:b}");
        let low = diff.trailing_zeros() as usize;
        let high = (usize::BITS - 1 - diff.leading_zeros()) as usize;
        assert!(high == low + 1 || (low == 0 && high == n - 1));
        assert_eq!((a >> low) & 1 ^ (a >> high) & 1, 1, "not a 01 <-> 10 move");
        assert_eq!(v, c64::new(1.0, 0.0));
    }
}

#[test]
fn magnetization_anticommutes_with_parity() {
    for n in 1..=8 {
        let r = build_parity_y(n).unwrap();
        let mz = build_magnetization(n).unwrap();
        let rmr = r.conjugate(&mz).unwrap();
        let (x, y) = (rmr.as_diagonal().unwrap(), mz.as_diagonal().unwrap());
        assert!(x.iter().zip(y).all(|(p, q)| (p + q).abs() <= 1e-12));
    }
}
