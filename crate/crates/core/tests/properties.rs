//! Randomized invariants.

mod support;

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use faer::c64;
use proptest::prelude::*;
use spinquench::dynamics::{evolve_state, exact_fluctuation, fluctuation_bound, EnergyMatrix};
use spinquench::eigensolve::{diagonalize, real_gauge, Spectrum};
use spinquench::hilbert::*;
use spinquench::scaling::{fit_exponent, sweep_grid, Model};
use spinquench::states::*;

struct Fixture {
    h: HermitianOperator,
    model: Model,
    mz: EnergyMatrix,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = ChainSpec::reference(6).unwrap();
        let model = Model::build(spec).unwrap();
        Fixture {
            h: model.hamiltonian.clone(),
            mz: EnergyMatrix::new(&model.spectrum, &build_magnetization(6).unwrap()).unwrap(),
            model,
        }
    })
}

fn spectrum() -> &'static Spectrum {
    &fixture().model.spectrum
}

fn chain() -> impl Strategy<Value = ChainSpec> {
    (2usize..=7, -3.0f64..3.0, -3.0f64..3.0, any::<bool>()).prop_filter_map(
        "periodic chains need three sites",
        |(n, j, g, periodic)| {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
            ChainSpec::new(n, j, g, boundary).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_hermitian_and_traceless(spec in chain()) {
        let h = build_hamiltonian(&spec).unwrap();
        prop_assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs().max(1e-300));
        prop_assert_eq!(h.trace(), c64::new(0.0, 0.0));
    }

    #[test]
    fn parity_commutes_with_any_chain(spec in chain()) {
        let h = build_hamiltonian(&spec).unwrap();
        let rhr = build_parity_y(spec.n).unwrap().conjugate(&h).unwrap();
        let defect = h
            .entries()
            .into_iter()
            .map(|(a, b, v)| (rhr.get(a, b) - v).norm())
            .fold(0.0, f64::max);
        prop_assert!(defect <= 1e-12 * h.max_abs().max(1e-300));
    }

    #[test]
    fn spectra_are_unitary(spec in chain()) {
        let h = build_hamiltonian(&spec).unwrap();
        let s = diagonalize(&h).unwrap();
        prop_assert!(s.unitarity_defect() <= 1e-10);
        prop_assert!(s.reconstruction_defect(&h).unwrap() <= 1e-10);
        prop_assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn random_phase_rotations_admit_a_real_gauge(n in 3usize..=6, seed in 0.0f64..10.0) {
        let h = build_hamiltonian(&ChainSpec::reference(n).unwrap()).unwrap();
        let d = h.dim();
        let phase = |a: usize| c64::from_polar(1.0, seed * (a * a + 1) as f64);
        let rotated: Vec<_> = h
            .entries()
            .into_iter()
            .map(|(a, b, v)| (a, b, phase(a).conj() * v * phase(b)))
            .collect();
        prop_assert!(real_gauge(d, &rotated, h.max_abs()).is_some());
    }

    #[test]
    fn basis_bits_round_trip(code in 0usize..1 << 12) {
        let idx = BasisIndex(code);
        prop_assert_eq!(BasisIndex::from_bits(&idx.bits(12)), idx);
        prop_assert_eq!(idx.down_count(), code.count_ones());
    }

    #[test]
    fn product_states_are_normalized(theta in 0.0..=PI, phi in -10.0f64..10.0, n in 1usize..=10) {
        let psi = product_state(&ProductStateParams::new(theta, phi, n).unwrap());
        let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn overlap_profile_invariants(theta in 0.0..=PI, phi in 0.0..TAU) {
        let p = fixture().model.profile(theta, phi).unwrap();
        let total: f64 = p.weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        prop_assert!(p.d_eff >= 1.0 - 1e-12 && p.d_eff <= 64.0 + 1e-9);
        let sq: f64 = p.weights.iter().map(|w| w * w).sum();
        prop_assert!((p.d_eff * sq - 1.0).abs() <= 1e-10);
        prop_assert!((0.0..=1.0).contains(&p.normalized_energy));
        prop_assert!(p.energy_variance >= 0.0);
    }

    #[test]
    fn poles_ignore_phi(phi in 0.0..TAU, south in any::<bool>()) {
        let theta = if south { PI } else { 0.0 };
        let f = fixture();
        let a = f.model.profile(theta, 0.0).unwrap();
        let b = f.model.profile(theta, phi).unwrap();
        prop_assert!((a.d_eff - b.d_eff).abs() <= 1e-12 * a.d_eff);
        prop_assert!((a.normalized_energy - b.normalized_energy).abs() <= 1e-12);
    }

    #[test]
    fn normalized_energy_affine_invariance(
        theta in 0.0..=PI,
        phi in 0.0..TAU,
        shift in -50.0f64..50.0,
        scale in 0.05f64..20.0,
    ) {
        let f = fixture();
        let psi = product_state(&ProductStateParams::new(theta, phi, 6).unwrap());
        let base = normalized_energy(&psi, &f.h, spectrum()).unwrap();
        let h2 = f.h.scaled(scale).shifted(shift);
        // The transformed spectrum is the same affine map of the original one.
        let e: Vec<f64> = spectrum().eigenvalues().iter().map(|e| scale * e + shift).collect();
        let s2 = Spectrum::from_parts(e, spectrum().basis().clone(), 0.0).unwrap();
        let ne = normalized_energy(&psi, &h2, &s2).unwrap();
        prop_assert!((ne - base).abs() <= 1e-10);
    }

    #[test]
    fn evolution_preserves_norm(theta in 0.0..=PI, phi in 0.0..TAU, t in -500.0f64..500.0) {
        let p = fixture().model.profile(theta, phi).unwrap();
        let psi = evolve_state(&p.coefficients, spectrum(), t).unwrap();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn fluctuation_below_bound(theta in 0.0..=PI, phi in 0.0..TAU) {
        let f = fixture();
        let p = f.model.profile(theta, phi).unwrap();
        let exact = exact_fluctuation(&p.weights, &f.mz).unwrap();
        let report = fluctuation_bound(&build_magnetization(6).unwrap(), p.d_eff)
            .unwrap()
            .with_exact(exact);
        prop_assert_eq!(report.bound_holds(), Some(true));
    }

    #[test]
    fn fit_equivariance(
        eps in proptest::collection::vec(-0.2f64..0.2, 5),
        beta in 0.01f64..1.0,
        log_factor in -10.0f64..10.0,
    ) {
        let n = [6usize, 7, 8, 9, 10];
        let deff: Vec<f64> = n.iter().zip(&eps).map(|(&v, e)| (beta * v as f64 + e).exp()).collect();
        let scaled: Vec<f64> = deff.iter().map(|d| d * log_factor.exp()).collect();
        let a = fit_exponent(&n, &deff).unwrap();
        let b = fit_exponent(&n, &scaled).unwrap();
        prop_assert!((a.beta - b.beta).abs() <= 1e-12);
        prop_assert!((a.beta_stderr - b.beta_stderr).abs() <= 1e-10);
    }

    #[test]
    fn sweeps_are_deterministic(
        thetas in proptest::collection::vec(0.0..=PI, 1..4),
        phis in proptest::collection::vec(0.0..TAU, 1..4),
    ) {
        let f = fixture();
        let a = sweep_grid(&f.model, &thetas, &phis, Some(&f.mz)).unwrap();
        let b = sweep_grid(&f.model, &thetas, &phis, Some(&f.mz)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.ne_map), bits(&b.ne_map));
        prop_assert_eq!(bits(&a.log_deff_map), bits(&b.log_deff_map));
        prop_assert_eq!(a.fluctuation_map, b.fluctuation_map);
    }

    #[test]
    fn duplicate_triplets_are_summed(
        entries in proptest::collection::vec((0usize..4, 0usize..4, -1.0f64..1.0), 1..20),
    ) {
        let triplets: Vec<_> = entries.iter().map(|&(r, c, v)| (r, c, c64::new(v, 0.0))).collect();
        let csr = CsrMatrix::from_triplets(4, triplets).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expect: f64 = entries.iter().filter(|e| e.0 == r && e.1 == c).map(|e| e.2).sum();
                prop_assert!((csr.get(r, c).re - expect).abs() <= 1e-15);
            }
        }
    }
}
