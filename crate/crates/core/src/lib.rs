//! Exact-diagonalization laboratory for equilibration of a quenched spin
//! chain.
//!
//! The crate builds the Hamiltonian of an XX chain in a transverse `y` field,
//! diagonalizes it densely, expands product initial states in the energy
//! basis and evaluates:
//!
//! * the effective dimension `d_eff = 1/Σ|c_n|⁴` and the fluctuation bound
//!   `‖A‖²/d_eff` ([`states`], [`dynamics`]);
//! * time traces `<A(t)>`, finite-time averages and the exact infinite-time
//!   fluctuation ([`dynamics`]);
//! * eigenstate expectation values, microcanonical averages and off-diagonal
//!   statistics ([`eth`]);
//! * `(θ, φ)` sweeps and fits of `d_eff ~ e^{βN}` ([`scaling`]).
//!
//! ```
//! use spinquench::prelude::*;
//!
//! let model = Model::build(ChainSpec::reference(6)?)?;
//! let profile = model.profile(std::f64::consts::FRAC_PI_2, 0.0)?;
//! assert!(profile.d_eff > 1.0 && profile.d_eff <= 64.0);
//! # Ok::<(), spinquench::Error>(())
//! ```
//!
//! The `book/` directory at the repository root has a longer guide; its code
//! listings are compiled and run as doc-tests of this crate.

pub mod dynamics;
pub mod eigensolve;
mod error;
pub mod eth;
pub mod hilbert;
pub mod scaling;
pub mod states;

pub use error::{Error, Result};
/// Complex scalar used for amplitudes and matrix entries.
pub use faer::c64;

pub mod prelude {
    pub use crate::dynamics::{
        evolve_expectation, exact_fluctuation, fluctuation_bound, time_average, time_variance,
        uniform_times, EnergyMatrix, FluctuationReport, TimeTrace,
    };
    pub use crate::eigensolve::{diagonalize, gap_diagnostics, GapOptions, GapReport, Spectrum};
    pub use crate::eth::{
        certify_nullity, eigenstate_expectations, microcanonical_average, offdiagonal_stats,
        EigenExpectations, MicrocanonicalShell, OffDiagProfile,
    };
    pub use crate::hilbert::{
        build_hamiltonian, build_magnetization, build_parity_y, BasisIndex, Boundary, ChainSpec,
        HermitianOperator,
    };
    pub use crate::scaling::{
        beta_curve, fit_exponent, sweep_grid, Model, ModelCache, ScalingFit, SweepResult,
    };
    pub use crate::states::{
        diagonal_average, effective_dimension, normalized_energy, overlap_coefficients,
        product_state, OverlapProfile, ProductStateParams, StateVector,
    };
    pub use crate::{Error, Result};
}

// Every chapter of the guide is compiled as a doc-test so the listings stay
// in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hilbert-space.md")]
    mod hilbert_space {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/effective-dimension.md")]
    mod effective_dimension {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/eth.md")]
    mod eth {}
    #[doc = include_str!("../../../book/src/scaling.md")]
    mod scaling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
