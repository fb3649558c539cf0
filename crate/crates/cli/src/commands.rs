//! One function per subcommand. Each computes everything in memory and
//! returns the staged files; nothing touches the output directory here.

use std::io::Write;

use anyhow::{bail, Context};
use serde::Serialize;
use spinquench::dynamics::{
    evolve_expectation, exact_fluctuation, fluctuation_bound, time_average, time_variance,
    uniform_times, EnergyMatrix, FluctuationReport, ENERGY_MATRIX_MAX_DIM,
};
use spinquench::eigensolve::{gap_diagnostics, GapOptions, GapReport};
use spinquench::eth::{
    certify_nullity, eigenstate_expectations, microcanonical_average, offdiagonal_stats_from,
    MicrocanonicalShell, NullityReport,
};
use spinquench::hilbert::{build_magnetization, build_parity_y, ChainSpec, HermitianOperator};
use spinquench::scaling::{beta_curve, fit_exponent, phi_grid, sweep_grid, theta_grid, Model, ModelCache, BetaPoint};
use spinquench::states::{diagonal_average, effective_dimension, OverlapProfile};

use crate::config::{Observable, RunConfig};
use crate::output::Outputs;

fn observable(kind: Observable, spec: &ChainSpec) -> spinquench::Result<HermitianOperator> {
    match kind {
        Observable::Mz => build_magnetization(spec.n),
        Observable::Identity => Ok(HermitianOperator::identity(spec.dimension())),
    }
}

fn load_model(config: &RunConfig) -> anyhow::Result<Model> {
    let spec = config.model.chain()?;
    let (model, cached) = Model::load_or_build(spec, config.cache_dir.as_deref())?;
    log::info!(
        "N={} spectrum {} (residual {:e})",
        spec.n,
        if cached { "loaded from cache" } else { "computed" },
        model.spectrum.residual()
    );
    Ok(model)
}

#[derive(Serialize)]
struct GapsFile {
    options: GapOptions,
    report: GapReport,
}

pub fn spectrum(config: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let model = load_model(config)?;
    let opts = GapOptions {
        tolerance: config.spectrum.gap_tolerance,
        max_dimension: config.spectrum.gap_max_dimension,
        samples: config.spectrum.gap_samples,
        seed: config.seed,
    };
    let eigenvalues = model.spectrum.eigenvalues();
    out.csv("eigenvalues.csv", |w| {
        writeln!(w, "index,E")?;
        for (i, e) in eigenvalues.iter().enumerate() {
            writeln!(w, "{i},{e}")?;
        }
        Ok(())
    })?;
    let report = gap_diagnostics(eigenvalues, &opts);
    out.json("gaps.json", &GapsFile { options: opts, report })
}

#[derive(Serialize)]
struct EvolveSummary {
    initial_state: String,
    mean_energy: f64,
    normalized_energy: f64,
    d_eff: f64,
    diagonal_average: f64,
    trace_time_average: f64,
    trace_time_variance: f64,
    fluctuation: FluctuationReport,
    linear_norm_bound: f64,
    bound_holds: Option<bool>,
}

pub fn evolve(config: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let model = load_model(config)?;
    let spectrum = &model.spectrum;
    let ev = &config.evolve;
    let profile = match ev.eigenstate_index {
        Some(k) => {
            if k >= spectrum.dim() {
                bail!("eigenstate_index {k} outside dimension {}", spectrum.dim());
            }
            eigenstate_profile(spectrum, k)?
        }
        None => model.profile(ev.theta, ev.phi)?,
    };
    let initial_state = match ev.eigenstate_index {
        Some(k) => format!("eigenstate {k}"),
        None => format!("product theta={} phi={}", ev.theta, ev.phi),
    };
    let a = observable(ev.observable, &model.spec)?;
    let times = uniform_times(ev.t_max, ev.dt)?;
    let trace = evolve_expectation(&profile.coefficients, spectrum, &a, &times)?;

    let mut fluctuation = fluctuation_bound(&a, profile.d_eff)?;
    let diag = if spectrum.dim() <= ENERGY_MATRIX_MAX_DIM {
        let em = EnergyMatrix::new(spectrum, &a)?;
        fluctuation = fluctuation.with_exact(exact_fluctuation(&profile.weights, &em)?);
        diagonal_average(&profile.weights, em.diag())?
    } else {
        let diag = eigenstate_expectations(spectrum, &a)?.diag_values;
        diagonal_average(&profile.weights, &diag)?
    };

    out.csv("trace.csv", |w| trace.write_csv(w))?;
    out.json(
        "summary.json",
        &EvolveSummary {
            initial_state,
            mean_energy: profile.mean_energy,
            normalized_energy: profile.normalized_energy,
            d_eff: profile.d_eff,
            diagonal_average: diag,
            trace_time_average: time_average(&trace)?,
            trace_time_variance: time_variance(&trace)?,
            linear_norm_bound: fluctuation.linear_norm_bound(),
            bound_holds: fluctuation.bound_holds(),
            fluctuation,
        },
    )
}

/// Energy-basis profile of eigenvector `k`: a single unit weight.
fn eigenstate_profile(
    spectrum: &spinquench::eigensolve::Spectrum,
    k: usize,
) -> anyhow::Result<OverlapProfile> {
    let d = spectrum.dim();
    let mut coefficients = vec![spinquench::c64::new(0.0, 0.0); d];
    coefficients[k] = spinquench::c64::new(1.0, 0.0);
    let mut weights = vec![0.0; d];
    weights[k] = 1.0;
    let e = spectrum.eigenvalues()[k];
    Ok(OverlapProfile {
        d_eff: effective_dimension(&weights)?,
        mean_energy: e,
        energy_variance: 0.0,
        normalized_energy: (e - spectrum.min_energy()) / spectrum.width(),
        coefficients,
        weights,
    })
}

pub fn sweep(config: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let model = load_model(config)?;
    let sw = &config.sweep;
    let thetas = sw.thetas.clone().unwrap_or_else(|| theta_grid(sw.theta_points));
    let phis = sw.phis.clone().unwrap_or_else(|| phi_grid(sw.phi_points));
    if thetas.is_empty() || phis.is_empty() {
        bail!("sweep grid is empty");
    }
    let em = if sw.fluctuations {
        let mz = build_magnetization(model.spec.n)?;
        Some(EnergyMatrix::new(&model.spectrum, &mz)?)
    } else {
        None
    };
    let result = sweep_grid(&model, &thetas, &phis, em.as_ref())?;
    out.csv("sweep.csv", |w| result.write_csv(w))?;
    if sw.fluctuations {
        out.csv("fluctuation.csv", |w| result.write_fluctuation_csv(w).map(|_| ()))?;
    }
    Ok(())
}

pub fn scaling(config: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let sc = &config.scaling;
    let phis = sc.phis.clone().unwrap_or_else(|| phi_grid(sc.phi_points));
    if phis.is_empty() {
        bail!("scaling needs at least one phi");
    }
    let points: Vec<BetaPoint> = match sc.synthetic_beta {
        Some(beta) => phis
            .iter()
            .map(|&phi| {
                let deff: Vec<f64> = sc.n_values.iter().map(|&n| (beta * n as f64).exp()).collect();
                Ok(BetaPoint {
                    phi,
                    fit: fit_exponent(&sc.n_values, &deff)?,
                    deff,
                })
            })
            .collect::<spinquench::Result<_>>()?,
        None => {
            let template = config.model.chain()?;
            let models = match &config.cache_dir {
                Some(dir) => ModelCache::with_dir(dir),
                None => ModelCache::new(),
            };
            beta_curve(&models, &template, sc.theta, &phis, &sc.n_values)?
        }
    };
    out.csv("deff_vs_n.csv", |w| {
        writeln!(w, "phi,N,d_eff")?;
        for p in &points {
            for (n, d) in p.fit.n_values.iter().zip(&p.deff) {
                writeln!(w, "{},{n},{d}", p.phi)?;
            }
        }
        Ok(())
    })?;
    out.csv("beta.csv", |w| {
        writeln!(w, "phi,beta,beta_stderr,r_squared")?;
        for p in &points {
            let r2 = p.fit.r_squared.map(|r| r.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{r2}", p.phi, p.fit.beta, p.fit.beta_stderr)?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct MicrocanonicalFile {
    observable: Observable,
    shell: MicrocanonicalShell,
    average: f64,
    max_abs_expectation: f64,
    nullity: Option<NullityReport>,
}

pub fn eth(config: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let model = load_model(config)?;
    let spectrum = &model.spectrum;
    let cfg = &config.eth;
    let a = observable(cfg.observable, &model.spec)?;
    let expect = eigenstate_expectations(spectrum, &a)?;

    let middle = 0.5 * (spectrum.min_energy() + spectrum.max_energy());
    let center = cfg.shell_center.unwrap_or(middle);
    let shell = match cfg.shell_half_width {
        Some(hw) => MicrocanonicalShell::new(spectrum.eigenvalues(), center, hw)?,
        None => MicrocanonicalShell::with_default_width(spectrum, center)?,
    };
    let average = microcanonical_average(&expect, &shell)?;
    let nullity = match cfg.observable {
        Observable::Mz => {
            let r = build_parity_y(model.spec.n)?;
            let report = certify_nullity(&model.hamiltonian, spectrum, &r, &a, cfg.nullity_tolerance)
                .context("parity certification")?;
            log::info!(
                "{} levels certified, max |A_nn| over non-degenerate levels {:e}",
                report.certified.len(),
                report.max_abs_nondegenerate
            );
            Some(report)
        }
        Observable::Identity => None,
    };

    out.csv("eigen_expectations.csv", |w| expect.write_csv(w))?;
    out.json(
        "microcanonical.json",
        &MicrocanonicalFile {
            observable: cfg.observable,
            shell,
            average,
            max_abs_expectation: expect.max_abs(),
            nullity,
        },
    )?;
    if cfg.offdiag {
        let window = cfg.offdiag_window.unwrap_or_else(|| {
            let quarter = 0.25 * spectrum.width();
            (spectrum.min_energy() + quarter, spectrum.max_energy() - quarter)
        });
        let em = EnergyMatrix::new(spectrum, &a)?;
        let profile = offdiagonal_stats_from(spectrum, &em, window, cfg.bin_width)?;
        out.csv("offdiag.csv", |w| profile.write_csv(w))?;
    }
    Ok(())
}
