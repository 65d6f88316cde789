//! Config-driven experiment runners.
//!
//! Each runner takes a resolved [`ExperimentConfig`] and returns tables with
//! fixed headers. Cells draw from streams derived from `(master_seed,
//! experiment, cell index)`, so output depends only on the config.
//! [`plan`] checks the configured budget before any sampling starts.

pub mod config;
pub mod output;

mod coverage;
mod extremes;
mod report;
mod sweeps;
mod swap;

pub use config::{Budget, DRule, ExperimentConfig, ExperimentKind, RawConfig};
pub use coverage::{bootstrap_covariance_identity, run_bootstrap_coverage, CovarianceIdentityCheck};
pub use extremes::{predicted_lower_bound_gap, run_cramer_ratio_check, run_lower_bound_demo, MIN_EXPECTED_TAIL_HITS};
pub use output::{write_outputs, Cell, ExperimentOutput, Manifest, Table};
pub use report::{run_bound_report, run_stein_check};
pub use sweeps::{factor_max_cdf_table, run_convergence_sweep, run_factor_sweep, FactorMaxCdf};
pub use swap::{nemirovski_check, run_lindeberg_swap, run_stein_route, stein_route_cell, NemirovskiCheck, SteinRouteCell};

use crate::data::CovarianceModel;
use crate::error::{Error, Result};
use crate::metrics::max_statistics;
use crate::rng::RngContract;
use crate::special::norm_isf;
use crate::stats::quantile_sorted;

/// Work estimate for a configured run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plan {
    /// Largest number of f64 values any cell holds at once.
    pub peak_entries: f64,
    /// Total random variates.
    pub draws: f64,
}

/// Estimates the work of `cfg` and rejects it with [`Error::Planning`] when
/// it exceeds the configured budget.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    let p = match cfg.experiment {
        ExperimentKind::ConvergenceSweep => sweeps::plan_convergence(cfg),
        ExperimentKind::FactorSweep => sweeps::plan_factor(cfg),
        ExperimentKind::LowerBoundDemo => extremes::plan_lower_bound(cfg),
        ExperimentKind::CramerRatioCheck => extremes::plan_cramer(cfg)?,
        ExperimentKind::LindebergSwap => swap::plan_lindeberg(cfg),
        ExperimentKind::SteinRoute => swap::plan_stein(cfg),
        ExperimentKind::BootstrapCoverage => coverage::plan(cfg),
        ExperimentKind::BoundReport => report::plan_bound_report(cfg),
        ExperimentKind::SteinCheck => report::plan_stein_check(cfg),
    };
    let b = &cfg.budget;
    if p.peak_entries > b.max_entries {
        return Err(Error::Planning(format!(
            "{} needs {:.3e} stored values per cell, budget is {:.3e}",
            cfg.experiment.name(),
            p.peak_entries,
            b.max_entries
        )));
    }
    if p.draws > b.max_draws {
        return Err(Error::Planning(format!(
            "{} needs {:.3e} random draws, budget is {:.3e}",
            cfg.experiment.name(),
            p.draws,
            b.max_draws
        )));
    }
    Ok(p)
}

/// Validates, plans and runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    plan(cfg)?;
    match cfg.experiment {
        ExperimentKind::ConvergenceSweep => run_convergence_sweep(cfg),
        ExperimentKind::FactorSweep => run_factor_sweep(cfg),
        ExperimentKind::LowerBoundDemo => run_lower_bound_demo(cfg),
        ExperimentKind::CramerRatioCheck => run_cramer_ratio_check(cfg),
        ExperimentKind::LindebergSwap => run_lindeberg_swap(cfg),
        ExperimentKind::SteinRoute => run_stein_route(cfg),
        ExperimentKind::BootstrapCoverage => run_bootstrap_coverage(cfg),
        ExperimentKind::BoundReport => run_bound_report(cfg),
        ExperimentKind::SteinCheck => run_stein_check(cfg),
    }
}

/// Manifest for a finished run; the hash covers the resolved config, so
/// command-line overrides are part of it.
pub fn manifest(cfg: &ExperimentConfig, wall_time_seconds: f64) -> Manifest {
    let config = serde_json::to_value(cfg).expect("config serializes");
    let canonical = serde_json::to_vec(&config).expect("config serializes");
    Manifest {
        experiment: cfg.experiment.name().to_string(),
        config_sha256: output::sha256_hex(&canonical),
        master_seed: cfg.master_seed,
        threads: cfg.threads,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        platform: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
        parallel: cfg!(feature = "parallel"),
        wall_time_seconds,
        outputs: Vec::new(),
        config,
    }
}

/// Root stream of an experiment; cells take `substream(index)`.
pub(crate) fn base_stream(cfg: &ExperimentConfig) -> RngContract {
    RngContract::new(cfg.master_seed, 0).named(cfg.experiment.name())
}

/// Draws used to tabulate Gaussian-max quantiles when no closed form exists.
const QUANTILE_DRAWS: usize = 200_000;

/// Quantiles of `max_j Z_j` for `Z ~ N(0, C)`: exact for a scaled identity,
/// otherwise from a fixed-size sample.
pub fn gaussian_max_quantiles(c: &CovarianceModel, probs: &[f64], rng: RngContract) -> Vec<f64> {
    let d = c.dim() as f64;
    if let Some(sd) = c.identity_scale() {
        return probs.iter().map(|p| sd * norm_isf(-(p.ln() / d).exp_m1())).collect();
    }
    let sample = crate::data::gaussian_analog_sample(c, QUANTILE_DRAWS, rng);
    let mut m = max_statistics(sample.view());
    m.sort_by(f64::total_cmp);
    probs.iter().map(|p| quantile_sorted(&m, *p)).collect()
}

/// ε from the config, else `epsilon_iqr_fraction` times the interquartile
/// range of the Gaussian max.
pub(crate) fn resolve_epsilon(cfg: &ExperimentConfig, c: &CovarianceModel, rng: RngContract) -> f64 {
    cfg.epsilon.unwrap_or_else(|| {
        let q = gaussian_max_quantiles(c, &[0.25, 0.75], rng);
        cfg.epsilon_iqr_fraction * (q[1] - q[0])
    })
}

/// `points` shifts at evenly spaced probabilities over the central 99% of
/// the Gaussian max.
pub(crate) fn y_grid(c: &CovarianceModel, points: usize, rng: RngContract) -> Vec<f64> {
    let probs: Vec<f64> = if points == 1 {
        vec![0.5]
    } else {
        (0..points).map(|k| 0.005 + 0.99 * k as f64 / (points - 1) as f64).collect()
    };
    gaussian_max_quantiles(c, &probs, rng)
}
