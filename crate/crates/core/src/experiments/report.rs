//! Bound report and Stein-identity check.

use super::config::ExperimentConfig;
use super::output::{Cell, ExperimentOutput, Table};
use super::{base_stream, resolve_epsilon, Plan};
use crate::bounds::{bound_report, BoundInputs};
use crate::data::generate;
use crate::error::{Error, Result};
use crate::multipliers::{sample_beta_precursor, sample_multipliers, standard_test_family, verify_stein_identity};
use crate::stats::Moments;

pub(crate) fn plan_bound_report(cfg: &ExperimentConfig) -> Plan {
    let (n, d) = cfg.cells()[0];
    Plan {
        peak_entries: (n * d + d * d) as f64,
        draws: (n * d) as f64,
    }
}

pub(crate) fn plan_stein_check(cfg: &ExperimentConfig) -> Plan {
    Plan {
        peak_entries: 2.0 * cfg.reps as f64,
        draws: 2.0 * cfg.reps as f64,
    }
}

/// Full bound report for one generated data set at the first grid cell.
/// The output is a pure function of the config.
pub fn run_bound_report(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (n, d) = cfg.cells()[0];
    let base = base_stream(cfg);
    let x = generate(&cfg.generator, n, d, base.named("data"))?;
    let c = cfg.generator.population_covariance(d)?;
    let epsilon = resolve_epsilon(cfg, &c, base.named("quantiles"));
    let report = bound_report(&BoundInputs {
        data: &x,
        covariance: Some(&c),
        generator: Some(&cfg.generator),
        epsilon,
        multiplier_bound: Some(cfg.multiplier.support_bound()),
    })?;
    let json = serde_json::to_value(&report).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut table = Table::new(
        "bound_report",
        &["n", "d", "generator", "epsilon", "b_n", "delta_n1", "delta_n2", "theta_bound", "theta_factor", "total", "total_factor", "total_bootstrap"],
    );
    table.push(vec![
        n.into(),
        d.into(),
        cfg.generator.name().into(),
        epsilon.into(),
        report.b_n.into(),
        report.delta_n1.into(),
        report.delta_n2.into(),
        report.theta_bound.into(),
        Cell::from(report.theta_factor),
        report.total.into(),
        Cell::from(report.total_factor),
        Cell::from(report.total_bootstrap),
    ]);
    Ok(ExperimentOutput {
        tables: vec![table],
        documents: vec![("bound_report".into(), json)],
    })
}

/// Quadrature residuals of the Stein identity for the configured multiplier
/// over the standard test family, and MC moments of the multiplier law.
pub fn run_stein_check(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let law = cfg.multiplier;
    let residuals = verify_stein_identity(&law, &standard_test_family(), cfg.quadrature_nodes)?;
    let mut stein = Table::new("stein_check", &["law", "function", "nodes", "lhs", "rhs", "residual"]);
    for r in &residuals {
        stein.push(vec![
            law.name().into(),
            r.function.clone().into(),
            cfg.quadrature_nodes.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.residual.into(),
        ]);
    }

    let base = base_stream(cfg);
    let mut moments = Table::new("multiplier_moments", &["statistic", "draws", "estimate", "se", "target", "z"]);
    let mut push = |name: &str, values: &mut dyn Iterator<Item = f64>, target: f64| {
        let mut m = Moments::default();
        values.for_each(|v| m.push(v));
        let e = m.estimate();
        let z = if e.se > 0.0 { (e.mean - target) / e.se } else { 0.0 };
        moments.push(vec![name.into(), (m.count as usize).into(), e.mean.into(), e.se.into(), target.into(), z.into()]);
    };
    let xi = sample_multipliers(&law, cfg.reps, base.named("multipliers"))?;
    let [_, m2, m3, m4] = law.moments();
    push("E[xi]", &mut xi.iter().copied(), 0.0);
    push("E[xi^2]", &mut xi.iter().map(|v| v * v), m2);
    push("E[xi^3]", &mut xi.iter().map(|v| v.powi(3)), m3);
    push("E[xi^4]", &mut xi.iter().map(|v| v.powi(4)), m4);
    if law == crate::multipliers::MultiplierLaw::BetaTransformed {
        let eta = sample_beta_precursor(cfg.reps, base.named("precursor"));
        let mean = eta.iter().sum::<f64>() / eta.len() as f64;
        push("E[eta]", &mut eta.iter().copied(), 0.25);
        push("Var[eta]", &mut eta.iter().map(|v| (v - mean).powi(2)), 1.0 / 16.0);
    }
    Ok(ExperimentOutput {
        tables: vec![stein, moments],
        documents: vec![],
    })
}
