//! Wild-bootstrap coverage, the conditional covariance identity and the
//! bootstrap distance trend.

use super::config::ExperimentConfig;
use super::output::{ExperimentOutput, Table};
use super::{base_stream, Plan};
use crate::bootstrap::{rho_wb_estimate, simultaneous_band, wild_bootstrap, BootstrapMode};
use crate::data::{generate, SampleMatrix};
use crate::error::Result;
use crate::multipliers::MultiplierLaw;
use crate::rng::{par_map, RngContract};
use crate::stats::{mean_se, Moments};

pub(crate) fn plan(cfg: &ExperimentConfig) -> Plan {
    let (n, d) = cfg.cells()[0];
    let r = cfg.bootstrap_reps as f64;
    let mut draws = cfg.trials as f64 * (r * n as f64 + (n * d) as f64);
    let mut peak = r * d as f64 * 2.0;
    for &m in &cfg.trend_n_grid {
        draws += cfg.data_draws as f64 * (r * (m + d) as f64 + (m * d) as f64);
        peak = peak.max(2.0 * r * d as f64 + (m * d) as f64);
    }
    Plan {
        peak_entries: peak,
        draws,
    }
}

/// Entrywise comparison of the bootstrap second-moment matrix with the
/// centered sample covariance, which it matches in conditional expectation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceIdentityCheck {
    pub max_abs_diff: f64,
    /// Largest `|diff|/se` over entries with positive standard error.
    pub max_z: f64,
    pub entries: usize,
}

pub fn bootstrap_covariance_identity(
    x: &SampleMatrix,
    law: &MultiplierLaw,
    replications: usize,
    rng: RngContract,
) -> Result<CovarianceIdentityCheck> {
    let run = wild_bootstrap(x, law, replications, rng, BootstrapMode::Full)?;
    let draws = run.draws().expect("full mode");
    let centered = x.centered();
    let n = x.n() as f64;
    let target = centered.t().dot(&centered) / n;
    let d = x.d();
    let mut out = CovarianceIdentityCheck {
        max_abs_diff: 0.0,
        max_z: 0.0,
        entries: d * (d + 1) / 2,
    };
    for j in 0..d {
        for k in j..d {
            let mut m = Moments::default();
            draws.rows().into_iter().for_each(|row| m.push(row[j] * row[k]));
            let e = m.estimate();
            let diff = (e.mean - target[[j, k]]).abs();
            out.max_abs_diff = out.max_abs_diff.max(diff);
            if e.se > 0.0 {
                out.max_z = out.max_z.max(diff / e.se);
            }
        }
    }
    Ok(out)
}

const COVERAGE_HEADER: [&str; 10] = [
    "n",
    "d",
    "law",
    "alpha",
    "studentized",
    "trials",
    "R",
    "coverage",
    "coverage_se",
    "mean_critical_value",
];

const COVARIANCE_HEADER: [&str; 7] = ["n", "d", "law", "R", "entries", "max_abs_diff", "max_z"];

const TREND_HEADER: [&str; 9] = ["n", "d", "law", "draws", "R", "rect_mean", "rect_se", "ks_mean", "ks_se"];

/// Coverage of the simultaneous band for the (zero) mean over independent
/// trials, the covariance identity on one data set, and `ρ̂_WB` averaged
/// over data draws along `trend_n_grid`.
pub fn run_bootstrap_coverage(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let base = base_stream(cfg);
    let (n, d) = cfg.cells()[0];
    let law = cfg.multiplier;
    let mean = vec![0.0; d];
    let trials: Vec<usize> = (0..cfg.trials).collect();
    let results = par_map(trials, |k| -> Result<(bool, f64)> {
        let r = base.named("coverage").substream(k as u64);
        let x = generate(&cfg.generator, n, d, r.named("data"))?;
        let band = simultaneous_band(&x, &law, cfg.alpha, cfg.bootstrap_reps, r.named("bootstrap"), cfg.studentize)?;
        Ok((band.covers(&mean), band.critical_value))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let hits: Vec<f64> = results.iter().map(|(c, _)| f64::from(u8::from(*c))).collect();
    let crit: Vec<f64> = results.iter().map(|(_, v)| *v).collect();
    let cov = mean_se(&hits);
    let mut coverage = Table::new("bootstrap_coverage", &COVERAGE_HEADER);
    coverage.push(vec![
        n.into(),
        d.into(),
        law.name().into(),
        cfg.alpha.into(),
        cfg.studentize.into(),
        cfg.trials.into(),
        cfg.bootstrap_reps.into(),
        cov.mean.into(),
        cov.se.into(),
        mean_se(&crit).mean.into(),
    ]);

    let x = generate(&cfg.generator, n, d, base.named("identity-data"))?;
    let check = bootstrap_covariance_identity(&x, &law, cfg.bootstrap_reps, base.named("identity"))?;
    let mut covariance = Table::new("bootstrap_covariance", &COVARIANCE_HEADER);
    covariance.push(vec![
        n.into(),
        d.into(),
        law.name().into(),
        cfg.bootstrap_reps.into(),
        check.entries.into(),
        check.max_abs_diff.into(),
        check.max_z.into(),
    ]);

    let mut trend = Table::new("bootstrap_rho_wb", &TREND_HEADER);
    for (idx, &m) in cfg.trend_n_grid.iter().enumerate() {
        let c = cfg.generator.population_covariance(d)?;
        let stream = base.named("trend").substream(idx as u64);
        let mut rect = Vec::with_capacity(cfg.data_draws);
        let mut ks = Vec::with_capacity(cfg.data_draws);
        for draw in 0..cfg.data_draws {
            let r = stream.substream(draw as u64);
            let x = generate(&cfg.generator, m, d, r.named("data"))?;
            let est = rho_wb_estimate(&x, &law, &c, cfg.bootstrap_reps, cfg.rectangles, r)?;
            rect.push(est.rectangle.value);
            ks.push(est.ks_max.value);
        }
        let (re, ke) = (mean_se(&rect), mean_se(&ks));
        trend.push(vec![
            m.into(),
            d.into(),
            law.name().into(),
            cfg.data_draws.into(),
            cfg.bootstrap_reps.into(),
            re.mean.into(),
            re.se.into(),
            ke.mean.into(),
            ke.se.into(),
        ]);
    }
    Ok(ExperimentOutput {
        tables: vec![coverage, covariance, trend],
        documents: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GeneratorSpec;

    #[test]
    fn identity_is_exact_for_rademacher_in_expectation() {
        let x = generate(&GeneratorSpec::Gaussian { scale: 1.0 }, 30, 4, RngContract::new(5, 0)).unwrap();
        let c = bootstrap_covariance_identity(&x, &MultiplierLaw::Rademacher, 4000, RngContract::new(5, 1)).unwrap();
        assert_eq!(c.entries, 10);
        assert!(c.max_z < 5.0, "{c:?}");
    }
}
