//! Distance sweeps over `(n, d)` grids.

use super::config::ExperimentConfig;
use super::output::{Cell, ExperimentOutput, Table};
use super::{base_stream, resolve_epsilon, Plan};
use crate::anticoncentration::{default_theta_grid, nazarov_rate};
use crate::bounds::{bound_report, rate_terms, theorem_bound, BoundInputs};
use crate::data::{gaussian_analog_sample, generate, map_samples, sample_normalized_sums, GeneratorSpec, NormalizedSumSampler};
use crate::error::{param, Error, Result};
use crate::metrics::{iid_gauss_max_cdf, ks_max_distance, ks_one_sample, rectangle_family_distance, MaxReference};
use crate::quadrature::integrate;
use crate::special::{ln_norm_cdf, norm_pdf};
use crate::stats::loglog_slope;
use std::collections::BTreeMap;

const CONVERGENCE_HEADER: [&str; 15] = [
    "n",
    "d",
    "reps",
    "ks_max",
    "ks_se",
    "ks_reference",
    "rect_distance",
    "rect_se",
    "rect_family_size",
    "epsilon",
    "b_n",
    "delta_n1",
    "delta_n2",
    "theorem_bound",
    "coupling_rhs",
];

const SUMMARY_HEADER: [&str; 3] = ["quantity", "loglog_slope_vs_n", "points"];

pub(crate) fn plan_convergence(cfg: &ExperimentConfig) -> Plan {
    let mut p = Plan {
        peak_entries: 0.0,
        draws: 0.0,
    };
    for (n, d) in cfg.cells() {
        let (nf, df) = (n as f64, d as f64);
        p.peak_entries = p.peak_entries.max((cfg.reps + cfg.reference_reps) as f64 * df + nf * df);
        p.draws += cfg.reps as f64 * cfg.generator.draws_per_sum(n, d) + cfg.reference_reps as f64 * df + nf * df;
    }
    p
}

/// Max-class and rectangle-family distances between `S_n` and its Gaussian
/// analog along the grid, with the assembled rate for one data draw per cell.
pub fn run_convergence_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let base = base_stream(cfg);
    let mut table = Table::new("convergence_sweep", &CONVERGENCE_HEADER);
    let (mut ns, mut ks, mut rect, mut bound) = (vec![], vec![], vec![], vec![]);
    for (idx, (n, d)) in cfg.cells().into_iter().enumerate() {
        let rng = base.substream(idx as u64);
        let c = cfg.generator.population_covariance(d)?;
        let f = sample_normalized_sums(&cfg.generator, n, d, cfg.reps, rng.named("sums"))?;
        let g = gaussian_analog_sample(&c, cfg.reference_reps, rng.named("gaussian"));
        let (ks_report, reference) = match c.identity_scale() {
            Some(sd) if sd > 0.0 => {
                let cdf = move |x: f64| iid_gauss_max_cdf(x / sd, d as f64);
                (ks_max_distance(f.view(), MaxReference::Cdf(&cdf))?, "exact_cdf")
            }
            _ => (ks_max_distance(f.view(), MaxReference::Samples(g.view()))?, "two_sample"),
        };
        let rect_report = rectangle_family_distance(f.view(), g.view(), cfg.rectangles, rng.named("rectangles"))?;
        drop((f, g));
        let data = generate(&cfg.generator, n, d, rng.named("data"))?;
        let epsilon = resolve_epsilon(cfg, &c, rng.named("quantiles"));
        let report = bound_report(&BoundInputs {
            data: &data,
            covariance: Some(&c),
            generator: Some(&cfg.generator),
            epsilon,
            multiplier_bound: None,
        })?;
        table.push(vec![
            n.into(),
            d.into(),
            cfg.reps.into(),
            ks_report.value.into(),
            ks_report.se.into(),
            reference.into(),
            rect_report.value.into(),
            rect_report.se.into(),
            rect_report.family_size.into(),
            epsilon.into(),
            report.b_n.into(),
            report.delta_n1.into(),
            report.delta_n2.into(),
            report.total.into(),
            report.coupling_rhs.into(),
        ]);
        ns.push(n as f64);
        ks.push(ks_report.value);
        rect.push(rect_report.value);
        bound.push(report.total);
    }
    let mut summary = Table::new("convergence_sweep_summary", &SUMMARY_HEADER);
    for (name, ys) in [("ks_max", &ks), ("rect_distance", &rect), ("theorem_bound", &bound)] {
        summary.push(vec![name.into(), loglog_slope(&ns, ys).into(), ns.len().into()]);
    }
    Ok(ExperimentOutput {
        tables: vec![table, summary],
        documents: vec![],
    })
}

/// Tabulated `P(max_j (a_j Z_0 + σ Z_j) ≤ t)` for iid standard normals,
/// linearly interpolated between nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMaxCdf {
    pub t: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl FactorMaxCdf {
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.t.partition_point(|v| *v <= x);
        if k == 0 {
            return 0.0;
        }
        if k == self.t.len() {
            return 1.0;
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let w = (x - t0) / (t1 - t0);
        self.cdf[k - 1] + w * (self.cdf[k] - self.cdf[k - 1])
    }

    /// `sup_t P(t ≤ max ≤ t + ε)` over table nodes `t`.
    pub fn concentration(&self, epsilon: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.cdf)
            .map(|(t, c)| self.eval(t + epsilon) - c)
            .fold(0.0, f64::max)
    }

    /// Value of `t` with `cdf(t) = p`, by bisection on the interpolant.
    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.cdf.partition_point(|c| *c < p).min(self.t.len() - 1);
        if k == 0 {
            return self.t[0];
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let w = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.0 };
        self.t[k - 1] + w * (self.t[k] - self.t[k - 1])
    }
}

/// Integrates `φ(z) Π_j Φ((t − a_j z)/σ)` over `z` at `points` nodes that
/// span the `[1e-12, 1 − 1e-12]` probability range. Equal loadings are grouped.
pub fn factor_max_cdf_table(loadings: &[f64], noise_sd: f64, points: usize) -> Result<FactorMaxCdf> {
    if !(noise_sd > 0.0) {
        return Err(param("the factor-max CDF table needs noise_sd > 0"));
    }
    if loadings.is_empty() || points < 2 {
        return Err(param("the factor-max CDF table needs loadings and at least 2 points"));
    }
    let mut groups: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for a in loadings {
        groups.entry(a.to_bits()).or_insert((*a, 0.0)).1 += 1.0;
    }
    let groups: Vec<(f64, f64)> = groups.into_values().collect();
    let cdf = |t: f64| -> Result<f64> {
        let v = integrate(
            |z| {
                let s: f64 = groups.iter().map(|(a, m)| m * ln_norm_cdf((t - a * z) / noise_sd)).sum();
                norm_pdf(z) * s.exp()
            },
            -9.0,
            9.0,
            1e-13,
        )?;
        Ok(v.clamp(0.0, 1.0))
    };
    let a_max = loadings.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let spread = 9.0 * (a_max + noise_sd);
    let bisect = |target: f64| -> Result<f64> {
        let (mut lo, mut hi) = (-spread, spread + noise_sd * (2.0 * (loadings.len() as f64).ln()).sqrt());
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let (lo, hi) = (bisect(1e-12)?, bisect(1.0 - 1e-12)?);
    let t: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let values = t.iter().map(|x| cdf(*x)).collect::<Result<Vec<f64>>>()?;
    Ok(FactorMaxCdf { t, cdf: values })
}

/// Table nodes for the factor-max CDF.
const FACTOR_TABLE_POINTS: usize = 4001;

const FACTOR_HEADER: [&str; 15] = [
    "n",
    "d",
    "reps",
    "ks_max",
    "ks_se",
    "a_min",
    "sigma_min",
    "theta_scalar_exact",
    "theta_factor",
    "theta_nazarov",
    "b_n",
    "delta_n1",
    "delta_n2",
    "rate_factor",
    "rate_nazarov",
];

pub(crate) fn plan_factor(cfg: &ExperimentConfig) -> Plan {
    let mut p = Plan {
        peak_entries: 0.0,
        draws: 0.0,
    };
    for (n, d) in cfg.cells() {
        p.peak_entries = p.peak_entries.max(cfg.reps as f64 + d as f64);
        p.draws += cfg.reps as f64 * cfg.generator.draws_per_sum(n, d);
    }
    p
}

/// Max-class distance of a factor-model `S_n` against the exact law of its
/// Gaussian analog's maximum, beside the factor and Nazarov anti-concentration
/// routes to the rate.
pub fn run_factor_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (noise_sd, spec) = match &cfg.generator {
        g @ GeneratorSpec::FactorModel { noise_sd, .. } => (*noise_sd, g.clone()),
        other => {
            return Err(Error::Config(format!(
                "factor_sweep needs the factor_model generator, got {}",
                other.name()
            )))
        }
    };
    let base = base_stream(cfg);
    let mut table = Table::new("factor_sweep", &FACTOR_HEADER);
    let (mut ns, mut ks) = (vec![], vec![]);
    for (idx, (n, d)) in cfg.cells().into_iter().enumerate() {
        let rng = base.substream(idx as u64);
        let a = spec.loadings(d).expect("factor generator");
        let a_min = a.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if !(a_min > 0.0) {
            return Err(param("factor sweep needs min |a_j| > 0"));
        }
        let c = spec.population_covariance(d)?;
        let table_cdf = factor_max_cdf_table(&a, noise_sd, FACTOR_TABLE_POINTS)?;
        let sampler = NormalizedSumSampler::new(spec.clone(), n, d)?;
        let maxima = map_samples(&sampler, cfg.reps, rng.named("sums"), |x| {
            x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        });
        let (ks_value, ks_se, _) = ks_one_sample(&maxima, |x| table_cdf.eval(x));
        let iqr = table_cdf.quantile(0.75) - table_cdf.quantile(0.25);
        let theta_exact = default_theta_grid(iqr)
            .into_iter()
            .map(|e| table_cdf.concentration(e) / e)
            .fold(0.0, f64::max);
        let theta_factor = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * a_min);
        let sigma_min = c.sigma_min();
        let theta_nazarov = nazarov_rate(sigma_min, d as f64)?;
        let m4 = (0..d).map(|j| spec.column_moments(j, d)[3]).fold(0.0, f64::max);
        let b_n = m4.sqrt().max(1.0);
        let rates = rate_terms(b_n, 1.0, 4.0, n as f64, d as f64)?;
        table.push(vec![
            n.into(),
            d.into(),
            cfg.reps.into(),
            ks_value.into(),
            ks_se.into(),
            a_min.into(),
            sigma_min.into(),
            theta_exact.into(),
            theta_factor.into(),
            theta_nazarov.into(),
            b_n.into(),
            rates.delta_n1.into(),
            rates.delta_n2.into(),
            Cell::from(theorem_bound(theta_factor, rates.delta_n1, rates.delta_n2)?),
            Cell::from(theorem_bound(theta_nazarov, rates.delta_n1, rates.delta_n2)?),
        ]);
        ns.push(n as f64);
        ks.push(ks_value);
    }
    let mut summary = Table::new("factor_sweep_summary", &SUMMARY_HEADER);
    summary.push(vec!["ks_max".into(), loglog_slope(&ns, &ks).into(), ns.len().into()]);
    Ok(ExperimentOutput {
        tables: vec![table, summary],
        documents: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;

    #[test]
    fn factor_table_matches_closed_forms() {
        // one coordinate: a Z0 + σ Z1 ~ N(0, a² + σ²)
        let t = factor_max_cdf_table(&[0.6], 0.8, FACTOR_TABLE_POINTS).unwrap();
        for x in [-1.5, 0.0, 0.7, 2.0] {
            assert!((t.eval(x) - norm_cdf(x)).abs() < 1e-5);
        }
        // P(max ≤ 0) for two exchangeable normals with correlation ρ:
        // 1/4 + asin(ρ)/(2π)
        let t = factor_max_cdf_table(&[1.0, 1.0], 1.0, 2001).unwrap();
        let exact = 0.25 + 0.5f64.asin() / (2.0 * std::f64::consts::PI);
        assert!((t.eval(0.0) - exact).abs() < 1e-6);
        assert!((t.quantile(t.eval(0.3)) - 0.3).abs() < 1e-9);
    }

    #[test]
    fn non_factor_generator_is_a_config_error() {
        let cfg = ExperimentConfig::defaults(super::super::ExperimentKind::ConvergenceSweep);
        let mut f = cfg.clone();
        f.experiment = super::super::ExperimentKind::FactorSweep;
        assert!(matches!(run_factor_sweep(&f), Err(Error::Config(_))));
    }
}
