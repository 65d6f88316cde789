//! Lower-bound demonstration and moderate-deviation tail ratios.

use super::config::{DRule, ExperimentConfig};
use super::output::{ExperimentOutput, Table};
use super::{base_stream, Plan};
use crate::data::{GeneratorSpec, NormalizedSumSampler, VectorSampler};
use crate::error::{Error, Result};
use crate::metrics::{cramer_ratio, gumbel_xn};
use crate::rng::{map_blocks, BLOCK_SIZE};
use crate::special::norm_sf;

const LOWER_HEADER: [&str; 13] = [
    "n",
    "d",
    "generator",
    "gamma",
    "c",
    "x_n",
    "reps",
    "p_hat",
    "se",
    "reference",
    "gap",
    "abs_gap",
    "predicted_gap",
];

pub(crate) fn plan_lower_bound(cfg: &ExperimentConfig) -> Plan {
    let mut p = Plan {
        peak_entries: 0.0,
        draws: 0.0,
    };
    for (n, d) in cfg.cells() {
        p.peak_entries = p.peak_entries.max(d as f64);
        p.draws += cfg.reps as f64
            * (cfg.generator.draws_per_sum(n, d) + cfg.control_generator.draws_per_sum(n, d));
    }
    p
}

/// `P(max_j S_nj ≤ x)` and its standard error from `reps` exact draws.
fn max_below(spec: &GeneratorSpec, n: usize, d: usize, x: f64, reps: usize, rng: crate::RngContract) -> Result<(f64, f64)> {
    let sampler = NormalizedSumSampler::new(spec.clone(), n, d)?;
    let hits: usize = map_blocks(rng, reps, BLOCK_SIZE, |r, range| {
        let mut buf = vec![0.0; d];
        range
            .filter(|_| {
                sampler.sample_into(r, &mut buf);
                buf.iter().all(|v| *v <= x)
            })
            .count()
    })
    .into_iter()
    .sum();
    let p = hits as f64 / reps as f64;
    Ok((p, (p * (1.0 - p) / reps as f64).sqrt()))
}

/// Limit of `P(max ≤ x_n) − e^{-1}` when `(log d)³/n → c`:
/// `exp(−exp(γ√(2c)/3)) − e^{-1}`.
pub fn predicted_lower_bound_gap(gamma: f64, c: f64) -> f64 {
    (-(gamma * (2.0 * c).sqrt() / 3.0).exp()).exp() - (-1.0f64).exp()
}

/// Probability that the max of a skewed normalized sum stays below the
/// Gaussian `e^{-1}` quantile, against the reference `e^{-1}`, for the
/// configured generator and the symmetric control.
pub fn run_lower_bound_demo(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if !matches!(cfg.generator, GeneratorSpec::SkewedNegativeThirdMoment { .. }) {
        return Err(Error::Config(format!(
            "lower_bound_demo needs the skewed_negative_third_moment generator, got {}",
            cfg.generator.name()
        )));
    }
    let base = base_stream(cfg);
    let reference = (-1.0f64).exp();
    let mut table = Table::new("lower_bound_demo", &LOWER_HEADER);
    for (idx, (n, d)) in cfg.cells().into_iter().enumerate() {
        let rng = base.substream(idx as u64);
        let c = match cfg.d_rule {
            DRule::LogCube { c } => c,
            _ => (d as f64).ln().powi(3) / n as f64,
        };
        let x_n = gumbel_xn(d as f64);
        for (label, spec) in [("main", &cfg.generator), ("control", &cfg.control_generator)] {
            spec.validate(d)?;
            let gamma = spec.skewness();
            let (p, se) = max_below(spec, n, d, x_n, cfg.reps, rng.named(label))?;
            table.push(vec![
                n.into(),
                d.into(),
                format!("{label}:{}", spec.name()).into(),
                gamma.into(),
                c.into(),
                x_n.into(),
                cfg.reps.into(),
                p.into(),
                se.into(),
                reference.into(),
                (p - reference).into(),
                (p - reference).abs().into(),
                predicted_lower_bound_gap(gamma, c).into(),
            ]);
        }
    }
    Ok(ExperimentOutput {
        tables: vec![table],
        documents: vec![],
    })
}

const CRAMER_HEADER: [&str; 11] = [
    "n",
    "x",
    "gamma",
    "reps",
    "tail_hits",
    "p_hat",
    "normal_tail",
    "ratio_hat",
    "ratio_se",
    "cramer_ratio",
    "relative_error",
];

/// Smallest expected number of tail hits the Cramér check accepts.
pub const MIN_EXPECTED_TAIL_HITS: f64 = 100.0;

pub(crate) fn plan_cramer(cfg: &ExperimentConfig) -> Result<Plan> {
    let mut p = Plan {
        peak_entries: cfg.x_grid.len() as f64,
        draws: 0.0,
    };
    for &n in &cfg.n_grid {
        for &x in &cfg.x_grid {
            let expected = cfg.reps as f64 * norm_sf(x);
            if expected < MIN_EXPECTED_TAIL_HITS {
                return Err(Error::Planning(format!(
                    "tail P(S > {x}) is too rare for {} replications: about {expected:.1} expected hits, need {MIN_EXPECTED_TAIL_HITS}",
                    cfg.reps
                )));
            }
        }
        p.draws += cfg.reps as f64 * cfg.generator.draws_per_sum(n, 1);
    }
    Ok(p)
}

/// `P̂(S_n > x)/(1 − Φ(x))` for a scalar column against `exp(γx³/(6√n))`.
pub fn run_cramer_ratio_check(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    plan_cramer(cfg)?;
    let base = base_stream(cfg);
    let gamma = cfg.generator.skewness();
    let mut table = Table::new("cramer_ratio_check", &CRAMER_HEADER);
    for (idx, &n) in cfg.n_grid.iter().enumerate() {
        let sampler = NormalizedSumSampler::new(cfg.generator.clone(), n, 1)?;
        let xs = &cfg.x_grid;
        let blocks = map_blocks(base.substream(idx as u64), cfg.reps, BLOCK_SIZE, |r, range| {
            let mut hits = vec![0usize; xs.len()];
            let mut s = [0.0];
            for _ in range {
                sampler.sample_into(r, &mut s);
                hits.iter_mut().zip(xs).for_each(|(h, x)| *h += usize::from(s[0] > *x));
            }
            hits
        });
        let reps = cfg.reps as f64;
        for (k, &x) in xs.iter().enumerate() {
            let hits: usize = blocks.iter().map(|b| b[k]).sum();
            let p = hits as f64 / reps;
            let tail = norm_sf(x);
            let predicted = cramer_ratio(n as f64, x, gamma);
            table.push(vec![
                n.into(),
                x.into(),
                gamma.into(),
                cfg.reps.into(),
                hits.into(),
                p.into(),
                tail.into(),
                (p / tail).into(),
                ((p * (1.0 - p) / reps).sqrt() / tail).into(),
                predicted.into(),
                (p / tail / predicted - 1.0).into(),
            ]);
        }
    }
    Ok(ExperimentOutput {
        tables: vec![table],
        documents: vec![],
    })
}
