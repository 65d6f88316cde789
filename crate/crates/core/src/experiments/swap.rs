//! Smooth-function gaps: the Lindeberg swap `S^X` vs `S^{ξX}`, and the
//! Stein route `S^{ξX}` vs `Z` against its explicit right-hand side.

use super::config::ExperimentConfig;
use super::output::{ExperimentOutput, Table};
use super::{base_stream, resolve_epsilon, y_grid, Plan};
use crate::data::{generate, CovarianceModel, GeneratorSpec, SampleMatrix};
use crate::error::{Error, Result};
use crate::multipliers::{hoeffding_bound, linear_form_kernel_deviation, LinearFormSampler, MultiplierLaw, SwapMultiplier, SwappedSumSampler};
use crate::rng::RngContract;
use crate::smoothing::{smooth_gap_profile, IntervalSet, SmoothIndicator, SmoothMaxParams, YGrid};
use crate::stats::{loglog_slope, McEstimate, Moments};
use ndarray::Axis;

const SWAP_HEADER: [&str; 11] = [
    "n", "d", "law", "epsilon", "beta", "gap", "se", "argmax_y", "y_points", "reps_x", "reps_swapped",
];

pub(crate) fn plan_lindeberg(cfg: &ExperimentConfig) -> Plan {
    let laws = 1.0 + f64::from(u8::from(cfg.compare_multiplier.is_some()));
    let mut p = Plan {
        peak_entries: 0.0,
        draws: 0.0,
    };
    for (n, d) in cfg.cells() {
        p.peak_entries = p.peak_entries.max((d * cfg.y_grid_points) as f64);
        p.draws += laws
            * (cfg.reference_reps as f64 * cfg.generator.draws_per_sum(n, d)
                + cfg.reps as f64 * (n * (d + 1)) as f64);
    }
    p
}

/// Half-line smooth indicator, β = ε^{-1} log d and the shift grid shared by
/// every cell of the same dimension.
fn smooth_setup(cfg: &ExperimentConfig, c: &CovarianceModel, rng: RngContract) -> Result<(SmoothIndicator, SmoothMaxParams, Vec<f64>)> {
    let epsilon = resolve_epsilon(cfg, c, rng.named("epsilon"));
    let h = SmoothIndicator::build(IntervalSet::half_line(0.0), epsilon)?;
    let params = SmoothMaxParams::for_epsilon(epsilon, c.dim())?;
    let grid = y_grid(c, cfg.y_grid_points, rng.named("grid"));
    Ok((h, params, grid))
}

/// Grid-restricted `ρ_{h,β}(S_n^X, S_n^{ξX})` along `n`. The `X` side uses the
/// exact law of the sum; the swapped side is sampled row by row.
pub fn run_lindeberg_swap(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let base = base_stream(cfg);
    let mut table = Table::new("lindeberg_swap", &SWAP_HEADER);
    let mut laws = vec![cfg.multiplier];
    laws.extend(cfg.compare_multiplier);
    let mut series: Vec<(String, Vec<f64>, Vec<f64>)> = laws.iter().map(|l| (l.name(), vec![], vec![])).collect();
    for (idx, (n, d)) in cfg.cells().into_iter().enumerate() {
        let rng = base.substream(idx as u64);
        let c = cfg.generator.population_covariance(d)?;
        // the smoothing depends on d only, so a fixed-d sweep compares like with like
        let (h, params, grid) = smooth_setup(cfg, &c, base.named("smoothing").substream(d as u64))?;
        let exact = SwappedSumSampler::new(cfg.generator.clone(), n, d, SwapMultiplier::Identity)?;
        for (law, s) in laws.iter().zip(series.iter_mut()) {
            let swapped = SwappedSumSampler::new(cfg.generator.clone(), n, d, SwapMultiplier::Law(*law))?;
            let profile = smooth_gap_profile(
                &exact,
                &swapped,
                &h,
                &params,
                &YGrid::Scalar(grid.clone()),
                (cfg.reference_reps, cfg.reps),
                rng.named("x"),
                rng.named(&law.name()),
            )?;
            let r = profile.report();
            let k = profile.gaps.iter().position(|g| *g == r.value).unwrap_or(0);
            table.push(vec![
                n.into(),
                d.into(),
                law.name().into(),
                h.epsilon().into(),
                params.beta().into(),
                r.value.into(),
                r.se.into(),
                grid[k].into(),
                grid.len().into(),
                cfg.reference_reps.into(),
                cfg.reps.into(),
            ]);
            s.1.push(n as f64);
            s.2.push(r.value);
        }
    }
    let mut summary = Table::new("lindeberg_swap_summary", &["law", "loglog_slope_vs_n", "first_over_last"]);
    for (name, ns, gaps) in &series {
        let ratio = match (gaps.first(), gaps.last()) {
            (Some(a), Some(b)) if *b > 0.0 => a / b,
            _ => f64::NAN,
        };
        summary.push(vec![name.clone().into(), loglog_slope(ns, gaps).into(), ratio.into()]);
    }
    Ok(ExperimentOutput {
        tables: vec![table, summary],
        documents: vec![],
    })
}

/// One Stein-route comparison for a fixed data matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SteinRouteCell {
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub ses: Vec<f64>,
    /// `(3/2) max{‖h''‖_∞, β‖h'‖_∞}`.
    pub prefactor: f64,
    /// `max_{j,k} |n^{-1} Σ_i X_ij X_ik − C_jk|` for this data set.
    pub delta_n0: f64,
    /// MC estimate of `E max_{j,k} |Σ_i a_ij a_ik (τ(ξ_i) − 1)|`, `a = X/√n`.
    pub kernel_deviation: McEstimate,
    /// `prefactor · (Δ₀ + kernel deviation)`, which bounds the Stein
    /// kernel discrepancy by the triangle inequality.
    pub rhs: f64,
    pub hoeffding: f64,
    /// `√(8 log(2d²)/n) · √(max_j n^{-1} Σ_i X_ij⁴)` for this data set.
    pub nemirovski_term: f64,
    /// `prefactor · (nemirovski_term + hoeffding)`.
    pub rhs_closed_form: f64,
}

/// Gap `|E h(Φ_β(S^{ξX} − y)) − E h(Φ_β(Z − y))|` on `grid` given the data,
/// and the right-hand side assembled from the Stein kernel of the multiplier.
#[allow(clippy::too_many_arguments)]
pub fn stein_route_cell(
    x: &SampleMatrix,
    c: &CovarianceModel,
    law: &MultiplierLaw,
    h: &SmoothIndicator,
    params: &SmoothMaxParams,
    grid: &[f64],
    reps: usize,
    kernel_reps: usize,
    rng: RngContract,
) -> Result<SteinRouteCell> {
    if !law.has_kernel() {
        return Err(Error::Unsupported(format!("the Stein route needs a multiplier with a kernel, got {}", law.name())));
    }
    if c.dim() != x.d() {
        return Err(Error::Structure("covariance dimension does not match the data".into()));
    }
    let n = x.n() as f64;
    let a = x.values().to_owned() / n.sqrt();
    let gram = x.second_moment_matrix();
    let delta_n0 = gram.iter().zip(c.matrix().iter()).fold(0.0f64, |m, (g, s)| m.max((g - s).abs()));
    let sampler = LinearFormSampler::new(a.clone(), *law)?;
    let profile = smooth_gap_profile(
        &sampler,
        c,
        h,
        params,
        &YGrid::Scalar(grid.to_vec()),
        (reps, reps),
        rng.named("multipliers"),
        rng.named("gaussian"),
    )?;
    let kernel_deviation = linear_form_kernel_deviation(a.view(), law, kernel_reps, rng.named("kernel"))?;
    let hoeffding = hoeffding_bound(a.view(), law)?;
    let prefactor = 1.5 * h.derivative_bound(2).max(params.beta() * h.derivative_bound(1));
    let d = x.d() as f64;
    let max_fourth = x
        .values()
        .axis_iter(Axis(1))
        .map(|col| col.iter().map(|v| v.powi(4)).sum::<f64>() / n)
        .fold(0.0, f64::max);
    let nemirovski_term = (8.0 * (2.0 * d * d).ln() / n).sqrt() * max_fourth.sqrt();
    Ok(SteinRouteCell {
        grid: grid.to_vec(),
        gaps: profile.gaps,
        ses: profile.ses,
        prefactor,
        delta_n0,
        rhs: prefactor * (delta_n0 + kernel_deviation.mean),
        kernel_deviation,
        hoeffding,
        nemirovski_term,
        rhs_closed_form: prefactor * (nemirovski_term + hoeffding),
    })
}

const STEIN_HEADER: [&str; 17] = [
    "n",
    "d",
    "draw",
    "y",
    "gap",
    "gap_se",
    "rhs",
    "margin",
    "rhs_closed_form",
    "prefactor",
    "delta_n0",
    "kernel_deviation",
    "kernel_se",
    "hoeffding",
    "nemirovski_term",
    "epsilon",
    "beta",
];

const NEMIROVSKI_HEADER: [&str; 8] = ["n", "d", "generator", "draws", "lhs", "lhs_se", "delta_n1", "rhs"];

pub(crate) fn plan_stein(cfg: &ExperimentConfig) -> Plan {
    let mut p = Plan {
        peak_entries: 0.0,
        draws: 0.0,
    };
    for (n, d) in cfg.cells() {
        p.peak_entries = p.peak_entries.max((n * d + d * d) as f64);
        let per_draw = (cfg.reps * (n + d)) as f64 + (cfg.reference_reps * n) as f64 + (n * d) as f64;
        p.draws += cfg.data_draws as f64 * per_draw;
    }
    p
}

/// Stein-route gaps and right-hand sides per `(n, d)` and data draw, plus
/// the Nemirovski covariance-deviation check for each cell.
pub fn run_stein_route(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let base = base_stream(cfg);
    let mut table = Table::new("stein_route", &STEIN_HEADER);
    let mut nem = Table::new("nemirovski_check", &NEMIROVSKI_HEADER);
    for (idx, (n, d)) in cfg.cells().into_iter().enumerate() {
        let rng = base.substream(idx as u64);
        let c = cfg.generator.population_covariance(d)?;
        let (h, params, grid) = smooth_setup(cfg, &c, rng.named("smoothing"))?;
        for draw in 0..cfg.data_draws {
            let r = rng.substream(draw as u64);
            let x = generate(&cfg.generator, n, d, r.named("data"))?;
            let cell = stein_route_cell(&x, &c, &cfg.multiplier, &h, &params, &grid, cfg.reps, cfg.reference_reps, r)?;
            for (k, y) in grid.iter().enumerate() {
                table.push(vec![
                    n.into(),
                    d.into(),
                    draw.into(),
                    (*y).into(),
                    cell.gaps[k].into(),
                    cell.ses[k].into(),
                    cell.rhs.into(),
                    (cell.rhs - cell.gaps[k]).into(),
                    cell.rhs_closed_form.into(),
                    cell.prefactor.into(),
                    cell.delta_n0.into(),
                    cell.kernel_deviation.mean.into(),
                    cell.kernel_deviation.se.into(),
                    cell.hoeffding.into(),
                    cell.nemirovski_term.into(),
                    h.epsilon().into(),
                    params.beta().into(),
                ]);
            }
        }
        let check = nemirovski_check(&cfg.generator, n, d, cfg.data_draws.max(2), rng.named("nemirovski"))?;
        nem.push(vec![
            n.into(),
            d.into(),
            cfg.generator.name().into(),
            check.draws.into(),
            check.lhs.mean.into(),
            check.lhs.se.into(),
            check.delta_n1.into(),
            check.rhs.into(),
        ]);
    }
    Ok(ExperimentOutput {
        tables: vec![table, nem],
        documents: vec![],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NemirovskiCheck {
    pub draws: usize,
    /// MC estimate of `E max_{j,k} |n^{-1} Σ_i (X_ij X_ik − E X_ij X_ik)|`.
    pub lhs: McEstimate,
    /// `√(n^{-1} E max_j Σ_i X_ij⁴)`, with the expectation estimated on the
    /// same draws.
    pub delta_n1: f64,
    /// `√(8 log(2d²)/n) Δ_{n,1}`.
    pub rhs: f64,
}

/// Compares the covariance deviation of `draws` independent data sets with
/// the Nemirovski-type bound.
pub fn nemirovski_check(spec: &GeneratorSpec, n: usize, d: usize, draws: usize, rng: RngContract) -> Result<NemirovskiCheck> {
    if draws < 2 {
        return Err(crate::error::param("the Nemirovski check needs at least 2 data draws"));
    }
    let c = spec.population_covariance(d)?;
    let (mut lhs, mut fourth) = (Moments::default(), Moments::default());
    for k in 0..draws {
        let x = generate(spec, n, d, rng.substream(k as u64))?;
        let gram = x.second_moment_matrix();
        lhs.push(gram.iter().zip(c.matrix().iter()).fold(0.0f64, |m, (g, s)| m.max((g - s).abs())));
        fourth.push(
            x.values()
                .axis_iter(Axis(1))
                .map(|col| col.iter().map(|v| v.powi(4)).sum::<f64>())
                .fold(0.0, f64::max),
        );
    }
    let nf = n as f64;
    let delta_n1 = (fourth.mean / nf).sqrt();
    let df = d as f64;
    Ok(NemirovskiCheck {
        draws,
        lhs: lhs.estimate(),
        delta_n1,
        rhs: (8.0 * (2.0 * df * df).ln() / nf).sqrt() * delta_n1,
    })
}
