//! Wild (multiplier) bootstrap and simultaneous confidence bands.
//!
//! A replication draws iid multipliers `w_i` and forms
//! `S^WB = n^{-1/2} Σ_i w_i (X_i − X̄)`. Replications run in blocks: each block
//! draws a `block × n` multiplier matrix and multiplies it against the
//! centered data, so the work is one matrix product per block.

use crate::data::{gaussian_analog_sample, CovarianceModel, SampleMatrix};
use crate::error::{param, Error, Result};
use crate::metrics::{ks_max_distance, rectangle_family_distance, DistanceReport, MaxReference};
use crate::multipliers::MultiplierLaw;
use crate::rng::{map_blocks, RngContract, BLOCK_SIZE};
use crate::stats::quantile;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Keep every `R × d` draw.
    #[default]
    Full,
    /// Keep only `max_j S_j^WB`.
    MaxOnly,
    /// Keep only `max_j |S_j^WB|`.
    AbsMaxOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BootstrapStatistics {
    Full(Array2<f64>),
    Scalars(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapRun {
    pub law: MultiplierLaw,
    pub replications: usize,
    pub mode: BootstrapMode,
    pub statistics: BootstrapStatistics,
}

impl BootstrapRun {
    pub fn draws(&self) -> Option<&Array2<f64>> {
        match &self.statistics {
            BootstrapStatistics::Full(a) => Some(a),
            BootstrapStatistics::Scalars(_) => None,
        }
    }
}

/// Runs blocks of replications; `reduce` maps a `block × d` matrix of draws
/// to the block's output.
fn run_blocks<T, F>(centered: &Array2<f64>, law: &MultiplierLaw, reps: usize, rng: RngContract, reduce: F) -> Vec<T>
where
    T: Send,
    F: Fn(Array2<f64>) -> T + Sync + Send,
{
    let n = centered.nrows();
    let scale = (n as f64).sqrt().recip();
    map_blocks(rng, reps, BLOCK_SIZE, |r, range| {
        let mut w = Array2::<f64>::zeros((range.len(), n));
        law.fill(r, w.as_slice_mut().expect("standard layout"));
        reduce(w.dot(centered) * scale)
    })
}

pub fn wild_bootstrap(
    data: &SampleMatrix,
    law: &MultiplierLaw,
    replications: usize,
    rng: RngContract,
    mode: BootstrapMode,
) -> Result<BootstrapRun> {
    law.validate()?;
    if replications == 0 {
        return Err(param("bootstrap needs at least one replication"));
    }
    let centered = data.centered();
    let statistics = match mode {
        BootstrapMode::Full => {
            let blocks = run_blocks(&centered, law, replications, rng, |s| s);
            let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
            BootstrapStatistics::Full(ndarray::concatenate(Axis(0), &views).expect("equal widths"))
        }
        BootstrapMode::MaxOnly | BootstrapMode::AbsMaxOnly => {
            let abs = mode == BootstrapMode::AbsMaxOnly;
            let blocks = run_blocks(&centered, law, replications, rng, |s| {
                s.rows()
                    .into_iter()
                    .map(|row| {
                        if abs {
                            row.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                        } else {
                            row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                        }
                    })
                    .collect::<Vec<f64>>()
            });
            BootstrapStatistics::Scalars(blocks.concat())
        }
    };
    Ok(BootstrapRun {
        law: *law,
        replications,
        mode,
        statistics,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WildBootstrapDistance {
    pub rectangle: DistanceReport,
    pub ks_max: DistanceReport,
}

/// Distance between the conditional law of `S^WB` given the data and
/// `N(0, C_target)`, estimated from `replications` draws on each side.
pub fn rho_wb_estimate(
    data: &SampleMatrix,
    law: &MultiplierLaw,
    c_target: &CovarianceModel,
    replications: usize,
    rectangles: usize,
    rng: RngContract,
) -> Result<WildBootstrapDistance> {
    if c_target.dim() != data.d() {
        return Err(Error::Structure("target covariance dimension does not match the data".into()));
    }
    let run = wild_bootstrap(data, law, replications, rng.named("bootstrap"), BootstrapMode::Full)?;
    let boot = run.draws().expect("full mode");
    let gauss = gaussian_analog_sample(c_target, replications, rng.named("gaussian"));
    Ok(WildBootstrapDistance {
        rectangle: rectangle_family_distance(boot.view(), gauss.view(), rectangles, rng.named("rectangles"))?,
        ks_max: ks_max_distance(boot.view(), MaxReference::Samples(gauss.view()))?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousBand {
    pub critical_value: f64,
    pub centers: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub scales: Vec<f64>,
}

impl SimultaneousBand {
    /// True when every coordinate of `mu` lies in its interval.
    pub fn covers(&self, mu: &[f64]) -> bool {
        mu.iter()
            .zip(self.centers.iter().zip(&self.half_widths))
            .all(|(m, (c, h))| (m - c).abs() <= *h)
    }
}

/// Band `X̄_j ± c_α σ̂_j/√n`, where `c_α` is the type-7 `(1 − α)` quantile of
/// `max_j |S_j^WB|/σ̂_j` and `σ̂_j` is the column standard deviation (divisor
/// `n`), or 1 without studentization.
pub fn simultaneous_band(
    data: &SampleMatrix,
    law: &MultiplierLaw,
    alpha: f64,
    replications: usize,
    rng: RngContract,
    studentize: bool,
) -> Result<SimultaneousBand> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(param(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    law.validate()?;
    if replications == 0 {
        return Err(param("bootstrap needs at least one replication"));
    }
    let n = data.n() as f64;
    let centered = data.centered();
    let scales: Vec<f64> = if studentize {
        let s: Vec<f64> = centered
            .axis_iter(Axis(1))
            .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / n).sqrt())
            .collect();
        let zero: Vec<usize> = s.iter().enumerate().filter(|(_, v)| **v == 0.0).map(|(j, _)| j).collect();
        if !zero.is_empty() {
            return Err(param(format!("zero sample variance in columns {zero:?}")));
        }
        s
    } else {
        vec![1.0; data.d()]
    };
    let inv: Vec<f64> = scales.iter().map(|s| s.recip()).collect();
    let blocks = run_blocks(&centered, law, replications, rng, |s| {
        s.rows()
            .into_iter()
            .map(|row| row.iter().zip(&inv).fold(0.0f64, |m, (v, w)| m.max((v * w).abs())))
            .collect::<Vec<f64>>()
    });
    let critical_value = quantile(&blocks.concat(), 1.0 - alpha);
    Ok(SimultaneousBand {
        critical_value,
        centers: data.column_means(),
        half_widths: scales.iter().map(|s| critical_value * s / n.sqrt()).collect(),
        scales,
    })
}
