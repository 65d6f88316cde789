//! Concentration functions of maxima and the Gaussian anti-concentration bounds.
//!
//! The concentration function is `C_F(ε) = sup_y P(0 ≤ max_j (F_j − y_j) ≤ ε)`.
//! The sup over `y ∈ R^d` is not estimable, so the estimators restrict it to
//! scalar shifts `y = t·1` (or a supplied finite family) and return a lower
//! estimate. That is the direction needed to check the upper bounds here.

use crate::error::{param, Result};
use crate::metrics::max_statistics;
use crate::stats::quantile_sorted;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationMode {
    /// Windows `[t, t+ε]` for the scalar max: `y = t·1`.
    ScalarMax,
    /// Supremum over a supplied finite set of shift vectors.
    YFamily,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub se: f64,
    pub mode: ConcentrationMode,
    /// Left end of the best window (scalar mode) or index of the best shift.
    pub location: f64,
}

/// Minimum replications for concentration estimates.
pub const MIN_REPS: usize = 1000;

/// Largest fraction of sorted values inside a closed window of width `eps`.
/// Returns `(fraction, left end)`.
pub fn max_window_fraction(sorted: &[f64], eps: f64) -> (f64, f64) {
    let mut best = (0usize, sorted.first().copied().unwrap_or(0.0));
    let mut hi = 0;
    for (lo, &t) in sorted.iter().enumerate() {
        if hi < lo {
            hi = lo;
        }
        while hi < sorted.len() && sorted[hi] <= t + eps {
            hi += 1;
        }
        if hi - lo > best.0 {
            best = (hi - lo, t);
        }
    }
    (best.0 as f64 / sorted.len().max(1) as f64, best.1)
}

fn estimate_from_sorted(sorted: &[f64], epsilon: f64) -> ConcentrationEstimate {
    let (p, t) = max_window_fraction(sorted, epsilon);
    ConcentrationEstimate {
        epsilon,
        value: p,
        se: (p * (1.0 - p) / sorted.len() as f64).sqrt(),
        mode: ConcentrationMode::ScalarMax,
        location: t,
    }
}

fn sorted_maxima(samples: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if samples.nrows() < MIN_REPS {
        return Err(param(format!(
            "concentration estimates need at least {MIN_REPS} replications, got {}",
            samples.nrows()
        )));
    }
    let mut m = max_statistics(samples);
    m.sort_by(f64::total_cmp);
    Ok(m)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(param(format!("epsilon must be finite and >= 0, got {epsilon}")))
    }
}

/// `sup_t P(t ≤ max_j F_j ≤ t + ε)` from a `reps × d` sample.
pub fn levy_concentration_scalar_max(samples: ArrayView2<'_, f64>, epsilon: f64) -> Result<ConcentrationEstimate> {
    check_epsilon(epsilon)?;
    Ok(estimate_from_sorted(&sorted_maxima(samples)?, epsilon))
}

/// Scalar-max concentration at several widths from one sort.
pub fn levy_concentration_curve(samples: ArrayView2<'_, f64>, epsilons: &[f64]) -> Result<Vec<ConcentrationEstimate>> {
    let sorted = sorted_maxima(samples)?;
    epsilons
        .iter()
        .map(|&e| {
            check_epsilon(e)?;
            Ok(estimate_from_sorted(&sorted, e))
        })
        .collect()
}

/// `max_{y ∈ family} P(0 ≤ max_j (F_j − y_j) ≤ ε)`.
pub fn levy_concentration_y_family(
    samples: ArrayView2<'_, f64>,
    family: &[Vec<f64>],
    epsilon: f64,
) -> Result<ConcentrationEstimate> {
    check_epsilon(epsilon)?;
    if family.is_empty() {
        return Err(param("y family must be nonempty"));
    }
    if samples.nrows() < MIN_REPS {
        return Err(param(format!("concentration estimates need at least {MIN_REPS} replications")));
    }
    let reps = samples.nrows() as f64;
    let mut best = (0.0, 0usize);
    for (k, y) in family.iter().enumerate() {
        if y.len() != samples.ncols() {
            return Err(param("shift vector length does not match the sample width"));
        }
        let hits = samples
            .rows()
            .into_iter()
            .filter(|row| {
                let m = row.iter().zip(y).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
                (0.0..=epsilon).contains(&m)
            })
            .count();
        let p = hits as f64 / reps;
        if p > best.0 {
            best = (p, k);
        }
    }
    Ok(ConcentrationEstimate {
        epsilon,
        value: best.0,
        se: (best.0 * (1.0 - best.0) / reps).sqrt(),
        mode: ConcentrationMode::YFamily,
        location: best.1 as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    /// `max_ε C(ε)/ε` over the grid.
    pub value: f64,
    pub argmax_epsilon: f64,
    pub grid: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Set when the maximizing ε is the smallest grid point and the ratio is
    /// still growing like `1/ε` there, which signals an atom or a grid that
    /// is too coarse.
    pub unstable: bool,
}

/// Points in the default Θ grid.
pub const THETA_GRID_POINTS: usize = 20;

/// Geometric grid over `[0.01, 1] · scale`.
pub fn default_theta_grid(scale: f64) -> Vec<f64> {
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let (lo, hi) = (0.01f64.ln(), 0.0f64);
    (0..THETA_GRID_POINTS)
        .map(|i| scale * (lo + (hi - lo) * i as f64 / (THETA_GRID_POINTS - 1) as f64).exp())
        .collect()
}

/// `Θ ≈ sup_ε C(ε)/ε` over a grid; the default grid spans
/// `[0.01, 1]·IQR` of the sampled maxima.
pub fn theta_estimate(samples: ArrayView2<'_, f64>, eps_grid: Option<&[f64]>) -> Result<ThetaEstimate> {
    let sorted = sorted_maxima(samples)?;
    let grid = match eps_grid {
        Some(g) => {
            if g.is_empty() {
                return Err(param("epsilon grid must be nonempty"));
            }
            if g.iter().any(|e| !(e.is_finite() && *e > 0.0)) || g.windows(2).any(|w| w[0] > w[1]) {
                return Err(param("epsilon grid must be positive and sorted"));
            }
            g.to_vec()
        }
        None => default_theta_grid(quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)),
    };
    let ratios: Vec<f64> = grid
        .iter()
        .map(|&e| max_window_fraction(&sorted, e).0 / e)
        .collect();
    let (i, value) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let unstable = i == 0
        && ratios.len() > 1
        && (ratios[0] > 2.0 * ratios[1] || ratios[0] / ratios[1] >= 0.9 * grid[1] / grid[0]);
    Ok(ThetaEstimate {
        value,
        argmax_epsilon: grid[i],
        grid,
        ratios,
        unstable,
    })
}

/// `(√(2 log d) + 2)/σ̲`: the slope of Nazarov's bound in ε.
pub fn nazarov_rate(sigma_min: f64, d: f64) -> Result<f64> {
    if !(sigma_min > 0.0) {
        return Err(param(format!("Nazarov's inequality needs sigma_min > 0, got {sigma_min}")));
    }
    Ok(((2.0 * d.ln()).sqrt() + 2.0) / sigma_min)
}

/// `min{1, (ε/σ̲)(√(2 log d) + 2)}`.
pub fn nazarov_bound(sigma_min: f64, d: f64, epsilon: f64) -> Result<f64> {
    Ok((epsilon * nazarov_rate(sigma_min, d)?).min(1.0))
}

/// `min{1, ε/(√(2π) 𝔞)}` with `𝔞 = min_j |a_j|`; free of `d`.
pub fn factor_bound(a_min: f64, epsilon: f64) -> Result<f64> {
    if !(a_min > 0.0) {
        return Err(param(format!("factor bound needs a_min > 0, got {a_min}")));
    }
    Ok((epsilon / ((2.0 * std::f64::consts::PI).sqrt() * a_min)).min(1.0))
}
