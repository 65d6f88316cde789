//! Distances between sampled laws, the law of an iid Gaussian maximum, and
//! Gumbel-scale helpers.
//!
//! Distances over the max class reduce to a Kolmogorov statistic on the
//! scalar maxima `max_j F_j`. Over hyperrectangles the sup is not attainable,
//! so [`rectangle_family_distance`] reports the largest gap over a finite
//! family of rectangles: a lower estimate by construction.

use crate::error::{param, Result};
use crate::rng::RngContract;
use crate::special::{ln_norm_cdf, norm_isf};
use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceClass {
    MaxClass,
    AbsMaxClass,
    RectangleFamily,
    SmoothTestFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub value: f64,
    pub se: f64,
    pub class: DistanceClass,
    /// Sets (or shift points) over which the sup was taken.
    pub family_size: usize,
    /// True when the sup was restricted to a finite family.
    pub grid_restricted: bool,
}

/// Minimum replications for Kolmogorov-type distances.
pub const MIN_REPS: usize = 1000;

/// Row maxima `max_j F_j`.
pub fn max_statistics(samples: ArrayView2<'_, f64>) -> Vec<f64> {
    samples
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Row maxima `max_j |F_j|`.
pub fn abs_max_statistics(samples: ArrayView2<'_, f64>) -> Vec<f64> {
    samples
        .rows()
        .into_iter()
        .map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov statistic with the standard error of the ECDF
/// difference at the maximizing point. Returns `(value, se, argmax)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let a = sorted(a.to_vec());
    let b = sorted(b.to_vec());
    ks_two_sample_sorted(&a, &b)
}

fn ks_two_sample_sorted(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (m, k) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        let (fa, fb) = (i as f64 / m, j as f64 / k);
        let gap = (fa - fb).abs();
        if gap > best.0 {
            let se = (fa * (1.0 - fa) / m + fb * (1.0 - fb) / k).sqrt();
            best = (gap, se, t);
        }
    }
    best
}

/// One-sample Kolmogorov statistic against an exact CDF evaluated at the
/// jump points. Returns `(value, se, argmax)`.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let a = sorted(a.to_vec());
    let m = a.len() as f64;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    let mut i = 0;
    while i < a.len() {
        let t = a[i];
        let below = i as f64 / m;
        while i < a.len() && a[i] == t {
            i += 1;
        }
        let at = i as f64 / m;
        let f = cdf(t);
        let gap = (at - f).abs().max((f - below).abs());
        if gap > best.0 {
            best = (gap, (f * (1.0 - f) / m).sqrt(), t);
        }
    }
    best
}

/// Reference law for the max statistic.
pub enum MaxReference<'a> {
    Samples(ArrayView2<'a, f64>),
    Cdf(&'a dyn Fn(f64) -> f64),
}

fn check_reps(r: usize) -> Result<()> {
    if r < MIN_REPS {
        Err(param(format!("Kolmogorov distances need at least {MIN_REPS} replications, got {r}")))
    } else {
        Ok(())
    }
}

fn ks_report(stats_f: Vec<f64>, reference: MaxReference<'_>, abs: bool) -> Result<DistanceReport> {
    check_reps(stats_f.len())?;
    let (value, se, _) = match reference {
        MaxReference::Samples(g) => {
            check_reps(g.nrows())?;
            let sg = if abs { abs_max_statistics(g) } else { max_statistics(g) };
            ks_two_sample(&stats_f, &sg)
        }
        MaxReference::Cdf(cdf) => ks_one_sample(&stats_f, cdf),
    };
    Ok(DistanceReport {
        value,
        se,
        class: if abs { DistanceClass::AbsMaxClass } else { DistanceClass::MaxClass },
        family_size: 0,
        grid_restricted: false,
    })
}

/// `sup_t |P(max_j F_j ≤ t) − P(max_j G_j ≤ t)|`.
pub fn ks_max_distance(samples_f: ArrayView2<'_, f64>, reference: MaxReference<'_>) -> Result<DistanceReport> {
    ks_report(max_statistics(samples_f), reference, false)
}

/// The same over `max_j |F_j|`; equals [`ks_max_distance`] on diamond-stacked samples.
pub fn ks_abs_max_distance(samples_f: ArrayView2<'_, f64>, reference: MaxReference<'_>) -> Result<DistanceReport> {
    ks_report(abs_max_statistics(samples_f), reference, true)
}

/// Number of one-sided max rectangles `{max_j x_j ≤ t}` always included.
pub const MAX_CLASS_RECTANGLES: usize = 100;

/// Axis-aligned box; infinite faces allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Rectangle {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Rectangle {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

fn quantile_at(sorted: &[f64], u: f64) -> f64 {
    let idx = ((u * sorted.len() as f64) as usize).min(sorted.len() - 1);
    sorted[idx]
}

/// Draws `k` rectangles with faces at pooled marginal quantiles; each face
/// is infinite with probability 1/4. The first `k` rectangles for a given
/// stream do not depend on the total count, so families nest.
pub fn random_rectangles(pooled_columns: &[Vec<f64>], k: usize, rng: RngContract) -> Vec<Rectangle> {
    let mut r = rng.rng();
    (0..k)
        .map(|_| {
            let mut lower = Vec::with_capacity(pooled_columns.len());
            let mut upper = Vec::with_capacity(pooled_columns.len());
            for col in pooled_columns {
                let (u, v): (f64, f64) = (r.random(), r.random());
                let (u, v) = (u.min(v), u.max(v));
                let lo_inf = r.random::<f64>() < 0.25;
                let hi_inf = r.random::<f64>() < 0.25;
                lower.push(if lo_inf { f64::NEG_INFINITY } else { quantile_at(col, u) });
                upper.push(if hi_inf { f64::INFINITY } else { quantile_at(col, v) });
            }
            Rectangle { lower, upper }
        })
        .collect()
}

fn fraction_inside(samples: ArrayView2<'_, f64>, rect: &Rectangle) -> f64 {
    let hits = samples
        .rows()
        .into_iter()
        .filter(|row| {
            row.iter()
                .zip(rect.lower.iter().zip(&rect.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
        })
        .count();
    hits as f64 / samples.nrows() as f64
}

/// Largest probability gap over the full-space rectangle, `k` random
/// quantile rectangles, [`MAX_CLASS_RECTANGLES`] one-sided max rectangles and
/// the max rectangle at the Kolmogorov argmax. The result is therefore at
/// least the max-class Kolmogorov distance on the same samples.
pub fn rectangle_family_distance(
    samples_f: ArrayView2<'_, f64>,
    samples_g: ArrayView2<'_, f64>,
    k: usize,
    rng: RngContract,
) -> Result<DistanceReport> {
    if k == 0 {
        return Err(param("rectangle family needs K >= 1"));
    }
    let d = samples_f.ncols();
    if samples_g.ncols() != d {
        return Err(param("sample widths differ"));
    }
    check_reps(samples_f.nrows())?;
    check_reps(samples_g.nrows())?;
    let (m, n) = (samples_f.nrows() as f64, samples_g.nrows() as f64);
    let gap_se = |pf: f64, pg: f64| ((pf - pg).abs(), (pf * (1.0 - pf) / m + pg * (1.0 - pg) / n).sqrt());

    // one-sided max rectangles straight from the sorted maxima
    let mf = sorted(max_statistics(samples_f));
    let mg = sorted(max_statistics(samples_g));
    let ecdf = |s: &[f64], t: f64| s.partition_point(|v| *v <= t) as f64 / s.len() as f64;
    let (_, _, t_star) = ks_two_sample_sorted(&mf, &mg);
    let pooled_max = sorted(mf.iter().chain(&mg).copied().collect());
    let mut best = (0.0, 0.0);
    let mut consider = |g: (f64, f64)| {
        if g.0 > best.0 {
            best = g;
        }
    };
    for q in 1..=MAX_CLASS_RECTANGLES {
        let t = quantile_at(&pooled_max, q as f64 / (MAX_CLASS_RECTANGLES + 1) as f64);
        consider(gap_se(ecdf(&mf, t), ecdf(&mg, t)));
    }
    if t_star.is_finite() {
        consider(gap_se(ecdf(&mf, t_star), ecdf(&mg, t_star)));
    }

    let pooled_columns: Vec<Vec<f64>> = (0..d)
        .map(|j| sorted(samples_f.column(j).iter().chain(samples_g.column(j).iter()).copied().collect()))
        .collect();
    let rects = random_rectangles(&pooled_columns, k, rng);
    let gaps = crate::rng::par_map(rects, |r| gap_se(fraction_inside(samples_f, &r), fraction_inside(samples_g, &r)));
    gaps.into_iter().for_each(&mut consider);

    Ok(DistanceReport {
        value: best.0,
        se: best.1,
        class: DistanceClass::RectangleFamily,
        family_size: k + MAX_CLASS_RECTANGLES + 2,
        grid_restricted: true,
    })
}

/// `P(max_{j≤d} ζ_j ≤ x) = Φ(x)^d` for iid standard normals, in log space.
pub fn iid_gauss_max_cdf(x: f64, d: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    (d * ln_norm_cdf(x)).exp()
}

/// `x_n = Φ^{-1}(e^{-1/d})`, the solution of `Φ(x)^d = e^{-1}`.
pub fn gumbel_xn(d: f64) -> f64 {
    norm_isf(-(-1.0 / d).exp_m1())
}

/// `b_n = √(2 log d) − (log log d + log 4π)/(2√(2 log d))`.
pub fn gumbel_bn(d: f64) -> f64 {
    let r = (2.0 * d.ln()).sqrt();
    r - (d.ln().ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * r)
}

/// `exp(γ x³ / (6√n))`.
pub fn cramer_ratio(n: f64, x: f64, gamma: f64) -> f64 {
    (gamma * x.powi(3) / (6.0 * n.sqrt())).exp()
}
