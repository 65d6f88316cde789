//! Browser bindings for three small `hdclt` computations. Every export
//! returns a flat `Float64Array`; the page in `www/` draws it on a canvas.
//!
//! The `*_values` functions are the plain Rust versions the exports wrap, so
//! they can be tested natively.

use hdclt::anticoncentration::{factor_bound, levy_concentration_curve, nazarov_bound};
use hdclt::data::{gaussian_analog_sample, CovarianceModel, GeneratorSpec};
use hdclt::experiments::{run_lower_bound_demo, DRule, ExperimentConfig, ExperimentKind};
use hdclt::smoothing::{smooth_max, IntervalSet, SmoothIndicator, SmoothMaxParams};
use hdclt::RngContract;
use wasm_bindgen::prelude::*;

fn js(e: hdclt::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Smooth indicator of `[lo, hi]` and its first derivative on `points`
/// abscissae spanning `[lo − 4ε, hi + 4ε]`, followed by the smooth max of
/// `(x, 0)` at `β = ln 2 / ε`.
///
/// Layout: `x[points] ++ h[points] ++ h'[points] ++ smax[points]`.
pub fn indicator_values(lo: f64, hi: f64, epsilon: f64, points: usize) -> hdclt::Result<Vec<f64>> {
    let set = IntervalSet::interval(lo, hi)?;
    let h = SmoothIndicator::build(set, epsilon)?;
    let params = SmoothMaxParams::for_epsilon(epsilon, 2)?;
    let points = points.max(2);
    let (a, b) = (lo - 4.0 * epsilon, hi + 4.0 * epsilon);
    let xs: Vec<f64> = (0..points).map(|k| a + (b - a) * k as f64 / (points - 1) as f64).collect();
    let mut out = xs.clone();
    out.extend(xs.iter().map(|x| h.eval(*x)));
    out.extend(xs.iter().map(|x| h.derivative(*x, 1)));
    out.extend(xs.iter().map(|x| smooth_max(&[*x, 0.0], &params)));
    Ok(out)
}

#[wasm_bindgen]
pub fn smooth_indicator(lo: f64, hi: f64, epsilon: f64, points: usize) -> Result<Vec<f64>, JsError> {
    indicator_values(lo, hi, epsilon, points).map_err(js)
}

/// Lévy concentration of the max of a one-factor Gaussian vector with
/// unit noise, against the Nazarov and factor bounds, on `points` window
/// widths in `(0, 0.5]`.
///
/// Layout: `eps ++ estimate ++ se ++ nazarov ++ factor`.
pub fn concentration_values(d: usize, loading: f64, reps: usize, seed: u64, points: usize) -> hdclt::Result<Vec<f64>> {
    let c = CovarianceModel::factor(vec![loading; d], 1.0)?;
    let z = gaussian_analog_sample(&c, reps, RngContract::new(seed, 0));
    let eps: Vec<f64> = (1..=points.max(1)).map(|k| 0.5 * k as f64 / points.max(1) as f64).collect();
    let est = levy_concentration_curve(z.view(), &eps)?;
    let sigma = c.sigma_min();
    let mut out = eps.clone();
    out.extend(est.iter().map(|e| e.value));
    out.extend(est.iter().map(|e| e.se));
    for e in &eps {
        out.push(nazarov_bound(sigma, d as f64, *e)?);
    }
    for e in &eps {
        out.push(factor_bound(loading, *e)?);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn concentration(d: usize, loading: f64, reps: usize, seed: u32, points: usize) -> Result<Vec<f64>, JsError> {
    concentration_values(d, loading, reps, seed.into(), points).map_err(js)
}

/// `P(max_j S_nj ≤ x_n) − e^{-1}` for skewed data with third moment `gamma`
/// at `d = ⌈exp((c n)^{1/3})⌉`, together with the predicted limit.
///
/// Layout per n: `[n, d, gap, se, predicted]`.
pub fn lower_bound_values(ns: &[usize], gamma: f64, c: f64, reps: usize, seed: u64) -> hdclt::Result<Vec<f64>> {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::LowerBoundDemo);
    cfg.generator = GeneratorSpec::SkewedNegativeThirdMoment { gamma };
    cfg.n_grid = ns.to_vec();
    cfg.d_rule = DRule::LogCube { c };
    cfg.reps = reps;
    cfg.master_seed = seed;
    cfg.validate()?;
    let out = run_lower_bound_demo(&cfg)?;
    let t = out.table("lower_bound_demo").expect("lower bound table");
    let labels = t.text_column("generator").expect("generator column");
    let cols: Vec<Vec<f64>> = ["n", "d", "gap", "se", "predicted_gap"]
        .iter()
        .map(|name| t.column(name).expect("numeric column"))
        .collect();
    let mut flat = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        if label.starts_with("main") {
            flat.extend(cols.iter().map(|c| c[i]));
        }
    }
    Ok(flat)
}

#[wasm_bindgen]
pub fn lower_bound(ns: Vec<u32>, gamma: f64, c: f64, reps: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    let ns: Vec<usize> = ns.into_iter().map(|n| n as usize).collect();
    lower_bound_values(&ns, gamma, c, reps, seed.into()).map_err(js)
}
