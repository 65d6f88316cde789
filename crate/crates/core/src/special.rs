//! Standard normal distribution functions with tail-accurate variants.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate for large positive `x`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `log Φ(x)` without cancellation on either side.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-norm_sf(x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// Inverse of the upper tail: the `x` with `1 − Φ(x) = q`.
///
/// Parameterised by the tail mass so that quantiles at `1 − 1/d` keep full
/// relative precision for huge `d`. Newton steps on `log(1 − Φ)` polish the
/// rational approximation behind `erfc_inv`.
pub fn norm_isf(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * q);
    for _ in 0..2 {
        let s = norm_sf(x);
        if !(x.is_finite() && s > 0.0) {
            break;
        }
        // d/dx log sf = -pdf/sf
        x -= (s.ln() - q.ln()) / (-norm_pdf(x) / s);
    }
    x
}

/// Φ^{-1}(p).
pub fn norm_ppf(p: f64) -> f64 {
    if p < 0.5 {
        -norm_isf(p)
    } else {
        norm_isf(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((norm_sf(8.0) / 6.220_960_574_271_784e-16 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn isf_inverts_sf_deep_in_tail() {
        for &q in &[0.4, 0.1, 1e-3, 1e-8, 1e-12, 1e-20] {
            let x = norm_isf(q);
            assert!(((norm_sf(x) - q) / q).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn ppf_symmetry() {
        for &p in &[0.01, 0.2, 0.5, 0.7, 0.999] {
            assert!((norm_ppf(p) + norm_ppf(1.0 - p)).abs() < 1e-12);
            assert!((norm_cdf(norm_ppf(p)) - p).abs() < 1e-14);
        }
    }

    #[test]
    fn log_cdf_matches_direct_in_safe_range() {
        for &x in &[-3.0, -0.5, 0.0, 1.0, 4.0] {
            assert!((ln_norm_cdf(x) - norm_cdf(x).ln()).abs() < 1e-14);
        }
        // far tail: log Φ(10) ≈ -Q(10)
        assert!((ln_norm_cdf(10.0) + 7.619_853_024_160_526e-24).abs() < 1e-36);
    }
}
