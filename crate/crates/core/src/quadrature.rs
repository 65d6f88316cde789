//! Gauss–Jacobi rules (Golub–Welsch) and adaptive Gauss–Kronrod integration.

use crate::error::{param, Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and probability weights for the Jacobi weight
/// `(1 − t)^α (1 + t)^β` on `(−1, 1)`, normalized so the weights sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Pushes the rule forward under `t ↦ scale·t + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> GaussRule {
        GaussRule {
            nodes: self.nodes.iter().map(|t| scale * t + shift).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// `nodes`-point Gauss–Jacobi rule. Exact for polynomials of degree `2·nodes − 1`.
pub fn gauss_jacobi(nodes: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if nodes == 0 {
        return Err(param("quadrature needs at least one node"));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(param(format!("Jacobi exponents must exceed -1, got ({alpha}, {beta})")));
    }
    let ab = alpha + beta;
    let diag = |k: usize| {
        let k = k as f64;
        if k == 0.0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        }
    };
    // squared off-diagonal b_k, k >= 1
    let offsq = |k: usize| {
        let k = k as f64;
        if k == 1.0 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            let s = 2.0 * k + ab;
            4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
        }
    };
    let mut j = DMatrix::<f64>::zeros(nodes, nodes);
    for k in 0..nodes {
        j[(k, k)] = diag(k);
        if k + 1 < nodes {
            let b = offsq(k + 1).sqrt();
            j[(k, k + 1)] = b;
            j[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..nodes)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical("Golub–Welsch produced degenerate weights".into()));
    }
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    })
}

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7–K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XK[i];
        let s = f(c - dx) + f(c + dx);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7–K15 on `[a, b]` to absolute-or-relative tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2 .0).sum();
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("integrand is not finite".into()));
        }
        if err <= tol.max(tol * total.abs()) {
            return Ok(total);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.2 .1 > acc.1 { (i, p.2 .1) } else { acc });
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, gk15(&f, lo, mid)));
        panels.push((mid, hi, gk15(&f, mid, hi)));
    }
    Err(Error::Numerical("adaptive quadrature did not converge".into()))
}

/// `∫_a^∞ f`, by the substitution `x = a + s·u/(1 − u)` with length scale `s`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, scale: f64, tol: f64) -> Result<f64> {
    integrate(
        |u| {
            let v = 1.0 - u;
            let y = f(a + scale * u / v) * scale / (v * v);
            if y.is_finite() {
                y
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let r = gauss_jacobi(5, 0.0, 0.0).unwrap();
        // E[t^8] under Uniform(-1, 1) is 1/9
        assert!((r.expect(|t| t.powi(8)) - 1.0 / 9.0).abs() < 1e-14);
        assert!((r.expect(|t| t.powi(9))).abs() < 1e-14);
    }

    #[test]
    fn beta_half_three_halves_moments() {
        // t ↦ η = (1 + t)/2 carries the weight to Beta(1/2, 3/2)
        let r = gauss_jacobi(16, 0.5, -0.5).unwrap().affine(0.5, 0.5);
        assert!((r.expect(|x| x) - 0.25).abs() < 1e-15);
        assert!((r.expect(|x| x * x) - 0.125).abs() < 1e-15);
        assert!((r.expect(|x| x.powi(4)) - 0.0546875).abs() < 1e-15);
    }

    #[test]
    fn gauss_kronrod_known_integrals() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate_to_infinity(|x| (-x).exp() * x * x, 0.0, 1.0, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }
}
