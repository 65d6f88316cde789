//! Bounded multiplier laws and Stein kernels.
//!
//! The beta-transformed law is `ξ = 4η − 1` with `η ~ Beta(1/2, 3/2)`. It has
//! moments `(0, 1, 1, 3)`, support `(−1, 3)` and Stein kernel
//! `τ(x) = (x + 1)(3 − x)/2`, meaning `E[φ'(ξ) τ(ξ)] = E[φ(ξ) ξ]` for smooth `φ`.
//! Because the density of `ξ` is a Jacobi weight on `(−1, 3)`, both sides of
//! that identity are computed by Gauss–Jacobi quadrature.

use crate::data::{GeneratorSpec, VectorSampler};
use crate::error::{param, Error, Result};
use crate::quadrature::{gauss_jacobi, GaussRule};
use crate::rng::{map_blocks, RngContract, BLOCK_SIZE};
use crate::stats::{McEstimate, Moments};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    BetaTransformed,
    Rademacher,
    /// Mean-zero, unit-variance law with mass `p` at `−√((1−p)/p)` and
    /// `1 − p` at `√(p/(1−p))`.
    TwoPoint { p: f64 },
}

impl MultiplierLaw {
    pub fn two_point(p: f64) -> Result<Self> {
        let law = MultiplierLaw::TwoPoint { p };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MultiplierLaw::TwoPoint { p } if !(*p > 0.0 && *p < 1.0) => {
                Err(param(format!("two-point law needs p in (0, 1), got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            MultiplierLaw::BetaTransformed => "beta_transformed".into(),
            MultiplierLaw::Rademacher => "rademacher".into(),
            MultiplierLaw::TwoPoint { p } => format!("two_point({p})"),
        }
    }

    fn atoms(p: f64) -> (f64, f64) {
        (-((1.0 - p) / p).sqrt(), (p / (1.0 - p)).sqrt())
    }

    /// `b` with `|w| ≤ b` almost surely.
    pub fn support_bound(&self) -> f64 {
        match self {
            MultiplierLaw::BetaTransformed => 3.0,
            MultiplierLaw::Rademacher => 1.0,
            MultiplierLaw::TwoPoint { p } => {
                let (lo, hi) = Self::atoms(*p);
                hi.max(-lo)
            }
        }
    }

    /// `(E w, E w², E w³, E w⁴)`.
    pub fn moments(&self) -> [f64; 4] {
        match self {
            MultiplierLaw::BetaTransformed => [0.0, 1.0, 1.0, 3.0],
            MultiplierLaw::Rademacher => [0.0, 1.0, 0.0, 1.0],
            MultiplierLaw::TwoPoint { p } => {
                let q = 1.0 - p;
                [0.0, 1.0, (2.0 * p - 1.0) / (p * q).sqrt(), (q.powi(3) + p.powi(3)) / (p * q)]
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            MultiplierLaw::BetaTransformed => 4.0 * beta_precursor().sample(rng) - 1.0,
            MultiplierLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MultiplierLaw::TwoPoint { p } => {
                let (lo, hi) = Self::atoms(*p);
                if rng.random::<f64>() < *p {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    pub fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        if let MultiplierLaw::BetaTransformed = self {
            let b = beta_precursor();
            out.iter_mut().for_each(|w| *w = 4.0 * b.sample(rng) - 1.0);
        } else {
            out.iter_mut().for_each(|w| *w = self.sample(rng));
        }
    }

    pub fn has_kernel(&self) -> bool {
        matches!(self, MultiplierLaw::BetaTransformed)
    }

    /// `τ(x)`, zero off the support.
    pub fn kernel_eval(&self, x: f64) -> Result<f64> {
        match self {
            MultiplierLaw::BetaTransformed => Ok(beta_kernel(x)),
            _ => Err(Error::Unsupported(format!("{} has no Stein kernel", self.name()))),
        }
    }

    /// `‖τ‖_∞`, attained at `x = 1`.
    pub fn kernel_sup(&self) -> Result<f64> {
        self.kernel_eval(1.0)
    }

    /// Lebesgue density of `ξ`, for laws that have one.
    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            MultiplierLaw::BetaTransformed => {
                if x <= -1.0 || x >= 3.0 {
                    return Ok(0.0);
                }
                let eta = (x + 1.0) / 4.0;
                // Beta(1/2, 3/2) normalizer B(1/2, 3/2) = π/2
                Ok(0.25 * eta.powf(-0.5) * (1.0 - eta).sqrt() / (PI / 2.0))
            }
            _ => Err(Error::Unsupported(format!("{} has no density", self.name()))),
        }
    }

    /// Gauss–Jacobi rule for `E f(ξ)`, exact for polynomials of degree `2·nodes − 1`.
    pub fn quadrature(&self, nodes: usize) -> Result<GaussRule> {
        match self {
            MultiplierLaw::BetaTransformed => Ok(gauss_jacobi(nodes, 0.5, -0.5)?.affine(2.0, 1.0)),
            _ => Err(Error::Unsupported(format!("{} has no quadrature rule", self.name()))),
        }
    }
}

fn beta_precursor() -> Beta<f64> {
    Beta::new(0.5, 1.5).expect("valid shape")
}

fn beta_kernel(x: f64) -> f64 {
    if x > -1.0 && x < 3.0 {
        0.5 * (x + 1.0) * (3.0 - x)
    } else {
        0.0
    }
}

/// Draws of the precursor `η ~ Beta(1/2, 3/2)` of the beta-transformed law.
pub fn sample_beta_precursor(count: usize, rng: RngContract) -> Vec<f64> {
    let b = beta_precursor();
    map_blocks(rng, count, BLOCK_SIZE, |r, range| {
        range.map(|_| b.sample(r)).collect::<Vec<f64>>()
    })
    .concat()
}

/// `count` iid multipliers.
pub fn sample_multipliers(law: &MultiplierLaw, count: usize, rng: RngContract) -> Result<Vec<f64>> {
    law.validate()?;
    Ok(map_blocks(rng, count, BLOCK_SIZE, |r, range| {
        let mut v = vec![0.0; range.len()];
        law.fill(r, &mut v);
        v
    })
    .concat())
}

/// Multiplier used in swap experiments; `Identity` is `ξ ≡ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapMultiplier {
    Law(MultiplierLaw),
    Identity,
}

/// Test function `φ` with its derivative, for the Stein identity.
#[derive(Clone, Copy, Debug)]
pub enum TestFunction {
    Monomial(u32),
    Cos,
    /// `e^{x/4}`.
    ExpQuarter,
    Custom {
        name: &'static str,
        f: fn(f64) -> f64,
        df: fn(f64) -> f64,
    },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Monomial(k) => format!("x^{k}"),
            TestFunction::Cos => "cos".into(),
            TestFunction::ExpQuarter => "exp(x/4)".into(),
            TestFunction::Custom { name, .. } => (*name).into(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::Monomial(k) => x.powi(*k as i32),
            TestFunction::Cos => x.cos(),
            TestFunction::ExpQuarter => (x / 4.0).exp(),
            TestFunction::Custom { f, .. } => f(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::Monomial(0) => 0.0,
            TestFunction::Monomial(k) => *k as f64 * x.powi(*k as i32 - 1),
            TestFunction::Cos => -x.sin(),
            TestFunction::ExpQuarter => 0.25 * (x / 4.0).exp(),
            TestFunction::Custom { df, .. } => df(x),
        }
    }
}

/// Monomials of degree 0..=8, `cos` and `e^{x/4}`.
pub fn standard_test_family() -> Vec<TestFunction> {
    (0..=8)
        .map(TestFunction::Monomial)
        .chain([TestFunction::Cos, TestFunction::ExpQuarter])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteinResidual {
    pub function: String,
    /// `E[φ'(ξ) τ(ξ)]`.
    pub lhs: f64,
    /// `E[φ(ξ) ξ]`.
    pub rhs: f64,
    pub residual: f64,
}

/// Both sides of the Stein identity by `nodes`-point quadrature.
pub fn verify_stein_identity(
    law: &MultiplierLaw,
    family: &[TestFunction],
    nodes: usize,
) -> Result<Vec<SteinResidual>> {
    if !law.has_kernel() {
        return Err(Error::Unsupported(format!("{} has no Stein kernel", law.name())));
    }
    let rule = law.quadrature(nodes)?;
    family
        .iter()
        .map(|phi| {
            let bad = std::cell::Cell::new(false);
            let check = |v: f64| {
                bad.set(bad.get() || !v.is_finite());
                v
            };
            let lhs = rule.expect(|x| check(phi.derivative(x) * beta_kernel(x)));
            let rhs = rule.expect(|x| check(phi.value(x) * x));
            if bad.get() {
                return Err(param(format!("test function {} is not integrable under the law", phi.name())));
            }
            Ok(SteinResidual {
                function: phi.name(),
                lhs,
                rhs,
                residual: (lhs - rhs).abs(),
            })
        })
        .collect()
}

/// MC estimate of `E max_{j,k} |Σ_i a_ij a_ik (τ(ξ_i) − 1)|` for an `n × d`
/// coefficient matrix.
pub fn linear_form_kernel_deviation(
    a: ArrayView2<'_, f64>,
    law: &MultiplierLaw,
    reps: usize,
    rng: RngContract,
) -> Result<McEstimate> {
    if !law.has_kernel() {
        return Err(Error::Unsupported(format!("{} has no Stein kernel", law.name())));
    }
    if reps < 2 {
        return Err(param("need at least 2 replications"));
    }
    let n = a.nrows();
    let blocks = map_blocks(rng, reps, BLOCK_SIZE, |r, range| {
        let mut m = Moments::default();
        let mut xi = vec![0.0; n];
        for _ in range {
            law.fill(r, &mut xi);
            let w = Array1::from_iter(xi.iter().map(|x| beta_kernel(*x) - 1.0));
            let weighted = &a * &w.view().insert_axis(Axis(1));
            let g = weighted.t().dot(&a);
            m.push(g.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        }
        m
    });
    let mut total = Moments::default();
    blocks.iter().for_each(|b| total.merge(b));
    Ok(total.estimate())
}

/// `√(2 log(2d²)) max_j √(Σ_i a_ij⁴ (‖τ‖_∞ + 1)²)`.
pub fn hoeffding_bound(a: ArrayView2<'_, f64>, law: &MultiplierLaw) -> Result<f64> {
    let sup = law.kernel_sup()?;
    let d = a.ncols() as f64;
    let worst = a
        .axis_iter(Axis(1))
        .map(|col| col.iter().map(|v| v.powi(4)).sum::<f64>())
        .fold(0.0f64, f64::max);
    Ok((2.0 * (2.0 * d * d).ln()).sqrt() * (worst * (sup + 1.0).powi(2)).sqrt())
}

/// `F = Σ_i a_i ξ_i` (rows `a_i` of a fixed `n × d` matrix), e.g. `S_n^{ξX}`
/// given the data with `a_i = X_i/√n`.
#[derive(Clone, Debug)]
pub struct LinearFormSampler {
    a: Array2<f64>,
    law: MultiplierLaw,
}

impl LinearFormSampler {
    pub fn new(a: Array2<f64>, law: MultiplierLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self { a, law })
    }
}

impl VectorSampler for LinearFormSampler {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for row in self.a.rows() {
            let w = self.law.sample(rng);
            out.iter_mut().zip(row).for_each(|(o, x)| *o += w * x);
        }
    }
}

/// `n^{-1/2} Σ_i ξ_i X_i` with fresh data and multipliers on every draw.
#[derive(Clone, Debug)]
pub struct SwappedSumSampler {
    spec: GeneratorSpec,
    n: usize,
    d: usize,
    swap: SwapMultiplier,
}

impl SwappedSumSampler {
    pub fn new(spec: GeneratorSpec, n: usize, d: usize, swap: SwapMultiplier) -> Result<Self> {
        spec.validate(d)?;
        if let SwapMultiplier::Law(l) = &swap {
            l.validate()?;
        }
        if n == 0 || d == 0 {
            return Err(param("swapped sum needs n >= 1 and d >= 1"));
        }
        Ok(Self { spec, n, d, swap })
    }
}

impl VectorSampler for SwappedSumSampler {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match &self.swap {
            SwapMultiplier::Identity => self.spec.sample_normalized_sum(rng, self.n, out),
            SwapMultiplier::Law(law) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let mut row = vec![0.0; self.d];
                for _ in 0..self.n {
                    self.spec.fill_row(rng, &mut row);
                    let w = law.sample(rng);
                    out.iter_mut().zip(&row).for_each(|(o, x)| *o += w * x);
                }
                let s = (self.n as f64).sqrt();
                out.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn kernel_values() {
        let l = MultiplierLaw::BetaTransformed;
        assert_eq!(l.kernel_eval(1.0).unwrap(), 2.0);
        assert_eq!(l.kernel_eval(-1.0).unwrap(), 0.0);
        assert_eq!(l.kernel_eval(3.0).unwrap(), 0.0);
        assert_eq!(l.kernel_eval(0.0).unwrap(), 1.5);
        assert!(matches!(
            MultiplierLaw::Rademacher.kernel_eval(0.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn two_point_moments_match_atoms() {
        let p = 0.3;
        let law = MultiplierLaw::two_point(p).unwrap();
        let (lo, hi) = MultiplierLaw::atoms(p);
        let m: Vec<f64> = (1..=4)
            .map(|k| p * lo.powi(k) + (1.0 - p) * hi.powi(k))
            .collect();
        let declared = law.moments();
        for k in 0..4 {
            assert!((m[k] - declared[k]).abs() < 1e-12, "moment {}", k + 1);
        }
        assert!(MultiplierLaw::two_point(1.0).is_err());
    }

    #[test]
    fn stein_examples() {
        let l = MultiplierLaw::BetaTransformed;
        let r = verify_stein_identity(&l, &[TestFunction::Monomial(1), TestFunction::Monomial(0)], 64).unwrap();
        assert!((r[0].lhs - 1.0).abs() < 1e-10 && r[0].residual < 1e-10);
        assert!(r[1].residual < 1e-12 && r[1].rhs.abs() < 1e-12);
        let r = verify_stein_identity(&l, &[TestFunction::Monomial(3)], 64).unwrap();
        assert!(r[0].residual < 1e-8);
        let blowup = TestFunction::Custom {
            name: "|x-1|^-400",
            f: |x| (x - 1.0).abs().recip().powi(400),
            df: |x| (x - 1.0).abs().recip().powi(401),
        };
        assert!(verify_stein_identity(&l, &[blowup], 63).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let l = MultiplierLaw::BetaTransformed;
        // E[1/density] under the law is the support length
        let rule = l.quadrature(64).unwrap();
        let v = rule.expect(|x| 1.0 / l.density(x).unwrap());
        assert!((v - 4.0).abs() < 1e-2);
    }

    #[test]
    fn hoeffding_example_and_homogeneity() {
        let a = Array2::from_elem((4, 3), 0.5);
        let b = hoeffding_bound(a.view(), &MultiplierLaw::BetaTransformed).unwrap();
        assert!((b - (2.0 * 18f64.ln()).sqrt() * 1.5).abs() < 1e-12);
        let b2 = hoeffding_bound((&a * 2.0).view(), &MultiplierLaw::BetaTransformed).unwrap();
        assert!((b2 - 4.0 * b).abs() < 1e-12);
        let z = Array2::zeros((4, 3));
        assert_eq!(hoeffding_bound(z.view(), &MultiplierLaw::BetaTransformed).unwrap(), 0.0);
        let dev = linear_form_kernel_deviation(z.view(), &MultiplierLaw::BetaTransformed, 10, RngContract::new(1, 1))
            .unwrap();
        assert_eq!(dev.mean, 0.0);
    }
}
