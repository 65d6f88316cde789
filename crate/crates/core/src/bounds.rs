//! Rate terms, coupling functionals and assembled bounds.
//!
//! Universal constants in the Gaussian-approximation bounds are unknown, so
//! every assembled expression uses constant 1 and is meant for scaling
//! comparisons, not absolute dominance.

use crate::anticoncentration::nazarov_rate;
use crate::data::{CovarianceModel, GeneratorSpec, SampleMatrix, SubExponentialShape};
use crate::error::{param, Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::rng::RngContract;
use crate::stats::{compensated_sum, McEstimate, Moments};
use ndarray::Axis;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTerms {
    /// `B_n² (log d)³ / n`.
    pub delta_n1: f64,
    /// `B_n² (log d)² (log n)² / n`.
    pub delta_n2: f64,
    /// `D_n² (log d)^{2−2/q} / n^{1−2/q}`.
    pub delta_n2_q: f64,
}

pub fn rate_terms(b_n: f64, d_n: f64, q: f64, n: f64, d: f64) -> Result<RateTerms> {
    if !(q > 2.0) {
        return Err(param(format!("rate terms need q > 2, got {q}")));
    }
    if !(b_n >= 1.0 && d_n >= 1.0) {
        return Err(param(format!("rate terms need B_n, D_n >= 1, got ({b_n}, {d_n})")));
    }
    if !(n >= 3.0 && d >= 3.0) {
        return Err(param(format!("rate terms need n, d >= 3, got ({n}, {d})")));
    }
    let (ld, ln) = (d.ln(), n.ln());
    Ok(RateTerms {
        delta_n1: b_n * b_n * ld.powi(3) / n,
        delta_n2: b_n * b_n * ld * ld * ln * ln / n,
        delta_n2_q: d_n * d_n * ld.powf(2.0 - 2.0 / q) / n.powf(1.0 - 2.0 / q),
    })
}

/// `max(1, √(max_j n^{-1} Σ_i X_ij⁴))`.
pub fn empirical_bn(x: &SampleMatrix) -> f64 {
    max_column_fourth_moment(x).sqrt().max(1.0)
}

fn max_column_fourth_moment(x: &SampleMatrix) -> f64 {
    let n = x.n() as f64;
    x.values()
        .axis_iter(Axis(1))
        .map(|c| compensated_sum(c.iter().map(|v| v.powi(4))) / n)
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingFunctionals {
    /// `max_{j,k} |n^{-1} Σ_i X_ij X_ik − C_jk|`.
    pub delta_n0: f64,
    /// `√(n^{-1} max_j Σ_i X_ij⁴)`.
    pub delta_n1: f64,
    /// `n^{-1} Σ_i ‖X_i‖_∞⁴ 1{‖X_i‖_∞ > √n ε/(3 log d)}`.
    pub delta_n2_eps: f64,
}

/// Plug-in coupling functionals with the sample standing in for expectations.
pub fn coupling_functionals(x: &SampleMatrix, c: &CovarianceModel, epsilon: f64) -> Result<CouplingFunctionals> {
    if !(epsilon > 0.0) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    if c.dim() != x.d() {
        return Err(Error::Structure(format!("covariance is {}x{}, data has d = {}", c.dim(), c.dim(), x.d())));
    }
    let n = x.n() as f64;
    let gram = x.second_moment_matrix();
    let delta_n0 = gram
        .iter()
        .zip(c.matrix().iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let threshold = n.sqrt() * epsilon / (3.0 * (x.d() as f64).ln());
    let values = x.values();
    let tail = values.rows().into_iter().map(|row| {
        let m = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m > threshold {
            m.powi(4)
        } else {
            0.0
        }
    });
    Ok(CouplingFunctionals {
        delta_n0,
        delta_n1: max_column_fourth_moment(x).sqrt(),
        delta_n2_eps: compensated_sum(tail) / n,
    })
}

/// `ε^{-2}(Δ₀ log d + Δ₁ √((log d)³/n)) + ε^{-4} Δ₂(ε) (log d)³/n`.
pub fn coupling_rhs(f: &CouplingFunctionals, n: f64, d: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    let ld = d.ln();
    Ok((f.delta_n0 * ld + f.delta_n1 * (ld.powi(3) / n).sqrt()) / (epsilon * epsilon)
        + f.delta_n2_eps * ld.powi(3) / n / epsilon.powi(4))
}

/// `θ^{2/3} (δ₁^{1/6} + δ₂^{1/3})`.
pub fn theorem_bound(theta: f64, delta_n1: f64, second_term: f64) -> Result<f64> {
    if theta < 0.0 || delta_n1 < 0.0 || second_term < 0.0 {
        return Err(param("theorem bound inputs must be nonnegative"));
    }
    Ok(theta.powf(2.0 / 3.0) * (delta_n1.powf(1.0 / 6.0) + second_term.cbrt()))
}

/// Bootstrap form `θ^{2/3} ((b²δ₁)^{1/6} + (b²δ₂)^{1/3})`.
pub fn theorem_bound_bootstrap(theta: f64, b: f64, delta_n1: f64, second_term: f64) -> Result<f64> {
    theorem_bound(theta, b * b * delta_n1, b * b * second_term)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailMomentCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Relative roundoff allowance in the `lhs ≤ rhs` comparison; the equality
/// cases `A = 1, t = 0` are otherwise decided by the last bit.
pub const TAIL_CHECK_SLACK: f64 = 1e-12;

/// `E[Y^p 1{Y > t}] ≤ p! A e^{−t/B} (t + B)^p` for `P(Y > x) = min(1, A e^{−x/B})`.
/// The left side is `p ∫_0^∞ x^{p−1} P(Y > max(x, t)) dx`, integrated numerically.
pub fn tail_moment_check(a: f64, b: f64, p: u32, t: f64) -> Result<TailMomentCheck> {
    if !(a > 0.0 && b > 0.0 && t >= 0.0 && p >= 1) {
        return Err(param(format!("tail check needs A, B > 0, p >= 1, t >= 0; got ({a}, {b}, {p}, {t})")));
    }
    let pf = p as f64;
    let survival = |x: f64| (a * (-x / b).exp()).min(1.0);
    // kink of the survival function where A e^{-x/B} = 1
    let kink = (b * a.ln()).max(t);
    let below_t = t.powi(p as i32) * survival(t);
    let flat = integrate(|x| pf * x.powi(p as i32 - 1), t, kink, 1e-14)?;
    let tail = integrate_to_infinity(|x| pf * x.powi(p as i32 - 1) * survival(x), kink, b, 1e-14)?;
    let lhs = below_t + flat + tail;
    let factorial: f64 = (1..=p).map(f64::from).product();
    let rhs = factorial * a * (-t / b).exp() * (t + b).powi(p as i32);
    if !lhs.is_finite() {
        return Err(Error::Numerical("tail integral did not converge".into()));
    }
    Ok(TailMomentCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + TAIL_CHECK_SLACK),
    })
}

/// `κ_n = 2 B_n log n` (ψ₁ truncation level).
pub fn truncation_level_psi1(b_n: f64, n: f64) -> f64 {
    2.0 * b_n * n.ln()
}

/// `κ_n = D_n (n / log d)^{1/q}` (q-moment truncation level).
pub fn truncation_level_moment(d_n: f64, n: f64, d: f64, q: f64) -> f64 {
    d_n * (n / d.ln()).powf(1.0 / q)
}

/// `E[X 1{|X| > κ}]` for one coordinate, in closed form where available.
pub fn tail_mean(spec: &GeneratorSpec, kappa: f64) -> Result<f64> {
    match spec {
        GeneratorSpec::Gaussian { .. }
        | GeneratorSpec::BoundedIid { .. }
        | GeneratorSpec::HeavyTailQ { .. }
        | GeneratorSpec::SubExponentialIid {
            shape: SubExponentialShape::Laplace,
            ..
        } => Ok(0.0),
        GeneratorSpec::SubExponentialIid { scale, .. } => {
            // X = s(E − 1); E[(E − 1); E > c] = c e^{−c}
            let s = *scale;
            let c = 1.0 + kappa / s;
            let lo = 1.0 - kappa / s;
            let lower = if lo > 0.0 { -lo * (-lo).exp() } else { 0.0 };
            Ok(s * (c * (-c).exp() + lower))
        }
        GeneratorSpec::SkewedNegativeThirdMoment { gamma } => {
            // X = (k − G)/√k with E[G; G ∈ S] = k P(Gamma(k+1) ∈ S)
            let k = 4.0 / (gamma * gamma);
            let sk = k.sqrt();
            let upper_cut = k + kappa * sk;
            let lower_cut = k - kappa * sk;
            let mut m = k * gamma_ur(k, upper_cut) - k * gamma_ur(k + 1.0, upper_cut);
            if lower_cut > 0.0 {
                m += k * gamma_lr(k, lower_cut) - k * gamma_lr(k + 1.0, lower_cut);
            }
            Ok(-gamma.signum() * m / sk)
        }
        GeneratorSpec::FactorModel { .. } => Err(Error::Unsupported(
            "tail means of factor-model coordinates have no closed form".into(),
        )),
    }
}

/// MC estimate of `E‖S_n^{X̂}‖_∞` for the centered tail remainder
/// `X̂ = X 1{|X| > κ} − E[X 1{|X| > κ}]`.
pub fn truncation_remainder_norm(
    spec: &GeneratorSpec,
    n: usize,
    d: usize,
    kappa: f64,
    reps: usize,
    rng: RngContract,
) -> Result<McEstimate> {
    spec.validate(d)?;
    let mu = tail_mean(spec, kappa)?;
    let blocks = crate::rng::map_blocks(rng, reps, crate::rng::BLOCK_SIZE, |r, range| {
        let mut m = Moments::default();
        let mut row = vec![0.0; d];
        let mut sum = vec![0.0; d];
        for _ in range {
            sum.iter_mut().for_each(|s| *s = 0.0);
            for _ in 0..n {
                spec.fill_row(r, &mut row);
                for (s, x) in sum.iter_mut().zip(&row) {
                    let hat = if x.abs() > kappa { *x } else { 0.0 };
                    *s += hat - mu;
                }
            }
            let norm = sum.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (n as f64).sqrt();
            m.push(norm);
        }
        m
    });
    let mut total = Moments::default();
    blocks.iter().for_each(|b| total.merge(b));
    Ok(total.estimate())
}

/// Every evaluated quantity for one data set, under the constant-1 convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: usize,
    pub b_n: f64,
    pub d_n: Option<f64>,
    pub q: Option<f64>,
    pub epsilon: f64,
    pub delta_n1: f64,
    pub delta_n2: f64,
    pub delta_n2_q: Option<f64>,
    #[serde(rename = "Delta_n0")]
    pub coupling_delta_n0: f64,
    #[serde(rename = "Delta_n1")]
    pub coupling_delta_n1: f64,
    #[serde(rename = "Delta_n2_eps")]
    pub coupling_delta_n2_eps: f64,
    pub coupling_rhs: f64,
    pub sigma_min: f64,
    /// Nazarov slope `(√(2 log d) + 2)/σ̲`, an upper bound on Θ.
    pub theta_bound: f64,
    /// `1/(√(2π) 𝔞)`, present for factor-structured data.
    pub theta_factor: Option<f64>,
    /// `θ^{2/3}(δ_{n,1}^{1/6} + δ^{1/3})` with the Nazarov θ; the second term
    /// is `δ_{n,2}(q)` when `q` is set and `δ_{n,2}` otherwise.
    pub total: f64,
    pub total_factor: Option<f64>,
    /// Bootstrap form with multiplier bound `b`, if one was supplied.
    pub total_bootstrap: Option<f64>,
    pub multiplier_bound: Option<f64>,
    pub constant_convention: f64,
}

/// Inputs for [`bound_report`].
#[derive(Clone, Debug)]
pub struct BoundInputs<'a> {
    pub data: &'a SampleMatrix,
    /// Population covariance; the empirical one is used when absent.
    pub covariance: Option<&'a CovarianceModel>,
    pub generator: Option<&'a GeneratorSpec>,
    pub epsilon: f64,
    pub multiplier_bound: Option<f64>,
}

pub fn bound_report(inp: &BoundInputs<'_>) -> Result<BoundReport> {
    let x = inp.data;
    let (n, d) = (x.n(), x.d());
    let empirical;
    let cov = match inp.covariance {
        Some(c) => c,
        None => {
            empirical = x.empirical_covariance()?;
            &empirical
        }
    };
    let b_n = empirical_bn(x);
    let (q, d_n) = match inp.generator.and_then(|g| g.moment_bound_dn(d)) {
        Some((q, dn)) => (Some(q), Some(dn)),
        None => (None, None),
    };
    let rates = rate_terms(b_n, d_n.unwrap_or(1.0), q.unwrap_or(4.0), n as f64, d as f64)?;
    let delta_n2_q = q.map(|_| rates.delta_n2_q);
    let second = delta_n2_q.unwrap_or(rates.delta_n2);
    let f = coupling_functionals(x, cov, inp.epsilon)?;
    let sigma_min = cov.sigma_min();
    let theta = nazarov_rate(sigma_min, d as f64)?;
    let theta_factor = match inp.generator.and_then(|g| g.loadings(d)) {
        Some(a) => {
            let a_min = a.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            if !(a_min > 0.0) {
                return Err(param("factor route needs nonzero loadings"));
            }
            Some(1.0 / ((2.0 * std::f64::consts::PI).sqrt() * a_min))
        }
        None => None,
    };
    let total = theorem_bound(theta, rates.delta_n1, second)?;
    let total_factor = theta_factor
        .map(|t| theorem_bound(t, rates.delta_n1, second))
        .transpose()?;
    let total_bootstrap = inp
        .multiplier_bound
        .map(|b| theorem_bound_bootstrap(theta, b, rates.delta_n1, second))
        .transpose()?;
    Ok(BoundReport {
        n,
        d,
        b_n,
        d_n,
        q,
        epsilon: inp.epsilon,
        delta_n1: rates.delta_n1,
        delta_n2: rates.delta_n2,
        delta_n2_q,
        coupling_delta_n0: f.delta_n0,
        coupling_delta_n1: f.delta_n1,
        coupling_delta_n2_eps: f.delta_n2_eps,
        coupling_rhs: coupling_rhs(&f, n as f64, d as f64, inp.epsilon)?,
        sigma_min,
        theta_bound: theta,
        theta_factor,
        total,
        total_factor,
        total_bootstrap,
        multiplier_bound: inp.multiplier_bound,
        constant_convention: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn rate_examples() {
        let r = rate_terms(2.0, 1.0, 4.0, 1e4, 1000.0).unwrap();
        assert!((r.delta_n1 - 4.0 * 1000f64.ln().powi(3) / 1e4).abs() < 1e-15);
        assert!((r.delta_n1 - 0.1318).abs() < 1e-4);
        let r = rate_terms(1.0, 1.0, 4.0, 1000.0, 1000.0).unwrap();
        assert!((r.delta_n2 - 2.277).abs() < 1e-3);
        assert!(rate_terms(1.0, 1.0, 2.0, 10.0, 10.0).is_err());
    }

    #[test]
    fn coupling_rhs_example() {
        let f = CouplingFunctionals {
            delta_n0: 0.01,
            delta_n1: 1.0,
            delta_n2_eps: 0.0,
        };
        let v = coupling_rhs(&f, 1e4, 100.0, 0.5).unwrap();
        let ld = 100f64.ln();
        assert!((v - 4.0 * (0.01 * ld + (ld.powi(3) / 1e4).sqrt())).abs() < 1e-14);
        assert!((v - 0.5793).abs() < 1e-3);
    }

    #[test]
    fn theorem_examples() {
        assert_eq!(theorem_bound(0.0, 0.3, 0.2).unwrap(), 0.0);
        assert!((theorem_bound(1.0, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let v = theorem_bound(0.4, 0.1318, 0.05).unwrap();
        assert!((v - 0.5874).abs() < 1e-3);
    }

    #[test]
    fn tail_check_examples() {
        let c = tail_moment_check(1.0, 1.0, 1, 0.0).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-12 && c.ok);
        let c = tail_moment_check(1.0, 1.0, 2, 0.0).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-12 && c.ok);
        let c = tail_moment_check(1.0, 1.0, 4, 5.0).unwrap();
        // E[Y^4; Y > 5] = Γ(5, 5) = 24 e^{-5} (1 + 5 + 25/2 + 125/6 + 625/24)
        let exact = 24.0 * (-5f64).exp() * (1.0 + 5.0 + 12.5 + 125.0 / 6.0 + 625.0 / 24.0);
        assert!((c.lhs - exact).abs() < 1e-11 * exact);
        assert!(c.ok && c.lhs < c.rhs);
    }

    #[test]
    fn bn_examples() {
        let x = SampleMatrix::new(Array2::from_shape_fn((6, 3), |(i, j)| if (i + j) % 2 == 0 { 1.0 } else { -1.0 }))
            .unwrap();
        assert_eq!(empirical_bn(&x), 1.0);
        let mut v = x.clone().into_inner();
        v.column_mut(1).mapv_inplace(|e| 3.0 * e);
        assert_eq!(empirical_bn(&SampleMatrix::new(v).unwrap()), 9.0);
    }

    #[test]
    fn huge_epsilon_zeroes_tail_functional() {
        let x = SampleMatrix::new(Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64 - 7.0)).unwrap();
        let c = x.empirical_covariance().unwrap();
        let f = coupling_functionals(&x, &c, 1e9).unwrap();
        assert_eq!(f.delta_n2_eps, 0.0);
        assert!(f.delta_n0 < 1e-12);
    }

    #[test]
    fn exponential_tail_mean_matches_quadrature() {
        let spec = GeneratorSpec::SubExponentialIid {
            scale: 1.0,
            shape: SubExponentialShape::Exponential,
        };
        for kappa in [0.5, 2.0, 6.0] {
            let closed = tail_mean(&spec, kappa).unwrap();
            let upper = integrate_to_infinity(|e| (e - 1.0) * (-e).exp(), 1.0 + kappa, 1.0, 1e-14).unwrap();
            let lower = if kappa < 1.0 {
                integrate(|e| (e - 1.0) * (-e).exp(), 0.0, 1.0 - kappa, 1e-14).unwrap()
            } else {
                0.0
            };
            assert!((closed - upper - lower).abs() < 1e-12);
        }
        let skew = GeneratorSpec::SkewedNegativeThirdMoment { gamma: -2.0 };
        // γ = −2 is the mirror image of E − 1
        for kappa in [0.5, 2.0] {
            assert!((tail_mean(&skew, kappa).unwrap() + tail_mean(&spec, kappa).unwrap()).abs() < 1e-12);
        }
    }
}
