//! Smooth max and smooth indicators.
//!
//! `Φ_β(x) = β^{-1} log Σ_j e^{β x_j}` is evaluated in shifted form and
//! satisfies `0 ≤ Φ_β(x) − max_j x_j ≤ β^{-1} log d`. Its gradient is the
//! softmax vector.
//!
//! Smooth indicators are built from the transition
//! `g(t) = s(1−t) / (s(1−t) + s(t))`, `s(t) = e^{-1/t} 1{t > 0}`, which is 1 for
//! `t ≤ 0`, 0 for `t ≥ 1` and `C^∞` in between. For a half-line `(−∞, a]`,
//! `h(x) = g((x − a − ε)/ε)`, so `1_A ≤ h ≤ 1_{A^{3ε}}` with room to spare.
//! Derivative bounds `‖h^{(r)}‖_∞ ≤ C_r ε^{-r}` come from an exact Taylor-jet
//! scan of `g`, computed once.

use crate::data::VectorSampler;
use crate::error::{param, Error, Result};
use crate::metrics::{DistanceClass, DistanceReport};
use crate::rng::{map_blocks, RngContract, BLOCK_SIZE};
use crate::stats::Moments;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothMaxParams {
    beta: f64,
}

impl SmoothMaxParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self { beta })
        } else {
            Err(param(format!("smooth max needs beta > 0, got {beta}")))
        }
    }

    /// `β = ε^{-1} log d`, the coupling-lemma choice.
    pub fn for_epsilon(epsilon: f64, d: usize) -> Result<Self> {
        Self::new((d as f64).ln() / epsilon)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn max_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `Φ_β(x)`.
pub fn smooth_max(x: &[f64], params: &SmoothMaxParams) -> f64 {
    let b = params.beta;
    let m = max_of(x);
    let s: f64 = x.iter().map(|v| (b * (v - m)).exp()).sum();
    m + s.ln() / b
}

/// Softmax weights `π_j = e^{βx_j} / Σ_k e^{βx_k}`.
pub fn smooth_max_gradient(x: &[f64], params: &SmoothMaxParams) -> Vec<f64> {
    let b = params.beta;
    let m = max_of(x);
    let w: Vec<f64> = x.iter().map(|v| (b * (v - m)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// `∇²Φ_β = β (diag π − π π^T)`, row-major `d × d`.
pub fn smooth_max_hessian(x: &[f64], params: &SmoothMaxParams) -> Vec<f64> {
    let p = smooth_max_gradient(x, params);
    let d = p.len();
    let mut h = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let diag = if i == j { p[i] } else { 0.0 };
            h[i * d + j] = params.beta * (diag - p[i] * p[j]);
        }
    }
    h
}

/// Truncated Taylor series `Σ_{k≤4} c_k u^k` of a function of one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; 5]);

impl Jet {
    pub fn constant(c: f64) -> Self {
        Jet([c, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn variable(x: f64) -> Self {
        Jet([x, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }

    pub fn sub(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }

    pub fn scale(self, c: f64) -> Jet {
        Jet(self.0.map(|v| v * c))
    }

    pub fn mul(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|k| (0..=k).map(|j| self.0[j] * o.0[k - j]).sum()))
    }

    pub fn recip(self) -> Jet {
        let a = self.0;
        let mut b = [0.0; 5];
        b[0] = 1.0 / a[0];
        for k in 1..5 {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Jet(b)
    }

    pub fn exp(self) -> Jet {
        let a = self.0;
        let mut e = [0.0; 5];
        e[0] = a[0].exp();
        for k in 1..5 {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    /// Derivatives `f^{(r)}`, `r = 0..=4`.
    pub fn derivatives(self) -> [f64; 5] {
        const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
        std::array::from_fn(|k| self.0[k] * FACT[k])
    }
}

/// The transition `g` in logistic form `1/(1 + e^{u})`, `u = 1/(1−t) − 1/t`.
pub fn transition(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let u = 1.0 / (1.0 - t) - 1.0 / t;
        if u > 0.0 {
            let e = (-u).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + u.exp())
        }
    }
}

/// Taylor jet of `g` at `t`; derivatives vanish identically off `(0, 1)`.
pub fn transition_jet(t: f64) -> Jet {
    if t <= 0.0 {
        return Jet::constant(1.0);
    }
    if t >= 1.0 {
        return Jet::constant(0.0);
    }
    let x = Jet::variable(t);
    let u = Jet::constant(1.0).sub(x).recip().sub(x.recip());
    if u.0[0] > 0.0 {
        let e = u.scale(-1.0).exp();
        e.mul(Jet::constant(1.0).add(e).recip())
    } else {
        Jet::constant(1.0).add(u.exp()).recip()
    }
}

/// Scan step for the derivative certificate.
pub const CERTIFICATE_STEP: f64 = 1e-5;
/// Multiplicative safety margin on scanned maxima.
pub const CERTIFICATE_INFLATION: f64 = 1.05;

/// `C_1..C_4`: inflated maxima of `|g^{(r)}|` over a `1e−5` grid on `(0, 1)`.
pub fn certified_constants() -> [f64; 4] {
    static CONSTANTS: OnceLock<[f64; 4]> = OnceLock::new();
    *CONSTANTS.get_or_init(|| {
        let steps = (1.0 / CERTIFICATE_STEP).round() as usize;
        let mut best = [0.0f64; 4];
        for i in 1..steps {
            let d = transition_jet(i as f64 * CERTIFICATE_STEP).derivatives();
            for r in 0..4 {
                best[r] = best[r].max(d[r + 1].abs());
            }
        }
        best.map(|v| v * CERTIFICATE_INFLATION)
    })
}

/// Finite union of closed intervals with possibly infinite endpoints,
/// stored sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    components: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(mut components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Structure("interval set must be nonempty".into()));
        }
        for &(lo, hi) in &components {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Structure(format!("invalid interval [{lo}, {hi}]")));
            }
        }
        components.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { components })
    }

    /// `(−∞, a]`.
    pub fn half_line(a: f64) -> Self {
        Self {
            components: vec![(f64::NEG_INFINITY, a)],
        }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// Membership in the closed `r`-neighbourhood `A^r`.
    pub fn contains_inflated(&self, x: f64, r: f64) -> bool {
        self.components
            .iter()
            .any(|&(lo, hi)| lo - r <= x && x <= hi + r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothIndicator {
    epsilon: f64,
    set: IntervalSet,
    constants: [f64; 4],
}

impl SmoothIndicator {
    /// Requires gaps between components larger than `6ε`, so inflated
    /// components stay disjoint.
    pub fn build(set: IntervalSet, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(param(format!("smooth indicator needs epsilon > 0, got {epsilon}")));
        }
        for w in set.components.windows(2) {
            let gap = w[1].0 - w[0].1;
            if gap <= 6.0 * epsilon {
                return Err(Error::Structure(format!(
                    "components [{}, {}] and [{}, {}] overlap after 3ε-inflation",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self {
            epsilon,
            set,
            constants: certified_constants(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn constants(&self) -> [f64; 4] {
        self.constants
    }

    /// `C_r ε^{-r}`, `r = 1..=4`.
    pub fn derivative_bound(&self, r: usize) -> f64 {
        assert!((1..=4).contains(&r), "derivative order must be 1..=4");
        self.constants[r - 1] * self.epsilon.powi(-(r as i32))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let e = self.epsilon;
        self.components_iter()
            .map(|(lo, hi)| {
                let right = if hi.is_finite() { transition((x - hi - e) / e) } else { 1.0 };
                let left = if lo.is_finite() { transition((lo - e - x) / e) } else { 1.0 };
                right * left
            })
            .sum()
    }

    /// `h^{(r)}(x)` for `r = 0..=4`.
    pub fn derivatives(&self, x: f64) -> [f64; 5] {
        let e = self.epsilon;
        let mut total = Jet::constant(0.0);
        for (lo, hi) in self.components_iter() {
            let mut piece = Jet::constant(1.0);
            if hi.is_finite() {
                piece = piece.mul(rescale(transition_jet((x - hi - e) / e), 1.0 / e));
            }
            if lo.is_finite() {
                piece = piece.mul(rescale(transition_jet((lo - e - x) / e), -1.0 / e));
            }
            total = total.add(piece);
        }
        total.derivatives()
    }

    pub fn derivative(&self, x: f64, r: usize) -> f64 {
        self.derivatives(x)[r]
    }

    fn components_iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.set.components.iter().copied()
    }
}

/// Jet of `u ↦ f(c·u)` from the jet of `f`.
fn rescale(j: Jet, c: f64) -> Jet {
    let mut p = 1.0;
    Jet(j.0.map(|v| {
        let out = v * p;
        p *= c;
        out
    }))
}

/// Shift points `y` in the sup defining `ρ_{h,β}`.
#[derive(Clone, Debug, PartialEq)]
pub enum YGrid {
    /// `y = t·1`; uses `Φ_β(x − t1) = Φ_β(x) − t`.
    Scalar(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl YGrid {
    pub fn len(&self) -> usize {
        match self {
            YGrid::Scalar(t) => t.len(),
            YGrid::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-shift differences `E h(Φ_β(F − y)) − E h(Φ_β(G − y))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothGapProfile {
    pub mean_f: Vec<f64>,
    pub mean_g: Vec<f64>,
    /// `|mean_f − mean_g|` per shift.
    pub gaps: Vec<f64>,
    /// Standard error of each difference.
    pub ses: Vec<f64>,
}

impl SmoothGapProfile {
    /// Max over the grid, with the standard error at the maximizing shift.
    pub fn report(&self) -> DistanceReport {
        let (i, v) = self
            .gaps
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        DistanceReport {
            value: v.max(0.0),
            se: self.ses.get(i).copied().unwrap_or(0.0),
            class: DistanceClass::SmoothTestFunction,
            family_size: self.gaps.len(),
            grid_restricted: true,
        }
    }
}

fn smooth_means<S: VectorSampler + ?Sized>(
    sampler: &S,
    h: &SmoothIndicator,
    params: &SmoothMaxParams,
    grid: &YGrid,
    reps: usize,
    rng: RngContract,
) -> Vec<Moments> {
    let k = grid.len();
    let d = sampler.dim();
    let blocks = map_blocks(rng, reps, BLOCK_SIZE, |r, range| {
        let mut acc = vec![Moments::default(); k];
        let mut x = vec![0.0; d];
        let mut shifted = vec![0.0; d];
        for _ in range {
            sampler.sample_into(r, &mut x);
            match grid {
                YGrid::Scalar(ts) => {
                    let phi = smooth_max(&x, params);
                    for (m, t) in acc.iter_mut().zip(ts) {
                        m.push(h.eval(phi - t));
                    }
                }
                YGrid::Vectors(ys) => {
                    for (m, y) in acc.iter_mut().zip(ys) {
                        shifted.iter_mut().zip(&x).zip(y).for_each(|((s, a), b)| *s = a - b);
                        m.push(h.eval(smooth_max(&shifted, params)));
                    }
                }
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); k];
    for b in &blocks {
        total.iter_mut().zip(b).for_each(|(t, m)| t.merge(m));
    }
    total
}

/// Grid profile of the smooth-function gap with separate replication
/// counts for the two sides.
#[allow(clippy::too_many_arguments)]
pub fn smooth_gap_profile<F, G>(
    sampler_f: &F,
    sampler_g: &G,
    h: &SmoothIndicator,
    params: &SmoothMaxParams,
    grid: &YGrid,
    reps: (usize, usize),
    rng_f: RngContract,
    rng_g: RngContract,
) -> Result<SmoothGapProfile>
where
    F: VectorSampler + ?Sized,
    G: VectorSampler + ?Sized,
{
    if reps.0 < 100 || reps.1 < 100 {
        return Err(param(format!("smooth gap needs at least 100 replications per side, got {reps:?}")));
    }
    if grid.is_empty() {
        return Err(param("y grid must be nonempty"));
    }
    if sampler_f.dim() != sampler_g.dim() {
        return Err(Error::Structure(format!(
            "sampler dimensions differ: {} vs {}",
            sampler_f.dim(),
            sampler_g.dim()
        )));
    }
    if let YGrid::Vectors(ys) = grid {
        if ys.iter().any(|y| y.len() != sampler_f.dim()) {
            return Err(Error::Structure("y grid vectors must match the sampler dimension".into()));
        }
    }
    let mf = smooth_means(sampler_f, h, params, grid, reps.0, rng_f);
    let mg = smooth_means(sampler_g, h, params, grid, reps.1, rng_g);
    let mut out = SmoothGapProfile {
        mean_f: Vec::with_capacity(grid.len()),
        mean_g: Vec::with_capacity(grid.len()),
        gaps: Vec::with_capacity(grid.len()),
        ses: Vec::with_capacity(grid.len()),
    };
    for (a, b) in mf.iter().zip(&mg) {
        let (ea, eb) = (a.estimate(), b.estimate());
        out.mean_f.push(ea.mean);
        out.mean_g.push(eb.mean);
        out.gaps.push((ea.mean - eb.mean).abs());
        out.ses.push((ea.se * ea.se + eb.se * eb.se).sqrt());
    }
    Ok(out)
}

/// Grid-restricted `ρ_{h,β}(F, G) = sup_y |E h(Φ_β(F−y)) − E h(Φ_β(G−y))|`,
/// a lower estimate of the sup over all of `R^d`.
#[allow(clippy::too_many_arguments)]
pub fn rho_h_beta_estimate<F, G>(
    sampler_f: &F,
    sampler_g: &G,
    h: &SmoothIndicator,
    params: &SmoothMaxParams,
    grid: &YGrid,
    reps: usize,
    rng_f: RngContract,
    rng_g: RngContract,
) -> Result<DistanceReport>
where
    F: VectorSampler + ?Sized,
    G: VectorSampler + ?Sized,
{
    smooth_gap_profile(sampler_f, sampler_g, h, params, grid, (reps, reps), rng_f, rng_g).map(|p| p.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CovarianceModel;

    #[test]
    fn smooth_max_examples() {
        let p = SmoothMaxParams::new(1.0).unwrap();
        assert!((smooth_max(&[0.0; 7], &p) - 7f64.ln()).abs() < 1e-15);
        let x = [1e6, 0.0, -3.0];
        assert!((smooth_max(&x, &p) - 1e6).abs() < 1e-12 * 1e6);
        assert!(SmoothMaxParams::new(0.0).is_err());
        let g = smooth_max_gradient(&[2.0; 4], &p);
        assert!(g.iter().all(|v| (v - 0.25).abs() < 1e-15));
        let g = smooth_max_gradient(&[40.0, 0.0, 0.0], &p);
        assert!(g[0] >= 1.0 - 1e-9);
    }

    #[test]
    fn hessian_rows_sum_to_zero() {
        let p = SmoothMaxParams::new(2.5).unwrap();
        let x = [0.3, -0.2, 1.1, 0.0];
        let h = smooth_max_hessian(&x, &p);
        for i in 0..4 {
            let s: f64 = h[i * 4..(i + 1) * 4].iter().sum();
            assert!(s.abs() < 1e-12);
        }
        // against finite differences of the gradient
        let step = 1e-6;
        for j in 0..4 {
            let mut up = x;
            let mut dn = x;
            up[j] += step;
            dn[j] -= step;
            let gu = smooth_max_gradient(&up, &p);
            let gd = smooth_max_gradient(&dn, &p);
            for i in 0..4 {
                assert!(((gu[i] - gd[i]) / (2.0 * step) - h[i * 4 + j]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn jet_matches_closed_forms() {
        // exp(1/(1−t)) derivatives at t = 0.3 against hand-derived series
        let t = 0.3;
        let j = Jet::constant(1.0).sub(Jet::variable(t)).recip().exp().derivatives();
        let u = 1.0 / (1.0 - t);
        let e = u.exp();
        assert!((j[1] - e * u.powi(2)).abs() < 1e-12 * e);
        assert!((j[2] - e * (u.powi(4) + 2.0 * u.powi(3))).abs() < 1e-11 * e);
    }

    #[test]
    fn transition_shape() {
        assert_eq!(transition(-0.5), 1.0);
        assert_eq!(transition(1.5), 0.0);
        assert!((transition(0.5) - 0.5).abs() < 1e-15);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!((transition(t) + transition(1.0 - t) - 1.0).abs() < 1e-14);
            assert!((transition_jet(t).0[0] - transition(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_are_sane() {
        let c = certified_constants();
        assert!(c.iter().all(|v| v.is_finite() && *v > 0.0));
        // |g'| peaks at the midpoint, where g'(1/2) = −2
        assert!((c[0] / CERTIFICATE_INFLATION - 2.0).abs() < 1e-6);
    }

    #[test]
    fn half_line_and_interval_examples() {
        let h = SmoothIndicator::build(IntervalSet::half_line(0.0), 0.1).unwrap();
        assert_eq!(h.eval(0.0), 1.0);
        assert_eq!(h.eval(0.3), 0.0);
        let mut prev = 1.0;
        for i in 0..=300 {
            let v = h.eval(i as f64 * 1e-3);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        let h = SmoothIndicator::build(IntervalSet::interval(0.0, 1.0).unwrap(), 0.05).unwrap();
        for i in 0..=100 {
            assert_eq!(h.eval(i as f64 / 100.0), 1.0);
        }
        assert_eq!(h.eval(-0.150001), 0.0);
        assert_eq!(h.eval(1.150001), 0.0);
    }

    #[test]
    fn overlapping_components_rejected() {
        let set = IntervalSet::new(vec![(0.0, 1.0), (1.5, 2.0)]).unwrap();
        assert!(matches!(SmoothIndicator::build(set.clone(), 0.1), Err(Error::Structure(_))));
        assert!(SmoothIndicator::build(set, 0.08).is_ok());
    }

    #[test]
    fn identical_samplers_give_zero() {
        let c = CovarianceModel::identity(3);
        let h = SmoothIndicator::build(IntervalSet::half_line(0.0), 0.2).unwrap();
        let p = SmoothMaxParams::new(5.0).unwrap();
        let grid = YGrid::Scalar(vec![-0.5, 0.0, 0.5, 1.0]);
        let rng = RngContract::new(1, 2);
        let r = rho_h_beta_estimate(&c, &c, &h, &p, &grid, 500, rng, rng).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(rho_h_beta_estimate(&c, &c, &h, &p, &grid, 50, rng, rng).is_err());
    }
}
