//! Observation matrices, generator families and Gaussian analogs.
//!
//! `SampleMatrix` holds `n` independent rows `X_i ∈ R^d`. The normalized sum
//! `S_n = n^{-1/2} Σ_i X_i` is what every distance in this crate is about; its
//! Gaussian analog shares the covariance `E[S_n S_n^T]`.
//!
//! Generator families are centered analytically. Several of them have a
//! closed-form law for the normalized sum (Gaussian, Gamma and
//! difference-of-Gamma sums), which [`GeneratorSpec::sample_normalized_sum`]
//! uses instead of materialising the `n × d` matrix.

use crate::error::{param, Error, Result};
use crate::rng::{map_blocks, RngContract, BLOCK_SIZE};
use crate::stats::compensated_sum;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// `n × d` matrix of independent rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    values: Array2<f64>,
}

impl SampleMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, d) = values.dim();
        if n < 3 || d < 3 {
            return Err(param(format!("sample matrix needs n >= 3 and d >= 3, got {n}x{d}")));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(param(format!("non-finite entry {v} at ({i}, {j})")));
        }
        Ok(Self { values })
    }

    pub fn from_rows(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        let values = Array2::from_shape_vec((n, d), data)
            .map_err(|e| Error::Structure(format!("row data does not match {n}x{d}: {e}")))?;
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    pub fn normalized_sum(&self) -> Vec<f64> {
        normalized_sum_view(self.values.view())
    }

    /// `(X, −X)` column-stacked, width `2d`.
    pub fn diamond(&self) -> SampleMatrix {
        SampleMatrix {
            values: diamond_matrix(self.values.view()),
        }
    }

    /// `(1/n) Σ_i X_i X_i^T`. No mean is re-subtracted: rows are centered in law.
    pub fn second_moment_matrix(&self) -> Array2<f64> {
        let n = self.n() as f64;
        self.values.t().dot(&self.values) / n
    }

    pub fn empirical_covariance(&self) -> Result<CovarianceModel> {
        CovarianceModel::from_matrix(self.second_moment_matrix())
    }

    /// Sample mean `X̄`.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.values
            .axis_iter(Axis(1))
            .map(|c| compensated_sum(c.iter().copied()) / n)
            .collect()
    }

    /// Rows re-centered at the sample mean, `X_i − X̄`.
    pub fn centered(&self) -> Array2<f64> {
        let means = ndarray::Array1::from(self.column_means());
        &self.values - &means
    }
}

/// `n^{-1/2} Σ_i X_i` with compensated summation per coordinate.
pub fn normalized_sum_view(x: ArrayView2<'_, f64>) -> Vec<f64> {
    let scale = (x.nrows() as f64).sqrt().recip();
    x.axis_iter(Axis(1))
        .map(|col| compensated_sum(col.iter().copied()) * scale)
        .collect()
}

pub fn diamond_matrix(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut out = Array2::zeros((n, 2 * d));
    out.slice_mut(s![.., ..d]).assign(&x);
    out.slice_mut(s![.., d..]).assign(&x.mapv(|v| -v));
    out
}

pub fn diamond_vector(v: &[f64]) -> Vec<f64> {
    v.iter().copied().chain(v.iter().map(|x| -x)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubExponentialShape {
    /// `E − 1` with `E` standard exponential (third moment 2).
    #[default]
    Exponential,
    /// Symmetric Laplace with unit variance.
    Laplace,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    #[default]
    Gaussian,
    CenteredExponential,
}

impl Innovation {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Innovation::Gaussian => rng.sample(StandardNormal),
            Innovation::CenteredExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
        }
    }

    /// Exact draw of `n^{-1/2} Σ_{i≤n} ε_i`.
    fn normalized_sum(self, rng: &mut ChaCha8Rng, gamma_n: &Gamma<f64>, n: f64) -> f64 {
        match self {
            Innovation::Gaussian => rng.sample(StandardNormal),
            Innovation::CenteredExponential => (gamma_n.sample(rng) - n) / n.sqrt(),
        }
    }

    fn moments(self) -> (f64, f64) {
        match self {
            Innovation::Gaussian => (0.0, 3.0),
            Innovation::CenteredExponential => (2.0, 9.0),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn sqrt3() -> f64 {
    3f64.sqrt()
}

fn minus_two() -> f64 {
    -2.0
}

/// Data-generating family for `X_{ij}`. All families are exactly centered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// iid sub-exponential entries with standard deviation `scale`.
    SubExponentialIid {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shape: SubExponentialShape,
    },
    /// iid `Uniform(−half_width, half_width)` entries.
    BoundedIid {
        #[serde(default = "sqrt3")]
        half_width: f64,
    },
    /// Symmetrized Pareto with tail index `q + 1`, scaled to unit variance,
    /// so `‖max_j |X_ij|‖_q` is finite.
    HeavyTailQ { q: f64 },
    /// `X_ij = a_j f_i + noise_sd · e_ij`; the covariance is `aa^T + noise_sd² I`.
    FactorModel {
        #[serde(default = "one")]
        loading: f64,
        #[serde(default)]
        loadings: Option<Vec<f64>>,
        #[serde(default = "one")]
        noise_sd: f64,
        #[serde(default)]
        innovation: Innovation,
    },
    /// `(k − Gamma(k)) / √k` with `k = 4/γ²`: unit variance, third moment `γ < 0`,
    /// finite ψ₁-norm. `γ = −2` is `1 − E`. A positive `γ` gives the mirror
    /// image `(Gamma(k) − k)/√k`.
    SkewedNegativeThirdMoment {
        #[serde(default = "minus_two")]
        gamma: f64,
    },
    Gaussian {
        #[serde(default = "one")]
        scale: f64,
    },
}

impl GeneratorSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(param(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            GeneratorSpec::SubExponentialIid { scale, .. } => positive("scale", *scale),
            GeneratorSpec::BoundedIid { half_width } => positive("half_width", *half_width),
            GeneratorSpec::HeavyTailQ { q } => {
                if q.is_finite() && *q > 2.0 {
                    Ok(())
                } else {
                    Err(param(format!("heavy_tail_q needs q > 2, got {q}")))
                }
            }
            GeneratorSpec::FactorModel {
                loading,
                loadings,
                noise_sd,
                ..
            } => {
                if !(noise_sd.is_finite() && *noise_sd >= 0.0) {
                    return Err(param(format!("noise_sd must be >= 0, got {noise_sd}")));
                }
                match loadings {
                    Some(a) => {
                        if a.len() != d {
                            return Err(param(format!("{} loadings for d = {d}", a.len())));
                        }
                        if let Some(v) = a.iter().find(|v| !v.is_finite() || **v == 0.0) {
                            return Err(param(format!("factor loadings must be finite and nonzero, got {v}")));
                        }
                        Ok(())
                    }
                    None => {
                        if loading.is_finite() && *loading != 0.0 {
                            Ok(())
                        } else {
                            Err(param(format!("factor loading must be finite and nonzero, got {loading}")))
                        }
                    }
                }
            }
            GeneratorSpec::SkewedNegativeThirdMoment { gamma } => {
                if gamma.is_finite() && *gamma != 0.0 {
                    Ok(())
                } else {
                    Err(param(format!("skewed family needs gamma != 0, got {gamma}")))
                }
            }
            GeneratorSpec::Gaussian { scale } => positive("scale", *scale),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::SubExponentialIid { .. } => "sub_exponential_iid",
            GeneratorSpec::BoundedIid { .. } => "bounded_iid",
            GeneratorSpec::HeavyTailQ { .. } => "heavy_tail_q",
            GeneratorSpec::FactorModel { .. } => "factor_model",
            GeneratorSpec::SkewedNegativeThirdMoment { .. } => "skewed_negative_third_moment",
            GeneratorSpec::Gaussian { .. } => "gaussian",
        }
    }

    /// Factor loadings `a ∈ R^d` for the factor family.
    pub fn loadings(&self, d: usize) -> Option<Vec<f64>> {
        match self {
            GeneratorSpec::FactorModel {
                loading, loadings, ..
            } => Some(loadings.clone().unwrap_or_else(|| vec![*loading; d])),
            _ => None,
        }
    }

    /// Tail index of the heavy-tailed family.
    fn pareto_index(q: f64) -> f64 {
        q + 1.0
    }

    /// Population `(E X, E X², E X³, E X⁴)` of column `j`.
    pub fn column_moments(&self, j: usize, d: usize) -> [f64; 4] {
        match self {
            GeneratorSpec::SubExponentialIid { scale, shape } => {
                let s = *scale;
                match shape {
                    SubExponentialShape::Exponential => [0.0, s * s, 2.0 * s.powi(3), 9.0 * s.powi(4)],
                    SubExponentialShape::Laplace => [0.0, s * s, 0.0, 6.0 * s.powi(4)],
                }
            }
            GeneratorSpec::BoundedIid { half_width } => {
                let a = *half_width;
                [0.0, a * a / 3.0, 0.0, a.powi(4) / 5.0]
            }
            GeneratorSpec::HeavyTailQ { q } => {
                let alpha = Self::pareto_index(*q);
                let m4 = if alpha > 4.0 {
                    let var = alpha / (alpha - 2.0);
                    alpha / (alpha - 4.0) / (var * var)
                } else {
                    f64::INFINITY
                };
                [0.0, 1.0, 0.0, m4]
            }
            GeneratorSpec::FactorModel {
                noise_sd,
                innovation,
                ..
            } => {
                let a = self.loadings(d).map(|v| v[j]).unwrap_or(1.0);
                let s = *noise_sd;
                let (k3, m4) = innovation.moments();
                [
                    0.0,
                    a * a + s * s,
                    (a.powi(3) + s.powi(3)) * k3,
                    a.powi(4) * m4 + 6.0 * a * a * s * s + s.powi(4) * m4,
                ]
            }
            GeneratorSpec::SkewedNegativeThirdMoment { gamma } => {
                let k = 4.0 / (gamma * gamma);
                // centered Gamma(k)/√k: κ3 = 2/√k, κ4 = 6/k
                [0.0, 1.0, *gamma, 3.0 + 6.0 / k]
            }
            GeneratorSpec::Gaussian { scale } => [0.0, scale * scale, 0.0, 3.0 * scale.powi(4)],
        }
    }

    /// Third moment of a standardized column (skewness); used by the
    /// Cramér-ratio experiments.
    pub fn skewness(&self) -> f64 {
        let m = self.column_moments(0, 1);
        m[2] / m[1].powf(1.5)
    }

    /// `E[X_i X_i^T]`, which is also `Cov(S_n)`.
    pub fn population_covariance(&self, d: usize) -> Result<CovarianceModel> {
        match self {
            GeneratorSpec::FactorModel { noise_sd, .. } => {
                CovarianceModel::factor(self.loadings(d).unwrap_or_default(), *noise_sd)
            }
            _ => Ok(CovarianceModel::scaled_identity(d, self.column_moments(0, d)[1])),
        }
    }

    /// Population plug-in `D_n` for `max_i ‖max_j |X_ij|‖_q ≤ D_n` (heavy-tail
    /// family), via the union bound `E max_j |X_ij|^q ≤ d E|X_11|^q`.
    pub fn moment_bound_dn(&self, d: usize) -> Option<(f64, f64)> {
        match self {
            GeneratorSpec::HeavyTailQ { q } => {
                let alpha = Self::pareto_index(*q);
                let sd = (alpha / (alpha - 2.0)).sqrt();
                let abs_q = alpha / (alpha - q) / sd.powf(*q);
                Some((*q, (d as f64 * abs_q).powf(1.0 / q).max(1.0)))
            }
            _ => None,
        }
    }

    /// True when the normalized sum has a closed-form law that avoids
    /// generating the full matrix.
    pub fn has_exact_sum_law(&self) -> bool {
        !matches!(
            self,
            GeneratorSpec::BoundedIid { .. } | GeneratorSpec::HeavyTailQ { .. }
        )
    }

    /// Random draws consumed per normalized-sum sample; used by budget planning.
    pub fn draws_per_sum(&self, n: usize, d: usize) -> f64 {
        if self.has_exact_sum_law() {
            2.0 * d as f64 + 1.0
        } else {
            n as f64 * d as f64
        }
    }

    /// One row `X_i`.
    pub fn fill_row(&self, rng: &mut ChaCha8Rng, row: &mut [f64]) {
        let d = row.len();
        match self {
            GeneratorSpec::SubExponentialIid { scale, shape } => match shape {
                SubExponentialShape::Exponential => row.iter_mut().for_each(|x| {
                    let e: f64 = rng.sample(Exp1);
                    *x = scale * (e - 1.0);
                }),
                SubExponentialShape::Laplace => row.iter_mut().for_each(|x| {
                    let a: f64 = rng.sample(Exp1);
                    let b: f64 = rng.sample(Exp1);
                    *x = scale * (a - b) * std::f64::consts::FRAC_1_SQRT_2;
                }),
            },
            GeneratorSpec::BoundedIid { half_width } => row
                .iter_mut()
                .for_each(|x| *x = half_width * (2.0 * rng.random::<f64>() - 1.0)),
            GeneratorSpec::HeavyTailQ { q } => {
                let alpha = Self::pareto_index(*q);
                let sd = (alpha / (alpha - 2.0)).sqrt();
                row.iter_mut().for_each(|x| {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let mag = u.powf(-1.0 / alpha) / sd;
                    *x = if rng.random::<bool>() { mag } else { -mag };
                })
            }
            GeneratorSpec::FactorModel {
                noise_sd,
                innovation,
                ..
            } => {
                let a = self.loadings(d).unwrap_or_default();
                let f = innovation.draw(rng);
                for (x, aj) in row.iter_mut().zip(&a) {
                    *x = aj * f + noise_sd * innovation.draw(rng);
                }
            }
            GeneratorSpec::SkewedNegativeThirdMoment { gamma } => {
                let k = 4.0 / (gamma * gamma);
                let g = Gamma::new(k, 1.0).expect("validated shape");
                let sk = -gamma.signum() * k.sqrt();
                row.iter_mut().for_each(|x| *x = (k - g.sample(rng)) / sk);
            }
            GeneratorSpec::Gaussian { scale } => row.iter_mut().for_each(|x| {
                let z: f64 = rng.sample(StandardNormal);
                *x = scale * z;
            }),
        }
    }

    /// One draw of `S_n = n^{-1/2} Σ_{i≤n} X_i`, exact in law.
    pub fn sample_normalized_sum(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut [f64]) {
        let nf = n as f64;
        let sn = nf.sqrt();
        match self {
            GeneratorSpec::Gaussian { scale } => out.iter_mut().for_each(|x| {
                let z: f64 = rng.sample(StandardNormal);
                *x = scale * z;
            }),
            GeneratorSpec::SubExponentialIid { scale, shape } => {
                let g = Gamma::new(nf, 1.0).expect("n >= 1");
                match shape {
                    SubExponentialShape::Exponential => out
                        .iter_mut()
                        .for_each(|x| *x = scale * (g.sample(rng) - nf) / sn),
                    SubExponentialShape::Laplace => out.iter_mut().for_each(|x| {
                        *x = scale * (g.sample(rng) - g.sample(rng)) / (2.0 * nf).sqrt()
                    }),
                }
            }
            GeneratorSpec::SkewedNegativeThirdMoment { gamma } => {
                let k = 4.0 / (gamma * gamma);
                let g = Gamma::new(nf * k, 1.0).expect("positive shape");
                let scale = -gamma.signum() * (k * nf).sqrt();
                out.iter_mut()
                    .for_each(|x| *x = (nf * k - g.sample(rng)) / scale);
            }
            GeneratorSpec::FactorModel {
                noise_sd,
                innovation,
                ..
            } => {
                let a = self.loadings(out.len()).unwrap_or_default();
                let g = Gamma::new(nf, 1.0).expect("n >= 1");
                let f = innovation.normalized_sum(rng, &g, nf);
                for (x, aj) in out.iter_mut().zip(&a) {
                    *x = aj * f + noise_sd * innovation.normalized_sum(rng, &g, nf);
                }
            }
            GeneratorSpec::BoundedIid { .. } | GeneratorSpec::HeavyTailQ { .. } => {
                out.iter_mut().for_each(|x| *x = 0.0);
                let mut row = vec![0.0; out.len()];
                for _ in 0..n {
                    self.fill_row(rng, &mut row);
                    out.iter_mut().zip(&row).for_each(|(s, r)| *s += r);
                }
                out.iter_mut().for_each(|x| *x /= sn);
            }
        }
    }
}

/// Draws an `n × d` sample. Row blocks use dedicated sub-streams, so the
/// result is bit-identical for any thread count.
pub fn generate(spec: &GeneratorSpec, n: usize, d: usize, rng: RngContract) -> Result<SampleMatrix> {
    if n < 3 || d < 3 {
        return Err(param(format!("generate needs n >= 3 and d >= 3, got {n}x{d}")));
    }
    spec.validate(d)?;
    let blocks = map_blocks(rng, n, BLOCK_SIZE, |r, range| {
        let mut buf = vec![0.0; range.len() * d];
        for row in buf.chunks_mut(d) {
            spec.fill_row(r, row);
        }
        buf
    });
    SampleMatrix::from_rows(n, d, blocks.concat())
}

/// `reps` independent draws of `S_n` as a `reps × d` matrix.
pub fn sample_normalized_sums(
    spec: &GeneratorSpec,
    n: usize,
    d: usize,
    reps: usize,
    rng: RngContract,
) -> Result<Array2<f64>> {
    spec.validate(d)?;
    let sampler = NormalizedSumSampler::new(spec.clone(), n, d)?;
    Ok(sample_rows(&sampler, reps, rng))
}

/// A source of iid random vectors.
pub trait VectorSampler: Sync {
    fn dim(&self) -> usize;
    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// `reps × dim` matrix of iid draws.
pub fn sample_rows<S: VectorSampler + ?Sized>(sampler: &S, reps: usize, rng: RngContract) -> Array2<f64> {
    let d = sampler.dim();
    let blocks = map_blocks(rng, reps, BLOCK_SIZE, |r, range| {
        let mut buf = vec![0.0; range.len() * d];
        for row in buf.chunks_mut(d) {
            sampler.sample_into(r, row);
        }
        buf
    });
    Array2::from_shape_vec((reps, d), blocks.concat()).expect("block sizes add up")
}

/// Applies `f` to `reps` draws without storing them; results in draw order.
pub fn map_samples<S, T, F>(sampler: &S, reps: usize, rng: RngContract, f: F) -> Vec<T>
where
    S: VectorSampler + ?Sized,
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    let d = sampler.dim();
    map_blocks(rng, reps, BLOCK_SIZE, |r, range| {
        let mut buf = vec![0.0; d];
        range
            .map(|_| {
                sampler.sample_into(r, &mut buf);
                f(&buf)
            })
            .collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Draws of `S_n` for a generator family.
#[derive(Clone, Debug)]
pub struct NormalizedSumSampler {
    spec: GeneratorSpec,
    n: usize,
    d: usize,
}

impl NormalizedSumSampler {
    pub fn new(spec: GeneratorSpec, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(param("normalized sum needs n >= 1 and d >= 1"));
        }
        spec.validate(d)?;
        Ok(Self { spec, n, d })
    }
}

impl VectorSampler for NormalizedSumSampler {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        self.spec.sample_normalized_sum(rng, self.n, out)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Root {
    /// `C = F F^T` with `F` of shape `d × rank`.
    Dense(Array2<f64>),
    ScaledIdentity(f64),
    Factor { loadings: Vec<f64>, noise_sd: f64 },
}

/// A symmetric positive semidefinite covariance with a sampling root.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceModel {
    matrix: Array2<f64>,
    root: Root,
}

/// Relative threshold below which negative eigenvalues count as roundoff.
pub const PSD_TOLERANCE: f64 = 1e-10;

impl CovarianceModel {
    /// Validates symmetry and semidefiniteness and factors `C` by a pivoted
    /// (rank-revealing) Cholesky. Eigenvalues in `[−1e−10 λ_max, 0)` are
    /// clamped to zero first; anything more negative is an error.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c || r == 0 {
            return Err(Error::Structure(format!("covariance must be square and nonempty, got {r}x{c}")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(param("covariance has non-finite entries"));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..r {
            for j in 0..i {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > 1e-12 * scale.max(1e-300) {
                    return Err(Error::Structure(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let matrix = (&matrix + &matrix.t()) * 0.5;

        let max_diag = matrix.diag().iter().fold(0.0f64, |m, v| m.max(*v));
        if max_diag == 0.0 && scale == 0.0 {
            return Ok(Self {
                root: Root::Dense(Array2::zeros((r, 0))),
                matrix,
            });
        }
        if let Some(f) = pivoted_cholesky(&matrix) {
            return Ok(Self {
                matrix,
                root: Root::Dense(f),
            });
        }

        let dm = DMatrix::from_fn(r, r, |i, j| matrix[[i, j]]);
        let eig = SymmetricEigen::new(dm);
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if lmin < -PSD_TOLERANCE * lmax.max(0.0) || lmax <= 0.0 {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lmin });
        }
        let clamped = eig.eigenvalues.map(|l| l.max(0.0));
        let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
        let repaired = Array2::from_shape_fn((r, r), |(i, j)| 0.5 * (repaired[(i, j)] + repaired[(j, i)]));
        let f = pivoted_cholesky(&repaired).ok_or_else(|| {
            Error::Numerical("pivoted Cholesky failed after eigenvalue repair".into())
        })?;
        Ok(Self {
            matrix: repaired,
            root: Root::Dense(f),
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    pub fn scaled_identity(d: usize, variance: f64) -> Self {
        Self {
            matrix: Array2::eye(d) * variance,
            root: Root::ScaledIdentity(variance.max(0.0).sqrt()),
        }
    }

    /// `aa^T + σ² I`.
    pub fn factor(loadings: Vec<f64>, noise_sd: f64) -> Result<Self> {
        let d = loadings.len();
        if d == 0 {
            return Err(param("factor covariance needs at least one loading"));
        }
        let a = ndarray::Array1::from(loadings.clone());
        let outer = a
            .view()
            .insert_axis(Axis(1))
            .dot(&a.view().insert_axis(Axis(0)));
        Ok(Self {
            matrix: outer + Array2::<f64>::eye(d) * (noise_sd * noise_sd),
            root: Root::Factor { loadings, noise_sd },
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    /// Number of latent Gaussian coordinates used by the root.
    pub fn rank(&self) -> usize {
        match &self.root {
            Root::Dense(f) => f.ncols(),
            Root::ScaledIdentity(sd) => {
                if *sd > 0.0 {
                    self.dim()
                } else {
                    0
                }
            }
            Root::Factor { noise_sd, .. } => {
                if *noise_sd > 0.0 {
                    self.dim()
                } else {
                    1
                }
            }
        }
    }

    /// `σ̲ = min_j √C_jj`.
    pub fn sigma_min(&self) -> f64 {
        self.matrix
            .diag()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.max(0.0).sqrt()))
    }

    /// Dense root `F` with `C = F F^T`.
    pub fn root_matrix(&self) -> Array2<f64> {
        match &self.root {
            Root::Dense(f) => f.clone(),
            Root::ScaledIdentity(sd) => Array2::eye(self.dim()) * *sd,
            Root::Factor { loadings, noise_sd } => {
                let d = loadings.len();
                let mut f = Array2::zeros((d, d + 1));
                for j in 0..d {
                    f[[j, 0]] = loadings[j];
                    f[[j, j + 1]] = *noise_sd;
                }
                f
            }
        }
    }

    /// True when `C` is a multiple of the identity, in which case the law of
    /// the Gaussian maximum is known in closed form.
    pub fn identity_scale(&self) -> Option<f64> {
        match &self.root {
            Root::ScaledIdentity(sd) => Some(*sd),
            _ => None,
        }
    }
}

/// Lower-triangular (in pivot order) root of a PSD matrix, returned with rows
/// in the original coordinate order and one column per retained pivot.
/// Returns `None` when the remaining Schur complement is not negligible,
/// i.e. when `a` is not PSD up to roundoff.
fn pivoted_cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let d = a.nrows();
    let max_diag = a.diag().iter().fold(0.0f64, |m, v| m.max(*v));
    let stop = 10.0 * f64::EPSILON * d as f64 * max_diag;
    let mut diag: Vec<f64> = a.diag().to_vec();
    let mut piv: Vec<usize> = (0..d).collect();
    let mut f = Array2::<f64>::zeros((d, d));
    let mut rank = 0;
    for k in 0..d {
        let (pi, best) = (k..d)
            .map(|i| (i, diag[piv[i]]))
            .fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= stop {
            break;
        }
        piv.swap(k, pi);
        let p = piv[k];
        let lpp = best.sqrt();
        f[[p, k]] = lpp;
        for &q in &piv[k + 1..] {
            let mut v = a[[q, p]];
            for m in 0..k {
                v -= f[[q, m]] * f[[p, m]];
            }
            let v = v / lpp;
            f[[q, k]] = v;
            diag[q] -= v * v;
        }
        rank += 1;
    }
    let f = f.slice(s![.., ..rank]).to_owned();
    let residual = a - &f.dot(&f.t());
    let worst = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst <= PSD_TOLERANCE * max_diag.max(f64::MIN_POSITIVE) {
        Some(f)
    } else {
        None
    }
}

impl VectorSampler for CovarianceModel {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match &self.root {
            Root::ScaledIdentity(sd) => out.iter_mut().for_each(|x| {
                let z: f64 = rng.sample(StandardNormal);
                *x = sd * z;
            }),
            Root::Factor { loadings, noise_sd } => {
                let z0: f64 = rng.sample(StandardNormal);
                for (x, a) in out.iter_mut().zip(loadings) {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = a * z0 + noise_sd * z;
                }
            }
            Root::Dense(f) => {
                let z: Vec<f64> = (0..f.ncols()).map(|_| rng.sample(StandardNormal)).collect();
                for (j, x) in out.iter_mut().enumerate() {
                    *x = f.row(j).iter().zip(&z).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// `reps` iid draws of `N(0, C)` as a `reps × d` matrix.
pub fn gaussian_analog_sample(c: &CovarianceModel, reps: usize, rng: RngContract) -> Array2<f64> {
    sample_rows(c, reps, rng)
}
