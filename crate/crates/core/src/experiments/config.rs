//! Experiment configuration.
//!
//! A config file is TOML. Every key is optional; missing keys take the
//! defaults of the selected experiment, so an empty file is a valid config.
//!
//! ```toml
//! experiment = "convergence_sweep"
//! master_seed = 7
//! n_grid = [50, 200, 800, 3200]
//! reps = 100000
//!
//! [generator]
//! family = "sub_exponential_iid"
//!
//! [d_rule]
//! kind = "fixed"
//! d = 100
//! ```

use crate::data::{GeneratorSpec, Innovation, SubExponentialShape};
use crate::error::{Error, Result};
use crate::multipliers::MultiplierLaw;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ConvergenceSweep,
    FactorSweep,
    LowerBoundDemo,
    CramerRatioCheck,
    LindebergSwap,
    SteinRoute,
    BootstrapCoverage,
    BoundReport,
    SteinCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ConvergenceSweep => "convergence_sweep",
            ExperimentKind::FactorSweep => "factor_sweep",
            ExperimentKind::LowerBoundDemo => "lower_bound_demo",
            ExperimentKind::CramerRatioCheck => "cramer_ratio_check",
            ExperimentKind::LindebergSwap => "lindeberg_swap",
            ExperimentKind::SteinRoute => "stein_route",
            ExperimentKind::BootstrapCoverage => "bootstrap_coverage",
            ExperimentKind::BoundReport => "bound_report",
            ExperimentKind::SteinCheck => "stein_check",
        }
    }
}

/// How `d` follows `n` along a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DRule {
    Fixed { d: usize },
    /// `d = ⌈exp((c n)^{1/3})⌉`, so `(log d)³/n → c`.
    LogCube { c: f64 },
    /// `d = ⌈exp((c n)^{1/5})⌉`, so `(log d)⁵/n → c`.
    LogFifth { c: f64 },
    /// Every listed `d` at every `n`.
    Each { d: Vec<usize> },
}

impl DRule {
    fn from_power(c: f64, n: usize, power: f64) -> usize {
        (c * n as f64).powf(1.0 / power).exp().ceil() as usize
    }

    pub fn dims(&self, n: usize) -> Vec<usize> {
        match self {
            DRule::Fixed { d } => vec![*d],
            DRule::LogCube { c } => vec![Self::from_power(*c, n, 3.0)],
            DRule::LogFifth { c } => vec![Self::from_power(*c, n, 5.0)],
            DRule::Each { d } => d.clone(),
        }
    }
}

/// Ceilings checked before any work starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    /// Largest number of f64 values held at once by one cell.
    #[serde(default = "Budget::default_entries")]
    pub max_entries: f64,
    /// Largest number of random variates one experiment may draw.
    #[serde(default = "Budget::default_draws")]
    pub max_draws: f64,
}

impl Budget {
    fn default_entries() -> f64 {
        1e8
    }
    fn default_draws() -> f64 {
        5e10
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_entries: Self::default_entries(),
            max_draws: Self::default_draws(),
        }
    }
}

/// Config file contents; every key optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<ExperimentKind>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub generator: Option<GeneratorSpec>,
    pub control_generator: Option<GeneratorSpec>,
    pub n_grid: Option<Vec<usize>>,
    pub trend_n_grid: Option<Vec<usize>>,
    pub d_rule: Option<DRule>,
    pub reps: Option<usize>,
    pub reference_reps: Option<usize>,
    #[serde(rename = "R")]
    pub bootstrap_reps: Option<usize>,
    pub rectangles: Option<usize>,
    pub data_draws: Option<usize>,
    pub trials: Option<usize>,
    pub multiplier: Option<MultiplierLaw>,
    pub compare_multiplier: Option<MultiplierLaw>,
    pub alpha: Option<f64>,
    pub studentize: Option<bool>,
    pub epsilon: Option<f64>,
    pub epsilon_iqr_fraction: Option<f64>,
    pub y_grid_points: Option<usize>,
    pub x_grid: Option<Vec<f64>>,
    pub quadrature_nodes: Option<usize>,
    pub budget: Option<Budget>,
}

/// A fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    pub generator: GeneratorSpec,
    /// Symmetric comparison family (lower-bound demo).
    pub control_generator: GeneratorSpec,
    pub n_grid: Vec<usize>,
    /// Sample sizes for the bootstrap distance trend.
    pub trend_n_grid: Vec<usize>,
    pub d_rule: DRule,
    /// Monte Carlo replications per cell.
    pub reps: usize,
    /// Replications for the cheap, exactly sampled side of a comparison.
    pub reference_reps: usize,
    #[serde(rename = "R")]
    pub bootstrap_reps: usize,
    pub rectangles: usize,
    pub data_draws: usize,
    pub trials: usize,
    pub multiplier: MultiplierLaw,
    pub compare_multiplier: Option<MultiplierLaw>,
    pub alpha: f64,
    pub studentize: bool,
    /// Explicit ε (bound report); otherwise derived from `epsilon_iqr_fraction`.
    pub epsilon: Option<f64>,
    pub epsilon_iqr_fraction: f64,
    pub y_grid_points: usize,
    pub x_grid: Vec<f64>,
    pub quadrature_nodes: usize,
    pub budget: Budget,
}

fn exponential() -> GeneratorSpec {
    GeneratorSpec::SubExponentialIid {
        scale: 1.0,
        shape: SubExponentialShape::Exponential,
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: kind,
            master_seed: 20_240_601,
            threads: None,
            out_dir: PathBuf::from("out"),
            generator: exponential(),
            control_generator: GeneratorSpec::SubExponentialIid {
                scale: 1.0,
                shape: SubExponentialShape::Laplace,
            },
            n_grid: vec![50, 200, 800, 3200],
            trend_n_grid: vec![50, 200, 800],
            d_rule: DRule::Fixed { d: 100 },
            reps: 100_000,
            reference_reps: 100_000,
            bootstrap_reps: 2000,
            rectangles: 1000,
            data_draws: 20,
            trials: 500,
            multiplier: MultiplierLaw::BetaTransformed,
            compare_multiplier: None,
            alpha: 0.1,
            studentize: true,
            epsilon: None,
            epsilon_iqr_fraction: 0.25,
            y_grid_points: 21,
            x_grid: vec![0.0, 2.0],
            quadrature_nodes: 64,
            budget: Budget::default(),
        };
        match kind {
            ExperimentKind::ConvergenceSweep => {}
            ExperimentKind::FactorSweep => {
                c.generator = GeneratorSpec::FactorModel {
                    loading: 1.0,
                    loadings: None,
                    noise_sd: 1.0,
                    innovation: Innovation::CenteredExponential,
                };
                c.n_grid = vec![100, 400, 1600];
                c.d_rule = DRule::LogCube { c: 0.25 };
            }
            ExperimentKind::LowerBoundDemo => {
                c.generator = GeneratorSpec::SkewedNegativeThirdMoment { gamma: -2.0 };
                c.n_grid = vec![250, 500, 1000];
                c.d_rule = DRule::LogCube { c: 0.25 };
                c.reps = 5000;
            }
            ExperimentKind::CramerRatioCheck => {
                c.generator = GeneratorSpec::SkewedNegativeThirdMoment { gamma: -2.0 };
                c.n_grid = vec![1000];
                c.d_rule = DRule::Fixed { d: 1 };
                c.reps = 10_000_000;
            }
            ExperimentKind::LindebergSwap => {
                c.n_grid = vec![100, 400, 1600];
                c.d_rule = DRule::Fixed { d: 20 };
                c.reps = 250_000;
                c.reference_reps = 4_000_000;
                c.compare_multiplier = Some(MultiplierLaw::Rademacher);
            }
            ExperimentKind::SteinRoute => {
                c.n_grid = vec![100, 400];
                c.d_rule = DRule::Each { d: vec![5, 20] };
                c.reps = 20_000;
                c.reference_reps = 2000;
                c.data_draws = 5;
            }
            ExperimentKind::BootstrapCoverage => {
                c.n_grid = vec![200];
                c.d_rule = DRule::Fixed { d: 50 };
                // symmetric sub-exponential data; skewed data under-cover at n = 200
                c.generator = GeneratorSpec::SubExponentialIid {
                    scale: 1.0,
                    shape: SubExponentialShape::Laplace,
                };
            }
            ExperimentKind::BoundReport => {
                c.n_grid = vec![1000];
                c.d_rule = DRule::Fixed { d: 100 };
                c.epsilon = Some(0.5);
            }
            ExperimentKind::SteinCheck => {}
        }
        c
    }

    /// Defaults for `kind` overridden by the keys present in `raw`.
    pub fn resolve(kind: ExperimentKind, raw: RawConfig) -> Result<Self> {
        if let Some(k) = raw.experiment {
            if k != kind {
                return Err(Error::Config(format!(
                    "config is for experiment {}, but {} was requested",
                    k.name(),
                    kind.name()
                )));
            }
        }
        let mut c = Self::defaults(kind);
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = raw.$field { c.$field = v; } )* };
        }
        take!(
            master_seed, out_dir, generator, control_generator, n_grid, trend_n_grid, d_rule, reps, reference_reps,
            bootstrap_reps, rectangles, data_draws, trials, multiplier, alpha, studentize,
            epsilon_iqr_fraction, y_grid_points, x_grid, quadrature_nodes, budget
        );
        if raw.threads.is_some() {
            c.threads = raw.threads;
        }
        if raw.compare_multiplier.is_some() {
            c.compare_multiplier = raw.compare_multiplier;
        }
        if raw.epsilon.is_some() {
            c.epsilon = raw.epsilon;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml(kind: ExperimentKind, text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(kind, raw)
    }

    /// `(n, d)` cells in grid order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.n_grid
            .iter()
            .flat_map(|&n| self.d_rule.dims(n).into_iter().map(move |d| (n, d)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_grid.is_empty() {
            return bad("n_grid must be nonempty".into());
        }
        let min_d = if self.experiment == ExperimentKind::CramerRatioCheck { 1 } else { 3 };
        for (n, d) in self.cells() {
            if n < 3 {
                return bad(format!("n = {n} is below 3"));
            }
            if d < min_d {
                return bad(format!("d rule gives d = {d} at n = {n}; need d >= {min_d}"));
            }
        }
        if self.trend_n_grid.is_empty() || self.trend_n_grid.iter().any(|n| *n < 3) {
            return bad("trend_n_grid must be nonempty with every n >= 3".into());
        }
        if let DRule::Each { d } = &self.d_rule {
            if d.is_empty() {
                return bad("d list must be nonempty".into());
            }
        }
        if self.reps == 0 || self.reference_reps == 0 || self.bootstrap_reps == 0 {
            return bad("replication counts must be positive".into());
        }
        if self.data_draws == 0 || self.trials == 0 || self.rectangles == 0 {
            return bad("data_draws, trials and rectangles must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.epsilon_iqr_fraction > 0.0) {
            return bad("epsilon_iqr_fraction must be positive".into());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if self.y_grid_points == 0 || self.quadrature_nodes == 0 {
            return bad("y_grid_points and quadrature_nodes must be positive".into());
        }
        self.generator
            .validate(self.cells()[0].1.max(1))
            .map_err(|e| Error::Config(e.to_string()))?;
        self.multiplier.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::from_toml(ExperimentKind::LowerBoundDemo, "").unwrap();
        assert_eq!(c.n_grid, vec![250, 500, 1000]);
        assert_eq!(c.cells()[0], (250, 53));
        assert_eq!(c.cells()[2], (1000, 545));
    }

    #[test]
    fn overrides_and_errors() {
        let c = ExperimentConfig::from_toml(
            ExperimentKind::ConvergenceSweep,
            "master_seed = 5\nn_grid = [10, 20]\n[d_rule]\nkind = \"log_fifth\"\nc = 0.2\n",
        )
        .unwrap();
        assert_eq!(c.master_seed, 5);
        assert_eq!(c.d_rule, DRule::LogFifth { c: 0.2 });
        assert!(matches!(
            ExperimentConfig::from_toml(ExperimentKind::ConvergenceSweep, "bogus = 1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml(ExperimentKind::ConvergenceSweep, "experiment = \"factor_sweep\""),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml(ExperimentKind::ConvergenceSweep, "[d_rule]\nkind = \"fixed\"\nd = 2"),
            Err(Error::Config(_))
        ));
    }
}
