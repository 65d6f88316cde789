//! Numerical machinery for high-dimensional central limit theorems over
//! hyperrectangles.
//!
//! The crate is organised around the objects a Gaussian-approximation
//! argument manipulates:
//!
//! - [`data`]: sample matrices, generator families, covariance roots and
//!   Gaussian analogs of the normalized sum `S_n = n^{-1/2} Σ X_i`.
//! - [`smoothing`]: the log-sum-exp smooth max and smooth indicator
//!   functions with certified derivative constants.
//! - [`multipliers`]: bounded multiplier laws and the Stein kernel of the
//!   beta-transformed multiplier.
//! - [`anticoncentration`]: concentration-function estimates and the
//!   Nazarov / common-factor bounds.
//! - [`metrics`]: distances between sampled laws and the extreme-value
//!   helpers for Gaussian maxima.
//! - [`bounds`]: rate terms and coupling functionals in closed form.
//! - [`bootstrap`]: the wild (multiplier) bootstrap and simultaneous bands.
//! - [`experiments`]: config-driven experiment runners used by the CLI.
//!
//! Every Monte Carlo routine draws from an [`RngContract`], so results are
//! reproducible from `(master_seed, stream_id)` regardless of how many
//! threads run the replications.

pub mod anticoncentration;
pub mod bootstrap;
pub mod bounds;
pub mod data;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod multipliers;
pub mod quadrature;
pub mod rng;
pub mod smoothing;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngContract;
