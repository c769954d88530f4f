//! Directional distributions on the unit sphere: von Mises–Fisher, mixtures of
//! vMF, and the Kent (FB5) distribution, with fitting, likelihoods, samplers
//! and BIC model selection.

pub mod kent;
pub mod movmf;
pub mod saddlepoint;
mod scatter;
pub mod select;
pub mod special;
pub mod vmf;

use thiserror::Error;

use crate::sphere::{Direction, SphereError};

pub use kent::{fit_kent, fit_kent_with, sample_kent, sample_kent_with_stats, KentFitOptions, KentModel};
pub use movmf::{fit_movmf, fit_movmf_traced, MovmfConfig, MovmfFit, MovmfModel};
pub use select::{bic, select_model, Candidate, FitReport, ModelTag, Selection};
pub use vmf::{fit_vmf, sample_vmf, sample_vmf_with_stats, VmfModel};

/// Upper bound on any fitted concentration.
pub const KAPPA_MAX: f64 = 1e6;
/// Mean resultant length below which the mean direction is undefined.
pub const DEGENERATE_MEAN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("mean resultant length {resultant:e} is too small to define a mean direction")]
    DegenerateMean { resultant: f64 },
    #[error("samples have mixed dimensions ({expected} vs {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("this model needs dimension at least {needed}, got {got}")]
    DimensionTooSmall { needed: usize, got: usize },
    #[error("mixture component {component} lost all responsibility mass")]
    EmptyComponent { component: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no candidate model could be fitted")]
    NoCandidate,
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

/// A density on the unit sphere with a known parameter count.
pub trait DirectionalModel {
    fn dim(&self) -> usize;

    /// Log density at the unit vector `x`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// Free parameters, as counted for BIC.
    fn param_count(&self) -> usize;

    /// Sum of per-sample log densities.
    fn log_likelihood(&self, samples: &[Direction]) -> f64 {
        samples.iter().map(|x| self.log_density(x.as_slice())).sum()
    }
}

/// Rejection-sampler bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerStats {
    pub accepted: usize,
    pub proposed: usize,
}

impl SamplerStats {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            return 1.0;
        }
        self.accepted as f64 / self.proposed as f64
    }
}

/// Flattens samples into a row-major `N×D` buffer, checking dimensions.
pub(crate) fn flatten(samples: &[Direction]) -> Result<(Vec<f64>, usize), StatsError> {
    let dim = common_dim(samples)?;
    let mut out = Vec::with_capacity(samples.len() * dim);
    for s in samples {
        out.extend_from_slice(s.as_slice());
    }
    Ok((out, dim))
}

/// Sum of the rows of a row-major buffer.
pub(crate) fn row_sum(data: &[f64], dim: usize) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (a, b) in s.iter_mut().zip(row) {
            *a += b;
        }
    }
    s
}

/// The shared dimension of `samples` (0 when empty).
pub(crate) fn common_dim(samples: &[Direction]) -> Result<usize, StatsError> {
    let dim = samples.first().map(|s| s.dim()).unwrap_or(0);
    for s in samples {
        if s.dim() != dim {
            return Err(StatsError::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
    }
    Ok(dim)
}
