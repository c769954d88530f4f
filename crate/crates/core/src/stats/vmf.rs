//! The von Mises–Fisher distribution `C_D(κ) exp(κ μᵀx)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::special::vmf_log_normalizer;
use super::{flatten, row_sum, DirectionalModel, SamplerStats, StatsError, DEGENERATE_MEAN, KAPPA_MAX};
use crate::linalg::{axpy, dot, norm, scaled};
use crate::sphere::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmfModel {
    pub mu: Direction,
    pub kappa: f64,
    pub dim: usize,
    /// Mean resultant length of the fitting sample (0 for hand-built models).
    pub mean_resultant: f64,
}

impl VmfModel {
    pub fn new(mu: Direction, kappa: f64) -> Result<Self, StatsError> {
        if !(0.0..=KAPPA_MAX).contains(&kappa) {
            return Err(StatsError::InvalidParameter {
                name: "kappa",
                reason: format!("{kappa} is outside [0, {KAPPA_MAX}]"),
            });
        }
        let dim = mu.dim();
        Ok(VmfModel {
            mu,
            kappa,
            dim,
            mean_resultant: 0.0,
        })
    }

    pub fn log_normalizer(&self) -> f64 {
        vmf_log_normalizer(self.dim, self.kappa)
    }
}

impl DirectionalModel for VmfModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_normalizer() + self.kappa * self.mu.dot(x)
    }

    fn param_count(&self) -> usize {
        self.dim
    }

    fn log_likelihood(&self, samples: &[Direction]) -> f64 {
        let c = self.log_normalizer();
        samples.iter().map(|x| c + self.kappa * self.mu.dot(x.as_slice())).sum()
    }
}

/// `κ̂ = R̄(D − R̄²)/(1 − R̄²)`, capped at [`KAPPA_MAX`].
pub fn banerjee_kappa(rbar: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let r2 = rbar * rbar;
    if r2 >= 1.0 {
        return KAPPA_MAX;
    }
    (rbar * (d - r2) / (1.0 - r2)).clamp(0.0, KAPPA_MAX)
}

/// Moment fit: `μ̂` is the normalized sample mean, `κ̂` the Banerjee
/// approximation.
pub fn fit_vmf(samples: &[Direction]) -> Result<VmfModel, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (data, dim) = flatten(samples)?;
    let mean = scaled(&row_sum(&data, dim), 1.0 / samples.len() as f64);
    let rbar = norm(&mean);
    if rbar < DEGENERATE_MEAN {
        return Err(StatsError::DegenerateMean { resultant: rbar });
    }
    let rbar_c = rbar.min(1.0);
    Ok(VmfModel {
        mu: Direction::from_unit_unchecked(scaled(&mean, 1.0 / rbar)),
        kappa: banerjee_kappa(rbar_c, dim),
        dim,
        mean_resultant: rbar_c,
    })
}

/// Draws `n` samples; identical output for identical `(model, n, seed)`.
pub fn sample_vmf(model: &VmfModel, n: usize, seed: u64) -> Vec<Direction> {
    sample_vmf_with_stats(model, n, seed).0
}

pub fn sample_vmf_with_stats(model: &VmfModel, n: usize, seed: u64) -> (Vec<Direction>, SamplerStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SamplerStats {
        accepted: 0,
        proposed: 0,
    };
    let mut out = Vec::with_capacity(n);
    let sampler = WoodSampler::new(model.dim, model.kappa);
    for _ in 0..n {
        let w = sampler.draw(&mut rng, &mut stats);
        out.push(place_on_sphere(&mut rng, model.mu.as_slice(), w));
    }
    log::debug!(
        "sample_vmf: kappa={} dim={} acceptance={:.4}",
        model.kappa,
        model.dim,
        stats.acceptance()
    );
    (out, stats)
}

/// Wood's (1994) rejection scheme for the component `w = μᵀx`.
pub(crate) struct WoodSampler {
    kappa: f64,
    dm1: f64,
    b: f64,
    x0: f64,
    c: f64,
    beta: Option<Beta<f64>>,
}

impl WoodSampler {
    pub(crate) fn new(dim: usize, kappa: f64) -> Self {
        let dm1 = dim as f64 - 1.0;
        let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        // 1 − x0² = 4b/(1+b)²
        let c = kappa * x0 + dm1 * (4.0 * b / ((1.0 + b) * (1.0 + b))).ln();
        let beta = if kappa > 0.0 {
            Some(Beta::new(0.5 * dm1, 0.5 * dm1).expect("beta shape is positive"))
        } else {
            None
        };
        WoodSampler {
            kappa,
            dm1,
            b,
            x0,
            c,
            beta,
        }
    }

    /// Returns `(w, 1 − w²)`; the second is computed without cancellation.
    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, stats: &mut SamplerStats) -> (f64, f64) {
        let Some(beta) = &self.beta else {
            // uniform on the sphere: resolved by the caller from a Gaussian
            stats.proposed += 1;
            stats.accepted += 1;
            return (f64::NAN, f64::NAN);
        };
        loop {
            stats.proposed += 1;
            let z = beta.sample(rng);
            let den = 1.0 - (1.0 - self.b) * z;
            let w = (1.0 - (1.0 + self.b) * z) / den;
            let one_minus_w = 2.0 * self.b * z / den;
            let u: f64 = rng.random();
            if self.kappa * w + self.dm1 * (1.0 - self.x0 * w).ln() - self.c >= u.ln() {
                stats.accepted += 1;
                return (w, one_minus_w * (1.0 + w));
            }
        }
    }
}

pub(crate) fn gaussian_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `w μ + sqrt(1 − w²) v` with `v` uniform on the unit sphere of `μ^⊥`.
/// A NaN `w` means "uniform on the whole sphere".
pub(crate) fn place_on_sphere<R: Rng>(rng: &mut R, mu: &[f64], w: (f64, f64)) -> Direction {
    let dim = mu.len();
    loop {
        let mut v = gaussian_vec(rng, dim);
        if w.0.is_nan() {
            let n = norm(&v);
            if n > 1e-12 {
                return Direction::from_unit_unchecked(scaled(&v, 1.0 / n));
            }
            continue;
        }
        let c = dot(&v, mu);
        axpy(-c, mu, &mut v);
        let n = norm(&v);
        if n < 1e-12 {
            continue;
        }
        let mut x = scaled(&v, w.1.max(0.0).sqrt() / n);
        axpy(w.0, mu, &mut x);
        let m = norm(&x);
        return Direction::from_unit_unchecked(scaled(&x, 1.0 / m));
    }
}
