//! The Kent distribution
//!
//! ```text
//! f(x) = exp(κ μᵀx + β[(γ₁ᵀx)² − (γ₂ᵀx)²]) / c(κ, β)
//! ```
//!
//! with `{μ, γ₁, γ₂}` orthonormal and `0 ≤ β < κ/2`. In three dimensions the
//! normalizer is the classical Bessel series; above that it is the exact vMF
//! normalizer plus a saddle-point correction for the anisotropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::saddlepoint::{self, kent_groups};
use super::scatter::tangent_axes;
use super::special::{log_bessel_i, log_sphere_area, vmf_log_partition, vmf_mean_resultant};
use super::vmf::{banerjee_kappa, gaussian_vec};
use super::{flatten, row_sum, DirectionalModel, SamplerStats, StatsError, DEGENERATE_MEAN, KAPPA_MAX};
use crate::linalg::{axpy, dot, norm, orthogonalize_against, scaled};
use crate::sphere::Direction;

/// Largest admissible `β/κ` for fitted models.
pub const MAX_ANISOTROPY: f64 = 0.499;
/// Above this concentration the closed-form estimate is kept as is.
const REFINE_KAPPA_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KentModel {
    pub mu: Direction,
    pub kappa: f64,
    pub beta: f64,
    pub gamma1: Direction,
    pub gamma2: Direction,
    pub dim: usize,
}

impl KentModel {
    pub fn new(mu: Direction, kappa: f64, beta: f64, gamma1: Direction, gamma2: Direction) -> Result<Self, StatsError> {
        let dim = mu.dim();
        if dim < 3 {
            return Err(StatsError::DimensionTooSmall { needed: 3, got: dim });
        }
        for d in [&gamma1, &gamma2] {
            if d.dim() != dim {
                return Err(StatsError::DimensionMismatch {
                    expected: dim,
                    found: d.dim(),
                });
            }
        }
        let pairs = [
            mu.dot(gamma1.as_slice()),
            mu.dot(gamma2.as_slice()),
            gamma1.dot(gamma2.as_slice()),
        ];
        if pairs.iter().any(|c| c.abs() > 1e-6) {
            return Err(StatsError::InvalidParameter {
                name: "gamma",
                reason: format!("frame is not orthonormal (inner products {pairs:?})"),
            });
        }
        if !(0.0..=KAPPA_MAX).contains(&kappa) {
            return Err(StatsError::InvalidParameter {
                name: "kappa",
                reason: format!("{kappa} is outside [0, {KAPPA_MAX}]"),
            });
        }
        if !(beta >= 0.0 && (beta == 0.0 || beta < 0.5 * kappa)) {
            return Err(StatsError::InvalidParameter {
                name: "beta",
                reason: format!("need 0 <= beta < kappa/2, got beta={beta}, kappa={kappa}"),
            });
        }
        Ok(KentModel {
            mu,
            kappa,
            beta,
            gamma1,
            gamma2,
            dim,
        })
    }

    /// `β/κ`, or 0 when κ = 0.
    pub fn anisotropy_ratio(&self) -> f64 {
        if self.kappa > 0.0 {
            self.beta / self.kappa
        } else {
            0.0
        }
    }

    /// `ln c(κ, β)`.
    pub fn log_partition(&self) -> f64 {
        kent_log_partition(self.dim, self.kappa, self.beta)
    }

    /// `κ μᵀx + β[(γ₁ᵀx)² − (γ₂ᵀx)²]`.
    pub fn log_density_unnormalized(&self, x: &[f64]) -> f64 {
        let b = self.gamma1.dot(x);
        let c = self.gamma2.dot(x);
        self.kappa * self.mu.dot(x) + self.beta * (b * b - c * c)
    }
}

impl DirectionalModel for KentModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_density_unnormalized(x) - self.log_partition()
    }

    fn param_count(&self) -> usize {
        3 * self.dim - 4
    }

    fn log_likelihood(&self, samples: &[Direction]) -> f64 {
        let lz = self.log_partition();
        samples
            .iter()
            .map(|x| self.log_density_unnormalized(x.as_slice()) - lz)
            .sum()
    }
}

/// `ln c(κ, β)` for the Kent distribution on `S^{dim-1}`.
pub fn kent_log_partition(dim: usize, kappa: f64, beta: f64) -> f64 {
    if dim == 3 {
        kent_log_partition_series(kappa, beta)
    } else {
        kent_log_partition_saddlepoint(dim, kappa, beta)
    }
}

/// `c = 2π Σ_j Γ(j+½)/Γ(j+1) β^{2j} (2/κ)^{2j+½} I_{2j+½}(κ)`, three dimensions.
pub fn kent_log_partition_series(kappa: f64, beta: f64) -> f64 {
    if kappa < 1e-12 {
        return log_sphere_area(3);
    }
    let l2k = (2.0 / kappa).ln();
    let lb = if beta > 0.0 { beta.ln() } else { f64::NEG_INFINITY };
    let mut terms = Vec::new();
    let mut lmax = f64::NEG_INFINITY;
    for j in 0..20_000usize {
        let jf = j as f64;
        let pow = if j == 0 { 0.0 } else { 2.0 * jf * lb };
        let lt = ln_gamma(jf + 0.5) - ln_gamma(jf + 1.0)
            + pow
            + (2.0 * jf + 0.5) * l2k
            + log_bessel_i(2.0 * jf + 0.5, kappa);
        terms.push(lt);
        lmax = lmax.max(lt);
        if beta == 0.0 || (j > 2 && lt < lmax - 40.0) {
            break;
        }
    }
    let s: f64 = terms.iter().map(|t| (t - lmax).exp()).sum();
    (2.0 * std::f64::consts::PI).ln() + lmax + s.ln()
}

/// Exact vMF partition plus the saddle-point estimate of what β adds.
pub fn kent_log_partition_saddlepoint(dim: usize, kappa: f64, beta: f64) -> f64 {
    let base = vmf_log_partition(dim, kappa);
    if beta == 0.0 {
        return base;
    }
    base + saddlepoint::log_normalizer(&kent_groups(dim, kappa, beta))
        - saddlepoint::log_normalizer(&kent_groups(dim, kappa, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KentFitOptions {
    /// Polish the closed-form (κ̂, β̂) by maximizing the approximate likelihood.
    pub refine_mle: bool,
}

impl Default for KentFitOptions {
    fn default() -> Self {
        KentFitOptions { refine_mle: true }
    }
}

pub fn fit_kent(samples: &[Direction]) -> Result<KentModel, StatsError> {
    fit_kent_with(samples, &KentFitOptions::default())
}

/// Fits μ from the mean direction and the axes from the tangent scatter, then
/// estimates (κ, β) from moments and optionally refines by likelihood.
pub fn fit_kent_with(samples: &[Direction], opts: &KentFitOptions) -> Result<KentModel, StatsError> {
    if samples.len() < 4 {
        return Err(StatsError::InsufficientSamples {
            needed: 4,
            got: samples.len(),
        });
    }
    let (data, dim) = flatten(samples)?;
    if dim < 3 {
        return Err(StatsError::DimensionTooSmall { needed: 3, got: dim });
    }
    let n = samples.len() as f64;
    let mean = scaled(&row_sum(&data, dim), 1.0 / n);
    let rbar = norm(&mean);
    if rbar < DEGENERATE_MEAN {
        return Err(StatsError::DegenerateMean { resultant: rbar });
    }
    let rbar = rbar.min(1.0);
    let mu = scaled(&mean, 1.0 / norm(&mean));
    let axes = tangent_axes(&data, dim, &mu);

    let (mut l1, mut l2) = (0.0, 0.0);
    for row in data.chunks_exact(dim) {
        let b = dot(row, &axes.gamma1);
        let c = dot(row, &axes.gamma2);
        l1 += b * b;
        l2 += c * c;
    }
    l1 /= n;
    l2 /= n;
    let (mut g1, mut g2) = (axes.gamma1, axes.gamma2);
    if l2 > l1 {
        std::mem::swap(&mut g1, &mut g2);
        std::mem::swap(&mut l1, &mut l2);
    }
    let gbar = l1 - l2;

    let (mut kappa, mut beta) = moment_estimate(dim, rbar, l1, l2);
    if axes.degenerate {
        log::warn!("fit_kent: tangent scatter has no distinct principal axes; beta set to 0");
        beta = 0.0;
    } else if opts.refine_mle && kappa < REFINE_KAPPA_LIMIT {
        let (k, b) = refine(dim, rbar, gbar, kappa, beta);
        kappa = k;
        beta = b;
    }
    Ok(KentModel {
        mu: Direction::from_unit_unchecked(mu),
        kappa,
        beta,
        gamma1: Direction::from_unit_unchecked(g1),
        gamma2: Direction::from_unit_unchecked(g2),
        dim,
    })
}

/// Closed-form (κ̂, β̂).
///
/// In three dimensions these are Kent's moment estimates from `R̄` and the
/// gap between the tangent variances. Above three dimensions κ̂ is the vMF
/// moment estimate and β̂/κ̂ is half the relative gap between the largest and
/// smallest tangent variances, which is what the tangent-plane Gaussian
/// approximation `var ≈ 1/(κ ∓ 2β)` gives.
fn moment_estimate(dim: usize, rbar: f64, l1: f64, l2: f64) -> (f64, f64) {
    let (kappa, beta) = if dim == 3 {
        let a = 2.0 - 2.0 * rbar;
        let g = l1 - l2;
        if a - g <= 0.0 {
            (KAPPA_MAX, 0.0)
        } else {
            let (p, q) = (1.0 / (a - g), 1.0 / (a + g));
            (p + q, 0.5 * (p - q))
        }
    } else {
        let k = banerjee_kappa(rbar, dim);
        let r = if l1 + l2 > 0.0 {
            0.5 * (l1 - l2) / (l1 + l2)
        } else {
            0.0
        };
        (k, r * k)
    };
    let kappa = kappa.clamp(0.0, KAPPA_MAX);
    (kappa, beta.clamp(0.0, MAX_ANISOTROPY * kappa))
}

/// Maximizes `κR̄ + βḡ − ln c(κ, β)` over `u = ln κ`, `r = β/κ` in a box,
/// by damped Newton with finite-difference derivatives. Never returns a
/// point with lower likelihood than the start.
fn refine(dim: usize, rbar: f64, gbar: f64, kappa0: f64, beta0: f64) -> (f64, f64) {
    let lo = [1e-8f64.ln(), 0.0];
    let hi = [KAPPA_MAX.ln(), MAX_ANISOTROPY];
    let obj = |x: [f64; 2]| -> f64 {
        let k = x[0].exp();
        let b = x[1] * k;
        k * rbar + b * gbar - kent_log_partition(dim, k, b)
    };
    let clamp = |x: [f64; 2]| [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])];
    let start = clamp([kappa0.max(1e-8).ln(), if kappa0 > 0.0 { beta0 / kappa0 } else { 0.0 }]);
    let mut x = start;
    let mut fx = obj(x);
    let f0 = fx;
    let h = [1e-4, 1e-4];
    for _ in 0..100 {
        let mut g = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h[i];
            xm[i] -= h[i];
            let (fp, fm) = (obj(xp), obj(xm));
            g[i] = (fp - fm) / (2.0 * h[i]);
            hess[i][i] = (fp - 2.0 * fx + fm) / (h[i] * h[i]);
        }
        let mut xpp = x;
        let mut xpm = x;
        let mut xmp = x;
        let mut xmm = x;
        xpp[0] += h[0];
        xpp[1] += h[1];
        xpm[0] += h[0];
        xpm[1] -= h[1];
        xmp[0] -= h[0];
        xmp[1] += h[1];
        xmm[0] -= h[0];
        xmm[1] -= h[1];
        let off = (obj(xpp) - obj(xpm) - obj(xmp) + obj(xmm)) / (4.0 * h[0] * h[1]);
        hess[0][1] = off;
        hess[1][0] = off;

        // freeze coordinates pinned at a bound with the gradient pointing out
        let mut free = [true; 2];
        for i in 0..2 {
            if (x[i] <= lo[i] && g[i] < 0.0) || (x[i] >= hi[i] && g[i] > 0.0) {
                free[i] = false;
            }
        }
        let mut p = [0.0; 2];
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        if free[0] && free[1] && hess[0][0] < 0.0 && det > 0.0 {
            p[0] = -(hess[1][1] * g[0] - hess[0][1] * g[1]) / det;
            p[1] = -(-hess[1][0] * g[0] + hess[0][0] * g[1]) / det;
        } else {
            for i in 0..2 {
                if free[i] {
                    p[i] = if hess[i][i] < 0.0 {
                        -g[i] / hess[i][i]
                    } else {
                        0.1 * g[i].signum()
                    };
                }
            }
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = clamp([x[0] + t * p[0], x[1] + t * p[1]]);
            let fc = obj(cand);
            if fc > fx {
                let step = (cand[0] - x[0]).abs() + (cand[1] - x[1]).abs();
                x = cand;
                let gain = fc - fx;
                fx = fc;
                moved = step > 1e-12 && gain > 1e-13 * fx.abs().max(1.0);
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if fx < f0 {
        x = start;
    }
    let k = x[0].exp();
    (k, (x[1] * k).min(MAX_ANISOTROPY * k))
}

pub fn sample_kent(model: &KentModel, n: usize, seed: u64) -> Vec<Direction> {
    sample_kent_with_stats(model, n, seed).0
}

/// Rejection sampler with a Bingham envelope.
///
/// The linear term is bounded by `κa ≤ κ(a² + t²)/(2t)` with `t = A_D(κ)`,
/// which turns the Kent density into a Bingham density times
/// `exp(−κ(a − t)²/(2t)) ≤ 1`. The Bingham part is in turn drawn by rejection
/// from an angular central Gaussian (Kent, Ganeiber and Mardia, 2018).
pub fn sample_kent_with_stats(model: &KentModel, n: usize, seed: u64) -> (Vec<Direction>, SamplerStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SamplerStats {
        accepted: 0,
        proposed: 0,
    };
    let dim = model.dim;
    let mut out = Vec::with_capacity(n);
    let frame = [model.mu.as_slice(), model.gamma1.as_slice(), model.gamma2.as_slice()];
    if model.kappa < 1e-8 {
        for _ in 0..n {
            stats.proposed += 1;
            stats.accepted += 1;
            let v = gaussian_vec(&mut rng, dim);
            out.push(Direction::from_unit_unchecked(scaled(&v, 1.0 / norm(&v))));
        }
        return (out, stats);
    }

    let kappa = model.kappa;
    let beta = model.beta;
    let t = vmf_mean_resultant(dim, kappa);
    let c = kappa / (2.0 * t);
    // λ for μ, γ₁, γ₂ and the remaining D − 3 directions
    let lam = [0.0, c - beta, c + beta, c];
    let mult = [1.0, 1.0, 1.0, (dim - 3) as f64];
    let d = dim as f64;
    let b = acg_b(&lam, &mult, d);
    let omega = lam.map(|l| 1.0 + 2.0 * l / b);
    let log_m = -0.5 * (d - b) + 0.5 * d * (d / b).ln();
    let chi = if dim > 3 {
        Some(ChiSquared::new(d - 3.0).expect("positive degrees of freedom"))
    } else {
        None
    };

    while out.len() < n {
        stats.proposed += 1;
        let ya = rng.sample::<f64, _>(StandardNormal) / omega[0].sqrt();
        let yb = rng.sample::<f64, _>(StandardNormal) / omega[1].sqrt();
        let yc = rng.sample::<f64, _>(StandardNormal) / omega[2].sqrt();
        let yr2 = chi.as_ref().map_or(0.0, |ch| ch.sample(&mut rng) / omega[3]);
        let r2 = ya * ya + yb * yb + yc * yc + yr2;
        let (a2, b2, c2, rest2) = (ya * ya / r2, yb * yb / r2, yc * yc / r2, yr2 / r2);
        let q = lam[1] * b2 + lam[2] * c2 + lam[3] * rest2;
        let w = a2 + omega[1] * b2 + omega[2] * c2 + omega[3] * rest2;
        let a = ya / r2.sqrt();
        let log_acc = -q + 0.5 * d * w.ln() - log_m - kappa * (a - t) * (a - t) / (2.0 * t);
        let u: f64 = rng.random();
        if u.ln() >= log_acc {
            continue;
        }
        stats.accepted += 1;
        let s = 1.0 / r2.sqrt();
        let mut x = scaled(frame[0], ya * s);
        axpy(yb * s, frame[1], &mut x);
        axpy(yc * s, frame[2], &mut x);
        if dim > 3 && rest2 > 0.0 {
            let mut v = gaussian_vec(&mut rng, dim);
            orthogonalize_against(&mut v, &frame);
            orthogonalize_against(&mut v, &frame);
            let nv = norm(&v);
            if nv > 0.0 {
                axpy(rest2.sqrt() / nv, &v, &mut x);
            }
        }
        let nx = norm(&x);
        out.push(Direction::from_unit_unchecked(scaled(&x, 1.0 / nx)));
    }
    let acc = stats.acceptance();
    log::debug!("sample_kent: kappa={kappa} beta={beta} dim={dim} acceptance={acc:.4}");
    if acc < 0.01 {
        log::warn!("sample_kent: low acceptance rate {acc:.4} (kappa={kappa}, beta={beta})");
    }
    (out, stats)
}

/// Solves `Σ mult_i / (b + 2λ_i) = 1` for the angular central Gaussian
/// envelope parameter, `b ∈ (0, D]`.
fn acg_b(lam: &[f64; 4], mult: &[f64; 4], d: f64) -> f64 {
    let f = |b: f64| -> f64 {
        lam.iter()
            .zip(mult)
            .map(|(l, m)| if *m > 0.0 { m / (b + 2.0 * l) } else { 0.0 })
            .sum::<f64>()
            - 1.0
    };
    let (mut lo, mut hi) = (1e-12f64, d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
