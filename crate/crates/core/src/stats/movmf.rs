//! Mixtures of von Mises–Fisher distributions fitted by EM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::special::{vmf_kappa_for_resultant, vmf_log_normalizer};
use super::vmf::{banerjee_kappa, VmfModel};
use super::{common_dim, row_sum, DirectionalModel, StatsError, DEGENERATE_MEAN, KAPPA_MAX};
use crate::linalg::{dot, log_sum_exp, norm, scaled};
use crate::sphere::Direction;

/// Responsibility mass below which a component is considered empty.
const EMPTY_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovmfComponent {
    pub weight: f64,
    pub model: VmfModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovmfModel {
    pub components: Vec<MovmfComponent>,
}

impl MovmfModel {
    pub fn new(components: Vec<MovmfComponent>) -> Result<Self, StatsError> {
        let Some(first) = components.first() else {
            return Err(StatsError::InvalidParameter {
                name: "components",
                reason: "mixture needs at least one component".into(),
            });
        };
        let dim = first.model.dim;
        let mut total = 0.0;
        for c in &components {
            if c.model.dim != dim {
                return Err(StatsError::DimensionMismatch {
                    expected: dim,
                    found: c.model.dim,
                });
            }
            if c.weight.is_nan() || c.weight <= 0.0 {
                return Err(StatsError::InvalidParameter {
                    name: "weight",
                    reason: format!("weights must be positive, got {}", c.weight),
                });
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(StatsError::InvalidParameter {
                name: "weight",
                reason: format!("weights sum to {total}, not 1"),
            });
        }
        Ok(MovmfModel { components })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }
}

impl DirectionalModel for MovmfModel {
    fn dim(&self) -> usize {
        self.components[0].model.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.model.log_density(x))
            .collect();
        log_sum_exp(&terms)
    }

    fn param_count(&self) -> usize {
        let k = self.k();
        k * self.dim() + k - 1
    }

    fn log_likelihood(&self, samples: &[Direction]) -> f64 {
        let consts: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.model.log_normalizer())
            .collect();
        let mut terms = vec![0.0; self.k()];
        samples
            .iter()
            .map(|x| {
                for (t, (c, lc)) in terms.iter_mut().zip(self.components.iter().zip(&consts)) {
                    *t = lc + c.model.kappa * c.model.mu.dot(x.as_slice());
                }
                log_sum_exp(&terms)
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MovmfConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the mean per-sample log-likelihood improves by less than this.
    pub tol: f64,
}

impl Default for MovmfConfig {
    fn default() -> Self {
        MovmfConfig {
            k: 2,
            seed: 0,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovmfFit {
    pub model: MovmfModel,
    /// Total log-likelihood after each E step.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Components that had to be re-seeded after losing their mass.
    pub reseeded: Vec<usize>,
}

pub fn fit_movmf(samples: &[Direction], config: &MovmfConfig) -> Result<MovmfModel, StatsError> {
    fit_movmf_traced(samples, config).map(|f| f.model)
}

/// EM with spherical k-means++ seeding.
///
/// Samples are put in a canonical order first, so the result does not depend
/// on the order they were passed in. The κ update is a generalized M step:
/// the moment estimate is taken when it does not lower the expected
/// complete-data likelihood, otherwise the exact maximizer. Either way the
/// log-likelihood cannot decrease.
pub fn fit_movmf_traced(samples: &[Direction], config: &MovmfConfig) -> Result<MovmfFit, StatsError> {
    let k = config.k;
    if k == 0 {
        return Err(StatsError::InvalidParameter {
            name: "k",
            reason: "need at least one component".into(),
        });
    }
    let n = samples.len();
    if n < 2 * k {
        return Err(StatsError::InsufficientSamples { needed: 2 * k, got: n });
    }
    let dim = common_dim(samples)?;

    let mut order: Vec<&Direction> = samples.iter().collect();
    order.sort_by(|a, b| a.lexicographic_cmp(b));
    let data: Vec<f64> = order.iter().flat_map(|d| d.as_slice().iter().copied()).collect();
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let overall = norm(&row_sum(&data, dim)) / n as f64;
    let kappa0 = if overall < DEGENERATE_MEAN {
        1.0
    } else {
        banerjee_kappa(overall.min(1.0), dim)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centers = kmeans_pp(&data, dim, k, &mut rng);
    let mut mus: Vec<Vec<f64>> = centers.iter().map(|&i| row(i).to_vec()).collect();
    let mut kappas = vec![kappa0; k];
    let mut weights = vec![1.0 / k as f64; k];
    let mut rbars = vec![0.0; k];

    let mut trace: Vec<f64> = Vec::new();
    let mut reseeded = Vec::new();
    let mut converged = false;
    let mut resp = vec![0.0; n * k];
    let mut point_ll = vec![0.0; n];
    let mut skip_check = false;

    for iter in 0..=config.max_iter {
        // E step
        let consts: Vec<f64> = (0..k)
            .map(|j| weights[j].ln() + vmf_log_normalizer(dim, kappas[j]))
            .collect();
        let mut total = 0.0;
        for i in 0..n {
            let x = row(i);
            let r = &mut resp[i * k..(i + 1) * k];
            for j in 0..k {
                r[j] = consts[j] + kappas[j] * dot(&mus[j], x);
            }
            let l = log_sum_exp(r);
            for v in r.iter_mut() {
                *v = (*v - l).exp();
            }
            point_ll[i] = l;
            total += l;
        }
        if let Some(&prev) = trace.last() {
            if !skip_check && total < prev - 1e-9 * prev.abs().max(1.0) {
                log::warn!("fit_movmf: log-likelihood decreased from {prev} to {total} at iteration {iter}");
            }
            if !skip_check && (total - prev) / (n as f64) < config.tol {
                trace.push(total);
                converged = true;
                break;
            }
        }
        trace.push(total);
        skip_check = false;
        if iter == config.max_iter {
            break;
        }

        // M step
        for j in 0..k {
            let mut mass = 0.0;
            let mut m = vec![0.0; dim];
            for i in 0..n {
                let r = resp[i * k + j];
                mass += r;
                for (a, b) in m.iter_mut().zip(row(i)) {
                    *a += r * b;
                }
            }
            if mass < EMPTY_MASS {
                if reseeded.contains(&j) {
                    return Err(StatsError::EmptyComponent { component: j });
                }
                reseeded.push(j);
                let worst = (0..n)
                    .min_by(|&a, &b| point_ll[a].total_cmp(&point_ll[b]))
                    .expect("n > 0");
                log::warn!("fit_movmf: component {j} is empty; re-seeding at sample {worst}");
                mus[j] = row(worst).to_vec();
                kappas[j] = kappa0;
                weights[j] = 1.0 / n as f64;
                rbars[j] = 0.0;
                skip_check = true;
                continue;
            }
            let m = scaled(&m, 1.0 / mass);
            let rbar = norm(&m).min(1.0);
            weights[j] = mass / n as f64;
            rbars[j] = rbar;
            if rbar < DEGENERATE_MEAN {
                kappas[j] = 0.0;
                continue;
            }
            mus[j] = scaled(&m, 1.0 / norm(&m));
            let q = |kap: f64| vmf_log_normalizer(dim, kap) + kap * rbar;
            let kb = banerjee_kappa(rbar, dim);
            kappas[j] = if q(kb) >= q(kappas[j]) {
                kb
            } else {
                vmf_kappa_for_resultant(dim, rbar, kb, KAPPA_MAX)
            };
        }
        let wsum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= wsum;
        }
    }

    let components = (0..k)
        .map(|j| MovmfComponent {
            weight: weights[j],
            model: VmfModel {
                mu: Direction::from_unit_unchecked(mus[j].clone()),
                kappa: kappas[j],
                dim,
                mean_resultant: rbars[j],
            },
        })
        .collect();
    Ok(MovmfFit {
        model: MovmfModel { components },
        trace,
        converged,
        reseeded,
    })
}

/// Spherical k-means++: each new center is drawn with probability
/// proportional to `1 − max cos` to the centers chosen so far.
fn kmeans_pp<R: Rng>(data: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = (0..n).map(|i| (1.0 - dot(row(i), row(centers[0]))).max(0.0)).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centers.push(pick);
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min((1.0 - dot(row(i), row(pick))).max(0.0));
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::stable_angle;
    use crate::stats::vmf::{fit_vmf, sample_vmf};

    fn two_clusters(n: usize, seed: u64) -> Vec<Direction> {
        let a = VmfModel::new(Direction::basis(5, 0), 100.0).unwrap();
        let b = VmfModel::new(Direction::basis(5, 1), 100.0).unwrap();
        let mut xs = sample_vmf(&a, n, seed);
        xs.extend(sample_vmf(&b, n, seed + 1000));
        xs
    }

    #[test]
    fn single_component_equals_vmf_fit() {
        let m = VmfModel::new(Direction::basis(4, 3), 25.0).unwrap();
        let xs = sample_vmf(&m, 300, 7);
        let single = fit_movmf(
            &xs,
            &MovmfConfig {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let direct = fit_vmf(&xs).unwrap();
        let c = &single.components[0];
        assert!((c.weight - 1.0).abs() < 1e-12);
        assert!((c.model.kappa - direct.kappa).abs() < 1e-9 * direct.kappa);
        for (a, b) in c.model.mu.as_slice().iter().zip(direct.mu.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn separates_two_orthogonal_clusters() {
        let xs = two_clusters(400, 3);
        let fit = fit_movmf(&xs, &MovmfConfig::default()).unwrap();
        for axis in 0..2 {
            let e = Direction::basis(5, axis);
            let best = fit
                .components
                .iter()
                .map(|c| stable_angle(c.model.mu.as_slice(), e.as_slice()).to_degrees())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 3.0, "axis {axis}: {best}°");
        }
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let xs = two_clusters(200, 9);
        for seed in 0..5 {
            let fit = fit_movmf_traced(
                &xs,
                &MovmfConfig {
                    k: 3,
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn too_many_components_is_an_error() {
        let xs = two_clusters(3, 1);
        let err = fit_movmf(
            &xs,
            &MovmfConfig {
                k: 4,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, StatsError::InsufficientSamples { .. }));
    }

    #[test]
    fn input_order_does_not_matter() {
        let xs = two_clusters(100, 4);
        let mut rev = xs.clone();
        rev.reverse();
        let cfg = MovmfConfig {
            seed: 5,
            ..Default::default()
        };
        assert_eq!(fit_movmf(&xs, &cfg).unwrap(), fit_movmf(&rev, &cfg).unwrap());
    }

    #[test]
    fn weights_validated() {
        let c = MovmfComponent {
            weight: 0.6,
            model: VmfModel::new(Direction::basis(3, 0), 1.0).unwrap(),
        };
        assert!(MovmfModel::new(vec![c.clone()]).is_err());
        assert!(MovmfModel::new(vec![c.clone(), MovmfComponent { weight: 0.4, ..c }]).is_ok());
    }
}
