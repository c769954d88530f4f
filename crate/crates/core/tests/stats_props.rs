mod common;

use common::{random_dir, random_kent};
use heart_core::linalg::dot;
use heart_core::sphere::geodesic_distance;
use heart_core::stats::{
    bic, fit_kent, fit_movmf_traced, fit_vmf, sample_kent, sample_kent_with_stats, sample_vmf, select_model, KentModel,
    MovmfConfig, VmfModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-sample Kolmogorov–Smirnov p-value (asymptotic).
fn ks_p_value(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lam = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lam * lam).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

#[test]
fn zero_beta_kent_sampler_matches_vmf() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in [3usize, 16] {
        let k = random_kent(&mut rng, d, 40.0, 0.0);
        let v = VmfModel::new(k.mu.clone(), 40.0).unwrap();
        let a: Vec<f64> = sample_kent(&k, 3000, 1)
            .iter()
            .map(|x| geodesic_distance(x, &k.mu))
            .collect();
        let b: Vec<f64> = sample_vmf(&v, 3000, 2)
            .iter()
            .map(|x| geodesic_distance(x, &k.mu))
            .collect();
        let p = ks_p_value(a, b);
        assert!(p > 0.01, "D={d}: KS p = {p}");
    }
}

#[test]
fn kent_recovery_in_low_dimensions() {
    // asserted for D ∈ {3, 16}; D = 64 is reported only (see README)
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for d in [3usize, 16, 64] {
        for &kappa in &[50.0, 200.0] {
            let truth = random_kent(&mut rng, d, kappa, 0.2);
            let fit = fit_kent(&sample_kent(&truth, 5000, 7)).unwrap();
            let r = fit.anisotropy_ratio();
            if d == 64 {
                println!("D=64 κ={kappa}: β̂/κ̂ = {r:.4} (reported, not asserted)");
            } else {
                assert!((r - 0.2).abs() <= 0.05, "D={d} κ={kappa}: {r}");
            }
        }
    }
}

#[test]
fn isotropic_input_has_small_anisotropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..5 {
        let v = VmfModel::new(random_dir(&mut rng, 3), 50.0).unwrap();
        let fit = fit_kent(&sample_vmf(&v, 5000, seed)).unwrap();
        assert!(fit.anisotropy_ratio() < 0.05, "seed {seed}: {}", fit.anisotropy_ratio());
    }
    let v = VmfModel::new(random_dir(&mut rng, 16), 50.0).unwrap();
    let r = fit_kent(&sample_vmf(&v, 5000, 0)).unwrap().anisotropy_ratio();
    println!("D=16 isotropic: β̂/κ̂ = {r:.4} (reported, not asserted)");
}

#[test]
fn low_acceptance_is_measurable() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_kent(&mut rng, 16, 200.0, 0.45);
    let (_, stats) = sample_kent_with_stats(&m, 500, 1);
    assert!(stats.acceptance() > 0.0 && stats.acceptance() <= 1.0);
}

fn frame_ok(m: &KentModel) -> bool {
    let (a, b, c) = (m.mu.as_slice(), m.gamma1.as_slice(), m.gamma2.as_slice());
    dot(a, b).abs() < 1e-6
        && dot(a, c).abs() < 1e-6
        && dot(b, c).abs() < 1e-6
        && m.beta >= 0.0
        && m.beta < m.kappa / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_kent_frames_are_orthonormal(seed in any::<u64>(), d in 3usize..40, ratio in 0.0f64..0.45, n in 10usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_kent(&mut rng, d, 100.0, ratio);
        let fit = fit_kent(&sample_kent(&truth, n, seed)).unwrap();
        prop_assert!(frame_ok(&fit));
        let mode = fit.log_density_unnormalized(fit.mu.as_slice());
        prop_assert!((mode - fit.kappa).abs() < 1e-9 * fit.kappa);
    }

    #[test]
    fn em_never_loses_likelihood(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        for c in 0..3 {
            let v = VmfModel::new(random_dir(&mut rng, 8), 30.0).unwrap();
            xs.extend(sample_vmf(&v, 150, seed ^ c));
        }
        let fit = fit_movmf_traced(&xs, &MovmfConfig { k, seed, ..Default::default() }).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
        let sum: f64 = fit.model.components.iter().map(|c| c.weight).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stored_bic_is_exact(ll in -1e6f64..1e6, k in 0usize..5000, n in 1usize..100000) {
        prop_assert_eq!(bic(ll, k, n), -2.0 * ll + k as f64 * (n as f64).ln());
    }

    #[test]
    fn selection_ignores_sample_order(seed in any::<u64>(), shift in 1usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_kent(&mut rng, 5, 60.0, 0.15);
        let xs = sample_kent(&truth, 400, seed);
        let mut ys = xs.clone();
        ys.rotate_left(shift);
        ys.reverse();
        let a = select_model(&xs, 2, seed).unwrap();
        let b = select_model(&ys, 2, seed).unwrap();
        prop_assert_eq!(&a.report, &b.report);
        for c in &a.report.candidates {
            prop_assert_eq!(c.bic, bic(c.log_likelihood, c.param_count, c.sample_count));
        }
    }

    #[test]
    fn vmf_fit_is_consistent(seed in any::<u64>(), d in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = VmfModel::new(random_dir(&mut rng, d), 400.0).unwrap();
        let fit = fit_vmf(&sample_vmf(&v, 2000, seed)).unwrap();
        prop_assert!(geodesic_distance(&fit.mu, &v.mu).to_degrees() < 2.0);
        prop_assert!((fit.kappa / 400.0 - 1.0).abs() < 0.1);
    }
}
