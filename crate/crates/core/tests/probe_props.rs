mod common;

use common::{random_dir, random_sequence, row_dir};
use heart_core::probes::{contamination, magnitude_variants, nearest_neighbors, thinness, MAGNITUDE_SCALES};
use heart_core::sphere::geodesic_distance;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thinness_ignores_a_global_scale(seed in any::<u64>(), alpha in 0.1f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seqs: Vec<_> = (0..3).map(|_| random_sequence(&mut rng, 12, 16)).collect();
        let base = thinness(&seqs, false, "x").unwrap();
        let scaled: Vec<_> = seqs.iter().map(|s| magnitude_variants(s, &[alpha]).unwrap().remove(0)).collect();
        let after = thinness(&scaled, false, "x").unwrap();
        prop_assert!((after.thinness - base.thinness).abs() < 1e-6);
        prop_assert!(base.thinness >= 0.0);
        prop_assert_eq!(base.thinness, base.std_norm / base.mean_norm);
    }

    #[test]
    fn magnitude_variants_keep_directions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng, 10, 32);
        let vs = magnitude_variants(&seq, &MAGNITUDE_SCALES).unwrap();
        prop_assert_eq!(vs.len(), 6);
        for v in &vs {
            for i in 0..seq.rows() {
                prop_assert!(geodesic_distance(&row_dir(v, i), &row_dir(&seq, i)) < 1e-7);
            }
        }
    }

    #[test]
    fn angular_ranking_ignores_rescaling(seed in any::<u64>(), k in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab: Vec<(String, Vec<f64>)> = (0..40)
            .map(|i| (format!("w{i}"), random_dir(&mut rng, 24).into_inner()))
            .collect();
        let q = random_dir(&mut rng, 24).into_inner();
        let rescaled: Vec<(String, Vec<f64>)> = vocab
            .iter()
            .map(|(t, v)| {
                let c = rng.random_range(0.01..100.0);
                (t.clone(), v.iter().map(|x| x * c).collect())
            })
            .collect();
        let a = nearest_neighbors("q", &q, &vocab, k).unwrap();
        let b = nearest_neighbors("q", &q, &rescaled, k).unwrap();
        let names = |l: &[(String, f64)]| l.iter().map(|p| p.0.clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&a.angular_top_k), names(&b.angular_top_k));
        prop_assert!(a.angular_top_k.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(a.linear_top_k.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn self_contamination_is_zero(seed in any::<u64>(), t in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_sequence(&mut rng, t, 16);
        let r = contamination(&s, &s).unwrap();
        prop_assert!(r.angles.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn contamination_angles_are_in_range(seed in any::<u64>(), t in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sequence(&mut rng, t, 16);
        let mut b = random_sequence(&mut rng, t, 16);
        b.meta = a.meta.clone();
        let r = contamination(&a, &b).unwrap();
        prop_assert!(r.angles.iter().all(|&x| (0.0..=std::f64::consts::PI).contains(&x)));
    }
}

#[test]
fn linear_ranking_is_scale_sensitive() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = random_dir(&mut rng, 8).into_inner();
    let near: Vec<f64> = q.iter().map(|x| x * 1.1).collect();
    let other = random_dir(&mut rng, 8).into_inner();
    let vocab = vec![("near".to_string(), near.clone()), ("other".to_string(), other.clone())];
    let far = vec![
        ("near".to_string(), near.iter().map(|x| x * 50.0).collect()),
        ("other".to_string(), other),
    ];
    let a = nearest_neighbors("q", &q, &vocab, 2).unwrap();
    let b = nearest_neighbors("q", &q, &far, 2).unwrap();
    assert_eq!(a.linear_top_k[0].0, "near");
    assert_eq!(b.linear_top_k[0].0, "other");
    assert_eq!(a.angular_top_k[0].0, "near");
    assert_eq!(b.angular_top_k[0].0, "near");
}
