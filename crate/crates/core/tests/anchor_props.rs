mod common;

use common::{random_dir, random_kent};
use heart_core::anchors::{attribute_direction, direction_between, estimate_anchor, AttributePair, TokenRole};
use heart_core::io::{EmbeddingSequence, SequenceMeta};
use heart_core::linalg::scaled;
use heart_core::sphere::{exp_map, geodesic_distance, TangentVector};
use heart_core::stats::sample_kent;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One sequence per draw: BOS, subject, EOT, two pads.
fn pool(rng: &mut ChaCha8Rng, draws: &[heart_core::Direction], d: usize) -> Vec<EmbeddingSequence> {
    draws
        .iter()
        .map(|x| {
            let r = rng.random_range(20.0..30.0);
            let rows = vec![
                scaled(random_dir(rng, d).as_slice(), 5.0),
                scaled(x.as_slice(), r),
                scaled(x.as_slice(), r * 0.9),
                scaled(random_dir(rng, d).as_slice(), 2.0),
                scaled(random_dir(rng, d).as_slice(), 2.0),
            ];
            let meta = SequenceMeta {
                tokens: ["<bos>", "cat", "<eot>", "<pad>", "<pad>"].map(String::from).to_vec(),
                bos_index: Some(0),
                subject_index: Some(1),
                eot_index: Some(2),
                pad_start: Some(3),
                ..Default::default()
            };
            EmbeddingSequence::from_rows(&rows, meta).unwrap()
        })
        .collect()
}

#[test]
fn anchor_lands_near_the_generating_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for d in [3usize, 16, 64] {
        // the mean of N draws scatters by about sqrt((D-1)/(κN)) radians;
        // scale κ with D so that sits near half a degree
        let kappa = 400.0 * d as f64;
        for seed in 0..5 {
            let truth = random_kent(&mut rng, d, kappa, 0.2);
            let draws = sample_kent(&truth, 30, seed);
            let seqs = pool(&mut rng, &draws, d);
            let a = estimate_anchor("cat", &seqs, TokenRole::Subject).unwrap();
            let err = geodesic_distance(a.mu(), &truth.mu).to_degrees();
            assert!(err < 2.0, "D={d} seed={seed}: {err:.3} deg");
            assert_eq!(a.mu(), &a.model.mu);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn anchor_ignores_pool_order(seed in any::<u64>(), shift in 1usize..29) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_kent(&mut rng, 16, 300.0, 0.2);
        let seqs = pool(&mut rng, &sample_kent(&truth, 30, seed), 16);
        let mut shuffled = seqs.clone();
        shuffled.rotate_left(shift);
        shuffled.reverse();
        for role in [TokenRole::Subject, TokenRole::Eot, TokenRole::Pad] {
            let a = estimate_anchor("cat", &seqs, role).unwrap();
            let b = estimate_anchor("cat", &shuffled, role).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn anchor_ignores_a_uniform_scale(seed in any::<u64>(), alpha in 0.05f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_kent(&mut rng, 16, 300.0, 0.2);
        let seqs = pool(&mut rng, &sample_kent(&truth, 30, seed), 16);
        let scaled_seqs: Vec<_> = seqs
            .iter()
            .map(|s| s.with_data(s.data().iter().map(|&x| (x as f64 * alpha) as f32).collect()).unwrap())
            .collect();
        let a = estimate_anchor("cat", &seqs, TokenRole::Subject).unwrap();
        let b = estimate_anchor("cat", &scaled_seqs, TokenRole::Subject).unwrap();
        prop_assert!(geodesic_distance(a.mu(), b.mu()) < 1e-6);
        prop_assert!((b.source_norm_stats.mean / a.source_norm_stats.mean - alpha).abs() < 1e-5 * alpha);
    }

    #[test]
    fn exp_of_attribute_direction_reaches_the_positive_anchor(seed in any::<u64>(), d in prop_oneof![Just(3usize), Just(16), Just(768)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (neg, pos) = (random_dir(&mut rng, d), random_dir(&mut rng, d));
        let a = direction_between(&neg, &pos).unwrap();
        prop_assert!(a.d_a.dot(a.base.as_slice()).abs() < 1e-6);
        let xi = TangentVector::new(neg.clone(), scaled(a.d_a.as_slice(), a.theta_to_target)).unwrap();
        prop_assert!(geodesic_distance(&exp_map(&neg, &xi).unwrap(), &pos) < 1e-6);
    }
}

#[test]
fn attribute_direction_from_fitted_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let young = random_kent(&mut rng, 16, 500.0, 0.1);
    let old = random_kent(&mut rng, 16, 500.0, 0.1);
    let fit = |m, rng: &mut ChaCha8Rng| {
        let seqs = pool(rng, &sample_kent(m, 40, 1), 16);
        estimate_anchor("person", &seqs, TokenRole::Subject).unwrap()
    };
    let (a_neg, a_pos) = (fit(&young, &mut rng), fit(&old, &mut rng));
    let pair = AttributePair::new("person", "young", "old", a_neg, a_pos).unwrap();
    let dir = attribute_direction(&pair).unwrap();
    let xi = TangentVector::new(dir.base.clone(), scaled(dir.d_a.as_slice(), dir.theta_to_target)).unwrap();
    assert!(geodesic_distance(&exp_map(&dir.base, &xi).unwrap(), pair.anchor_pos.mu()) < 1e-6);
}
