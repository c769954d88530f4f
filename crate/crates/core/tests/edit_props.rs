mod common;

use common::{random_dir, random_sequence, row_dir, unit};
use heart_core::anchors::direction_between;
use heart_core::edit::{
    contamination_weights, edit_attribute_sequence, edit_subject_sequence, edit_subject_token, reject_plane,
    AnchorPair, EditPlan, SubjectAnchors,
};
use heart_core::linalg::{norm, scaled};
use heart_core::sphere::{geodesic_distance, slerp};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn anchors(rng: &mut ChaCha8Rng, d: usize) -> SubjectAnchors {
    let mut pair = || AnchorPair::new(random_dir(rng, d), random_dir(rng, d)).unwrap();
    SubjectAnchors {
        subject: pair(),
        eot: Some(pair()),
        pad: Some(pair()),
    }
}

fn full_plan(lambda: f64) -> EditPlan {
    EditPlan {
        lambda,
        propagate_upstream: true,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_survive_every_edit(seed in any::<u64>(), t in 3usize..24, d in prop_oneof![Just(4usize), Just(32), Just(256)], lambda in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng, t, d);
        let a = anchors(&mut rng, d);
        let dir = direction_between(&random_dir(&mut rng, d), &random_dir(&mut rng, d)).unwrap();
        for r in [
            edit_subject_sequence(&seq, &a, &full_plan(lambda)).unwrap(),
            edit_attribute_sequence(&seq, &dir, &full_plan(lambda)).unwrap(),
        ] {
            for i in 0..t {
                let (n0, n1) = (norm(&seq.row_f64(i)), norm(&r.edited.row_f64(i)));
                prop_assert!((n1 - n0).abs() <= 1e-4 * n0);
            }
        }
    }

    #[test]
    fn zero_strength_is_the_identity(seed in any::<u64>(), t in 3usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng, t, 16);
        let a = anchors(&mut rng, 16);
        let r = edit_subject_sequence(&seq, &a, &full_plan(0.0)).unwrap();
        prop_assert_eq!(r.edited.data(), seq.data());
        prop_assert!(r.per_token_angle_moved.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn local_plans_touch_one_row(seed in any::<u64>(), t in 3usize..24, lambda in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng, t, 16);
        let a = anchors(&mut rng, 16);
        let r = edit_subject_sequence(&seq, &a, &EditPlan::local(lambda)).unwrap();
        let changed: Vec<usize> = (0..t).filter(|&i| r.edited.row(i) != seq.row(i)).collect();
        prop_assert_eq!(changed, vec![seq.meta.subject_index.unwrap()]);
    }

    #[test]
    fn only_the_plane_component_moves(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        // The part of h̃ orthogonal to span{μ_s, μ_t} keeps its direction.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, t) = (random_dir(&mut rng, 16), random_dir(&mut rng, 16));
        let h = scaled(random_dir(&mut rng, 16).as_slice(), 7.0);
        let out = edit_subject_token(&h, &s, &t, lambda).unwrap();
        let before = reject_plane(&h, s.as_slice(), t.as_slice());
        let after = reject_plane(&out, s.as_slice(), t.as_slice());
        prop_assert!(geodesic_distance(&unit(&before), &unit(&after)) < 1e-5);
        // and the in-plane part along μ_{s→t} carries the original α
        let st = slerp(&s, &t, lambda).unwrap();
        let alpha = s.dot(&scaled(&h, 1.0 / 7.0));
        let c = norm(&out) / 7.0 / norm(&{
            let mut v = scaled(&h, 1.0 / 7.0);
            heart_core::linalg::axpy(-alpha, s.as_slice(), &mut v);
            heart_core::linalg::axpy(alpha, st.as_slice(), &mut v);
            v
        });
        let mut resid = scaled(&out, 1.0 / (7.0 * c));
        heart_core::linalg::axpy(-alpha, st.as_slice(), &mut resid);
        prop_assert!(s.dot(&resid).abs() < 1e-9);
    }

    #[test]
    fn traversal_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, t) = (random_dir(&mut rng, 32), random_dir(&mut rng, 32));
        let h = scaled(s.as_slice(), 3.0);
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let out = edit_subject_token(&h, &s, &t, i as f64 / 20.0).unwrap();
            let dist = geodesic_distance(&unit(&out), &t);
            prop_assert!(dist <= last + 1e-12);
            last = dist;
        }
        prop_assert!(last < 1e-6);
    }

    #[test]
    fn weights_decay_with_angle(seed in any::<u64>(), t in 3usize..24, tau in 0.05f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng, t, 8);
        let w = contamination_weights(&seq, tau).unwrap();
        let ps = seq.meta.subject_index.unwrap();
        prop_assert_eq!(w[ps], 1.0);
        prop_assert_eq!(w[0], 0.0);
        let subj = row_dir(&seq, ps);
        let mut by_angle: Vec<(f64, f64)> = (1..t)
            .map(|p| (geodesic_distance(&row_dir(&seq, p), &subj), w[p]))
            .collect();
        by_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in by_angle.windows(2) {
            prop_assert!(pair[1].1 <= pair[0].1 + 1e-6);
        }
        prop_assert!(by_angle.iter().all(|&(_, w)| w > 0.0 && w <= 1.0));
    }

    #[test]
    fn row_order_of_work_does_not_matter(seed in any::<u64>()) {
        // editing the same sequence twice gives identical bytes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng, 12, 16);
        let a = anchors(&mut rng, 16);
        let x = edit_subject_sequence(&seq, &a, &full_plan(0.7)).unwrap();
        let y = edit_subject_sequence(&seq, &a, &full_plan(0.7)).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn upstream_rows_stay_put_by_default() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let seq = random_sequence(&mut rng, 16, 16);
        let a = anchors(&mut rng, 16);
        let r = edit_subject_sequence(&seq, &a, &EditPlan::default()).unwrap();
        let ps = seq.meta.subject_index.unwrap();
        for p in 0..ps {
            assert_eq!(r.edited.row(p), seq.row(p), "row {p} moved");
        }
    }
}

#[test]
fn overrides_replace_computed_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let seq = random_sequence(&mut rng, 10, 8);
    let a = anchors(&mut rng, 8);
    let ps = seq.meta.subject_index.unwrap();
    let eot = seq.meta.eot_index.unwrap();
    let mut plan = EditPlan {
        eot_strength: Some(0.0),
        pad_strength: Some(0.0),
        ..Default::default()
    };
    for p in ps + 1..eot {
        plan.per_token_weight.insert(p, 0.0);
    }
    let r = edit_subject_sequence(&seq, &a, &plan).unwrap();
    let changed: Vec<usize> = (0..10).filter(|&i| r.edited.row(i) != seq.row(i)).collect();
    assert_eq!(changed, vec![ps]);
}
