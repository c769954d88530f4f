#![allow(dead_code)]

use heart_core::io::{EmbeddingSequence, SequenceMeta};
use heart_core::linalg::{norm, orthogonalize_against, scaled};
use heart_core::sphere::{tangent_project, Direction};
use heart_core::stats::KentModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn random_dir(rng: &mut ChaCha8Rng, d: usize) -> Direction {
    loop {
        let g = gaussian(rng, d);
        if norm(&g) > 1e-3 {
            return Direction::normalized(&g).unwrap();
        }
    }
}

/// A unit vector orthogonal to `mu` and every vector in `others`.
pub fn random_tangent(rng: &mut ChaCha8Rng, mu: &Direction, others: &[&[f64]]) -> Direction {
    loop {
        let mut v = tangent_project(mu, &gaussian(rng, mu.dim()));
        for _ in 0..2 {
            orthogonalize_against(&mut v, others);
            orthogonalize_against(&mut v, &[mu.as_slice()]);
        }
        let n = norm(&v);
        if n > 1e-3 {
            return Direction::from_unit(scaled(&v, 1.0 / n)).unwrap();
        }
    }
}

pub fn random_kent(rng: &mut ChaCha8Rng, d: usize, kappa: f64, ratio: f64) -> KentModel {
    let mu = random_dir(rng, d);
    let g1 = random_tangent(rng, &mu, &[]);
    let g2 = random_tangent(rng, &mu, &[g1.as_slice()]);
    KentModel::new(mu, kappa, ratio * kappa, g1, g2).unwrap()
}

/// `T` rows with random norms in `[0.5, 30]`. BOS at 0, subject at 1 + s,
/// EOT and pads after the body.
pub fn random_sequence(rng: &mut ChaCha8Rng, t: usize, d: usize) -> EmbeddingSequence {
    assert!(t >= 3);
    let rows: Vec<Vec<f64>> = (0..t)
        .map(|_| {
            let r = rng.random_range(0.5..30.0);
            scaled(random_dir(rng, d).as_slice(), r)
        })
        .collect();
    let eot = rng.random_range(2..t);
    let subject = rng.random_range(1..eot);
    let meta = SequenceMeta {
        tokens: (0..t).map(|i| format!("tok{i}")).collect(),
        bos_index: Some(0),
        eot_index: Some(eot),
        pad_start: (eot + 1 < t).then_some(eot + 1),
        subject_index: Some(subject),
        model_tag: "synthetic".into(),
        prompt: "synthetic prompt".into(),
        ..Default::default()
    };
    EmbeddingSequence::from_rows(&rows, meta).unwrap()
}

pub fn unit(v: &[f64]) -> Direction {
    Direction::normalized(v).unwrap()
}

pub fn row_dir(s: &EmbeddingSequence, i: usize) -> Direction {
    unit(&s.row_f64(i))
}
