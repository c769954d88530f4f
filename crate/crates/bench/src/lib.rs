//! Inputs shared by the benchmarks. Everything is drawn from the library's
//! own samplers so the numbers are reproducible.

use heart_core::io::{EmbeddingSequence, SequenceMeta};
use heart_core::stats::{sample_vmf, VmfModel};
use heart_core::Direction;

/// `n` uniform directions in `R^d`.
pub fn uniform(d: usize, n: usize, seed: u64) -> Vec<Direction> {
    sample_vmf(&VmfModel::new(Direction::basis(d, 0), 0.0).unwrap(), n, seed)
}

/// A CLIP-shaped sequence: BOS, a few words, subject at 5, EOT at 12, pads.
pub fn clip_like(t: usize, d: usize, seed: u64) -> EmbeddingSequence {
    assert!(t > 13);
    let rows: Vec<Vec<f64>> = uniform(d, t, seed)
        .into_iter()
        .enumerate()
        .map(|(i, x)| x.as_slice().iter().map(|v| v * (25.0 + (i % 7) as f64)).collect())
        .collect();
    let meta = SequenceMeta {
        tokens: (0..t).map(|i| format!("t{i}")).collect(),
        bos_index: Some(0),
        subject_index: Some(5),
        eot_index: Some(12),
        pad_start: Some(13),
        ..Default::default()
    };
    EmbeddingSequence::from_rows(&rows, meta).unwrap()
}
