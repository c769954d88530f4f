use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use heart_bench::{clip_like, uniform};
use heart_core::edit::{edit_subject_sequence, AnchorPair, EditPlan, SubjectAnchors};
use heart_core::io::sequence::decode;
use heart_core::io::write_sequence;
use heart_core::probes::{contamination, thinness};

fn edits(c: &mut Criterion) {
    let mut group = c.benchmark_group("edit_subject_77");
    for d in [768usize, 4096] {
        let seq = clip_like(77, d, 7);
        let a = uniform(d, 6, 8);
        let pair = |i: usize| AnchorPair::new(a[i].clone(), a[i + 1].clone()).unwrap();
        let anchors = SubjectAnchors {
            subject: pair(0),
            eot: Some(pair(2)),
            pad: Some(pair(4)),
        };
        let plan = EditPlan::default();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| edit_subject_sequence(black_box(&seq), &anchors, &plan))
        });
    }
    group.finish();
}

fn container(c: &mut Criterion) {
    let mut group = c.benchmark_group("hemb_77");
    for d in [768usize, 4096] {
        let seq = clip_like(77, d, 9);
        let mut bytes = Vec::new();
        write_sequence(&seq, &mut bytes).unwrap();
        group.throughput(Throughput::Bytes(bytes.len() as u64));
        group.bench_with_input(BenchmarkId::new("encode", d), &seq, |b, s| {
            b.iter(|| {
                let mut out = Vec::with_capacity(bytes.len());
                write_sequence(s, &mut out).unwrap();
                out
            })
        });
        group.bench_with_input(BenchmarkId::new("decode", d), &bytes, |b, bytes| {
            b.iter(|| decode(bytes))
        });
    }
    group.finish();
}

fn probes(c: &mut Criterion) {
    let seqs: Vec<_> = (0..32).map(|s| clip_like(77, 768, s)).collect();
    c.bench_function("thinness_32x77x768", |b| {
        b.iter(|| thinness(black_box(&seqs), false, "clip"))
    });
    c.bench_function("contamination_77x768", |b| {
        b.iter(|| contamination(&seqs[0], black_box(&seqs[1])))
    });
}

criterion_group!(benches, edits, container, probes);
criterion_main!(benches);
