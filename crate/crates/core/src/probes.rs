//! Diagnostics for the geometry of embedding sequences: norm spread, magnitude
//! scaling, nearest neighbours under two metrics, and token contamination.

use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

use crate::io::{EmbeddingSequence, IoError};
use crate::linalg::{dot, norm, stable_angle};

/// Magnitude scales used for the direction-vs-norm experiment.
pub const MAGNITUDE_SCALES: [f64; 6] = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
/// Cosines closer than this rank as ties (broken by vocabulary index), so
/// rescaling a vector cannot reorder it through rounding noise.
pub const COSINE_TIE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("need at least 2 token rows, found {found}")]
    EmptyInput { found: usize },
    #[error("scale {scale} is not positive")]
    NonPositiveScale { scale: f64 },
    #[error("vocabulary is empty")]
    EmptyVocab,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("query has zero norm")]
    ZeroQuery,
    #[error("query has dimension {query}, vocabulary entry {index} has {entry}")]
    DimensionMismatch { query: usize, entry: usize, index: usize },
    #[error("misaligned sequences: {0}")]
    MisalignedSequences(String),
    #[error("sequences have no subject_index")]
    MissingSubjectIndex,
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinnessReport {
    pub encoder_tag: String,
    pub mean_norm: f64,
    pub std_norm: f64,
    /// `std_norm / mean_norm`.
    pub thinness: f64,
    pub token_count: usize,
}

/// Coefficient of variation of row norms across all sequences. BOS, EOT and
/// pad rows are skipped unless `include_special`.
pub fn thinness(
    sequences: &[EmbeddingSequence],
    include_special: bool,
    encoder_tag: &str,
) -> Result<ThinnessReport, ProbeError> {
    let mut norms = Vec::new();
    for s in sequences {
        for i in 0..s.rows() {
            if include_special || !s.is_special(i) {
                norms.push(norm(&s.row_f64(i)));
            }
        }
    }
    if norms.len() < 2 {
        return Err(ProbeError::EmptyInput { found: norms.len() });
    }
    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let var = norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(ThinnessReport {
        encoder_tag: encoder_tag.to_string(),
        mean_norm: mean,
        std_norm: std,
        thinness: if mean > 0.0 { std / mean } else { 0.0 },
        token_count: norms.len(),
    })
}

/// One copy of `seq` per scale, every row multiplied by the scale. Each copy
/// records its scale under `extra.magnitude_scale`.
pub fn magnitude_variants(seq: &EmbeddingSequence, scales: &[f64]) -> Result<Vec<EmbeddingSequence>, ProbeError> {
    if let Some(&scale) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(ProbeError::NonPositiveScale { scale });
    }
    scales
        .iter()
        .map(|&a| {
            let data = seq.data().iter().map(|&x| (x as f64 * a) as f32).collect();
            let mut out = seq.with_data(data)?;
            out.meta.extra.insert("magnitude_scale".into(), serde_json::json!(a));
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnReport {
    pub query: String,
    /// Ascending Euclidean distance.
    pub linear_top_k: Vec<(String, f64)>,
    /// Descending cosine.
    pub angular_top_k: Vec<(String, f64)>,
}

impl NnReport {
    /// Rows `rank, token, score, metric`, linear first.
    pub fn records(&self) -> Vec<[String; 4]> {
        let rows = |list: &[(String, f64)], metric: &str| -> Vec<[String; 4]> {
            list.iter()
                .enumerate()
                .map(|(r, (t, s))| [(r + 1).to_string(), t.clone(), s.to_string(), metric.to_string()])
                .collect()
        };
        let mut out = rows(&self.linear_top_k, "linear");
        out.extend(rows(&self.angular_top_k, "angular"));
        out
    }
}

/// Exact top-`k` neighbours of `query` by Euclidean distance and by cosine.
/// Ties go to the lower vocabulary index.
pub fn nearest_neighbors(
    query_name: &str,
    query: &[f64],
    vocab: &[(String, Vec<f64>)],
    k: usize,
) -> Result<NnReport, ProbeError> {
    if vocab.is_empty() {
        return Err(ProbeError::EmptyVocab);
    }
    if k == 0 {
        return Err(ProbeError::ZeroK);
    }
    if let Some((index, (_, v))) = vocab.iter().enumerate().find(|(_, (_, v))| v.len() != query.len()) {
        return Err(ProbeError::DimensionMismatch {
            query: query.len(),
            entry: v.len(),
            index,
        });
    }
    let qn = norm(query);
    if qn == 0.0 {
        return Err(ProbeError::ZeroQuery);
    }
    let k = k.min(vocab.len());

    let mut lin: Vec<(usize, f64)> = vocab
        .iter()
        .enumerate()
        .map(|(i, (_, v))| {
            let d: f64 = v.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (i, d.sqrt())
        })
        .collect();
    lin.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut ang: Vec<(usize, f64, i64)> = vocab
        .iter()
        .enumerate()
        .map(|(i, (_, v))| {
            let vn = norm(v);
            let c = if vn == 0.0 {
                f64::NEG_INFINITY
            } else {
                (dot(v, query) / (vn * qn)).clamp(-1.0, 1.0)
            };
            let key = if c.is_finite() {
                (c / COSINE_TIE).round() as i64
            } else {
                i64::MIN
            };
            (i, c, key)
        })
        .collect();
    ang.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));

    let name = |i: usize| vocab[i].0.clone();
    Ok(NnReport {
        query: query_name.to_string(),
        linear_top_k: lin[..k].iter().map(|&(i, d)| (name(i), d)).collect(),
        angular_top_k: ang[..k].iter().map(|&(i, c, _)| (name(i), c)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Bos,
    Upstream,
    Concept,
    Downstream,
    Eot,
    Pad,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Bos => "bos",
            Region::Upstream => "upstream",
            Region::Concept => "concept",
            Region::Downstream => "downstream",
            Region::Eot => "eot",
            Region::Pad => "pad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub tokens: Vec<String>,
    /// `θ^(p)` per position, radians.
    pub angles: Vec<f64>,
    pub regions: Vec<Region>,
    pub eot_angle: Option<f64>,
    pub upstream_mean: Option<f64>,
    pub downstream_mean: Option<f64>,
    /// `downstream_mean − upstream_mean`, when both sides are non-empty.
    pub asymmetry: Option<f64>,
}

impl ContaminationReport {
    /// Rows `position, token, theta, region`.
    pub fn records(&self) -> Vec<[String; 4]> {
        (0..self.angles.len())
            .map(|p| {
                [
                    p.to_string(),
                    self.tokens[p].clone(),
                    self.angles[p].to_string(),
                    self.regions[p].as_str().to_string(),
                ]
            })
            .collect()
    }
}

fn region_of(seq: &EmbeddingSequence, p: usize, concept: usize) -> Region {
    let m = &seq.meta;
    if m.bos_index == Some(p) {
        Region::Bos
    } else if m.eot_index == Some(p) {
        Region::Eot
    } else if m.pad_start.is_some_and(|s| p >= s) {
        Region::Pad
    } else if p == concept {
        Region::Concept
    } else if p < concept {
        Region::Upstream
    } else {
        Region::Downstream
    }
}

/// Per-position angles between two encodings of prompts that differ only in
/// the concept token at `subject_index`.
pub fn contamination(seq_a: &EmbeddingSequence, seq_b: &EmbeddingSequence) -> Result<ContaminationReport, ProbeError> {
    let (ma, mb) = (&seq_a.meta, &seq_b.meta);
    let mis = |s: String| Err(ProbeError::MisalignedSequences(s));
    if seq_a.rows() != seq_b.rows() || seq_a.dim() != seq_b.dim() {
        return mis(format!(
            "shapes {}x{} and {}x{}",
            seq_a.rows(),
            seq_a.dim(),
            seq_b.rows(),
            seq_b.dim()
        ));
    }
    let concept = ma.subject_index.ok_or(ProbeError::MissingSubjectIndex)?;
    if mb.subject_index != Some(concept) {
        return mis(format!("subject_index {concept} vs {:?}", mb.subject_index));
    }
    if (ma.bos_index, ma.eot_index, ma.pad_start) != (mb.bos_index, mb.eot_index, mb.pad_start) {
        return mis("special-token indices differ".into());
    }
    if let Some(p) = (0..seq_a.rows()).find(|&p| p != concept && ma.tokens[p] != mb.tokens[p]) {
        return mis(format!(
            "token {p} is {:?} in one sequence and {:?} in the other",
            ma.tokens[p], mb.tokens[p]
        ));
    }

    let angles: Vec<f64> = (0..seq_a.rows())
        .map(|p| stable_angle(&seq_a.row_f64(p), &seq_b.row_f64(p)))
        .collect();
    let regions: Vec<Region> = (0..seq_a.rows()).map(|p| region_of(seq_a, p, concept)).collect();
    let mean_of = |r: Region| -> Option<f64> {
        let xs: Vec<f64> = angles
            .iter()
            .zip(&regions)
            .filter(|(_, g)| **g == r)
            .map(|(a, _)| *a)
            .collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };
    let upstream_mean = mean_of(Region::Upstream);
    let downstream_mean = mean_of(Region::Downstream);
    Ok(ContaminationReport {
        tokens: ma.tokens.clone(),
        eot_angle: ma.eot_index.map(|e| angles[e]),
        asymmetry: upstream_mean.zip(downstream_mean).map(|(u, d)| d - u),
        upstream_mean,
        downstream_mean,
        angles,
        regions,
    })
}

pub const THINNESS_HEADER: [&str; 4] = ["encoder", "mean", "std", "thinness"];
pub const CONTAMINATION_HEADER: [&str; 4] = ["position", "token", "theta", "region"];
pub const NN_HEADER: [&str; 4] = ["rank", "token", "score", "metric"];

/// Writes a header and records as CSV.
pub fn write_csv<W: Write, const N: usize>(
    sink: W,
    header: &[&str; N],
    records: &[[String; N]],
) -> Result<(), ProbeError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| ProbeError::Io(IoError::SinkFailure(e)))?;
    Ok(())
}

pub fn thinness_record(r: &ThinnessReport) -> [String; 4] {
    [
        r.encoder_tag.clone(),
        r.mean_norm.to_string(),
        r.std_norm.to_string(),
        r.thinness.to_string(),
    ]
}
