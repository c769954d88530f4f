//! Token-level embedding sequences and the HEMB1 container.
//!
//! ```text
//! "HEMB1" | meta_length: u32 LE | metadata (JSON, meta_length bytes) | T·D f32 LE, row-major
//! ```

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::IoError;

pub const MAGIC: &[u8; 5] = b"HEMB1";

/// Everything about a sequence except the matrix itself.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub tokens: Vec<String>,
    #[serde(default)]
    pub bos_index: Option<usize>,
    #[serde(default)]
    pub eot_index: Option<usize>,
    #[serde(default)]
    pub pad_start: Option<usize>,
    #[serde(default)]
    pub subject_index: Option<usize>,
    #[serde(default)]
    pub model_tag: String,
    #[serde(default)]
    pub prompt: String,
    /// Free-form annotations (scale factors, subword lists, provenance).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// A `T×D` matrix of token states with its token metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
    pub meta: SequenceMeta,
}

#[derive(Serialize, Deserialize)]
struct Header {
    rows: usize,
    dim: usize,
    #[serde(flatten)]
    meta: SequenceMeta,
}

impl EmbeddingSequence {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>, meta: SequenceMeta) -> Result<Self, IoError> {
        if rows == 0 || dim < 2 {
            return Err(IoError::InvalidData(format!(
                "need T >= 1 and D >= 2, got T={rows}, D={dim}"
            )));
        }
        if data.len() != rows * dim {
            return Err(IoError::DimensionMismatch {
                declared: rows * dim,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(IoError::InvalidData(format!(
                "non-finite value in row {} column {}",
                i / dim,
                i % dim
            )));
        }
        validate_meta(rows, &meta)?;
        Ok(EmbeddingSequence { rows, dim, data, meta })
    }

    /// Builds a sequence from `f64` rows, rounding to `f32`.
    pub fn from_rows(rows: &[Vec<f64>], meta: SequenceMeta) -> Result<Self, IoError> {
        let dim = rows.first().map_or(0, |r| r.len());
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(IoError::DimensionMismatch {
                declared: dim,
                actual: r.len(),
            });
        }
        let data = rows.iter().flatten().map(|&x| x as f32).collect();
        Self::new(rows.len(), dim, data, meta)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&x| x as f64).collect()
    }

    /// Replaces the payload, keeping shape and metadata.
    pub fn with_data(&self, data: Vec<f32>) -> Result<Self, IoError> {
        Self::new(self.rows, self.dim, data, self.meta.clone())
    }

    /// Positions holding BOS, EOT or padding.
    pub fn is_special(&self, i: usize) -> bool {
        self.meta.bos_index == Some(i) || self.meta.eot_index == Some(i) || self.meta.pad_start.is_some_and(|p| i >= p)
    }
}

fn validate_meta(rows: usize, m: &SequenceMeta) -> Result<(), IoError> {
    let bad = |msg: String| Err(IoError::InvalidIndices(msg));
    if m.tokens.len() != rows {
        return Err(IoError::InvalidData(format!(
            "{} tokens for {rows} rows",
            m.tokens.len()
        )));
    }
    for (name, idx) in [
        ("bos_index", m.bos_index),
        ("eot_index", m.eot_index),
        ("pad_start", m.pad_start),
        ("subject_index", m.subject_index),
    ] {
        if let Some(i) = idx {
            if i >= rows {
                return bad(format!("{name} = {i} is out of range for T = {rows}"));
            }
        }
    }
    if let (Some(b), Some(e)) = (m.bos_index, m.eot_index) {
        if b >= e {
            return bad(format!("bos_index {b} must precede eot_index {e}"));
        }
    }
    if let (Some(e), Some(p)) = (m.eot_index, m.pad_start) {
        if p <= e {
            return bad(format!("pad_start {p} must follow eot_index {e}"));
        }
    }
    if let Some(s) = m.subject_index {
        let special = m.bos_index == Some(s) || m.eot_index == Some(s) || m.pad_start.is_some_and(|p| s >= p);
        if special {
            return bad(format!("subject_index {s} points at a special token"));
        }
    }
    Ok(())
}

/// Writes the container; returns the number of bytes written.
pub fn write_sequence<W: Write>(seq: &EmbeddingSequence, mut sink: W) -> Result<usize, IoError> {
    let header = Header {
        rows: seq.rows,
        dim: seq.dim,
        meta: seq.meta.clone(),
    };
    let meta = serde_json::to_vec(&header).map_err(|e| IoError::SchemaViolation(e.to_string()))?;
    let meta_len =
        u32::try_from(meta.len()).map_err(|_| IoError::InvalidData(format!("metadata is {} bytes", meta.len())))?;
    let mut buf = Vec::with_capacity(MAGIC.len() + 4 + meta.len() + seq.data.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&meta_len.to_le_bytes());
    buf.extend_from_slice(&meta);
    for x in &seq.data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    sink.write_all(&buf).map_err(IoError::SinkFailure)?;
    sink.flush().map_err(IoError::SinkFailure)?;
    Ok(buf.len())
}

/// Reads one container, consuming the stream to its end.
pub fn read_sequence<R: Read>(mut source: R) -> Result<EmbeddingSequence, IoError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(IoError::Source)?;
    decode(&bytes)
}

/// Decodes a container held in memory.
pub fn decode(bytes: &[u8]) -> Result<EmbeddingSequence, IoError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        let n = bytes.len().min(MAGIC.len());
        return Err(IoError::BadMagic {
            found: String::from_utf8_lossy(&bytes[..n]).into_owned(),
        });
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 4 {
        return Err(IoError::TruncatedPayload {
            expected: 4,
            actual: rest.len(),
        });
    }
    let meta_len = u32::from_le_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
    let rest = &rest[4..];
    if rest.len() < meta_len {
        return Err(IoError::TruncatedPayload {
            expected: meta_len,
            actual: rest.len(),
        });
    }
    let header: Header =
        serde_json::from_slice(&rest[..meta_len]).map_err(|e| IoError::SchemaViolation(e.to_string()))?;
    let payload = &rest[meta_len..];
    let expected = header
        .rows
        .checked_mul(header.dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| IoError::InvalidData("declared shape overflows".into()))?;
    if payload.len() < expected {
        return Err(IoError::TruncatedPayload {
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(IoError::DimensionMismatch {
            declared: expected,
            actual: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    EmbeddingSequence::new(header.rows, header.dim, data, header.meta)
}
