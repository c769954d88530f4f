//! File formats: HEMB1 sequence containers, JSON model artifacts and
//! manifests listing batches of sequence files.

pub mod model;
pub mod sequence;

use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use model::{read_model, write_model, FitConfig, ModelArtifact, ModelDocument};
pub use sequence::{read_sequence, write_sequence, EmbeddingSequence, SequenceMeta};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("bad magic {found:?}, expected \"HEMB1\"")]
    BadMagic { found: String },
    #[error("truncated: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("declared size {declared} does not match actual size {actual}")]
    DimensionMismatch { declared: usize, actual: usize },
    #[error("invalid special-token indices: {0}")]
    InvalidIndices(String),
    #[error("invalid sequence data: {0}")]
    InvalidData(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown model type tag {0:?}")]
    UnknownTypeTag(String),
    #[error("write failed: {0}")]
    SinkFailure(#[source] std::io::Error),
    #[error("read failed: {0}")]
    Source(#[source] std::io::Error),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<IoError>,
    },
}

impl IoError {
    fn at(self, path: &Path) -> IoError {
        IoError::File {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with file context stripped.
    pub fn root(&self) -> &IoError {
        match self {
            IoError::File { source, .. } => source.root(),
            e => e,
        }
    }
}

fn open(path: &Path) -> Result<fs::File, IoError> {
    fs::File::open(path).map_err(|e| IoError::Source(e).at(path))
}

pub fn read_sequence_file(path: &Path) -> Result<EmbeddingSequence, IoError> {
    read_sequence(std::io::BufReader::new(open(path)?)).map_err(|e| e.at(path))
}

pub fn read_model_file(path: &Path) -> Result<ModelDocument, IoError> {
    read_model(std::io::BufReader::new(open(path)?)).map_err(|e| e.at(path))
}

/// Reads a manifest: one path per line, relative to the manifest's
/// directory. Blank lines are skipped.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::Source(e).at(path))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

/// Renders a manifest body from paths relative to its directory.
pub fn manifest_text<P: AsRef<Path>>(entries: &[P]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&e.as_ref().to_string_lossy());
        s.push('\n');
    }
    s
}

/// Reads every sequence listed in a manifest, in listed order.
pub fn read_batch(manifest: &Path) -> Result<Vec<EmbeddingSequence>, IoError> {
    read_manifest(manifest)?.iter().map(|p| read_sequence_file(p)).collect()
}
