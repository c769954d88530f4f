//! Concept anchors: prompt pools, per-role embedding extraction, Kent fits and
//! attribute directions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::io::EmbeddingSequence;
use crate::linalg::{norm, scaled, sub};
use crate::sphere::{geodesic_distance, normalize, tangent_project, Direction, SphereError, COINCIDENT_ANGLE};
use crate::stats::{fit_kent_with, KentFitOptions, KentModel, StatsError};

/// Slot marker inside a template.
pub const SLOT: &str = "{}";
pub const MIN_POOL: usize = 5;
/// Pools smaller than this fit, but with a warning.
pub const RECOMMENDED_POOL: usize = 20;
/// Pad positions averaged per sequence for the PAD role.
pub const PAD_WINDOW: usize = 8;

/// Twelve of the standard zero-shot classification templates.
pub const DEFAULT_TEMPLATES: [&str; 12] = [
    "a photo of a {}.",
    "a bad photo of a {}.",
    "a photo of many {}.",
    "a sculpture of a {}.",
    "a rendering of a {}.",
    "graffiti of a {}.",
    "a cropped photo of the {}.",
    "a tattoo of a {}.",
    "a bright photo of a {}.",
    "a photo of a clean {}.",
    "a close-up photo of a {}.",
    "a painting of a {}.",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnchorError {
    #[error("template {template:?} must contain exactly one {{}} slot, found {slots}")]
    BadTemplate { template: String, slots: usize },
    #[error("template list is empty")]
    NoTemplates,
    #[error("pool has {got} embeddings, need at least {needed}")]
    PoolTooSmall { needed: usize, got: usize },
    #[error("sequence {sequence} has no {role} index")]
    MissingRoleIndex { sequence: usize, role: TokenRole },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("attribute anchors coincide (angle {angle:e} rad); the pools did not separate")]
    CoincidentAnchors { angle: f64 },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenRole {
    Subject,
    Eot,
    Pad,
}

impl fmt::Display for TokenRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenRole::Subject => "subject",
            TokenRole::Eot => "eot",
            TokenRole::Pad => "pad",
        })
    }
}

impl FromStr for TokenRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "subject" => Ok(TokenRole::Subject),
            "eot" => Ok(TokenRole::Eot),
            "pad" => Ok(TokenRole::Pad),
            _ => Err(format!("unknown token role {s:?} (expected subject, eot or pad)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPool {
    pub concept: String,
    pub templates: Vec<String>,
    pub prompts: Vec<String>,
    pub role: TokenRole,
}

/// Parses a template file: one template per line, blank lines ignored.
pub fn load_templates(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .map(String::from)
        .collect()
}

pub fn build_pool<S: AsRef<str>>(concept: &str, templates: &[S], role: TokenRole) -> Result<PromptPool, AnchorError> {
    if templates.is_empty() {
        return Err(AnchorError::NoTemplates);
    }
    let mut prompts = Vec::with_capacity(templates.len());
    for t in templates {
        let t = t.as_ref();
        let slots = t.matches(SLOT).count();
        if slots != 1 {
            return Err(AnchorError::BadTemplate {
                template: t.to_string(),
                slots,
            });
        }
        prompts.push(t.replacen(SLOT, concept, 1));
    }
    Ok(PromptPool {
        concept: concept.to_string(),
        templates: templates.iter().map(|t| t.as_ref().to_string()).collect(),
        prompts,
        role,
    })
}

/// Norms of the role embeddings before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

impl NormStats {
    pub fn from_norms(norms: &[f64]) -> Self {
        let n = norms.len() as f64;
        let mean = norms.iter().sum::<f64>() / n;
        let var = norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        NormStats {
            mean,
            std: var.sqrt(),
            count: norms.len(),
        }
    }
}

/// A Kent fit to one concept at one token role. Its anchor direction is the
/// Kent mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptAnchor {
    pub concept: String,
    pub role: TokenRole,
    pub model: KentModel,
    pub source_norm_stats: NormStats,
}

impl ConceptAnchor {
    pub fn mu(&self) -> &Direction {
        &self.model.mu
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }
}

#[derive(Debug, Clone)]
pub struct AnchorOptions {
    pub min_pool: usize,
    pub kent: KentFitOptions,
}

impl Default for AnchorOptions {
    fn default() -> Self {
        AnchorOptions {
            min_pool: MIN_POOL,
            kent: KentFitOptions::default(),
        }
    }
}

/// The raw vector a sequence contributes for `role`.
pub fn role_embedding(seq: &EmbeddingSequence, role: TokenRole) -> Option<Vec<f64>> {
    match role {
        TokenRole::Subject => seq.meta.subject_index.map(|i| seq.row_f64(i)),
        TokenRole::Eot => seq.meta.eot_index.map(|i| seq.row_f64(i)),
        TokenRole::Pad => {
            let start = seq.meta.pad_start?;
            let end = (start + PAD_WINDOW).min(seq.rows());
            let mut acc = vec![0.0; seq.dim()];
            for i in start..end {
                for (a, x) in acc.iter_mut().zip(seq.row(i)) {
                    *a += *x as f64;
                }
            }
            Some(scaled(&acc, 1.0 / (end - start) as f64))
        }
    }
}

pub fn estimate_anchor(
    concept: &str,
    sequences: &[EmbeddingSequence],
    role: TokenRole,
) -> Result<ConceptAnchor, AnchorError> {
    estimate_anchor_with(concept, sequences, role, &AnchorOptions::default())
}

/// Normalizes the role embedding of every sequence and fits a Kent
/// distribution to the directions.
///
/// Directions are put in a canonical order before fitting, so the result
/// does not depend on the order of `sequences`.
pub fn estimate_anchor_with(
    concept: &str,
    sequences: &[EmbeddingSequence],
    role: TokenRole,
    opts: &AnchorOptions,
) -> Result<ConceptAnchor, AnchorError> {
    let needed = opts.min_pool.max(4);
    if sequences.len() < needed {
        return Err(AnchorError::PoolTooSmall {
            needed,
            got: sequences.len(),
        });
    }
    if sequences.len() < RECOMMENDED_POOL {
        log::warn!(
            "anchor {concept}/{role}: pool of {} is below the recommended {RECOMMENDED_POOL}",
            sequences.len()
        );
    }
    let dim = sequences[0].dim();
    let mut pairs = Vec::with_capacity(sequences.len());
    for (i, seq) in sequences.iter().enumerate() {
        if seq.dim() != dim {
            return Err(AnchorError::DimensionMismatch {
                left: dim,
                right: seq.dim(),
            });
        }
        let v = role_embedding(seq, role).ok_or(AnchorError::MissingRoleIndex { sequence: i, role })?;
        let (d, n) = normalize(&v)?;
        pairs.push((d, n));
    }
    pairs.sort_by(|a, b| a.0.lexicographic_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let norms: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let dirs: Vec<Direction> = pairs.into_iter().map(|p| p.0).collect();
    let model = fit_kent_with(&dirs, &opts.kent)?;
    Ok(ConceptAnchor {
        concept: concept.to_string(),
        role,
        model,
        source_norm_stats: NormStats::from_norms(&norms),
    })
}

/// An attribute axis `a⁻ → a⁺` for one concept.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePair {
    pub concept: String,
    pub negative: String,
    pub positive: String,
    pub anchor_neg: ConceptAnchor,
    pub anchor_pos: ConceptAnchor,
}

impl AttributePair {
    pub fn new(
        concept: &str,
        negative: &str,
        positive: &str,
        anchor_neg: ConceptAnchor,
        anchor_pos: ConceptAnchor,
    ) -> Result<Self, AnchorError> {
        if anchor_neg.dim() != anchor_pos.dim() {
            return Err(AnchorError::DimensionMismatch {
                left: anchor_neg.dim(),
                right: anchor_pos.dim(),
            });
        }
        Ok(AttributePair {
            concept: concept.to_string(),
            negative: negative.to_string(),
            positive: positive.to_string(),
            anchor_neg,
            anchor_pos,
        })
    }
}

/// Unit tangent direction at `base` pointing from `a⁻` toward `a⁺`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDirection {
    pub base: Direction,
    pub d_a: Direction,
    pub raw_delta: Vec<f64>,
    pub tangent_delta: Vec<f64>,
    pub theta_to_target: f64,
}

impl AttributeDirection {
    /// Checks that `d_a` is a unit tangent vector at `base`.
    pub fn validate(&self) -> Result<(), AnchorError> {
        let d = self.base.dim();
        for len in [self.d_a.dim(), self.raw_delta.len(), self.tangent_delta.len()] {
            if len != d {
                return Err(AnchorError::DimensionMismatch { left: d, right: len });
            }
        }
        let inner = self.base.dot(self.d_a.as_slice());
        if inner.abs() > 1e-6 {
            return Err(SphereError::TangentNotAtBase { inner }.into());
        }
        if !(self.theta_to_target.is_finite() && self.theta_to_target >= 0.0) {
            return Err(AnchorError::CoincidentAnchors {
                angle: self.theta_to_target,
            });
        }
        Ok(())
    }
}

pub fn attribute_direction(pair: &AttributePair) -> Result<AttributeDirection, AnchorError> {
    direction_between(pair.anchor_neg.mu(), pair.anchor_pos.mu())
}

/// `Δ = pos − neg`, projected onto the tangent space at `neg`.
pub fn direction_between(neg: &Direction, pos: &Direction) -> Result<AttributeDirection, AnchorError> {
    if neg.dim() != pos.dim() {
        return Err(AnchorError::DimensionMismatch {
            left: neg.dim(),
            right: pos.dim(),
        });
    }
    let theta = geodesic_distance(neg, pos);
    if theta < COINCIDENT_ANGLE {
        return Err(AnchorError::CoincidentAnchors { angle: theta });
    }
    if theta >= std::f64::consts::PI - crate::sphere::ANTIPODAL_MARGIN {
        return Err(SphereError::AntipodalPoints { angle: theta }.into());
    }
    let raw = sub(pos.as_slice(), neg.as_slice());
    let tan = tangent_project(neg, &raw);
    if norm(&tan) <= 1e-12 {
        return Err(AnchorError::CoincidentAnchors { angle: theta });
    }
    let d_a = Direction::normalized(&tan)?;
    Ok(AttributeDirection {
        base: neg.clone(),
        d_a,
        raw_delta: raw,
        tangent_delta: tan,
        theta_to_target: theta,
    })
}
