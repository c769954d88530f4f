//! Subject replacement and attribute traversal on token sequences.
//!
//! Both edits work per row: normalize, move the direction on the sphere,
//! scale back to the row's original norm. Rows whose effective strength is
//! zero are copied bit for bit.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::anchors::{AttributeDirection, ConceptAnchor, TokenRole};
use crate::io::{EmbeddingSequence, IoError};
use crate::linalg::{axpy, dot, norm, scaled, stable_angle};
use crate::sphere::{exp_map_coords, normalize, slerp, tangent_project, Direction, SphereError};

/// Tangent transports shorter than this leave the row untouched.
pub const MIN_TRANSPORT_NORM: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EditError {
    #[error("invalid edit plan: {field} {reason}")]
    InvalidPlan { field: &'static str, reason: String },
    #[error("sequence has no subject_index")]
    MissingSubjectIndex,
    #[error("plan edits {role} rows but no {role} anchors were given")]
    MissingAnchor { role: TokenRole },
    #[error("dimension mismatch: {what} has {found}, sequence has {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: SphereError,
    },
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Parameters shared by both edits. Every field has a default so a partial
/// document deserializes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EditPlan {
    /// Global strength; 0 is the identity, 1 a full traversal.
    pub lambda: f64,
    /// Angular decay scale of the contamination weights, radians.
    pub tau: f64,
    /// Explicit `w(p)` overrides; positions not listed use the computed weight.
    pub per_token_weight: BTreeMap<usize, f64>,
    /// Fraction of denoising steps to run before injecting.
    pub inject_fraction: f64,
    pub edit_eot: bool,
    pub edit_pad: bool,
    pub propagate_downstream: bool,
    pub propagate_upstream: bool,
    /// Replaces `λ·w(eot)` when set.
    pub eot_strength: Option<f64>,
    /// Replaces `λ·w(p)` on pad rows when set.
    pub pad_strength: Option<f64>,
}

impl Default for EditPlan {
    fn default() -> Self {
        EditPlan {
            lambda: 1.0,
            tau: 0.5,
            per_token_weight: BTreeMap::new(),
            inject_fraction: 0.10,
            edit_eot: true,
            edit_pad: true,
            propagate_downstream: true,
            propagate_upstream: false,
            eot_strength: None,
            pad_strength: None,
        }
    }
}

impl EditPlan {
    /// Only the subject row is edited.
    pub fn local(lambda: f64) -> Self {
        EditPlan {
            lambda,
            edit_eot: false,
            edit_pad: false,
            propagate_downstream: false,
            propagate_upstream: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EditError> {
        let bad = |field, reason: String| Err(EditError::InvalidPlan { field, reason });
        if !self.lambda.is_finite() {
            return bad("lambda", format!("must be finite, got {}", self.lambda));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad("tau", format!("must be positive, got {}", self.tau));
        }
        if !(0.0..=0.5).contains(&self.inject_fraction) {
            return bad(
                "inject_fraction",
                format!("must lie in [0, 0.5], got {}", self.inject_fraction),
            );
        }
        for (&p, &w) in &self.per_token_weight {
            if !(0.0..=1.0).contains(&w) {
                return bad("per_token_weight", format!("w({p}) = {w} is outside [0, 1]"));
            }
        }
        for (field, s) in [("eot_strength", self.eot_strength), ("pad_strength", self.pad_strength)] {
            if s.is_some_and(|s| !s.is_finite()) {
                return bad(field, "must be finite".into());
            }
        }
        Ok(())
    }
}

/// `h̃ = α μ_s + h_⊥` for one token.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDecomposition {
    pub alpha: f64,
    pub aligned: Vec<f64>,
    pub residual: Vec<f64>,
    pub original_norm: f64,
}

pub fn decompose_subject(h: &[f64], mu_s: &Direction) -> Result<SubjectDecomposition, SphereError> {
    if h.len() != mu_s.dim() {
        return Err(SphereError::DimensionMismatch {
            left: h.len(),
            right: mu_s.dim(),
        });
    }
    let (unit, n) = normalize(h)?;
    let alpha = mu_s.dot(unit.as_slice());
    let aligned = scaled(mu_s.as_slice(), alpha);
    let mut residual = unit.into_inner();
    axpy(-alpha, mu_s.as_slice(), &mut residual);
    Ok(SubjectDecomposition {
        alpha,
        aligned,
        residual,
        original_norm: n,
    })
}

/// Rotates the `μ_s`-aligned part of `h` to `Geo(μ_s, μ_t; λ)`, keeps the
/// residual, and restores the original norm.
pub fn edit_subject_token(h: &[f64], mu_s: &Direction, mu_t: &Direction, lambda: f64) -> Result<Vec<f64>, SphereError> {
    let dec = decompose_subject(h, mu_s)?;
    let moved = slerp(mu_s, mu_t, lambda)?;
    let mut out = dec.residual;
    axpy(dec.alpha, moved.as_slice(), &mut out);
    let (unit, _) = normalize(&out)?;
    Ok(scaled(unit.as_slice(), dec.original_norm))
}

/// Walks `h` along the attribute direction transported to its own tangent
/// space. Returns `None` when the transport degenerates.
pub fn edit_attribute_token(h: &[f64], d_a: &Direction, lambda: f64) -> Result<Option<Vec<f64>>, SphereError> {
    if h.len() != d_a.dim() {
        return Err(SphereError::DimensionMismatch {
            left: h.len(),
            right: d_a.dim(),
        });
    }
    let (unit, n) = normalize(h)?;
    let v = tangent_project(&unit, d_a.as_slice());
    let vn = norm(&v);
    if vn < MIN_TRANSPORT_NORM {
        return Ok(None);
    }
    let out = exp_map_coords(&unit, &scaled(&v, lambda / vn))?;
    Ok(Some(scaled(out.as_slice(), n)))
}

/// `w(p) = exp(−θ_p/τ)` where `θ_p` is the angle between row `p` and the
/// subject row. The subject gets 1, BOS and zero rows get 0.
pub fn contamination_weights(seq: &EmbeddingSequence, tau: f64) -> Result<Vec<f64>, EditError> {
    let ps = seq.meta.subject_index.ok_or(EditError::MissingSubjectIndex)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(EditError::InvalidPlan {
            field: "tau",
            reason: format!("must be positive, got {tau}"),
        });
    }
    let hs = seq.row_f64(ps);
    Ok((0..seq.rows())
        .map(|p| {
            if p == ps {
                1.0
            } else if seq.meta.bos_index == Some(p) {
                0.0
            } else {
                let h = seq.row_f64(p);
                if norm(&h) == 0.0 {
                    0.0
                } else {
                    (-stable_angle(&h, &hs) / tau).exp()
                }
            }
        })
        .collect())
}

/// Delayed-injection start step, `ceil(fraction · steps)`.
pub fn injection_schedule(plan: &EditPlan, total_steps: usize) -> Result<usize, EditError> {
    if total_steps == 0 {
        return Err(EditError::InvalidPlan {
            field: "total_steps",
            reason: "must be at least 1".into(),
        });
    }
    plan.validate()?;
    // products like 0.1 · 30 land a few ulps above an integer
    let x = plan.inject_fraction * total_steps as f64;
    Ok(((x - 1e-9).ceil().max(0.0)) as usize)
}

/// Source and target directions for one token role.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorPair {
    pub source: Direction,
    pub target: Direction,
}

impl AnchorPair {
    pub fn new(source: Direction, target: Direction) -> Result<Self, EditError> {
        if source.dim() != target.dim() {
            return Err(EditError::DimensionMismatch {
                what: "target anchor".into(),
                expected: source.dim(),
                found: target.dim(),
            });
        }
        Ok(AnchorPair { source, target })
    }

    pub fn from_anchors(source: &ConceptAnchor, target: &ConceptAnchor) -> Result<Self, EditError> {
        if source.role != target.role {
            log::warn!(
                "pairing a {} source anchor with a {} target anchor",
                source.role,
                target.role
            );
        }
        Self::new(source.mu().clone(), target.mu().clone())
    }
}

/// Anchors for a subject edit. EOT and PAD pairs are needed only when the
/// plan edits those rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectAnchors {
    pub subject: AnchorPair,
    pub eot: Option<AnchorPair>,
    pub pad: Option<AnchorPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditResult {
    pub edited: EmbeddingSequence,
    /// Angle each row moved, radians; 0 for untouched rows.
    pub per_token_angle_moved: Vec<f64>,
    pub plan_used: EditPlan,
}

/// Column names of [`EditResult::angle_records`].
pub const ANGLE_HEADER: [&str; 3] = ["position", "token", "angle"];

impl EditResult {
    /// Rows of the per-token angle table: position, token, angle.
    pub fn angle_records(&self) -> Vec<[String; 3]> {
        self.per_token_angle_moved
            .iter()
            .enumerate()
            .map(|(p, a)| [p.to_string(), self.edited.meta.tokens[p].clone(), a.to_string()])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Subject,
    Downstream,
    Upstream,
    Eot,
    Pad,
}

/// Which rows a plan touches, with their role and strength `λ_p`.
fn schedule(seq: &EmbeddingSequence, plan: &EditPlan) -> Result<Vec<(usize, Slot, f64)>, EditError> {
    plan.validate()?;
    let ps = seq.meta.subject_index.ok_or(EditError::MissingSubjectIndex)?;
    let t = seq.rows();
    let computed = contamination_weights(seq, plan.tau)?;
    let w = |p: usize| -> f64 {
        if p == ps {
            1.0
        } else {
            plan.per_token_weight.get(&p).copied().unwrap_or(computed[p])
        }
    };
    let m = &seq.meta;
    let body_end = m.eot_index.or(m.pad_start).unwrap_or(t);
    let mut out = vec![(ps, Slot::Subject, plan.lambda)];
    if plan.propagate_upstream {
        let start = m.bos_index.map_or(0, |b| b + 1);
        for p in start..ps {
            out.push((p, Slot::Upstream, plan.lambda * w(p)));
        }
    }
    if plan.propagate_downstream {
        for p in ps + 1..body_end {
            out.push((p, Slot::Downstream, plan.lambda * w(p)));
        }
    }
    if plan.edit_eot {
        if let Some(e) = m.eot_index {
            out.push((e, Slot::Eot, plan.eot_strength.unwrap_or(plan.lambda * w(e))));
        }
    }
    if plan.edit_pad {
        if let Some(s) = m.pad_start {
            for p in s..t {
                out.push((p, Slot::Pad, plan.pad_strength.unwrap_or(plan.lambda * w(p))));
            }
        }
    }
    // BOS is never edited
    out.retain(|&(p, _, _)| m.bos_index != Some(p));
    Ok(out)
}

fn apply<F>(seq: &EmbeddingSequence, plan: &EditPlan, mut edit_row: F) -> Result<EditResult, EditError>
where
    F: FnMut(&[f64], Slot, f64) -> Result<Option<Vec<f64>>, SphereError>,
{
    let rows = schedule(seq, plan)?;
    let dim = seq.dim();
    let mut data = seq.data().to_vec();
    let mut angles = vec![0.0; seq.rows()];
    for (p, slot, lp) in rows {
        if lp == 0.0 {
            continue;
        }
        let h = seq.row_f64(p);
        let Some(new) = edit_row(&h, slot, lp).map_err(|source| EditError::Row { row: p, source })? else {
            continue;
        };
        let dst = &mut data[p * dim..(p + 1) * dim];
        for (d, x) in dst.iter_mut().zip(&new) {
            *d = *x as f32;
        }
        let written: Vec<f64> = dst.iter().map(|&x| x as f64).collect();
        angles[p] = stable_angle(&h, &written);
    }
    Ok(EditResult {
        edited: seq.with_data(data)?,
        per_token_angle_moved: angles,
        plan_used: plan.clone(),
    })
}

fn check_dim(seq: &EmbeddingSequence, what: &str, d: usize) -> Result<(), EditError> {
    if d != seq.dim() {
        return Err(EditError::DimensionMismatch {
            what: what.into(),
            expected: seq.dim(),
            found: d,
        });
    }
    Ok(())
}

/// Subject replacement: the subject row moves at strength `λ`, downstream and
/// upstream rows at `λ·w(p)` with the subject anchors, EOT and PAD rows with
/// their own anchors.
pub fn edit_subject_sequence(
    seq: &EmbeddingSequence,
    anchors: &SubjectAnchors,
    plan: &EditPlan,
) -> Result<EditResult, EditError> {
    check_dim(seq, "subject anchors", anchors.subject.source.dim())?;
    for (role, pair, wanted) in [
        (
            TokenRole::Eot,
            &anchors.eot,
            plan.edit_eot && seq.meta.eot_index.is_some(),
        ),
        (
            TokenRole::Pad,
            &anchors.pad,
            plan.edit_pad && seq.meta.pad_start.is_some(),
        ),
    ] {
        match pair {
            Some(p) => check_dim(seq, &format!("{role} anchors"), p.source.dim())?,
            None if wanted => return Err(EditError::MissingAnchor { role }),
            None => {}
        }
    }
    apply(seq, plan, |h, slot, lp| {
        let pair = match slot {
            Slot::Eot => anchors.eot.as_ref().expect("checked above"),
            Slot::Pad => anchors.pad.as_ref().expect("checked above"),
            _ => &anchors.subject,
        };
        edit_subject_token(h, &pair.source, &pair.target, lp).map(Some)
    })
}

/// Attribute traversal: each selected row walks `λ_p` radians along `d_a`
/// transported into its tangent space.
pub fn edit_attribute_sequence(
    seq: &EmbeddingSequence,
    dir: &AttributeDirection,
    plan: &EditPlan,
) -> Result<EditResult, EditError> {
    check_dim(seq, "attribute direction", dir.d_a.dim())?;
    apply(seq, plan, |h, _, lp| edit_attribute_token(h, &dir.d_a, lp))
}

/// Projection of `v` onto the orthogonal complement of `span{a, b}`.
#[doc(hidden)]
pub fn reject_plane(v: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut b2 = b.to_vec();
    axpy(-dot(&b2, a), a, &mut b2);
    let nb = norm(&b2);
    let mut out = v.to_vec();
    axpy(-dot(&out, a), a, &mut out);
    if nb > 1e-12 {
        let b2 = scaled(&b2, 1.0 / nb);
        axpy(-dot(&out, &b2), &b2, &mut out);
    }
    out
}
