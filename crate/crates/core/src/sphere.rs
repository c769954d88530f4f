//! Geometry of the unit hypersphere `S^{D-1}`.
//!
//! Points on the sphere are [`Direction`]s; vectors in the tangent space at a
//! point are [`TangentVector`]s. The operations here (geodesic distance,
//! slerp, logarithmic and exponential maps, tangent projection) are the only
//! primitives the edit algorithms need. All arithmetic is `f64`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{axpy, dot, norm, scaled};

/// Default threshold below which a vector is treated as zero.
pub const DEFAULT_EPS: f64 = 1e-8;
/// Geodesics are not unique once the angle is within this margin of pi.
pub const ANTIPODAL_MARGIN: f64 = 1e-6;
/// Angles below this are treated as coincident points.
pub const COINCIDENT_ANGLE: f64 = 1e-7;
/// Tolerance on `|‖u‖ − 1|` accepted by [`Direction::from_unit`].
pub const UNIT_TOLERANCE: f64 = 1e-6;
/// Exponential map rejects tangent vectors whose inner product with the base
/// point exceeds this.
pub const TANGENT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("vector norm {norm:e} is at or below threshold {eps:e}")]
    NearZeroVector { norm: f64, eps: f64 },
    #[error("points are antipodal (angle {angle}); the geodesic is not unique")]
    AntipodalPoints { angle: f64 },
    #[error("tangent vector is not tangent at the base point (inner product {inner:e})")]
    TangentNotAtBase { inner: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("a direction needs at least 2 dimensions, got {0}")]
    TooFewDimensions(usize),
    #[error("vector has norm {0}, expected 1")]
    NotUnit(f64),
    #[error("vector contains non-finite values")]
    NonFinite,
}

/// A unit vector in `R^D`, `D ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Wraps an already-normalized vector, checking the norm.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self, SphereError> {
        if coords.len() < 2 {
            return Err(SphereError::TooFewDimensions(coords.len()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(SphereError::NonFinite);
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(SphereError::NotUnit(n));
        }
        Ok(Direction(coords))
    }

    /// Normalizes `coords`; fails for (near) zero vectors.
    pub fn normalized(coords: &[f64]) -> Result<Self, SphereError> {
        normalize(coords).map(|(d, _)| d)
    }

    /// The coordinate axis `e_axis` in `dim` dimensions.
    pub fn basis(dim: usize, axis: usize) -> Self {
        assert!(dim >= 2 && axis < dim);
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Direction(v)
    }

    pub(crate) fn from_unit_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() < 1e-6);
        Direction(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn negated(&self) -> Self {
        Direction(self.0.iter().map(|x| -x).collect())
    }

    /// Total lexicographic order on coordinates. Fits sort their input with
    /// it so that results do not depend on sample order.
    pub fn lexicographic_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.0.len().cmp(&other.0.len()))
    }
}

impl AsRef<[f64]> for Direction {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = SphereError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Direction::from_unit(v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// A vector in the tangent space `T_u S^{D-1}` at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    base: Direction,
    coords: Vec<f64>,
}

impl TangentVector {
    /// Checks that `coords` is orthogonal to `base` within `1e-6`.
    pub fn new(base: Direction, coords: Vec<f64>) -> Result<Self, SphereError> {
        check_dims(base.dim(), coords.len())?;
        let inner = base.dot(&coords);
        if inner.abs() > UNIT_TOLERANCE {
            return Err(SphereError::TangentNotAtBase { inner });
        }
        Ok(TangentVector { base, coords })
    }

    pub fn zero(base: Direction) -> Self {
        let coords = vec![0.0; base.dim()];
        TangentVector { base, coords }
    }

    pub fn base(&self) -> &Direction {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVector {
            base: self.base.clone(),
            coords: scaled(&self.coords, s),
        }
    }
}

fn check_dims(left: usize, right: usize) -> Result<(), SphereError> {
    if left != right {
        return Err(SphereError::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Splits `v` into its unit direction and Euclidean norm, `v = norm · dir`.
pub fn normalize(v: &[f64]) -> Result<(Direction, f64), SphereError> {
    normalize_with_eps(v, DEFAULT_EPS)
}

pub fn normalize_with_eps(v: &[f64], eps: f64) -> Result<(Direction, f64), SphereError> {
    if v.len() < 2 {
        return Err(SphereError::TooFewDimensions(v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SphereError::NonFinite);
    }
    let n = norm(v);
    if n <= eps {
        return Err(SphereError::NearZeroVector { norm: n, eps });
    }
    Ok((Direction(scaled(v, 1.0 / n)), n))
}

/// Great-circle distance `arccos(u·v)` in `[0, π]`.
///
/// # Panics
/// If the dimensions differ.
pub fn geodesic_distance(u: &Direction, v: &Direction) -> f64 {
    assert_eq!(u.dim(), v.dim(), "geodesic_distance: dimension mismatch");
    u.dot(v.as_slice()).clamp(-1.0, 1.0).acos()
}

/// Spherical linear interpolation along the great circle from `u` (λ = 0) to
/// `v` (λ = 1). λ outside `[0, 1]` extrapolates along the same circle.
///
/// Nearly coincident inputs return `u`.
pub fn slerp(u: &Direction, v: &Direction, lambda: f64) -> Result<Direction, SphereError> {
    check_dims(u.dim(), v.dim())?;
    let theta = geodesic_distance(u, v);
    if theta >= std::f64::consts::PI - ANTIPODAL_MARGIN {
        return Err(SphereError::AntipodalPoints { angle: theta });
    }
    if theta < COINCIDENT_ANGLE {
        return Ok(u.clone());
    }
    let s = theta.sin();
    let a = ((1.0 - lambda) * theta).sin() / s;
    let b = (lambda * theta).sin() / s;
    let mut out = scaled(u.as_slice(), a);
    axpy(b, v.as_slice(), &mut out);
    let n = norm(&out);
    Ok(Direction(scaled(&out, 1.0 / n)))
}

/// Logarithmic map: the tangent vector at `u` pointing toward `v` whose length
/// is the geodesic distance between them.
pub fn log_map(u: &Direction, v: &Direction) -> Result<TangentVector, SphereError> {
    check_dims(u.dim(), v.dim())?;
    let c = u.dot(v.as_slice());
    // w = v - cos θ u has norm sin θ; atan2 keeps θ accurate at both ends.
    let mut w = v.as_slice().to_vec();
    axpy(-c, u.as_slice(), &mut w);
    let s = norm(&w);
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - ANTIPODAL_MARGIN {
        return Err(SphereError::AntipodalPoints { angle: theta });
    }
    if s == 0.0 {
        return Ok(TangentVector::zero(u.clone()));
    }
    let coords = scaled(&w, theta / s);
    Ok(TangentVector {
        base: u.clone(),
        coords,
    })
}

/// Exponential map: walks from `u` along the tangent vector `xi` for a
/// distance of `‖xi‖`.
pub fn exp_map(u: &Direction, xi: &TangentVector) -> Result<Direction, SphereError> {
    exp_map_coords(u, xi.coords())
}

pub(crate) fn exp_map_coords(u: &Direction, xi: &[f64]) -> Result<Direction, SphereError> {
    check_dims(u.dim(), xi.len())?;
    let inner = u.dot(xi);
    if inner.abs() > TANGENT_TOLERANCE {
        return Err(SphereError::TangentNotAtBase { inner });
    }
    let n = norm(xi);
    if n < 1e-9 {
        return Ok(u.clone());
    }
    let mut out = scaled(u.as_slice(), n.cos());
    axpy(n.sin() / n, xi, &mut out);
    let m = norm(&out);
    Ok(Direction(scaled(&out, 1.0 / m)))
}

/// Removes the radial component of `delta` at `u`: `delta − (delta·u) u`.
pub fn tangent_project(u: &Direction, delta: &[f64]) -> Vec<f64> {
    assert_eq!(u.dim(), delta.len(), "tangent_project: dimension mismatch");
    let mut out = delta.to_vec();
    axpy(-u.dot(delta), u.as_slice(), &mut out);
    out
}
