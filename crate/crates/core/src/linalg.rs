//! Small dense-vector helpers shared by the geometry and statistics code.
//!
//! Everything here works on `f64` slices. Callers are expected to pass
//! slices of equal length; mismatches are programmer errors and panic in
//! debug builds.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Angle between two vectors, accurate near 0 and near pi.
///
/// Uses `2·atan2(|â − b̂|, |â + b̂|)` instead of `acos` of the cosine, which
/// loses about half the significant digits for nearly parallel inputs.
/// Returns 0 if either vector is zero.
pub fn stable_angle(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Removes the components along each of `basis` (assumed orthonormal) from `v`.
pub fn orthogonalize_against(v: &mut [f64], basis: &[&[f64]]) {
    for b in basis {
        let c = dot(v, b);
        axpy(-c, b, v);
    }
}

/// Returns a unit vector orthogonal to every vector in `basis` (assumed
/// orthonormal, fewer than `dim` of them), trying coordinate axes in order.
pub fn orthonormal_completion(basis: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for axis in 0..dim {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        // two passes keep the result orthogonal to working precision
        orthogonalize_against(&mut e, basis);
        orthogonalize_against(&mut e, basis);
        let n = norm(&e);
        if n > 0.5 {
            return scaled(&e, 1.0 / n);
        }
        if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
            best = Some((n, e));
        }
    }
    let (n, e) = best.expect("dimension must be positive");
    assert!(n > 1e-8, "basis spans the whole space");
    scaled(&e, 1.0 / n)
}

/// Numerically stable `log(sum(exp(xs)))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
