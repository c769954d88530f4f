//! Principal axes of the tangent scatter `S = (1/N) Σ P x xᵀ P`, `P = I − μμᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg::{dot, norm, orthogonalize_against, orthonormal_completion, scaled};

pub(crate) struct TangentAxes {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    /// The two variances coincide, so the axes are arbitrary.
    pub degenerate: bool,
}

/// Picks the major axis (largest tangent variance) and the minor axis.
///
/// With at least `D` samples the minor axis is the smallest-variance
/// direction of the tangent space. Otherwise the scatter is rank deficient
/// and the second-largest direction is used, found through the `N×N` Gram
/// matrix without forming the `D×D` scatter.
pub(crate) fn tangent_axes(data: &[f64], dim: usize, mu: &[f64]) -> TangentAxes {
    let n = data.len() / dim;
    let mut proj = Vec::with_capacity(data.len());
    for row in data.chunks_exact(dim) {
        let c = dot(row, mu);
        proj.extend(row.iter().zip(mu).map(|(x, m)| x - c * m));
    }
    let y = DMatrix::from_row_slice(n, dim, &proj);

    let (g1, l1, g2, l2) = if n >= dim {
        let s = y.tr_mul(&y) / n as f64;
        let eig = SymmetricEigen::new(s);
        let mut idx: Vec<usize> = (0..dim).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        // the μ direction sits in the null space of S; drop the eigenvector
        // most aligned with it
        let radial = *idx
            .iter()
            .max_by(|&&a, &&b| {
                let ca = dot(eig.eigenvectors.column(a).as_slice(), mu).abs();
                let cb = dot(eig.eigenvectors.column(b).as_slice(), mu).abs();
                ca.total_cmp(&cb)
            })
            .expect("dim > 0");
        idx.retain(|&i| i != radial);
        let top = idx[0];
        let bottom = *idx.last().expect("dim >= 3");
        (
            eig.eigenvectors.column(top).as_slice().to_vec(),
            eig.eigenvalues[top],
            eig.eigenvectors.column(bottom).as_slice().to_vec(),
            eig.eigenvalues[bottom],
        )
    } else {
        let g = &y * y.transpose() / n as f64;
        let eig = SymmetricEigen::new(g);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let lift = |i: usize| -> Vec<f64> {
            let u = eig.eigenvectors.column(i);
            let v = y.tr_mul(&u);
            v.as_slice().to_vec()
        };
        let l2 = if n > 1 { eig.eigenvalues[idx[1]].max(0.0) } else { 0.0 };
        let v2 = if n > 1 { lift(idx[1]) } else { vec![0.0; dim] };
        (lift(idx[0]), eig.eigenvalues[idx[0]].max(0.0), v2, l2)
    };

    let lambda1 = l1.max(0.0);
    let lambda2 = l2.max(0.0);
    let degenerate = (lambda1 - lambda2).abs() <= 1e-12;

    // re-orthonormalize against μ and each other; fall back to coordinate
    // completion when an eigenvector is (numerically) zero
    let mut a = g1;
    orthogonalize_against(&mut a, &[mu]);
    let a = if norm(&a) > 1e-6 {
        scaled(&a, 1.0 / norm(&a))
    } else {
        orthonormal_completion(&[mu], dim)
    };
    let mut b = g2;
    orthogonalize_against(&mut b, &[mu, &a]);
    orthogonalize_against(&mut b, &[mu, &a]);
    let b = if norm(&b) > 1e-6 {
        scaled(&b, 1.0 / norm(&b))
    } else {
        orthonormal_completion(&[mu, &a], dim)
    };
    TangentAxes {
        gamma1: a,
        gamma2: b,
        degenerate,
    }
}
