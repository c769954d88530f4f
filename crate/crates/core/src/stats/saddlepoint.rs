//! Saddle-point approximation to the Fisher–Bingham normalizing constant
//!
//! ```text
//! Z(Λ, γ) = ∫_{S^{p-1}} exp(−xᵀΛx + γᵀx) dx,   Λ = diag(λ_i)
//! ```
//!
//! following Kume and Wood (2005), with the second-order correction term.
//! Eigenvalues that share a value and a zero linear term are grouped so a
//! Kent density in any dimension costs a handful of operations.

use std::f64::consts::PI;

/// One block of coordinates with equal `λ` and total squared linear term.
#[derive(Debug, Clone, Copy)]
pub struct Group {
    pub lambda: f64,
    pub gamma_sq: f64,
    pub mult: f64,
}

impl Group {
    pub fn new(lambda: f64, gamma_sq: f64, mult: usize) -> Self {
        Group {
            lambda,
            gamma_sq,
            mult: mult as f64,
        }
    }
}

/// `ln Z` by the second-order saddle-point approximation.
pub fn log_normalizer(groups: &[Group]) -> f64 {
    let p: f64 = groups.iter().map(|g| g.mult).sum();
    let m = groups
        .iter()
        .filter(|g| g.mult > 0.0)
        .map(|g| g.lambda)
        .fold(f64::INFINITY, f64::min);

    // K'(t) = Σ mult·[½/e + γ²/(4e²)] with e = λ − t = λ − m + d. Decreasing and
    // convex in d, so Newton from a point where K' ≥ 1 climbs monotonically.
    let kprime = |d: f64| -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for g in groups {
            let e = g.lambda - m + d;
            f += g.mult * (0.5 / e + g.gamma_sq / (4.0 * e * e));
            df -= g.mult * (0.5 / (e * e) + g.gamma_sq / (2.0 * e * e * e));
        }
        (f - 1.0, df)
    };
    let mut d = 0.5f64;
    for g in groups {
        if g.gamma_sq > 0.0 {
            d = d.max(0.5 * g.gamma_sq.sqrt() - (g.lambda - m));
        }
    }
    for _ in 0..200 {
        let (f, df) = kprime(d);
        if f <= 0.0 {
            break;
        }
        let step = -f / df;
        d += step;
        if step <= 1e-15 * d {
            break;
        }
    }

    let t = m - d;
    let (mut k2, mut k3, mut k4, mut s) = (0.0, 0.0, 0.0, 0.0);
    for g in groups {
        let e = g.lambda - t;
        let (e2, e3) = (e * e, e * e * e);
        k2 += g.mult * (0.5 / e2 + g.gamma_sq / (2.0 * e3));
        k3 += g.mult * (1.0 / e3 + 1.5 * g.gamma_sq / (e2 * e2));
        k4 += g.mult * (3.0 / (e2 * e2) + 6.0 * g.gamma_sq / (e2 * e3));
        s += g.mult * (-0.5 * e.ln() + g.gamma_sq / (4.0 * e));
    }
    let correction = k4 / (8.0 * k2 * k2) - 5.0 * k3 * k3 / (24.0 * k2 * k2 * k2);
    2f64.ln() + 0.5 * p * PI.ln() - 0.5 * (2.0 * PI * k2).ln() + s - t + correction
}

/// Groups for a Kent density `exp(κ μᵀx + β[(γ₁ᵀx)² − (γ₂ᵀx)²])` in `dim ≥ 3`.
pub fn kent_groups(dim: usize, kappa: f64, beta: f64) -> Vec<Group> {
    vec![
        Group::new(0.0, kappa * kappa, 1),
        Group::new(-beta, 0.0, 1),
        Group::new(beta, 0.0, 1),
        Group::new(0.0, 0.0, dim - 3),
    ]
}
