//! Special functions: log of the modified Bessel function of the first kind,
//! the vMF normalizer and the surface area of the sphere.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// `ln I_nu(x)` for `nu ≥ 0`, `x ≥ 0`.
///
/// Large orders use the Debye uniform expansion, large arguments the
/// Hankel expansion, everything else the power series summed in log space.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "log_bessel_i: nu={nu}, x={x}");
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if nu >= 25.0 {
        debye(nu, x)
    } else if x > 2.0 * nu * nu + 40.0 {
        hankel(nu, x)
    } else {
        series(nu, x)
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let lh = (0.5 * x).ln();
    let mut lt = nu * lh - ln_gamma(nu + 1.0);
    // terms rise until k ≈ x/2 then fall; accumulate relative to the running max
    let mut lmax = lt;
    let mut acc = 1.0;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        lt += 2.0 * lh - k.ln() - (k + nu).ln();
        if lt > lmax {
            acc = acc * (lmax - lt).exp() + 1.0;
            lmax = lt;
        } else {
            let r = (lt - lmax).exp();
            acc += r;
            if r < 1e-17 * acc && k > 0.5 * x {
                break;
            }
        }
        if k > 1e6 {
            break;
        }
    }
    lmax + acc.ln()
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

fn debye(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let sq = (1.0 + z * z).sqrt();
    let t = 1.0 / sq;
    // eta = sqrt(1+z^2) + ln(z / (1 + sqrt(1+z^2)))
    let eta = sq + (z / (1.0 + sq)).ln();
    let t2 = t * t;
    let u1 = t * (3.0 - 5.0 * t2) / 24.0;
    let u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
    let u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) / 414720.0;
    let t4 = t2 * t2;
    let u4 = t4 * (4465125.0 - 94121676.0 * t2 + 349922430.0 * t4 - 446185740.0 * t4 * t2 + 185910725.0 * t4 * t4)
        / 39813120.0;
    let s = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / nu.powi(3) + u4 / nu.powi(4);
    nu * eta - 0.5 * (2.0 * PI * nu).ln() + 0.5 * t.ln() + s.ln()
}

/// `ln |S^{D-1}| = ln(2 π^{D/2} / Γ(D/2))`.
pub fn log_sphere_area(dim: usize) -> f64 {
    let h = 0.5 * dim as f64;
    2f64.ln() + h * PI.ln() - ln_gamma(h)
}

/// Log of `∫_{S^{D-1}} exp(κ μᵀx) dx`, the inverse vMF normalizer.
pub fn vmf_log_partition(dim: usize, kappa: f64) -> f64 {
    let d = dim as f64;
    let nu = 0.5 * d - 1.0;
    if kappa < 1e-12 {
        return log_sphere_area(dim);
    }
    0.5 * d * (2.0 * PI).ln() + log_bessel_i(nu, kappa) - nu * kappa.ln()
}

/// `ln C_D(κ)`, the vMF log normalizing constant.
pub fn vmf_log_normalizer(dim: usize, kappa: f64) -> f64 {
    -vmf_log_partition(dim, kappa)
}

/// Mean resultant length of vMF(κ) in `D` dimensions, `I_{D/2}(κ)/I_{D/2-1}(κ)`.
pub fn vmf_mean_resultant(dim: usize, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let nu = 0.5 * dim as f64 - 1.0;
    if kappa < 1e-6 {
        return kappa / dim as f64;
    }
    (log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa)).exp()
}

/// Inverts [`vmf_mean_resultant`]: the κ whose mean resultant is `rbar`.
/// Newton iterations from `start`, safeguarded by bisection.
pub fn vmf_kappa_for_resultant(dim: usize, rbar: f64, start: f64, kappa_max: f64) -> f64 {
    if rbar <= 0.0 {
        return 0.0;
    }
    let d = dim as f64;
    let (mut lo, mut hi) = (0.0, kappa_max);
    if vmf_mean_resultant(dim, hi) <= rbar {
        return hi;
    }
    let mut k = start.clamp(1e-8, kappa_max);
    for _ in 0..100 {
        let a = vmf_mean_resultant(dim, k);
        let f = a - rbar;
        if f > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
        if f.abs() < 1e-14 {
            break;
        }
        let da = 1.0 - a * a - (d - 1.0) * a / k;
        let mut next = k - f / da;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= 1e-13 * k {
            k = next;
            break;
        }
        k = next;
    }
    k
}
