//! Special functions used by the kernels: Gamma, Bessel `J_ν` of real
//! order, cardinal central B-splines and their Fourier transforms.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "gamma",
            format!("argument must be positive and finite, got {x}"),
        ));
    }
    Ok(gamma_positive(x))
}

pub(crate) fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        return gamma_positive(x + 1.0) / x;
    }
    let z = x - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * a
}

/// Bessel function of the first kind `J_ν(x)` for ν ≥ 0, x ≥ 0.
///
/// Three regimes:
/// * x ≤ 4: ascending series, summed until term/sum < 1e−17;
/// * x ≥ max(25, ν²): Hankel asymptotic expansion;
/// * otherwise: Miller backward recurrence normalised by
///   Σ_k (ν₀ + 2k) Γ(ν₀ + k)/k! · J_{ν₀+2k}(x) = (x/2)^{ν₀}, ν₀ = frac(ν).
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::domain(
            "bessel_j",
            format!("order must be non-negative, got {nu}"),
        ));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "bessel_j",
            format!("argument must be non-negative, got {x}"),
        ));
    }
    Ok(bessel_j_unchecked(nu, x))
}

pub(crate) fn bessel_j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_MAX_X {
        bessel_series(nu, x)
    } else if x >= asymptotic_threshold(nu) {
        bessel_asymptotic(nu, x)
    } else {
        bessel_miller(nu, x)
    }
}

const SERIES_MAX_X: f64 = 4.0;

fn asymptotic_threshold(nu: f64) -> f64 {
    (nu * nu).max(25.0)
}

/// Σ_m (−1)^m (x/2)^{2m+ν} / (m! Γ(m+ν+1)).
pub(crate) fn bessel_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * (m + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() || m > 500.0 {
            break;
        }
    }
    // (x/2)^ν / Γ(ν+1), done in logs for large ν
    let prefactor = if nu == 0.0 {
        1.0
    } else {
        (nu * half.ln() - ln_gamma_positive(nu + 1.0)).exp()
    };
    prefactor * sum
}

fn ln_gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_positive(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Hankel expansion: J_ν(x) = √(2/(πx)) (P cos χ − Q sin χ), χ = x − (ν/2 + 1/4)π.
fn bessel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        let mag = term.abs();
        if mag == 0.0 {
            break;
        }
        if mag > last {
            // asymptotic series started to diverge
            break;
        }
        last = mag;
        // a_k / x^k contributes to P (even k) or Q (odd k) with sign (−1)^{⌊k/2⌋}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if mag < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn bessel_miller(nu: f64, x: f64) -> f64 {
    let n = nu.floor() as usize;
    let nu0 = nu - n as f64;
    let top = n.max(x.ceil() as usize) + 30 + (2.0 * x.cbrt()).ceil() as usize * 4;
    // start with an even index so the normalisation picks up every even order
    let top = if top.is_multiple_of(2) { top } else { top + 1 };

    // g_k = Γ(ν₀ + k)/k! for the normalisation weights, built upward
    let half_top = top / 2;
    let mut weights = Vec::with_capacity(half_top + 1);
    let gamma_nu0_plus_1 = gamma_positive(nu0 + 1.0);
    weights.push(gamma_nu0_plus_1);
    let mut g = gamma_nu0_plus_1; // Γ(ν₀+1)/1!
    for k in 1..=half_top {
        if k > 1 {
            let kf = k as f64;
            g *= (nu0 + kf - 1.0) / kf;
        }
        weights.push((nu0 + 2.0 * k as f64) * g);
    }

    let mut j_next = 0.0; // J_{ν₀+top+1}
    let mut j_cur = 1e-30; // J_{ν₀+top}
    let mut result = 0.0;
    let mut norm = 0.0;
    if top == n {
        result = j_cur;
    }
    if top % 2 == 0 {
        norm += weights[top / 2] * j_cur;
    }
    let mut m = top;
    while m > 0 {
        let order = nu0 + m as f64;
        let j_prev = 2.0 * order / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        m -= 1;
        if m == n {
            result = j_cur;
        }
        if m % 2 == 0 {
            norm += weights[m / 2] * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
    }
    result * (0.5 * x).powf(nu0) / norm
}

/// Normalised sinc: sin(πz)/(πz), 1 at z = 0.
pub fn sinc(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        let a = PI * z;
        a.sin() / a
    }
}

/// Degree of a cardinal central B-spline `β_d`; support is [−(d+1)/2, (d+1)/2].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BSplineDegree(pub u32);

impl BSplineDegree {
    pub fn half_support(self) -> f64 {
        0.5 * (self.0 as f64 + 1.0)
    }
}

/// β_d(x) = (1/d!) Σ_{j=0}^{d+1} (−1)^j C(d+1, j) (x + (d+1)/2 − j)_+^d.
///
/// With (t)_+^0 = 1 for t ≥ 0, β₀ equals 1 on [−1/2, 1/2) and 0 elsewhere,
/// so integer translates of every β_d sum to exactly one.
pub fn central_bspline(d: BSplineDegree, x: f64) -> f64 {
    let deg = d.0 as i32;
    let h = d.half_support();
    if x < -h || x >= h {
        return 0.0;
    }
    if deg == 0 {
        return 1.0;
    }
    // the left half needs fewer, smaller terms
    let shifted = h - x.abs();
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 1..=deg {
        fact *= i as f64;
    }
    for j in 0..=(deg + 1) {
        let t = shifted - j as f64;
        if t < 0.0 {
            break;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * t.powi(deg);
        binom = binom * (deg + 1 - j) as f64 / (j + 1) as f64;
    }
    sum / fact
}

/// Fourier transform of β_d: (sin(u/2)/(u/2))^{d+1}.
pub fn bspline_fourier(d: BSplineDegree, u: f64) -> f64 {
    if u == 0.0 {
        return 1.0;
    }
    let h = 0.5 * u;
    (h.sin() / h).powi(d.0 as i32 + 1)
}

/// Second derivative of `bspline_fourier` at the origin: −(d+1)/12.
pub fn bspline_fourier_curvature(d: BSplineDegree) -> f64 {
    -(d.0 as f64 + 1.0) / 12.0
}
