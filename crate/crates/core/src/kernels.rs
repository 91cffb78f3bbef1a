//! Bivariate kernels: tensor B-splines, separable shifted spline kernels,
//! combinations of translated tensor B-splines, and the Bochner-Riesz kernel.
//!
//! Every kernel is normalised so that its integer translates sum to one.
//! Closed-form Fourier transforms use φ̂(u, v) = ∫∫ φ(x, y) e^{−i(ux + vy)} dx dy,
//! so φ̂(0, 0) = 1 for every spline kernel.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::moments::lattice_sum_exact;
use crate::special::{
    bessel_j_unchecked, bspline_fourier, central_bspline, gamma_positive, BSplineDegree,
};
use crate::{Error, Result};

/// Tolerance and grid for the build-time certification of a base kernel.
pub const BUILD_CHECK_TOL: f64 = 1e-9;
pub const BUILD_CHECK_GRID: usize = 21;

/// Spatial extent of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// φ(x, y) = 0 whenever max(|x|, |y|) > radius.
    Compact { radius: f64 },
    /// |φ(x, y)| ≤ envelope · r^{−decay_exponent} for r = √(x² + y²) ≥ envelope_from.
    Infinite {
        decay_exponent: f64,
        envelope: f64,
        envelope_from: f64,
    },
}

impl Support {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Support::Compact { radius } => Some(radius),
            Support::Infinite { .. } => None,
        }
    }

    pub fn decay_exponent(&self) -> Option<f64> {
        match *self {
            Support::Compact { .. } => None,
            Support::Infinite { decay_exponent, .. } => Some(decay_exponent),
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, Support::Compact { .. })
    }
}

/// β_{d1}(x) · β_{d2}(y).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBSpline {
    pub d1: BSplineDegree,
    pub d2: BSplineDegree,
}

impl TensorBSpline {
    pub fn new(d1: u32, d2: u32) -> Self {
        Self {
            d1: BSplineDegree(d1),
            d2: BSplineDegree(d2),
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        let bx = central_bspline(self.d1, x);
        if bx == 0.0 {
            return 0.0;
        }
        bx * central_bspline(self.d2, y)
    }

    fn radius(&self) -> f64 {
        self.d1.half_support().max(self.d2.half_support())
    }

    fn fourier(&self, u: f64, v: f64) -> Complex64 {
        Complex64::new(
            bspline_fourier(self.d1, u) * bspline_fourier(self.d2, v),
            0.0,
        )
    }
}

/// Shift parameters of the separable kernel φ(x, y) = φ₁(x) φ₂(y) with
/// φ₁(x) = a₀ β_{d1}(x − ε₀) + a₁ β_{d1}(x − ε₁) and
/// φ₂(y) = b₀ β_{d2}(y − ε₀′) + b₁ β_{d2}(y − ε₁′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableSplineSpec {
    pub d1: u32,
    pub d2: u32,
    pub eps0: f64,
    pub eps1: f64,
    pub eps0p: f64,
    pub eps1p: f64,
}

impl SeparableSplineSpec {
    /// Same degree and shifts on both axes.
    pub fn symmetric(d: u32, eps0: f64, eps1: f64) -> Self {
        Self {
            d1: d,
            d2: d,
            eps0,
            eps1,
            eps0p: eps0,
            eps1p: eps1,
        }
    }
}

/// A separable two-shift spline kernel with its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSplineKernel {
    pub d1: BSplineDegree,
    pub d2: BSplineDegree,
    pub eps: [f64; 2],
    pub eps_p: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl SeparableSplineKernel {
    /// Uses the given coefficients as they are, without solving the
    /// moment system. Meant for diagnostics such as deliberately
    /// mis-normalised kernels.
    pub fn from_coefficients(spec: SeparableSplineSpec, a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            d1: BSplineDegree(spec.d1),
            d2: BSplineDegree(spec.d2),
            eps: [spec.eps0, spec.eps1],
            eps_p: [spec.eps0p, spec.eps1p],
            a,
            b,
        }
    }

    #[inline]
    fn factor_x(&self, x: f64) -> f64 {
        self.a[0] * central_bspline(self.d1, x - self.eps[0])
            + self.a[1] * central_bspline(self.d1, x - self.eps[1])
    }

    #[inline]
    fn factor_y(&self, y: f64) -> f64 {
        self.b[0] * central_bspline(self.d2, y - self.eps_p[0])
            + self.b[1] * central_bspline(self.d2, y - self.eps_p[1])
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        let fx = self.factor_x(x);
        if fx == 0.0 {
            return 0.0;
        }
        fx * self.factor_y(y)
    }

    fn radius(&self) -> f64 {
        let sx = self.d1.half_support() + self.eps[0].abs().max(self.eps[1].abs());
        let sy = self.d2.half_support() + self.eps_p[0].abs().max(self.eps_p[1].abs());
        sx.max(sy)
    }

    fn fourier(&self, u: f64, v: f64) -> Complex64 {
        let phase = |c: f64, e: f64, t: f64| Complex64::from_polar(c, -e * t);
        let fx = (phase(self.a[0], self.eps[0], u) + phase(self.a[1], self.eps[1], u))
            * bspline_fourier(self.d1, u);
        let fy = (phase(self.b[0], self.eps_p[0], v) + phase(self.b[1], self.eps_p[1], v))
            * bspline_fourier(self.d2, v);
        fx * fy
    }
}

/// Solves {c₀ + c₁ = 1, s₀c₀ + s₁c₁ = 0}.
pub fn solve_shift_coefficients(s0: f64, s1: f64) -> Result<[f64; 2]> {
    let det = s1 - s0;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularSystem(format!(
            "shifts must differ, got {s0} and {s1}"
        )));
    }
    Ok([s1 / det, -s0 / det])
}

/// Parameters of φ = C₁B + C₂(B(·+a,·+a) + B(·−a,·−a)) + C₃(B(·+b,·) + B(·−b,·))
/// + C₄(B(·,·+c) + B(·,·−c)) for a base kernel B.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedBoxSplineSpec {
    pub base: Kernel2D,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Targets for ∂²/∂u², ∂²/∂v², ∂²/∂u∂v of the trigonometric multiplier at 0.
    pub s: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedBoxSplineKernel {
    pub base: Box<Kernel2D>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub s: [f64; 3],
    /// C₁..C₄.
    pub coeffs: [f64; 4],
    radius: f64,
}

impl TranslatedBoxSplineKernel {
    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        let [c1, c2, c3, c4] = self.coeffs;
        let base = &self.base;
        let mut acc = 0.0;
        if c1 != 0.0 {
            acc += c1 * base.eval(x, y);
        }
        if c2 != 0.0 {
            acc += c2 * (base.eval(x + self.a, y + self.a) + base.eval(x - self.a, y - self.a));
        }
        if c3 != 0.0 {
            acc += c3 * (base.eval(x + self.b, y) + base.eval(x - self.b, y));
        }
        if c4 != 0.0 {
            acc += c4 * (base.eval(x, y + self.c) + base.eval(x, y - self.c));
        }
        acc
    }

    /// C₁ + 2C₂cos(a(u+v)) + 2C₃cos(bu) + 2C₄cos(cv).
    pub fn multiplier(&self, u: f64, v: f64) -> f64 {
        let [c1, c2, c3, c4] = self.coeffs;
        c1 + 2.0 * c2 * (self.a * (u + v)).cos()
            + 2.0 * c3 * (self.b * u).cos()
            + 2.0 * c4 * (self.c * v).cos()
    }
}

/// Solves the translated-combination system for (C₁, C₂, C₃, C₄):
/// C₁ + 2C₂ + 2C₃ + 2C₄ = 1, −2(a²C₂ + b²C₃) = S₁, −2(a²C₂ + c²C₄) = S₂, −2a²C₂ = S₃.
pub fn solve_translation_coefficients(a: f64, b: f64, c: f64, s: [f64; 3]) -> Result<[f64; 4]> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if v == 0.0 || !v.is_finite() {
            return Err(Error::SingularSystem(format!(
                "translation offset {name} must be nonzero and finite, got {v}"
            )));
        }
    }
    let [s1, s2, s3] = s;
    let c2 = -s3 / (2.0 * a * a);
    let c3 = (s3 - s1) / (2.0 * b * b);
    let c4 = (s3 - s2) / (2.0 * c * c);
    let c1 = 1.0 - 2.0 * (c2 + c3 + c4);
    Ok([c1, c2, c3, c4])
}

/// b^γ(x, y) = (2^γ Γ(γ+1)/(2π)) r^{−1−γ} J_{1+γ}(r).
#[derive(Debug, Clone, PartialEq)]
pub struct BochnerRieszKernel {
    pub gamma: f64,
    order: f64,
    prefactor: f64,
    origin_value: f64,
}

/// Radius below which the Bochner-Riesz kernel uses its truncated series.
const BR_SERIES_RADIUS: f64 = 1e-4;

impl BochnerRieszKernel {
    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        if r < BR_SERIES_RADIUS {
            // J_ν(r)/r^ν ≈ (1/(2^ν Γ(ν+1))) (1 − q/(ν+1) + q²/(2(ν+1)(ν+2))), q = r²/4
            let nu = self.order;
            let q = 0.25 * r * r;
            let series = 1.0 - q / (nu + 1.0) + q * q / (2.0 * (nu + 1.0) * (nu + 2.0));
            return self.origin_value * series;
        }
        self.prefactor * bessel_j_unchecked(self.order, r) / r.powf(self.order)
    }

    /// Upper envelope of |J_ν(r)|·√(πr/2) used for the decay bound.
    const ENVELOPE_SLACK: f64 = 1.1;

    fn support(&self) -> Support {
        let nu = self.order;
        Support::Infinite {
            decay_exponent: self.gamma + 1.5,
            envelope: self.prefactor * (2.0 / PI).sqrt() * Self::ENVELOPE_SLACK,
            envelope_from: 2.0 * (nu * nu).max(25.0),
        }
    }
}

/// An evaluable bivariate kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel2D {
    TensorBSpline(TensorBSpline),
    Separable(SeparableSplineKernel),
    TranslatedBoxSpline(TranslatedBoxSplineKernel),
    BochnerRiesz(BochnerRieszKernel),
}

impl Kernel2D {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel2D::TensorBSpline(k) => k.eval(x, y),
            Kernel2D::Separable(k) => k.eval(x, y),
            Kernel2D::TranslatedBoxSpline(k) => k.eval(x, y),
            Kernel2D::BochnerRiesz(k) => k.eval(x, y),
        }
    }

    pub fn support(&self) -> Support {
        match self {
            Kernel2D::TensorBSpline(k) => Support::Compact { radius: k.radius() },
            Kernel2D::Separable(k) => Support::Compact { radius: k.radius() },
            Kernel2D::TranslatedBoxSpline(k) => Support::Compact { radius: k.radius },
            Kernel2D::BochnerRiesz(k) => k.support(),
        }
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support().radius()
    }

    pub fn is_compact(&self) -> bool {
        self.support().is_compact()
    }

    /// Closed-form Fourier transform; available for the spline families.
    pub fn fourier(&self, u: f64, v: f64) -> Result<Complex64> {
        match self {
            Kernel2D::TensorBSpline(k) => Ok(k.fourier(u, v)),
            Kernel2D::Separable(k) => Ok(k.fourier(u, v)),
            Kernel2D::TranslatedBoxSpline(k) => Ok(k.base.fourier(u, v)? * k.multiplier(u, v)),
            Kernel2D::BochnerRiesz(_) => Err(Error::Unsupported(
                "closed-form transform is not exposed for the Bochner-Riesz kernel".into(),
            )),
        }
    }

    /// Maximum of |φ| over a 201×201 grid of [−ρ, ρ]², where ρ is the support
    /// radius (or 10 for kernels with unbounded support).
    pub fn sup_norm(&self) -> f64 {
        let rho = self.support_radius().unwrap_or(10.0);
        let n = 201;
        let mut best: f64 = 0.0;
        for i in 0..n {
            let x = -rho + 2.0 * rho * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let y = -rho + 2.0 * rho * j as f64 / (n - 1) as f64;
                best = best.max(self.eval(x, y).abs());
            }
        }
        if let Kernel2D::BochnerRiesz(k) = self {
            best = best.max(k.origin_value.abs());
        }
        best
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Kernel2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel2D::TensorBSpline(k) => write!(f, "beta{}xbeta{}", k.d1.0, k.d2.0),
            Kernel2D::Separable(k) => write!(
                f,
                "separable(d={},{}; eps=[{},{}]; eps'=[{},{}])",
                k.d1.0, k.d2.0, k.eps[0], k.eps[1], k.eps_p[0], k.eps_p[1]
            ),
            Kernel2D::TranslatedBoxSpline(k) => write!(
                f,
                "translated({}; a={}, b={}, c={}; S=[{},{},{}])",
                k.base, k.a, k.b, k.c, k.s[0], k.s[1], k.s[2]
            ),
            Kernel2D::BochnerRiesz(k) => write!(f, "bochner-riesz(gamma={})", k.gamma),
        }
    }
}

/// β_{d1} ⊗ β_{d2}.
pub fn build_tensor_bspline(d1: u32, d2: u32) -> Kernel2D {
    Kernel2D::TensorBSpline(TensorBSpline::new(d1, d2))
}

/// Separable shifted-spline kernel with coefficients solved from
/// {a₀ + a₁ = 1, ε₀a₀ + ε₁a₁ = 0} and the primed analogue.
pub fn build_separable_spline_kernel(spec: SeparableSplineSpec) -> Result<Kernel2D> {
    let a = solve_shift_coefficients(spec.eps0, spec.eps1)?;
    let b = solve_shift_coefficients(spec.eps0p, spec.eps1p)?;
    Ok(Kernel2D::Separable(
        SeparableSplineKernel::from_coefficients(spec, a, b),
    ))
}

/// Translated combination of a compactly supported base kernel.
///
/// The base is certified first: its lattice sum must be one and its first
/// lattice moments must vanish on a 21×21 grid of [0, 1)², to 1e−9.
pub fn build_translated_boxspline_kernel(spec: TranslatedBoxSplineSpec) -> Result<Kernel2D> {
    let coeffs = solve_translation_coefficients(spec.a, spec.b, spec.c, spec.s)?;
    let base_radius = spec.base.support_radius().ok_or_else(|| {
        Error::KernelRejected(format!(
            "base kernel {} must have compact support",
            spec.base
        ))
    })?;
    certify_base(&spec.base)?;
    let radius = base_radius + spec.a.abs().max(spec.b.abs()).max(spec.c.abs());
    Ok(Kernel2D::TranslatedBoxSpline(TranslatedBoxSplineKernel {
        base: Box::new(spec.base),
        a: spec.a,
        b: spec.b,
        c: spec.c,
        s: spec.s,
        coeffs,
        radius,
    }))
}

fn certify_base(base: &Kernel2D) -> Result<()> {
    let n = BUILD_CHECK_GRID;
    for i in 0..n {
        let x = i as f64 / n as f64;
        for j in 0..n {
            let y = j as f64 / n as f64;
            let m0 = lattice_sum_exact(base, 0, 0, x, y);
            if (m0 - 1.0).abs() > BUILD_CHECK_TOL {
                return Err(Error::KernelRejected(format!(
                    "base {base}: lattice sum at ({x:.4}, {y:.4}) is {m0}, residual {:.3e}",
                    m0 - 1.0
                )));
            }
            for (h1, h2) in [(1, 0), (0, 1)] {
                let m1 = lattice_sum_exact(base, h1, h2, x, y);
                if m1.abs() > BUILD_CHECK_TOL {
                    return Err(Error::KernelRejected(format!(
                        "base {base}: first moment ({h1},{h2}) at ({x:.4}, {y:.4}) is {m1:.3e}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Bochner-Riesz kernel of index γ > 5/2.
pub fn build_bochner_riesz(gamma: f64) -> Result<Kernel2D> {
    if !(gamma > 2.5) || !gamma.is_finite() {
        return Err(Error::domain(
            "build_bochner_riesz",
            format!("gamma must exceed 5/2 for a finite second absolute moment, got {gamma}"),
        ));
    }
    let order = 1.0 + gamma;
    let prefactor = 2f64.powf(gamma) * gamma_positive(gamma + 1.0) / (2.0 * PI);
    Ok(Kernel2D::BochnerRiesz(BochnerRieszKernel {
        gamma,
        order,
        prefactor,
        origin_value: 1.0 / (4.0 * PI * (1.0 + gamma)),
    }))
}

/// Closed-form transform of a spline kernel (see [`Kernel2D::fourier`]).
pub fn kernel_fourier(kernel: &Kernel2D, u: f64, v: f64) -> Result<Complex64> {
    kernel.fourier(u, v)
}

/// The compact kernels shipped with the crate, with short names.
pub fn shipped_compact_kernels() -> Vec<(&'static str, Kernel2D)> {
    let b2 = build_tensor_bspline(2, 2);
    vec![
        ("beta0xbeta0", build_tensor_bspline(0, 0)),
        ("beta2xbeta2", b2.clone()),
        ("beta3xbeta3", build_tensor_bspline(3, 3)),
        (
            "separable-d2-symmetric",
            build_separable_spline_kernel(SeparableSplineSpec::symmetric(2, -1.0, 1.0))
                .expect("distinct shifts"),
        ),
        (
            "separable-d3-skewed",
            build_separable_spline_kernel(SeparableSplineSpec {
                d1: 3,
                d2: 2,
                eps0: -0.5,
                eps1: 1.0,
                eps0p: -1.0,
                eps1p: 0.25,
            })
            .expect("distinct shifts"),
        ),
        (
            "translated-diagonal",
            build_translated_boxspline_kernel(TranslatedBoxSplineSpec {
                base: b2.clone(),
                a: 1.0,
                b: 1.0,
                c: 1.0,
                s: [-1.0, -1.0, -1.0],
            })
            .expect("certified base"),
        ),
        (
            "translated-signed",
            build_translated_boxspline_kernel(TranslatedBoxSplineSpec {
                base: b2,
                a: 1.0,
                b: 1.0,
                c: 1.0,
                s: [0.2, 0.1, 0.1],
            })
            .expect("certified base"),
        ),
    ]
}
