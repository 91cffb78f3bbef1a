//! Target functions f(u, v) for the operators.

use std::fmt;

use crate::pgm::Raster;
use crate::quadrature::GaussLegendre;

/// Axis-aligned rectangle [u0, u1] × [v0, v1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Rect {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        Self { u0, u1, v0, v1 }
    }

    pub fn width(&self) -> f64 {
        self.u1 - self.u0
    }

    pub fn height(&self) -> f64 {
        self.v1 - self.v0
    }

    /// Grows the rectangle by `m` on every side.
    pub fn inflate(&self, m: f64) -> Self {
        Self::new(self.u0 - m, self.u1 + m, self.v0 - m, self.v1 + m)
    }
}

/// Regularity class, ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    Bounded,
    Continuous,
    C1,
    C2,
}

pub trait Field2D: Send + Sync {
    fn eval(&self, u: f64, v: f64) -> f64;

    /// Mean value over `rect`. Defaults to the tensor Gauss rule.
    fn rect_mean(&self, rect: &Rect, quad: &GaussLegendre) -> f64 {
        quad.rect_mean(rect.u0, rect.u1, rect.v0, rect.v1, |u, v| self.eval(u, v))
    }

    fn smoothness(&self) -> Smoothness;

    /// (A, B) with |f(u, v)| ≤ A + B(u² + v²), if known.
    fn growth(&self) -> Option<(f64, f64)> {
        None
    }

    fn partial_u(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    fn partial_v(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }
}

/// The built-in test fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestField {
    Constant(f64),
    /// c0 + cu·u + cv·v
    Affine {
        c0: f64,
        cu: f64,
        cv: f64,
    },
    /// u² + v²
    SquareNorm,
    /// exp(−u² − v²)
    Gaussian,
    /// |u| + |v|
    AbsSum,
    /// sin(u)·cos(v)
    SinCos,
}

impl TestField {
    pub const NAMES: [&'static str; 6] = [
        "constant",
        "affine",
        "square-norm",
        "gaussian",
        "abs-sum",
        "sin-cos",
    ];

    /// The catalog with default parameters, in `NAMES` order.
    pub fn catalog() -> Vec<TestField> {
        Self::NAMES
            .iter()
            .map(|n| Self::by_name(n).unwrap())
            .collect()
    }

    pub fn by_name(name: &str) -> Option<TestField> {
        Some(match name {
            "constant" => TestField::Constant(0.75),
            "affine" => TestField::Affine {
                c0: 0.25,
                cu: 1.0,
                cv: -0.5,
            },
            "square-norm" => TestField::SquareNorm,
            "gaussian" => TestField::Gaussian,
            "abs-sum" => TestField::AbsSum,
            "sin-cos" => TestField::SinCos,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestField::Constant(_) => "constant",
            TestField::Affine { .. } => "affine",
            TestField::SquareNorm => "square-norm",
            TestField::Gaussian => "gaussian",
            TestField::AbsSum => "abs-sum",
            TestField::SinCos => "sin-cos",
        }
    }

    /// f(u, v) = u.
    pub fn coord_u() -> TestField {
        TestField::Affine {
            c0: 0.0,
            cu: 1.0,
            cv: 0.0,
        }
    }

    /// f(u, v) = v.
    pub fn coord_v() -> TestField {
        TestField::Affine {
            c0: 0.0,
            cu: 0.0,
            cv: 1.0,
        }
    }
}

impl fmt::Display for TestField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Mean of |t| over [a, b].
fn mean_abs(a: f64, b: f64) -> f64 {
    if b <= a {
        return a.abs();
    }
    if a >= 0.0 {
        0.5 * (a + b)
    } else if b <= 0.0 {
        -0.5 * (a + b)
    } else {
        0.5 * (a * a + b * b) / (b - a)
    }
}

impl Field2D for TestField {
    fn eval(&self, u: f64, v: f64) -> f64 {
        match *self {
            TestField::Constant(c) => c,
            TestField::Affine { c0, cu, cv } => c0 + cu * u + cv * v,
            TestField::SquareNorm => u * u + v * v,
            TestField::Gaussian => (-u * u - v * v).exp(),
            TestField::AbsSum => u.abs() + v.abs(),
            TestField::SinCos => u.sin() * v.cos(),
        }
    }

    fn rect_mean(&self, r: &Rect, quad: &GaussLegendre) -> f64 {
        match *self {
            TestField::Constant(c) => c,
            // the kink at 0 would spoil the Gauss rule
            TestField::AbsSum => mean_abs(r.u0, r.u1) + mean_abs(r.v0, r.v1),
            _ => quad.rect_mean(r.u0, r.u1, r.v0, r.v1, |u, v| self.eval(u, v)),
        }
    }

    fn smoothness(&self) -> Smoothness {
        match self {
            TestField::AbsSum => Smoothness::Continuous,
            _ => Smoothness::C2,
        }
    }

    fn growth(&self) -> Option<(f64, f64)> {
        Some(match *self {
            TestField::Constant(c) => (c.abs(), 0.0),
            // |t| ≤ (1 + t²)/2
            TestField::Affine { c0, cu, cv } => (
                c0.abs() + 0.5 * (cu.abs() + cv.abs()),
                0.5 * cu.abs().max(cv.abs()),
            ),
            TestField::SquareNorm => (0.0, 1.0),
            TestField::Gaussian | TestField::SinCos => (1.0, 0.0),
            TestField::AbsSum => (1.0, 0.5),
        })
    }

    fn partial_u(&self, u: f64, v: f64) -> Option<f64> {
        match *self {
            TestField::Constant(_) => Some(0.0),
            TestField::Affine { cu, .. } => Some(cu),
            TestField::SquareNorm => Some(2.0 * u),
            TestField::Gaussian => Some(-2.0 * u * self.eval(u, v)),
            TestField::AbsSum => None,
            TestField::SinCos => Some(u.cos() * v.cos()),
        }
    }

    fn partial_v(&self, u: f64, v: f64) -> Option<f64> {
        match *self {
            TestField::Constant(_) => Some(0.0),
            TestField::Affine { cv, .. } => Some(cv),
            TestField::SquareNorm => Some(2.0 * v),
            TestField::Gaussian => Some(-2.0 * v * self.eval(u, v)),
            TestField::AbsSum => None,
            TestField::SinCos => Some(-u.sin() * v.sin()),
        }
    }
}

/// A partial derivative of another field, viewed as a field.
pub struct PartialField<'a, F: Field2D + ?Sized> {
    pub field: &'a F,
    /// 0 for ∂/∂u, 1 for ∂/∂v.
    pub axis: usize,
}

impl<F: Field2D + ?Sized> PartialField<'_, F> {
    /// True if the partial is defined at (u, v).
    pub fn is_defined(&self, u: f64, v: f64) -> bool {
        self.get(u, v).is_some()
    }

    fn get(&self, u: f64, v: f64) -> Option<f64> {
        if self.axis == 0 {
            self.field.partial_u(u, v)
        } else {
            self.field.partial_v(u, v)
        }
    }
}

impl<F: Field2D + ?Sized> Field2D for PartialField<'_, F> {
    fn eval(&self, u: f64, v: f64) -> f64 {
        self.get(u, v).unwrap_or(f64::NAN)
    }

    fn smoothness(&self) -> Smoothness {
        match self.field.smoothness() {
            Smoothness::C2 => Smoothness::C1,
            Smoothness::C1 => Smoothness::Continuous,
            _ => Smoothness::Bounded,
        }
    }
}

/// A raster as a piecewise-constant field.
///
/// Pixel (row r, column c) covers [c/scale, (c+1)/scale) × [r/scale, (r+1)/scale).
/// Outside the raster the pixels are mirrored at the borders.
#[derive(Debug, Clone)]
pub struct RasterField {
    width: usize,
    height: usize,
    values: Vec<f64>,
    scale: f64,
}

fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

// Overlap of [lo, hi) with each unit cell it touches, as (cell, length).
fn overlaps(lo: f64, hi: f64) -> impl Iterator<Item = (i64, f64)> {
    let first = lo.floor() as i64;
    let last = (hi.ceil() as i64).max(first + 1);
    (first..last).filter_map(move |c| {
        let len = hi.min(c as f64 + 1.0) - lo.max(c as f64);
        (len > 0.0).then_some((c, len))
    })
}

impl RasterField {
    pub fn new(raster: &Raster, scale: f64) -> Self {
        assert!(scale > 0.0, "raster scale must be positive");
        Self {
            width: raster.width,
            height: raster.height,
            values: raster.pixels.iter().map(|&p| p as f64).collect(),
            scale,
        }
    }

    fn pixel(&self, col: i64, row: i64) -> f64 {
        self.values[reflect(row, self.height) * self.width + reflect(col, self.width)]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
    }
}

impl Field2D for RasterField {
    fn eval(&self, u: f64, v: f64) -> f64 {
        let c = (u * self.scale).floor() as i64;
        let r = (v * self.scale).floor() as i64;
        self.pixel(c, r)
    }

    /// Exact area-weighted average of the covered pixels.
    fn rect_mean(&self, rect: &Rect, _quad: &GaussLegendre) -> f64 {
        let (x0, x1) = (rect.u0 * self.scale, rect.u1 * self.scale);
        let (y0, y1) = (rect.v0 * self.scale, rect.v1 * self.scale);
        if !(x1 > x0 && y1 > y0) {
            return self.eval(rect.u0, rect.v0);
        }
        let mut acc = 0.0;
        for (r, wy) in overlaps(y0, y1) {
            let mut row = 0.0;
            for (c, wx) in overlaps(x0, x1) {
                row += wx * self.pixel(c, r);
            }
            acc += wy * row;
        }
        acc / ((x1 - x0) * (y1 - y0))
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Bounded
    }

    fn growth(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.min_max();
        Some((lo.abs().max(hi.abs()), 0.0))
    }
}
