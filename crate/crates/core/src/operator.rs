//! The sampling series T_w and the Kantorovich series K_w.
//!
//! ```text
//! (T_w f)(x, y) = Σ_k Σ_j φ(wx − k, wy − j) f(k/w, j/w)
//! (K_w f)(x, y) = Σ_k Σ_j φ(wx − k, wy − j) · mean of f over
//!                 [(k + a_k)/w, (k + b_k)/w] × [(j + c_j)/w, (j + d_j)/w]
//! ```
//!
//! Terms with max(|wx − k|, |wy − j|) ≤ R are kept. Sums run k ascending,
//! then j ascending, with compensated accumulation.

use std::fmt;

use crate::exec::map_indices;
use crate::fields::{Field2D, RasterField, Rect};
use crate::kernels::Kernel2D;
use crate::moments::tail_envelope;
use crate::pgm::Raster;
use crate::quadrature::GaussLegendre;
use crate::summation::NeumaierSum;
use crate::{Error, Result};

/// Default truncation radius for kernels with unbounded support.
pub const UNBOUNDED_DEFAULT_RADIUS: f64 = 60.0;

const SCHEME_TOL: f64 = 1e-12;

/// Explicit finite tables of a_k, b_k, c_j, d_j. Indices outside a table
/// reuse its nearest end entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable {
    pub k_start: i64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub j_start: i64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

fn lookup(table: &[f64], start: i64, i: i64) -> f64 {
    let idx = (i - start).clamp(0, table.len() as i64 - 1);
    table[idx as usize]
}

#[derive(Debug, Clone, PartialEq)]
enum SchemeKind {
    Paper,
    Uniform { alpha: f64, beta: f64 },
    Custom(CustomTable),
}

/// The cell sequences a_k < b_k, c_j < d_j with their structural constants:
/// a_k + b_k = α, c_j + d_j = β, b_k − a_k ≥ l0, d_j − c_j ≥ s0, and every
/// entry bounded by `kbound` in absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalScheme {
    kind: SchemeKind,
    pub alpha: f64,
    pub beta: f64,
    pub l0: f64,
    pub s0: f64,
    pub kbound: f64,
}

impl IntervalScheme {
    /// a_k = 1/(|k|+1), b_k = 2 − a_k, c_j = −1/(|j|+1), d_j = 1 + 1/(|j|+1),
    /// except a_0 = 1/2, b_0 = 3/2. The unpatched k = 0 entry is an empty cell.
    pub fn paper() -> Self {
        Self {
            kind: SchemeKind::Paper,
            alpha: 2.0,
            beta: 1.0,
            l0: 1.0,
            s0: 1.0,
            kbound: 2.0,
        }
    }

    /// Unit cells centred on α/2 and β/2: a_k = (α − 1)/2, b_k = (α + 1)/2.
    pub fn uniform(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain("scheme", "alpha and beta must be finite"));
        }
        let kbound = [alpha - 1.0, alpha + 1.0, beta - 1.0, beta + 1.0]
            .iter()
            .fold(0.0f64, |m, v| m.max(0.5 * v.abs()));
        Ok(Self {
            kind: SchemeKind::Uniform { alpha, beta },
            alpha,
            beta,
            l0: 1.0,
            s0: 1.0,
            kbound,
        })
    }

    pub fn custom(table: CustomTable) -> Result<Self> {
        let CustomTable { a, b, c, d, .. } = &table;
        if a.is_empty() || c.is_empty() || a.len() != b.len() || c.len() != d.len() {
            return Err(Error::domain(
                "scheme",
                "custom tables need nonempty a/b and c/d columns of equal length",
            ));
        }
        let (alpha, l0) = pair_constants("a/b", a, b)?;
        let (beta, s0) = pair_constants("c/d", c, d)?;
        let kbound = a
            .iter()
            .chain(b)
            .chain(c)
            .chain(d)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            kind: SchemeKind::Custom(table),
            alpha,
            beta,
            l0,
            s0,
            kbound,
        })
    }

    pub fn a(&self, k: i64) -> f64 {
        match &self.kind {
            SchemeKind::Paper => {
                if k == 0 {
                    0.5
                } else {
                    1.0 / (k.unsigned_abs() as f64 + 1.0)
                }
            }
            SchemeKind::Uniform { alpha, .. } => 0.5 * (alpha - 1.0),
            SchemeKind::Custom(t) => lookup(&t.a, t.k_start, k),
        }
    }

    pub fn b(&self, k: i64) -> f64 {
        match &self.kind {
            SchemeKind::Paper => 2.0 - self.a(k),
            SchemeKind::Uniform { alpha, .. } => 0.5 * (alpha + 1.0),
            SchemeKind::Custom(t) => lookup(&t.b, t.k_start, k),
        }
    }

    pub fn c(&self, j: i64) -> f64 {
        match &self.kind {
            SchemeKind::Paper => -1.0 / (j.unsigned_abs() as f64 + 1.0),
            SchemeKind::Uniform { beta, .. } => 0.5 * (beta - 1.0),
            SchemeKind::Custom(t) => lookup(&t.c, t.j_start, j),
        }
    }

    pub fn d(&self, j: i64) -> f64 {
        match &self.kind {
            SchemeKind::Paper => 1.0 + 1.0 / (j.unsigned_abs() as f64 + 1.0),
            SchemeKind::Uniform { beta, .. } => 0.5 * (beta + 1.0),
            SchemeKind::Custom(t) => lookup(&t.d, t.j_start, j),
        }
    }

    /// The averaging cell of term (k, j) at scale w.
    pub fn cell(&self, k: i64, j: i64, w: f64) -> Rect {
        let (kf, jf) = (k as f64, j as f64);
        Rect::new(
            (kf + self.a(k)) / w,
            (kf + self.b(k)) / w,
            (jf + self.c(j)) / w,
            (jf + self.d(j)) / w,
        )
    }

    /// Checks every structural invariant for |k|, |j| ≤ `kmax`.
    pub fn validate(&self, kmax: i64) -> Result<()> {
        let fail = |msg: String| Err(Error::Contract(msg));
        for i in -kmax..=kmax {
            let (a, b, c, d) = (self.a(i), self.b(i), self.c(i), self.d(i));
            if !(a < b) || !(c < d) {
                return fail(format!("empty cell at index {i}"));
            }
            if (a + b - self.alpha).abs() > SCHEME_TOL || (c + d - self.beta).abs() > SCHEME_TOL {
                return fail(format!("a+b or c+d not constant at index {i}"));
            }
            if b - a < self.l0 - SCHEME_TOL || d - c < self.s0 - SCHEME_TOL {
                return fail(format!("cell narrower than l0/s0 at index {i}"));
            }
            if [a, b, c, d]
                .iter()
                .any(|v| v.abs() > self.kbound + SCHEME_TOL)
            {
                return fail(format!("entry exceeds kbound at index {i}"));
            }
        }
        Ok(())
    }
}

fn pair_constants(what: &str, lo: &[f64], hi: &[f64]) -> Result<(f64, f64)> {
    let sum = lo[0] + hi[0];
    let mut gap = f64::INFINITY;
    for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
        if !(l < h) {
            return Err(Error::domain(
                "scheme",
                format!("{what}: empty cell at row {i}"),
            ));
        }
        if (l + h - sum).abs() > SCHEME_TOL {
            return Err(Error::domain(
                "scheme",
                format!("{what}: sum not constant at row {i}"),
            ));
        }
        gap = gap.min(h - l);
    }
    Ok((sum, gap))
}

impl fmt::Display for IntervalScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SchemeKind::Paper => write!(f, "paper"),
            SchemeKind::Uniform { alpha, beta } => write!(f, "uniform({alpha}, {beta})"),
            SchemeKind::Custom(t) => write!(f, "custom({} x {} rows)", t.a.len(), t.c.len()),
        }
    }
}

pub fn make_paper_scheme() -> IntervalScheme {
    IntervalScheme::paper()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    /// Truncation radius; `None` picks the kernel default.
    pub truncation: Option<f64>,
    /// Gauss points per axis per cell.
    pub quad_order: usize,
    pub parallel: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            truncation: None,
            quad_order: 5,
            parallel: true,
        }
    }
}

impl EvalSettings {
    pub fn sequential() -> Self {
        Self {
            parallel: false,
            ..Self::default()
        }
    }

    /// support + 2 for compact kernels, otherwise 60.
    pub fn radius_for(&self, kernel: &Kernel2D) -> f64 {
        self.truncation
            .unwrap_or_else(|| match kernel.support_radius() {
                Some(s) => s + 2.0,
                None => UNBOUNDED_DEFAULT_RADIUS,
            })
    }

    pub fn check(&self) -> Result<()> {
        if let Some(r) = self.truncation {
            if !(r > 0.0) {
                return Err(Error::domain(
                    "settings",
                    format!("truncation must be positive, got {r}"),
                ));
            }
        }
        if self.quad_order == 0 {
            return Err(Error::domain(
                "settings",
                "quadrature order must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Envelope of Σ |φ| over the terms dropped by truncation at `radius`.
/// Multiply by sup |f| for an error bound. Zero for compact kernels.
pub fn truncation_tail(kernel: &Kernel2D, radius: f64) -> f64 {
    tail_envelope(kernel.support(), 0, radius)
}

fn index_range(t: f64, radius: f64) -> std::ops::RangeInclusive<i64> {
    (t - radius).ceil() as i64..=(t + radius).floor() as i64
}

/// Kantorovich series with a prebuilt rule; the workhorse behind the
/// public entry points.
pub fn apply_k_with<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    scheme: &IntervalScheme,
    w: f64,
    x: f64,
    y: f64,
    radius: f64,
    quad: &GaussLegendre,
) -> f64 {
    let (tx, ty) = (w * x, w * y);
    let mut acc = NeumaierSum::new();
    for k in index_range(tx, radius) {
        let dk = tx - k as f64;
        for j in index_range(ty, radius) {
            let phi = kernel.eval(dk, ty - j as f64);
            if phi == 0.0 {
                continue;
            }
            acc.add(phi * f.rect_mean(&scheme.cell(k, j, w), quad));
        }
    }
    acc.value()
}

/// (K_w f)(x, y).
pub fn apply_k<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    scheme: &IntervalScheme,
    w: f64,
    x: f64,
    y: f64,
    settings: &EvalSettings,
) -> f64 {
    let quad = GaussLegendre::new(settings.quad_order);
    apply_k_with(
        kernel,
        f,
        scheme,
        w,
        x,
        y,
        settings.radius_for(kernel),
        &quad,
    )
}

/// (T_w f)(x, y).
pub fn apply_t<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    w: f64,
    x: f64,
    y: f64,
    settings: &EvalSettings,
) -> f64 {
    let radius = settings.radius_for(kernel);
    let (tx, ty) = (w * x, w * y);
    let mut acc = NeumaierSum::new();
    for k in index_range(tx, radius) {
        let dk = tx - k as f64;
        for j in index_range(ty, radius) {
            let phi = kernel.eval(dk, ty - j as f64);
            if phi == 0.0 {
                continue;
            }
            acc.add(phi * f.eval(k as f64 / w, j as f64 / w));
        }
    }
    acc.value()
}

/// Uniform probe grid; a single node per axis sits at the lower end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
}

fn node(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            x0: lo,
            x1: hi,
            nx: n,
            y0: lo,
            y1: hi,
            ny: n,
        }
    }

    pub fn point(x: f64, y: f64) -> Self {
        Self {
            x0: x,
            x1: x,
            nx: 1,
            y0: y,
            y1: y,
            ny: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        node(self.x0, self.x1, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        node(self.y0, self.y1, self.ny, j)
    }

    /// Node of flat index `idx`, with x varying fastest.
    pub fn at(&self, idx: usize) -> (f64, f64) {
        (self.x(idx % self.nx), self.y(idx / self.nx))
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(self.x0, self.x1, self.y0, self.y1)
    }
}

/// Values on a [`GridSpec`], x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridValues {
    pub const CSV_HEADER: [&'static str; 3] = ["x", "y", "value"];

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn csv_records(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        use crate::csv::fmt_f64;
        self.values.iter().enumerate().map(|(idx, v)| {
            let (x, y) = self.grid.at(idx);
            vec![fmt_f64(x), fmt_f64(y), fmt_f64(*v)]
        })
    }
}

/// K_w f at every grid node.
pub fn apply_on_grid<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    scheme: &IntervalScheme,
    w: f64,
    grid: &GridSpec,
    settings: &EvalSettings,
) -> Result<GridValues> {
    settings.check()?;
    if grid.is_empty() {
        return Err(Error::Contract("grid has no points".into()));
    }
    let quad = GaussLegendre::new(settings.quad_order);
    let radius = settings.radius_for(kernel);
    let values = map_indices(grid.len(), settings.parallel, |idx| {
        let (x, y) = grid.at(idx);
        apply_k_with(kernel, f, scheme, w, x, y, radius, &quad)
    });
    Ok(GridValues {
        grid: *grid,
        values,
    })
}

/// Resamples a raster with K_{w_out}.
///
/// Input pixel (r, c) is the constant value on [c, c+1)/w_in × [r, r+1)/w_in,
/// mirrored at the borders. Output pixel (r', c') is K_{w_out} f at the node
/// (c'/w_out, r'/w_out), clamped to the input range and rounded. The output
/// has round(size · w_out / w_in) pixels per axis.
pub fn resample_image(
    kernel: &Kernel2D,
    image: &Raster,
    scheme: &IntervalScheme,
    w_in: f64,
    w_out: f64,
    settings: &EvalSettings,
) -> Result<Raster> {
    settings.check()?;
    if !(w_in > 0.0 && w_out > 0.0) {
        return Err(Error::domain("resample", "scales must be positive"));
    }
    let field = RasterField::new(image, w_in);
    let (lo, hi) = field.min_max();
    let ratio = w_out / w_in;
    let width = ((image.width as f64 * ratio).round() as usize).max(1);
    let height = ((image.height as f64 * ratio).round() as usize).max(1);
    let quad = GaussLegendre::new(1);
    let radius = settings.radius_for(kernel);
    let pixels = map_indices(width * height, settings.parallel, |idx| {
        let (c, r) = (idx % width, idx / width);
        let v = apply_k_with(
            kernel,
            &field,
            scheme,
            w_out,
            c as f64 / w_out,
            r as f64 / w_out,
            radius,
            &quad,
        );
        v.clamp(lo, hi).round() as u8
    });
    Raster::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TestField;
    use crate::kernels::build_tensor_bspline;

    #[test]
    fn paper_scheme_invariants() {
        let s = make_paper_scheme();
        s.validate(1000).unwrap();
        assert_eq!((s.a(0), s.b(0)), (0.5, 1.5));
        assert_eq!((s.a(3), s.b(-3)), (0.25, 1.75));
        assert_eq!((s.c(1), s.d(1)), (-0.5, 1.5));
    }

    #[test]
    fn uniform_identity_scheme() {
        let s = IntervalScheme::uniform(1.0, 1.0).unwrap();
        assert_eq!((s.a(7), s.b(7), s.c(-2), s.d(-2)), (0.0, 1.0, 0.0, 1.0));
        s.validate(10).unwrap();
    }

    #[test]
    fn custom_table_constants() {
        let t = CustomTable {
            k_start: -1,
            a: vec![0.0, 0.25, 0.0],
            b: vec![1.0, 0.75, 1.0],
            j_start: 0,
            c: vec![-1.0],
            d: vec![1.0],
        };
        let s = IntervalScheme::custom(t.clone()).unwrap();
        assert_eq!(
            (s.alpha, s.beta, s.l0, s.s0, s.kbound),
            (1.0, 0.0, 0.5, 2.0, 1.0)
        );
        assert_eq!(s.a(100), 0.0);
        s.validate(50).unwrap();
        let bad = CustomTable {
            b: vec![1.0, 0.8, 1.0],
            ..t
        };
        assert!(IntervalScheme::custom(bad).is_err());
    }

    #[test]
    fn grid_layout_is_x_fastest() {
        let g = GridSpec {
            x0: 0.0,
            x1: 1.0,
            nx: 3,
            y0: 10.0,
            y1: 11.0,
            ny: 2,
        };
        assert_eq!(g.at(0), (0.0, 10.0));
        assert_eq!(g.at(2), (1.0, 10.0));
        assert_eq!(g.at(4), (0.5, 11.0));
    }

    #[test]
    fn t_reproduces_linear_for_symmetric_spline() {
        let k = build_tensor_bspline(3, 3);
        let s = EvalSettings::default();
        let v = apply_t(&k, &TestField::coord_u(), 8.0, 0.3, 0.4, &s);
        assert!((v - 0.3).abs() < 1e-14);
    }
}
