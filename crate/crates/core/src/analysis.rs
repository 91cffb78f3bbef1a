//! Moduli of continuity, concave majorants, a-priori error bounds and the
//! convergence studies that test them.
//!
//! Empirical moduli are lower bounds on the true suprema. Every bound that
//! consumes one multiplies it by [`StudyOptions::safety`] first.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::map_indices;
use crate::fields::{Field2D, PartialField, Rect};
use crate::kernels::Kernel2D;
use crate::moments::{absolute_moments, AbsoluteMoments, Truncation, DEFAULT_GRID_N};
use crate::operator::{apply_on_grid, EvalSettings, GridSpec, IntervalScheme};
use crate::{Error, Result};

/// Differences below this are treated as rounding noise when checking an
/// inequality whose right-hand side can be exactly zero.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

const SWEEP_N: usize = 41;

/// Empirical ω(f, δ1, δ2) on `domain`: the largest |f(t, s) − f(x, y)| over
/// sampled pairs in the box with |t − x| ≤ δ1 and |s − y| ≤ δ2.
///
/// Uses `samples` random pairs plus a deterministic sweep of corner and
/// axis displacements from a 41 × 41 grid of base points. Undefined values
/// (NaN) are skipped.
pub fn modulus_of_continuity<F: Field2D + ?Sized>(
    f: &F,
    delta1: f64,
    delta2: f64,
    domain: &Rect,
    samples: usize,
    seed: u64,
) -> f64 {
    let clamp_u = |t: f64| t.clamp(domain.u0, domain.u1);
    let clamp_v = |s: f64| s.clamp(domain.v0, domain.v1);
    let mut best = 0.0f64;
    let mut visit = |x: f64, y: f64, t: f64, s: f64| {
        let d = (f.eval(t, s) - f.eval(x, y)).abs();
        if d > best {
            best = d;
        }
    };
    let dirs = [
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
    ];
    for iy in 0..SWEEP_N {
        let y = domain.v0 + domain.height() * iy as f64 / (SWEEP_N - 1) as f64;
        for ix in 0..SWEEP_N {
            let x = domain.u0 + domain.width() * ix as f64 / (SWEEP_N - 1) as f64;
            for (du, dv) in dirs {
                visit(x, y, clamp_u(x + du * delta1), clamp_v(y + dv * delta2));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = domain.u0 + domain.width() * rng.gen::<f64>();
        let y = domain.v0 + domain.height() * rng.gen::<f64>();
        let t = clamp_u(x + delta1 * rng.gen_range(-1.0..=1.0));
        let s = clamp_v(y + delta2 * rng.gen_range(-1.0..=1.0));
        visit(x, y, t, s);
    }
    best
}

/// A sampled modulus δ ↦ ω(δ), with δ ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusCurve {
    pub deltas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub domain: Rect,
}

impl ModulusCurve {
    pub fn new(deltas: Vec<f64>, omegas: Vec<f64>, domain: Rect) -> Result<Self> {
        if deltas.is_empty() || deltas.len() != omegas.len() {
            return Err(Error::Contract(
                "curve needs matching nonempty columns".into(),
            ));
        }
        if deltas.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::Contract(
                "curve deltas must be strictly ascending".into(),
            ));
        }
        Ok(Self {
            deltas,
            omegas,
            domain,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            omegas: self.omegas.iter().map(|w| w * factor).collect(),
            ..self.clone()
        }
    }

    /// Piecewise-linear value. Past the last node the curve is extended by
    /// subadditivity, ω(δ) ≤ ⌈δ/δ_max⌉ ω(δ_max).
    pub fn eval(&self, delta: f64) -> f64 {
        let n = self.deltas.len();
        let last = self.deltas[n - 1];
        if delta >= last {
            return (delta / last).ceil() * self.omegas[n - 1];
        }
        if delta <= self.deltas[0] {
            return self.omegas[0];
        }
        let i = self.deltas.partition_point(|&d| d <= delta);
        let (d0, d1) = (self.deltas[i - 1], self.deltas[i]);
        let (w0, w1) = (self.omegas[i - 1], self.omegas[i]);
        w0 + (w1 - w0) * (delta - d0) / (d1 - d0)
    }

    /// Largest amount by which an interior node falls below the chord of
    /// its neighbours; ≤ 0 for a concave curve. On a uniform grid this is
    /// minus half the second difference.
    pub fn concavity_defect(&self) -> f64 {
        let (d, w) = (&self.deltas, &self.omegas);
        (1..d.len().saturating_sub(1))
            .map(|i| {
                let t = (d[i] - d[i - 1]) / (d[i + 1] - d[i - 1]);
                w[i - 1] + t * (w[i + 1] - w[i - 1]) - w[i]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// 0 followed by `n` geometric points from `lo` to `hi`.
pub fn default_deltas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    let ratio = (hi / lo).powf(1.0 / (n.max(2) - 1) as f64);
    out.extend((0..n).map(|i| lo * ratio.powi(i as i32)));
    out
}

/// Empirical diagonal modulus δ ↦ ω(f, δ, δ), forced nondecreasing.
pub fn modulus_curve<F: Field2D + ?Sized>(
    f: &F,
    deltas: &[f64],
    domain: &Rect,
    samples: usize,
    seed: u64,
    parallel: bool,
) -> Result<ModulusCurve> {
    let raw = map_indices(deltas.len(), parallel, |i| {
        if deltas[i] == 0.0 {
            0.0
        } else {
            modulus_of_continuity(
                f,
                deltas[i],
                deltas[i],
                domain,
                samples,
                seed.wrapping_add(i as u64),
            )
        }
    });
    let mut running = 0.0f64;
    let omegas = raw
        .into_iter()
        .map(|w| {
            running = running.max(w);
            running
        })
        .collect();
    ModulusCurve::new(deltas.to_vec(), omegas, *domain)
}

/// Least concave majorant, evaluated at the input nodes.
pub fn least_concave_majorant(curve: &ModulusCurve) -> Result<ModulusCurve> {
    let ModulusCurve { deltas, omegas, .. } = curve;
    if deltas.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::Contract(
            "majorant needs strictly ascending deltas".into(),
        ));
    }
    // upper hull, left to right
    let mut hull: Vec<usize> = Vec::with_capacity(deltas.len());
    for i in 0..deltas.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (deltas[b] - deltas[a]) * (omegas[i] - omegas[a])
                - (omegas[b] - omegas[a]) * (deltas[i] - deltas[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = omegas.clone();
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for i in a + 1..b {
            let t = (deltas[i] - deltas[a]) / (deltas[b] - deltas[a]);
            out[i] = (omegas[a] + t * (omegas[b] - omegas[a])).max(omegas[i]);
        }
    }
    ModulusCurve::new(deltas.clone(), out, curve.domain)
}

/// Concave majorants of the moduli of ∂f/∂u and ∂f/∂v, already scaled by
/// the safety factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialModuli {
    pub u: ModulusCurve,
    pub v: ModulusCurve,
}

pub fn partial_moduli<F: Field2D + ?Sized>(
    f: &F,
    domain: &Rect,
    options: &StudyOptions,
) -> Result<Option<PartialModuli>> {
    let (cx, cy) = (0.5 * (domain.u0 + domain.u1), 0.5 * (domain.v0 + domain.v1));
    if f.partial_u(cx, cy).is_none() || f.partial_v(cx, cy).is_none() {
        return Ok(None);
    }
    let deltas = default_deltas(1e-5, 4.0, options.modulus_nodes);
    let mut curves = Vec::with_capacity(2);
    for axis in 0..2 {
        let g = PartialField { field: f, axis };
        let raw = modulus_curve(
            &g,
            &deltas,
            domain,
            options.modulus_samples,
            options.seed.wrapping_add(1000 * (axis as u64 + 1)),
            options.parallel,
        )?;
        curves.push(least_concave_majorant(&raw)?.scaled(options.safety));
    }
    let v = curves.pop().unwrap();
    let u = curves.pop().unwrap();
    Ok(Some(PartialModuli { u, v }))
}

/// f(x, y) − f(x0, y0) − ∇f(x0, y0)·(x − x0, y − y0).
pub fn taylor_remainder<F: Field2D + ?Sized>(
    f: &F,
    x0: f64,
    y0: f64,
    x: f64,
    y: f64,
) -> Option<f64> {
    let fu = f.partial_u(x0, y0)?;
    let fv = f.partial_v(x0, y0)?;
    Some(f.eval(x, y) - f.eval(x0, y0) - fu * (x - x0) - fv * (y - y0))
}

/// |x − x0| ω̄(f_u, |x − x0|) + |y − y0| ω̄(f_v, |y − y0|).
pub fn taylor_remainder_bound(moduli: &PartialModuli, x0: f64, y0: f64, x: f64, y: f64) -> f64 {
    let (du, dv) = ((x - x0).abs(), (y - y0).abs());
    du * moduli.u.eval(du) + dv * moduli.v.eval(dv)
}

/// The two forms of the rate bound and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    /// Closed form with the first moments lumped together.
    pub headline: f64,
    /// The sum of the four estimates used to derive it, including the
    /// mixed second-moment term the headline drops.
    pub proof_level: f64,
    pub bound: f64,
}

/// Bound on |K_w f − f| given ω = ω(f, δ1, δ2).
pub fn rate_bound_thm35(
    omega: f64,
    m: &AbsoluteMoments,
    kbound: f64,
    w: f64,
    delta1: f64,
    delta2: f64,
) -> RateBound {
    let k = kbound;
    let (i1, i2) = (1.0 / delta1, 1.0 / delta2);
    let m1 = m.m10 + m.m01;
    let headline = omega
        * (m.m0
            + (k * m.m0 / w) * (i1 + i2 + k / (w * delta1 * delta2))
            + (k / w) * m1 * (i1 + i2 + 1.0 / (delta1 * delta2 * w)));
    let proof_level = omega
        * (m.m0
            + i1 / w * (k * m.m0 + m.m10)
            + i2 / w * (k * m.m0 + m.m01)
            + (k * k * m.m0 + k * m1 + m.m11) / (delta1 * delta2 * w * w));
    RateBound {
        headline,
        proof_level,
        bound: headline.max(proof_level),
    }
}

/// Constants of the quantitative Voronovskaja bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantVoronConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// A = (2K²M0 + 2|α|M¹₁₀ + 2M²₂₀)/l0, B = K²M0 + |α|M¹₁₀ + M²₂₀,
/// and C, D likewise with β, s0, M¹₀₁, M²₀₂.
pub fn quant_voron_constants(
    m: &AbsoluteMoments,
    alpha: f64,
    beta: f64,
    l0: f64,
    s0: f64,
    kbound: f64,
) -> Result<QuantVoronConstants> {
    if !(l0 > 0.0 && s0 > 0.0) {
        return Err(Error::domain(
            "voronovskaja constants",
            "l0 and s0 must be positive",
        ));
    }
    if !m.is_finite() || ![alpha, beta, kbound].iter().all(|v| v.is_finite()) {
        return Err(Error::domain(
            "voronovskaja constants",
            "inputs must be finite",
        ));
    }
    let k2m0 = kbound * kbound * m.m0;
    let b = k2m0 + alpha.abs() * m.m10 + m.m20;
    let d = k2m0 + beta.abs() * m.m01 + m.m02;
    Ok(QuantVoronConstants {
        a: 2.0 * b / l0,
        b,
        c: 2.0 * d / s0,
        d,
    })
}

/// A ω̄_u(B/(Aw)) + C ω̄_v(D/(Cw)).
pub fn thm37_bound(k: &QuantVoronConstants, moduli: &PartialModuli, w: f64) -> f64 {
    k.a * moduli.u.eval(k.b / (k.a * w)) + k.c * moduli.v.eval(k.d / (k.c * w))
}

/// Bound on |K_w f(x, y)| for |f| ≤ A + B(u² + v²).
pub fn growth_series_bound(
    m: &AbsoluteMoments,
    growth: (f64, f64),
    kbound: f64,
    w: f64,
    x: f64,
    y: f64,
) -> f64 {
    let (ga, gb) = growth;
    // |u| ≤ (|k − wx| + w|x| + K)/w on the cell of term k
    let sx = w * x.abs() + kbound;
    let sy = w * y.abs() + kbound;
    let quad =
        m.m20 + 2.0 * sx * m.m10 + sx * sx * m.m0 + m.m02 + 2.0 * sy * m.m01 + sy * sy * m.m0;
    ga * m.m0 + gb * quad / (w * w)
}

/// One row of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub w: f64,
    pub sup_error: f64,
    pub thm35_bound: f64,
    /// Present when f has partial derivatives.
    pub voron_residual: Option<f64>,
    pub thm37_bound: Option<f64>,
    /// Present when timing was requested.
    pub runtime_ms: Option<f64>,
    pub thm35_violated: bool,
    pub thm37_violated: bool,
}

impl ConvergenceRecord {
    pub const CSV_HEADER: [&'static str; 6] = [
        "w",
        "sup_error",
        "thm35_bound",
        "voron_residual",
        "thm37_bound",
        "runtime_ms",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        use crate::csv::fmt_f64;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        vec![
            fmt_f64(self.w),
            fmt_f64(self.sup_error),
            fmt_f64(self.thm35_bound),
            opt(self.voron_residual),
            opt(self.thm37_bound),
            opt(self.runtime_ms),
        ]
    }

    pub fn violated(&self) -> bool {
        self.thm35_violated || self.thm37_violated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub modulus_samples: usize,
    /// Geometric δ nodes per modulus curve.
    pub modulus_nodes: usize,
    pub seed: u64,
    pub safety: f64,
    /// Probe grid per axis for the absolute moments.
    pub moment_grid_n: usize,
    /// Truncation for the absolute moments of unbounded kernels.
    pub moment_radius: f64,
    pub timing: bool,
    pub parallel: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            modulus_samples: 10_000,
            modulus_nodes: 64,
            seed: 0x5eed,
            safety: 1.05,
            moment_grid_n: DEFAULT_GRID_N,
            moment_radius: 60.0,
            timing: false,
            parallel: true,
        }
    }
}

/// Absolute moments for the bounds: exact for compact kernels, otherwise
/// truncated with tail envelopes added.
pub fn study_moments(kernel: &Kernel2D, options: &StudyOptions) -> Result<AbsoluteMoments> {
    if kernel.is_compact() {
        absolute_moments(
            kernel,
            Truncation::Exact,
            options.moment_grid_n,
            options.parallel,
        )
    } else {
        let n = options.moment_grid_n.min(11);
        absolute_moments(
            kernel,
            Truncation::Radius(options.moment_radius),
            n,
            options.parallel,
        )
    }
}

fn check_w_list(w_list: &[f64]) -> Result<()> {
    if w_list.is_empty() || w_list.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Contract(
            "w list must be nonempty and positive".into(),
        ));
    }
    if w_list.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::Contract("w list must be ascending".into()));
    }
    Ok(())
}

// Half-width of the region around a probe whose cells reach f.
fn reach(kernel: &Kernel2D, scheme: &IntervalScheme, settings: &EvalSettings, w: f64) -> f64 {
    (settings.radius_for(kernel) + scheme.kbound) / w
}

#[allow(clippy::too_many_arguments)]
fn run_study<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    scheme: &IntervalScheme,
    grid: &GridSpec,
    voron_point: (f64, f64),
    w_list: &[f64],
    settings: &EvalSettings,
    options: &StudyOptions,
) -> Result<Vec<ConvergenceRecord>> {
    check_w_list(w_list)?;
    let moments = study_moments(kernel, options)?;
    let consts = quant_voron_constants(
        &moments,
        scheme.alpha,
        scheme.beta,
        scheme.l0,
        scheme.s0,
        scheme.kbound,
    )?;
    let widest = grid
        .bounds()
        .inflate(reach(kernel, scheme, settings, w_list[0]));
    let moduli = partial_moduli(f, &widest, options)?;
    let (px, py) = voron_point;
    let limit = match (f.partial_u(px, py), f.partial_v(px, py)) {
        (Some(fu), Some(fv)) => Some(0.5 * (scheme.alpha * fu + scheme.beta * fv)),
        _ => None,
    };
    let point_grid = GridSpec::point(px, py);
    let mut records = Vec::with_capacity(w_list.len());
    for (i, &w) in w_list.iter().enumerate() {
        let start = Instant::now();
        let values = apply_on_grid(kernel, f, scheme, w, grid, settings)?;
        let sup_error = values
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let (x, y) = grid.at(idx);
                (v - f.eval(x, y)).abs()
            })
            .fold(0.0f64, f64::max);
        let delta = 1.0 / w;
        let domain = grid.bounds().inflate(reach(kernel, scheme, settings, w));
        let omega = options.safety
            * modulus_of_continuity(
                f,
                delta,
                delta,
                &domain,
                options.modulus_samples,
                options.seed.wrapping_add(i as u64),
            );
        let thm35 = rate_bound_thm35(omega, &moments, scheme.kbound, w, delta, delta).bound;
        let (voron_residual, thm37) = match (limit, &moduli) {
            (Some(limit), Some(moduli)) => {
                let kw = apply_on_grid(kernel, f, scheme, w, &point_grid, settings)?.values[0];
                let residual = (w * (kw - f.eval(px, py)) - limit).abs();
                (Some(residual), Some(thm37_bound(&consts, moduli, w)))
            }
            _ => (None, None),
        };
        let runtime_ms = options.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
        records.push(ConvergenceRecord {
            w,
            sup_error,
            thm35_bound: thm35,
            voron_residual,
            thm37_bound: thm37,
            runtime_ms,
            thm35_violated: sup_error > thm35 + ROUNDOFF_FLOOR,
            thm37_violated: match (voron_residual, thm37) {
                (Some(r), Some(b)) => r > b + ROUNDOFF_FLOOR,
                _ => false,
            },
        });
    }
    Ok(records)
}

/// Sup-grid errors and rate bounds (δ1 = δ2 = 1/w) over `grid`. The
/// Voronovskaja columns are filled at the grid centre when f has partials.
pub fn convergence_study<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    scheme: &IntervalScheme,
    grid: &GridSpec,
    w_list: &[f64],
    settings: &EvalSettings,
    options: &StudyOptions,
) -> Result<Vec<ConvergenceRecord>> {
    let centre = (0.5 * (grid.x0 + grid.x1), 0.5 * (grid.y0 + grid.y1));
    run_study(kernel, f, scheme, grid, centre, w_list, settings, options)
}

/// Voronovskaja residuals |w(K_w f − f) − (α f_u + β f_v)/2| at one point,
/// with the quantitative bound. The error columns refer to the same point.
pub fn voronovskaja_study<F: Field2D + ?Sized>(
    kernel: &Kernel2D,
    f: &F,
    scheme: &IntervalScheme,
    point: (f64, f64),
    w_list: &[f64],
    settings: &EvalSettings,
    options: &StudyOptions,
) -> Result<Vec<ConvergenceRecord>> {
    if f.partial_u(point.0, point.1).is_none() || f.partial_v(point.0, point.1).is_none() {
        return Err(Error::Unsupported(
            "the Voronovskaja study needs a field with partial derivatives".into(),
        ));
    }
    let grid = GridSpec::point(point.0, point.1);
    run_study(kernel, f, scheme, &grid, point, w_list, settings, options)
}

/// Fixed-width summary table.
pub fn summary_table(records: &[ConvergenceRecord]) -> String {
    let opt = |v: Option<f64>| {
        v.map(|v| format!("{v:>12.4e}"))
            .unwrap_or(format!("{:>12}", "-"))
    };
    let mut out = format!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}  {}\n",
        "w", "sup_error", "thm35", "residual", "thm37", "ok"
    );
    for r in records {
        out.push_str(&format!(
            "{:>8} {:>12.4e} {:>12.4e} {} {}  {}\n",
            r.w,
            r.sup_error,
            r.thm35_bound,
            opt(r.voron_residual),
            opt(r.thm37_bound),
            if r.violated() { "VIOLATED" } else { "yes" }
        ));
    }
    out
}
