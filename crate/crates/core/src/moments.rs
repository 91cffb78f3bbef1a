//! Lattice moments of a kernel.
//!
//! Algebraic moment: m_{(h1,h2)}(x, y) = Σ_k Σ_j φ(x−k, y−j) (k−x)^{h1} (j−y)^{h2}.
//! Absolute moment:  M_{(h1,h2)} = sup_{(x,y)} Σ_k Σ_j |φ(x−k, y−j)| |k−x|^{h1} |j−y|^{h2}.
//!
//! Every lattice sum is accumulated with [`NeumaierSum`] in a fixed order
//! (k ascending, then j ascending). Parallelism is only ever across probe
//! points, so a given probe always produces the same bits.
//!
//! Lattice sums are 1-periodic in x and y, so suprema are scanned over [0, 1)².

use crate::exec::map_indices;
use crate::kernels::{Kernel2D, Support};
use crate::summation::NeumaierSum;
use crate::{Error, Result};

/// Default probe grid per axis for suprema over [0, 1)².
pub const DEFAULT_GRID_N: usize = 101;

/// Default radii for truncated sums of kernels with unbounded support.
pub const DEFAULT_RADII: [f64; 3] = [100.0, 200.0, 400.0];

/// Which lattice points enter a sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// All points; only valid for compactly supported kernels.
    Exact,
    /// Points with max(|k − x|, |j − y|) ≤ R.
    Radius(f64),
}

/// One computed moment.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub h1: u32,
    pub h2: u32,
    /// Probe point (for suprema, the maximising grid point).
    pub x: f64,
    pub y: f64,
    pub value: f64,
    /// `None` when the sum is exact.
    pub truncation_radius: Option<f64>,
    /// Envelope estimate of the absolute tail beyond the truncation radius.
    pub tail_estimate: f64,
    /// Number of probe points behind the value.
    pub grid_points: usize,
}

impl MomentReport {
    pub const CSV_HEADER: [&'static str; 7] = [
        "h1",
        "h2",
        "x",
        "y",
        "value",
        "truncation_radius",
        "tail_estimate",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        use crate::csv::fmt_f64;
        let radius = match self.truncation_radius {
            Some(r) => fmt_f64(r),
            None => "exact".to_string(),
        };
        vec![
            self.h1.to_string(),
            self.h2.to_string(),
            fmt_f64(self.x),
            fmt_f64(self.y),
            fmt_f64(self.value),
            radius,
            fmt_f64(self.tail_estimate),
        ]
    }
}

#[inline]
fn weight(d: f64, h: u32, absolute: bool) -> f64 {
    let d = if absolute { d.abs() } else { d };
    match h {
        0 => 1.0,
        1 => d,
        2 => d * d,
        _ => d.powi(h as i32),
    }
}

/// Lattice sum over points with max(|k − x|, |j − y|) ≤ radius.
fn lattice_sum_window(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    x: f64,
    y: f64,
    radius: f64,
    absolute: bool,
) -> f64 {
    let k_lo = (x - radius).ceil() as i64;
    let k_hi = (x + radius).floor() as i64;
    let j_lo = (y - radius).ceil() as i64;
    let j_hi = (y + radius).floor() as i64;
    let mut acc = NeumaierSum::new();
    for k in k_lo..=k_hi {
        let dk = k as f64 - x;
        let wk = weight(dk, h1, absolute);
        for j in j_lo..=j_hi {
            let dj = j as f64 - y;
            let phi = kernel.eval(-dk, -dj);
            if phi == 0.0 {
                continue;
            }
            let phi = if absolute { phi.abs() } else { phi };
            acc.add(phi * wk * weight(dj, h2, absolute));
        }
    }
    acc.value()
}

/// Exact algebraic lattice moment of a compactly supported kernel.
///
/// # Panics
/// If the kernel does not have compact support.
pub fn lattice_sum_exact(kernel: &Kernel2D, h1: u32, h2: u32, x: f64, y: f64) -> f64 {
    let r = kernel
        .support_radius()
        .expect("exact lattice sums need compact support");
    lattice_sum_window(kernel, h1, h2, x, y, r, false)
}

fn effective_radius(kernel: &Kernel2D, h1: u32, h2: u32, truncation: Truncation) -> Result<f64> {
    match (kernel.support(), truncation) {
        (Support::Compact { radius }, Truncation::Exact) => Ok(radius),
        (Support::Compact { radius }, Truncation::Radius(r)) => {
            if !(r > 0.0) {
                return Err(Error::domain(
                    "truncation",
                    format!("radius must be positive, got {r}"),
                ));
            }
            Ok(radius.min(r))
        }
        (Support::Infinite { .. }, Truncation::Exact) => Err(Error::domain(
            "truncation",
            "kernels with unbounded support need a finite truncation radius",
        )),
        (Support::Infinite { decay_exponent, .. }, Truncation::Radius(r)) => {
            check_summable(decay_exponent, h1 + h2)?;
            if !(r > 0.0) {
                return Err(Error::domain(
                    "truncation",
                    format!("radius must be positive, got {r}"),
                ));
            }
            Ok(r)
        }
    }
}

fn check_summable(decay_exponent: f64, order: u32) -> Result<()> {
    let margin = decay_exponent - order as f64;
    if margin <= 2.0 {
        return Err(Error::domain(
            "lattice moment",
            format!(
                "decay exponent {decay_exponent} minus moment order {order} is {margin}, \
                 which must exceed 2 for an absolutely summable tail"
            ),
        ));
    }
    Ok(())
}

/// Envelope bound on Σ over max-norm distance > R of |φ| r^{order}.
///
/// Uses |φ| ≤ C r^{−p} for r ≥ r₀ and ∫_R^∞ C r^{order−p} 2πr dr.
pub fn tail_envelope(support: Support, order: u32, radius: f64) -> f64 {
    match support {
        Support::Compact { .. } => 0.0,
        Support::Infinite {
            decay_exponent,
            envelope,
            envelope_from,
        } => {
            let q = decay_exponent - 2.0 - order as f64;
            if q <= 0.0 {
                return f64::INFINITY;
            }
            let r = radius.max(envelope_from);
            2.0 * std::f64::consts::PI * envelope * r.powf(-q) / q
        }
    }
}

/// Algebraic moment m_{(h1,h2)}(φ) at (x, y).
pub fn algebraic_moment(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    x: f64,
    y: f64,
    truncation: Truncation,
) -> Result<MomentReport> {
    let radius = effective_radius(kernel, h1, h2, truncation)?;
    let value = lattice_sum_window(kernel, h1, h2, x, y, radius, false);
    Ok(report(kernel, h1, h2, x, y, value, truncation, 1))
}

fn report(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    x: f64,
    y: f64,
    value: f64,
    truncation: Truncation,
    grid_points: usize,
) -> MomentReport {
    let support = kernel.support();
    let (truncation_radius, tail_estimate) = match (support, truncation) {
        (Support::Compact { .. }, _) => (None, 0.0),
        (_, Truncation::Radius(r)) => (Some(r), tail_envelope(support, h1 + h2, r)),
        (_, Truncation::Exact) => unreachable!("rejected earlier"),
    };
    MomentReport {
        h1,
        h2,
        x,
        y,
        value,
        truncation_radius,
        tail_estimate,
        grid_points,
    }
}

/// Absolute moment at one probe point (no supremum).
pub fn absolute_lattice_sum(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    x: f64,
    y: f64,
    truncation: Truncation,
) -> Result<f64> {
    let radius = effective_radius(kernel, h1, h2, truncation)?;
    Ok(lattice_sum_window(kernel, h1, h2, x, y, radius, true))
}

/// Absolute moment M_{(h1,h2)}(φ), with the supremum taken over a
/// `grid_n × grid_n` grid of [0, 1)².
pub fn absolute_moment_sup(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    truncation: Truncation,
    grid_n: usize,
    parallel: bool,
) -> Result<MomentReport> {
    if grid_n == 0 {
        return Err(Error::Contract("grid_n must be positive".into()));
    }
    let radius = effective_radius(kernel, h1, h2, truncation)?;
    let values = map_indices(grid_n * grid_n, parallel, |idx| {
        let x = (idx / grid_n) as f64 / grid_n as f64;
        let y = (idx % grid_n) as f64 / grid_n as f64;
        lattice_sum_window(kernel, h1, h2, x, y, radius, true)
    });
    let (best, value) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let x = (best / grid_n) as f64 / grid_n as f64;
    let y = (best % grid_n) as f64 / grid_n as f64;
    Ok(report(
        kernel,
        h1,
        h2,
        x,
        y,
        value,
        truncation,
        grid_n * grid_n,
    ))
}

/// The absolute moments of order ≤ 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteMoments {
    pub m0: f64,
    pub m10: f64,
    pub m01: f64,
    pub m20: f64,
    pub m02: f64,
    pub m11: f64,
}

impl AbsoluteMoments {
    /// M_ν = max_{|h| = ν} M_h.
    pub fn order(&self, nu: u32) -> f64 {
        match nu {
            0 => self.m0,
            1 => self.m10.max(self.m01),
            2 => self.m20.max(self.m02).max(self.m11),
            _ => f64::NAN,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.m0, self.m10, self.m01, self.m20, self.m02, self.m11]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// All absolute moments of order ≤ 2. For kernels with unbounded support
/// the truncated sums are inflated by their tail envelopes.
pub fn absolute_moments(
    kernel: &Kernel2D,
    truncation: Truncation,
    grid_n: usize,
    parallel: bool,
) -> Result<AbsoluteMoments> {
    let get = |h1, h2| -> Result<f64> {
        let r = absolute_moment_sup(kernel, h1, h2, truncation, grid_n, parallel)?;
        Ok(r.value + r.tail_estimate)
    };
    Ok(AbsoluteMoments {
        m0: get(0, 0)?,
        m10: get(1, 0)?,
        m01: get(0, 1)?,
        m20: get(2, 0)?,
        m02: get(0, 2)?,
        m11: get(1, 1)?,
    })
}

/// Σ over R < √((k−x)² + (j−y)²) ≤ 4R of |φ(x−k, y−j)| ((k−x)² + (j−y)²).
pub fn tail_remainder(kernel: &Kernel2D, radius: f64, x: f64, y: f64) -> f64 {
    let outer = 4.0 * radius;
    let window = match kernel.support_radius() {
        Some(s) => {
            if radius >= s * std::f64::consts::SQRT_2 {
                return 0.0;
            }
            s.min(outer)
        }
        None => outer,
    };
    let (r2, o2) = (radius * radius, outer * outer);
    let k_lo = (x - window).ceil() as i64;
    let k_hi = (x + window).floor() as i64;
    let j_lo = (y - window).ceil() as i64;
    let j_hi = (y + window).floor() as i64;
    let mut acc = NeumaierSum::new();
    for k in k_lo..=k_hi {
        let dk = k as f64 - x;
        for j in j_lo..=j_hi {
            let dj = j as f64 - y;
            let d2 = dk * dk + dj * dj;
            if d2 <= r2 || d2 > o2 {
                continue;
            }
            acc.add(kernel.eval(-dk, -dj).abs() * d2);
        }
    }
    acc.value()
}

/// Result of fitting value(R) = L + c·R^{−q}.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    pub amplitude: f64,
    pub rate: f64,
    pub rms_residual: f64,
    pub warning: Option<String>,
}

/// Rate q = p − 2 − (h1 + h2) at which a truncated moment of a kernel
/// decaying like r^{−p} approaches its limit.
pub fn tail_rate(decay_exponent: f64, order: u32) -> f64 {
    decay_exponent - 2.0 - order as f64
}

/// Least-squares fit of value(R) = L + c·R^{−q}, q = `tail_rate(decay_exponent, order)`;
/// returns L with fit diagnostics.
pub fn extrapolate_lattice_sum(
    partial_sums: &[(f64, f64)],
    decay_exponent: f64,
    order: u32,
) -> Result<Extrapolation> {
    if partial_sums.len() < 3 {
        return Err(Error::Contract(format!(
            "extrapolation needs at least 3 radii, got {}",
            partial_sums.len()
        )));
    }
    let q = tail_rate(decay_exponent, order);
    if !(q > 0.0) {
        return Err(Error::domain(
            "extrapolate_lattice_sum",
            format!("tail rate {q} must be positive"),
        ));
    }
    let n = partial_sums.len() as f64;
    let ts: Vec<f64> = partial_sums.iter().map(|(r, _)| r.powf(-q)).collect();
    let vs: Vec<f64> = partial_sums.iter().map(|(_, v)| *v).collect();
    let t_mean = ts.iter().sum::<f64>() / n;
    let v_mean = vs.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stv = 0.0;
    for (t, v) in ts.iter().zip(&vs) {
        stt += (t - t_mean) * (t - t_mean);
        stv += (t - t_mean) * (v - v_mean);
    }
    let amplitude = if stt > 0.0 { stv / stt } else { 0.0 };
    let value = v_mean - amplitude * t_mean;
    let residuals: Vec<f64> = ts
        .iter()
        .zip(&vs)
        .map(|(t, v)| v - (value + amplitude * t))
        .collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();

    let spread = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - vs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let warning = if spread > 1e-15 && max_residual > 0.25 * spread {
        Some(format!(
            "partial sums are not explained by an R^-{q} tail: max residual {max_residual:.3e} vs spread {spread:.3e}"
        ))
    } else {
        None
    };
    Ok(Extrapolation {
        value,
        amplitude,
        rate: q,
        rms_residual,
        warning,
    })
}

/// A moment evaluated at several radii and extrapolated to R → ∞.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolatedMoment {
    pub raw: Vec<MomentReport>,
    pub extrapolation: Extrapolation,
}

/// Truncated algebraic moments at each radius, then power-law extrapolation.
pub fn extrapolated_moment(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    x: f64,
    y: f64,
    radii: &[f64],
) -> Result<ExtrapolatedMoment> {
    let decay = kernel.support().decay_exponent().ok_or_else(|| {
        Error::Unsupported("extrapolation applies to kernels with unbounded support".into())
    })?;
    let raw = radii
        .iter()
        .map(|&r| algebraic_moment(kernel, h1, h2, x, y, Truncation::Radius(r)))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = radii.iter().zip(&raw).map(|(r, m)| (*r, m.value)).collect();
    let extrapolation = extrapolate_lattice_sum(&pts, decay, h1 + h2)?;
    Ok(ExtrapolatedMoment { raw, extrapolation })
}
