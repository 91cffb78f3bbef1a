use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kantorovich::analysis::{
    convergence_study, summary_table, voronovskaja_study, ConvergenceRecord,
};
use kantorovich::csv::{fmt_f64, table_string};
use kantorovich::moments::{
    absolute_moment_sup, algebraic_moment, extrapolated_moment, lattice_sum_exact, MomentReport,
    Truncation,
};
use kantorovich::operator::resample_image;
use kantorovich::pgm::{decode_pgm, detect_encoding, encode_pgm};
use kantorovich::{Field2D, Kernel2D};

use crate::config::RunConfig;

/// Result of one assertion made by a command.
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
        }
    }
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check_table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!(
            "{:<width$}  {:>12}  {:>10}  status\n",
            "check", "value", "tol"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<width$}  {:>12.4e}  {:>10.2e}  {}\n",
                c.name,
                c.value,
                c.tol,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }

    /// Writes every artifact; nothing is written until the run is complete.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        for (name, bytes) in &self.files {
            let path = out_dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn checks_csv(checks: &[Check]) -> Result<Vec<u8>> {
    let rows = checks.iter().map(|c| {
        vec![
            c.name.clone(),
            fmt_f64(c.value),
            fmt_f64(c.tol),
            if c.pass { "pass" } else { "fail" }.to_string(),
        ]
    });
    Ok(table_string(&["check", "value", "tol", "status"], rows)?.into_bytes())
}

fn unit_grid(n: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..n * n).map(move |i| ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64))
}

fn kernel_of(cfg: &RunConfig) -> Result<Kernel2D> {
    cfg.kernel.build().context("building kernel")
}

fn field_of(cfg: &RunConfig) -> Result<Box<dyn Field2D>> {
    match &cfg.field {
        Some(f) => f.build(cfg),
        None => bail!("this command needs a [field] section"),
    }
}

pub fn kernel_check(cfg: &RunConfig) -> Result<Outcome> {
    let kernel = kernel_of(cfg)?;
    let c = &cfg.check;
    let mut checks = Vec::new();
    // worst |m00 − 1| and worst |m10|, |m01| over the probes
    let (partition, first) = match kernel.support().decay_exponent() {
        None => {
            let mut p: f64 = 0.0;
            let mut f: f64 = 0.0;
            for (x, y) in unit_grid(c.grid_n) {
                p = p.max((lattice_sum_exact(&kernel, 0, 0, x, y) - 1.0).abs());
                f = f.max(lattice_sum_exact(&kernel, 1, 0, x, y).abs());
                f = f.max(lattice_sum_exact(&kernel, 0, 1, x, y).abs());
            }
            (
                Check::at_most("partition of unity", p, c.tol),
                Check::at_most("first moments", f, c.tol),
            )
        }
        Some(_) => {
            let radii = &cfg.moments.radii;
            let mut p: f64 = 0.0;
            let mut f: f64 = 0.0;
            for &[x, y] in &c.probes {
                let m = extrapolated_moment(&kernel, 0, 0, x, y, radii)?;
                p = p.max((m.extrapolation.value - 1.0).abs());
                for (h1, h2) in [(1, 0), (0, 1)] {
                    let m = extrapolated_moment(&kernel, h1, h2, x, y, radii)?;
                    f = f.max(m.extrapolation.value.abs());
                }
            }
            (
                Check::at_most("partition of unity", p, c.tol_unbounded),
                Check::at_most("first moments", f, c.tol_unbounded),
            )
        }
    };
    checks.push(partition);
    checks.push(first);

    // Second absolute moments converge when |φ| decays faster than r^-4.
    let (truncation, grid_n) = match kernel.support().decay_exponent() {
        None => (Truncation::Exact, c.grid_n),
        Some(p) => {
            checks.push(Check {
                name: "decay exponent above 4".into(),
                value: p,
                tol: 4.0,
                pass: p > 4.0,
            });
            (
                Truncation::Radius(cfg.moments.absolute_radius),
                c.grid_n.min(11),
            )
        }
    };
    let mut m2: f64 = 0.0;
    for (h1, h2) in [(2, 0), (1, 1), (0, 2)] {
        let r = absolute_moment_sup(&kernel, h1, h2, truncation, grid_n, cfg.study.parallel)?;
        m2 = m2.max(r.value + r.tail_estimate);
    }
    checks.push(Check {
        name: "second absolute moment finite".into(),
        value: m2,
        tol: f64::INFINITY,
        pass: m2.is_finite(),
    });

    let csv = checks_csv(&checks)?;
    Ok(Outcome {
        summary: Some(format!("kernel {kernel}\n")),
        checks,
        files: vec![("kernel_check.csv".into(), csv)],
    })
}

struct Evaluated {
    value: f64,
    raw: Vec<MomentReport>,
    /// Extrapolated row for kernels with unbounded support.
    limit: Option<Vec<String>>,
    warning: Option<String>,
}

fn evaluate(
    kernel: &Kernel2D,
    h1: u32,
    h2: u32,
    x: f64,
    y: f64,
    radii: &[f64],
) -> Result<Evaluated> {
    if kernel.is_compact() {
        let r = algebraic_moment(kernel, h1, h2, x, y, Truncation::Exact)?;
        return Ok(Evaluated {
            value: r.value,
            raw: vec![r],
            limit: None,
            warning: None,
        });
    }
    let e = extrapolated_moment(kernel, h1, h2, x, y, radii)?;
    let limit = vec![
        h1.to_string(),
        h2.to_string(),
        fmt_f64(x),
        fmt_f64(y),
        fmt_f64(e.extrapolation.value),
        fmt_f64(e.extrapolation.rms_residual),
    ];
    Ok(Evaluated {
        value: e.extrapolation.value,
        raw: e.raw,
        limit: Some(limit),
        warning: e.extrapolation.warning,
    })
}

pub fn moments(cfg: &RunConfig) -> Result<Outcome> {
    let kernel = kernel_of(cfg)?;
    let m = &cfg.moments;
    let compact = kernel.is_compact();
    let mut raw: Vec<MomentReport> = Vec::new();
    let mut limits: Vec<Vec<String>> = Vec::new();
    let mut warnings = String::new();

    for &[x, y] in &m.probes {
        for &[h1, h2] in &m.orders {
            let v = evaluate(&kernel, h1, h2, x, y, &m.radii)?;
            raw.extend(v.raw);
            if let Some(row) = v.limit {
                limits.push(row);
            }
            if let Some(w) = v.warning {
                warnings.push_str(&format!("warning: m({h1},{h2}) at ({x}, {y}): {w}\n"));
            }
        }
    }
    let mut checks = Vec::new();
    for e in &m.expect {
        let v = evaluate(&kernel, e.h1, e.h2, e.x, e.y, &m.radii)?;
        checks.push(Check::at_most(
            format!("m({},{}) at ({}, {}) = {}", e.h1, e.h2, e.x, e.y, e.value),
            (v.value - e.value).abs(),
            e.tol,
        ));
    }

    let truncation = if compact {
        Truncation::Exact
    } else {
        Truncation::Radius(m.absolute_radius)
    };
    let grid_n = if compact { m.grid_n } else { m.grid_n.min(11) };
    let mut absolute = Vec::new();
    for &[h1, h2] in &m.orders {
        absolute.push(absolute_moment_sup(
            &kernel,
            h1,
            h2,
            truncation,
            grid_n,
            cfg.study.parallel,
        )?);
    }

    let mut files = vec![
        (
            "moments.csv".to_string(),
            table_string(
                &MomentReport::CSV_HEADER,
                raw.iter().map(|r| r.csv_record()),
            )?
            .into_bytes(),
        ),
        (
            "absolute_moments.csv".to_string(),
            table_string(
                &MomentReport::CSV_HEADER,
                absolute.iter().map(|r| r.csv_record()),
            )?
            .into_bytes(),
        ),
    ];
    if !compact {
        files.push((
            "moments_extrapolated.csv".to_string(),
            table_string(
                &["h1", "h2", "x", "y", "extrapolated", "rms_residual"],
                limits,
            )?
            .into_bytes(),
        ));
    }
    Ok(Outcome {
        summary: Some(format!("kernel {kernel}\n{warnings}")),
        checks,
        files,
    })
}

fn study_outcome(records: Vec<ConvergenceRecord>, file: &str) -> Result<Outcome> {
    let checks = records
        .iter()
        .map(|r| Check {
            name: format!("w = {} within bounds", r.w),
            value: r.sup_error,
            tol: r.thm35_bound,
            pass: !r.violated(),
        })
        .collect();
    let csv = table_string(
        &ConvergenceRecord::CSV_HEADER,
        records.iter().map(|r| r.csv_record()),
    )?;
    Ok(Outcome {
        summary: Some(summary_table(&records)),
        checks,
        files: vec![(file.to_string(), csv.into_bytes())],
    })
}

pub fn converge(cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome> {
    let kernel = kernel_of(cfg)?;
    let scheme = cfg.scheme.build()?;
    let field = field_of(cfg)?;
    let s = &cfg.study;
    s.validate()?;
    let records = convergence_study(
        &kernel,
        field.as_ref(),
        &scheme,
        &s.grid(),
        &s.w,
        &s.settings(),
        &s.options(seed),
    )?;
    study_outcome(records, "converge.csv")
}

pub fn voronovskaja(cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome> {
    let kernel = kernel_of(cfg)?;
    let scheme = cfg.scheme.build()?;
    let field = field_of(cfg)?;
    let s = &cfg.study;
    s.validate()?;
    let records = voronovskaja_study(
        &kernel,
        field.as_ref(),
        &scheme,
        (s.point[0], s.point[1]),
        &s.w,
        &s.settings(),
        &s.options(seed),
    )?;
    study_outcome(records, "voronovskaja.csv")
}

pub fn resample(cfg: &RunConfig) -> Result<Outcome> {
    let Some(r) = &cfg.resample else {
        bail!("this command needs a [resample] section");
    };
    let kernel = kernel_of(cfg)?;
    let scheme = cfg.scheme.build()?;
    let input = cfg.resolve(&r.input);
    let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
    let encoding = r
        .encoding
        .pick(detect_encoding(&bytes).context("input is not a PGM file")?);
    let image = decode_pgm(&bytes)?;
    let out = resample_image(
        &kernel,
        &image,
        &scheme,
        r.w_in,
        r.w_out,
        &cfg.study.settings(),
    )?;
    let encoded = encode_pgm(&out, encoding)?;
    let name = r.output.to_string_lossy().into_owned();
    Ok(Outcome {
        summary: Some(format!(
            "{}x{} -> {}x{} with {kernel}\n",
            image.width, image.height, out.width, out.height
        )),
        checks: Vec::new(),
        files: vec![(name, encoded)],
    })
}
