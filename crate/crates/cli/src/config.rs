//! Run configuration. One TOML file per run; relative paths are resolved
//! against the directory holding the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kantorovich::fields::{Field2D, RasterField, TestField};
use kantorovich::kernels::{
    build_bochner_riesz, build_separable_spline_kernel, build_tensor_bspline,
    build_translated_boxspline_kernel, SeparableSplineKernel, SeparableSplineSpec,
    TranslatedBoxSplineSpec,
};
use kantorovich::operator::CustomTable;
use kantorovich::pgm::{read_pgm, PgmEncoding};
use kantorovich::{EvalSettings, GridSpec, IntervalScheme, Kernel2D};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub check: CheckConfig,
    pub resample: Option<ResampleConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    TensorBspline {
        d1: u32,
        d2: u32,
    },
    SeparableSpline {
        d1: u32,
        d2: u32,
        eps0: f64,
        eps1: f64,
        /// Defaults to `eps0`.
        eps0p: Option<f64>,
        /// Defaults to `eps1`.
        eps1p: Option<f64>,
        /// Explicit coefficients; skips the moment solve. For diagnostics.
        a: Option<[f64; 2]>,
        b: Option<[f64; 2]>,
    },
    TranslatedBoxspline {
        base: Box<KernelConfig>,
        a: f64,
        b: f64,
        c: f64,
        s: [f64; 3],
    },
    BochnerRiesz {
        gamma: f64,
    },
}

impl KernelConfig {
    pub fn build(&self) -> Result<Kernel2D> {
        Ok(match self {
            KernelConfig::TensorBspline { d1, d2 } => build_tensor_bspline(*d1, *d2),
            KernelConfig::SeparableSpline {
                d1,
                d2,
                eps0,
                eps1,
                eps0p,
                eps1p,
                a,
                b,
            } => {
                let spec = SeparableSplineSpec {
                    d1: *d1,
                    d2: *d2,
                    eps0: *eps0,
                    eps1: *eps1,
                    eps0p: eps0p.unwrap_or(*eps0),
                    eps1p: eps1p.unwrap_or(*eps1),
                };
                match (a, b) {
                    (None, None) => build_separable_spline_kernel(spec)?,
                    _ => {
                        let solved = match build_separable_spline_kernel(spec) {
                            Ok(Kernel2D::Separable(k)) => Some(k),
                            _ => None,
                        };
                        let pick = |given: &Option<[f64; 2]>, solved: Option<[f64; 2]>| {
                            given
                                .or(solved)
                                .context("explicit coefficients needed for both axes")
                        };
                        let ca = pick(a, solved.as_ref().map(|k| k.a))?;
                        let cb = pick(b, solved.as_ref().map(|k| k.b))?;
                        Kernel2D::Separable(SeparableSplineKernel::from_coefficients(spec, ca, cb))
                    }
                }
            }
            KernelConfig::TranslatedBoxspline { base, a, b, c, s } => {
                build_translated_boxspline_kernel(TranslatedBoxSplineSpec {
                    base: base.build()?,
                    a: *a,
                    b: *b,
                    c: *c,
                    s: *s,
                })?
            }
            KernelConfig::BochnerRiesz { gamma } => build_bochner_riesz(*gamma)?,
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeConfig {
    #[default]
    Paper,
    Uniform {
        alpha: f64,
        beta: f64,
    },
    Custom {
        k_start: i64,
        a: Vec<f64>,
        b: Vec<f64>,
        j_start: i64,
        c: Vec<f64>,
        d: Vec<f64>,
    },
}

impl SchemeConfig {
    pub fn build(&self) -> Result<IntervalScheme> {
        Ok(match self {
            SchemeConfig::Paper => IntervalScheme::paper(),
            SchemeConfig::Uniform { alpha, beta } => IntervalScheme::uniform(*alpha, *beta)?,
            SchemeConfig::Custom {
                k_start,
                a,
                b,
                j_start,
                c,
                d,
            } => IntervalScheme::custom(CustomTable {
                k_start: *k_start,
                a: a.clone(),
                b: b.clone(),
                j_start: *j_start,
                c: c.clone(),
                d: d.clone(),
            })?,
        })
    }
}

/// Either a catalog field (`name`) or a PGM image (`image`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub name: Option<String>,
    /// Value of the `constant` field.
    pub value: Option<f64>,
    /// Coefficients of the `affine` field c0 + cu·u + cv·v.
    pub c0: Option<f64>,
    pub cu: Option<f64>,
    pub cv: Option<f64>,
    pub image: Option<PathBuf>,
    /// Pixels per unit length for image fields.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl FieldConfig {
    pub fn build(&self, cfg: &RunConfig) -> Result<Box<dyn Field2D>> {
        match (&self.name, &self.image) {
            (Some(name), None) => {
                let mut f = TestField::by_name(name).with_context(|| {
                    format!(
                        "unknown field {name:?}; expected one of {:?}",
                        TestField::NAMES
                    )
                })?;
                match &mut f {
                    TestField::Constant(v) => {
                        if let Some(x) = self.value {
                            *v = x;
                        }
                    }
                    TestField::Affine { c0, cu, cv } => {
                        *c0 = self.c0.unwrap_or(*c0);
                        *cu = self.cu.unwrap_or(*cu);
                        *cv = self.cv.unwrap_or(*cv);
                    }
                    _ => {}
                }
                Ok(Box::new(f))
            }
            (None, Some(path)) => {
                if !(self.scale > 0.0) {
                    bail!("field scale must be positive, got {}", self.scale);
                }
                let raster = read_pgm(&cfg.resolve(path))?;
                Ok(Box::new(RasterField::new(&raster, self.scale)))
            }
            _ => bail!("[field] needs exactly one of `name` or `image`"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub w: Vec<f64>,
    /// [u0, u1, v0, v1]
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub grid_n: usize,
    pub point: [f64; 2],
    pub truncation: Option<f64>,
    pub quad_order: usize,
    pub modulus_samples: usize,
    pub modulus_nodes: usize,
    pub safety: f64,
    pub seed: Option<u64>,
    pub moment_grid_n: usize,
    pub moment_radius: f64,
    pub timing: bool,
    pub parallel: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let o = kantorovich::analysis::StudyOptions::default();
        Self {
            w: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            bbox: [-1.0, 1.0, -1.0, 1.0],
            grid_n: 21,
            point: [0.3, 0.4],
            truncation: None,
            quad_order: EvalSettings::default().quad_order,
            modulus_samples: o.modulus_samples,
            modulus_nodes: o.modulus_nodes,
            safety: o.safety,
            seed: None,
            moment_grid_n: o.moment_grid_n,
            moment_radius: o.moment_radius,
            timing: false,
            parallel: true,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w.is_empty() {
            bail!("study.w is empty");
        }
        if self.w.iter().any(|w| !(*w > 0.0)) || self.w.windows(2).any(|p| p[1] <= p[0]) {
            bail!(
                "study.w must be positive and strictly ascending, got {:?}",
                self.w
            );
        }
        let [u0, u1, v0, v1] = self.bbox;
        if !(u0 <= u1 && v0 <= v1) {
            bail!("study.box must be [u0, u1, v0, v1] with u0 <= u1, v0 <= v1");
        }
        if self.grid_n == 0 {
            bail!("study.grid_n must be positive");
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        let [u0, u1, v0, v1] = self.bbox;
        GridSpec {
            x0: u0,
            x1: u1,
            nx: self.grid_n,
            y0: v0,
            y1: v1,
            ny: self.grid_n,
        }
    }

    pub fn settings(&self) -> EvalSettings {
        EvalSettings {
            truncation: self.truncation,
            quad_order: self.quad_order,
            parallel: self.parallel,
        }
    }

    pub fn options(&self, seed_flag: Option<u64>) -> kantorovich::analysis::StudyOptions {
        let mut o = kantorovich::analysis::StudyOptions {
            modulus_samples: self.modulus_samples,
            modulus_nodes: self.modulus_nodes,
            safety: self.safety,
            moment_grid_n: self.moment_grid_n,
            moment_radius: self.moment_radius,
            timing: self.timing,
            parallel: self.parallel,
            ..Default::default()
        };
        if let Some(s) = seed_flag.or(self.seed) {
            o.seed = s;
        }
        o
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    pub probes: Vec<[f64; 2]>,
    pub orders: Vec<[u32; 2]>,
    /// Truncation radii for kernels with unbounded support.
    pub radii: Vec<f64>,
    pub grid_n: usize,
    /// Truncation of the absolute moments of unbounded kernels.
    pub absolute_radius: f64,
    pub expect: Vec<MomentExpectation>,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self {
            probes: vec![[0.3, 0.7]],
            orders: vec![[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]],
            radii: kantorovich::moments::DEFAULT_RADII.to_vec(),
            grid_n: kantorovich::moments::DEFAULT_GRID_N,
            absolute_radius: 60.0,
            expect: Vec::new(),
        }
    }
}

/// An asserted moment value: |m_(h1,h2)(x, y) − value| ≤ tol.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentExpectation {
    pub h1: u32,
    pub h2: u32,
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Probe grid per axis for compact kernels.
    pub grid_n: usize,
    pub tol: f64,
    /// Probes and tolerance for extrapolated sums of unbounded kernels.
    pub probes: Vec<[f64; 2]>,
    pub tol_unbounded: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            grid_n: 41,
            tol: 1e-9,
            probes: vec![[0.0, 0.0], [0.3, 0.7], [0.5, 0.25]],
            tol_unbounded: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleConfig {
    pub input: PathBuf,
    /// File name under the output directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub w_in: f64,
    pub w_out: f64,
    #[serde(default)]
    pub encoding: EncodingChoice,
}

fn default_output() -> PathBuf {
    PathBuf::from("resampled.pgm")
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingChoice {
    #[default]
    Same,
    Ascii,
    Binary,
}

impl EncodingChoice {
    pub fn pick(self, input: PgmEncoding) -> PgmEncoding {
        match self {
            EncodingChoice::Same => input,
            EncodingChoice::Ascii => PgmEncoding::Ascii,
            EncodingChoice::Binary => PgmEncoding::Binary,
        }
    }
}
