//! Bivariate Kantorovich-type sampling operators.
//!
//! The crate evaluates
//!
//! ```text
//! (K_w f)(x, y) = Σ_k Σ_j φ(wx − k, wy − j) · mean of f over
//!                 [(k + a_k)/w, (k + b_k)/w] × [(j + c_j)/w, (j + d_j)/w]
//! ```
//!
//! for three kernel families (separable spline kernels, translated tensor
//! B-spline combinations, and the Bochner-Riesz kernel), computes the
//! lattice moments that control its accuracy, and runs convergence studies
//! that compare observed errors with explicit a-priori bounds.
//!
//! Module map:
//!
//! * [`special`]: Gamma, Bessel `J_ν`, central B-splines and their transforms.
//! * [`kernels`]: [`Kernel2D`] and the kernel builders.
//! * [`moments`]: algebraic and absolute lattice moments, tails, extrapolation.
//! * [`operator`]: interval schemes, fields, `T_w` and `K_w`, grids and images.
//! * [`analysis`]: moduli of continuity, concave majorants, error bounds, studies.
//! * [`pgm`] and [`csv`]: file formats.
//!
//! With the default `parallel` feature, probe grids, image rows and moment
//! scans are evaluated with rayon. Every lattice sum is accumulated
//! sequentially in a fixed order, so results do not depend on the schedule.

pub mod analysis;
pub mod csv;
mod error;
pub mod exec;
pub mod fields;
pub mod kernels;
pub mod moments;
pub mod operator;
pub mod pgm;
pub mod quadrature;
pub mod special;
pub mod summation;

pub use error::{Error, Result};
pub use fields::{Field2D, Rect, Smoothness, TestField};
pub use kernels::{Kernel2D, Support};
pub use moments::{AbsoluteMoments, MomentReport, Truncation};
pub use operator::{EvalSettings, GridSpec, IntervalScheme};
