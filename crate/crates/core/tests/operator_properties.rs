use kantorovich::analysis::growth_series_bound;
use kantorovich::fields::{Field2D, Rect, Smoothness, TestField};
use kantorovich::kernels::{build_bochner_riesz, build_tensor_bspline, shipped_compact_kernels};
use kantorovich::moments::{absolute_moments, Truncation};
use kantorovich::operator::{
    apply_k, apply_on_grid, apply_t, make_paper_scheme, resample_image, truncation_tail,
    IntervalScheme,
};
use kantorovich::pgm::Raster;
use kantorovich::quadrature::GaussLegendre;
use kantorovich::{EvalSettings, GridSpec};
use proptest::prelude::*;

/// f + λg, with cell means combined from the parts.
struct Combo {
    f: TestField,
    g: TestField,
    lambda: f64,
}

impl Field2D for Combo {
    fn eval(&self, u: f64, v: f64) -> f64 {
        self.f.eval(u, v) + self.lambda * self.g.eval(u, v)
    }

    fn rect_mean(&self, r: &Rect, q: &GaussLegendre) -> f64 {
        self.f.rect_mean(r, q) + self.lambda * self.g.rect_mean(r, q)
    }

    fn smoothness(&self) -> Smoothness {
        self.f.smoothness().min(self.g.smoothness())
    }
}

fn catalog_strategy() -> impl Strategy<Value = TestField> {
    (0..TestField::NAMES.len()).prop_map(|i| TestField::catalog()[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_is_linear(
        f in catalog_strategy(),
        g in catalog_strategy(),
        lambda in -3.0f64..3.0,
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        w in 1.0f64..20.0,
    ) {
        let k = build_tensor_bspline(2, 3);
        let s = make_paper_scheme();
        let set = EvalSettings::sequential();
        let lhs = apply_k(&k, &Combo { f, g, lambda }, &s, w, x, y, &set);
        let rhs = apply_k(&k, &f, &s, w, x, y, &set) + lambda * apply_k(&k, &g, &s, w, x, y, &set);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn constants_are_reproduced_under_any_scheme(
        c in -5.0f64..5.0,
        alpha in -2.0f64..3.0,
        beta in -2.0f64..3.0,
        w in 0.5f64..40.0,
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
    ) {
        let s = IntervalScheme::uniform(alpha, beta).unwrap();
        for (_, k) in shipped_compact_kernels() {
            let v = apply_k(&k, &TestField::Constant(c), &s, w, x, y, &EvalSettings::sequential());
            prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }
}

#[test]
fn single_point_grid_matches_pointwise() {
    let k = build_tensor_bspline(3, 3);
    let s = make_paper_scheme();
    let set = EvalSettings::default();
    let f = TestField::SinCos;
    let g = apply_on_grid(&k, &f, &s, 8.0, &GridSpec::point(0.3, -0.2), &set).unwrap();
    assert_eq!(g.values, vec![apply_k(&k, &f, &s, 8.0, 0.3, -0.2, &set)]);
}

#[test]
fn grid_of_u_is_column_affine() {
    let k = build_tensor_bspline(2, 2);
    let s = make_paper_scheme();
    let w = 8.0;
    let grid = GridSpec::square(-0.5, 0.5, 9);
    let g = apply_on_grid(
        &k,
        &TestField::coord_u(),
        &s,
        w,
        &grid,
        &EvalSettings::default(),
    )
    .unwrap();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let want = grid.x(ix) + s.alpha / (2.0 * w);
            assert!((g.get(ix, iy) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn parallel_and_sequential_grids_agree_bitwise() {
    let k = build_tensor_bspline(3, 2);
    let s = make_paper_scheme();
    let grid = GridSpec::square(-1.0, 1.0, 17);
    let f = TestField::Gaussian;
    let par = apply_on_grid(&k, &f, &s, 16.0, &grid, &EvalSettings::default()).unwrap();
    let seq = apply_on_grid(&k, &f, &s, 16.0, &grid, &EvalSettings::sequential()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&par.values), bits(&seq.values));
}

#[test]
fn sampling_series_converges_for_gaussian() {
    let k = build_tensor_bspline(2, 2);
    let f = TestField::Gaussian;
    let set = EvalSettings::default();
    let errs: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&w| (apply_t(&k, &f, w, 0.3, 0.4, &set) - f.eval(0.3, 0.4)).abs())
        .collect();
    assert!(errs.windows(2).all(|p| p[1] < p[0]), "{errs:?}");
}

#[test]
fn kantorovich_sup_error_decreases_for_gaussian() {
    let k = build_tensor_bspline(2, 2);
    let s = make_paper_scheme();
    let f = TestField::Gaussian;
    let grid = GridSpec::square(-1.0, 1.0, 21);
    let mut prev = f64::INFINITY;
    for w in [4.0, 8.0, 16.0, 32.0, 64.0] {
        let g = apply_on_grid(&k, &f, &s, w, &grid, &EvalSettings::default()).unwrap();
        let err = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.at(i);
                (g.values[i] - f.eval(x, y)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < prev, "w={w}: {err} vs {prev}");
        prev = err;
    }
}

#[test]
fn quadratic_growth_series_is_stable_and_bounded() {
    let s = make_paper_scheme();
    let f = TestField::SquareNorm;
    for (name, k) in shipped_compact_kernels() {
        let m = absolute_moments(&k, Truncation::Exact, 41, true).unwrap();
        let support = k.support_radius().unwrap();
        for (w, x, y) in [(4.0, 0.3, 0.4), (8.0, -1.5, 2.0), (16.0, 3.0, -0.25)] {
            let base = EvalSettings {
                truncation: Some(support + 2.0),
                ..EvalSettings::sequential()
            };
            let wide = EvalSettings {
                truncation: Some(support + 2.0 + w * f64::max(x, y).abs() + 10.0),
                ..EvalSettings::sequential()
            };
            let a = apply_k(&k, &f, &s, w, x, y, &base);
            let b = apply_k(&k, &f, &s, w, x, y, &wide);
            assert_eq!(a.to_bits(), b.to_bits(), "{name}");
            let bound = growth_series_bound(&m, f.growth().unwrap(), s.kbound, w, x, y);
            assert!(a.abs() <= bound, "{name}: {a} > {bound}");
        }
    }
}

#[test]
fn bochner_riesz_reproduces_constants_up_to_the_tail() {
    let k = build_bochner_riesz(3.0).unwrap();
    let s = make_paper_scheme();
    let set = EvalSettings::default();
    let v = apply_k(&k, &TestField::Constant(1.0), &s, 4.0, 0.3, 0.4, &set);
    let tail = truncation_tail(&k, set.radius_for(&k));
    assert!((v - 1.0).abs() <= tail, "{v} with tail {tail}");
}

#[test]
fn upscaled_ramp_stays_monotone() {
    let width = 16;
    let pixels: Vec<u8> = (0..4)
        .flat_map(|_| (0..width).map(|c| (c * 15) as u8))
        .collect();
    let ramp = Raster::new(width, 4, pixels).unwrap();
    let scheme = IntervalScheme::uniform(1.0, 1.0).unwrap();
    for d in [0, 1, 2, 3] {
        let k = build_tensor_bspline(d, d);
        let out = resample_image(&k, &ramp, &scheme, 1.0, 2.5, &EvalSettings::default()).unwrap();
        assert_eq!(out.width, 40);
        for r in 0..out.height {
            for c in 1..out.width {
                assert!(
                    out.get(c, r) >= out.get(c - 1, r),
                    "degree {d} row {r} col {c}"
                );
            }
        }
    }
}
