//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! with status 1 if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use kantorovich::analysis::{
    convergence_study, least_concave_majorant, modulus_curve, voronovskaja_study,
    ConvergenceRecord, ModulusCurve, StudyOptions,
};
use kantorovich::csv::{fmt_f64, table_string};
use kantorovich::fields::{Field2D, Rect, Smoothness, TestField};
use kantorovich::kernels::{
    build_bochner_riesz, build_tensor_bspline, shipped_compact_kernels, solve_shift_coefficients,
    solve_translation_coefficients, Kernel2D,
};
use kantorovich::moments::{extrapolated_moment, lattice_sum_exact, MomentReport, DEFAULT_RADII};
use kantorovich::operator::{apply_on_grid, make_paper_scheme, resample_image, IntervalScheme};
use kantorovich::pgm::{decode_pgm, encode_pgm, PgmEncoding, Raster};
use kantorovich::special::bessel_j;
use kantorovich::{EvalSettings, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const W_LIST: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn kernel(name: &str) -> Kernel2D {
    shipped_compact_kernels()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| k)
        .unwrap_or_else(|| panic!("no shipped kernel {name}"))
}

/// Kernels that are even in each variable, or in (x, y) jointly.
const SYMMETRIC: [&str; 5] = [
    "beta2xbeta2",
    "beta3xbeta3",
    "separable-d2-symmetric",
    "translated-diagonal",
    "translated-signed",
];

/// The two kernels of the study matrix.
const STUDY_KERNELS: [&str; 2] = ["separable-d2-symmetric", "translated-signed"];

fn records_csv(records: &[ConvergenceRecord]) -> String {
    table_string(
        &ConvergenceRecord::CSV_HEADER,
        records.iter().map(|r| r.csv_record()),
    )
    .unwrap()
}

fn lattice_certification() -> Outcome {
    let start = Instant::now();
    let n = 101;
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for (name, k) in shipped_compact_kernels() {
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
                worst = worst.max((lattice_sum_exact(&k, 0, 0, x, y) - 1.0).abs());
            }
        }
        names.push(name);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 5.0,
        format!(
            "{} kernels, worst |sum - 1| = {worst:.2e}, {secs:.2} s",
            names.len()
        ),
    )
}

fn shift_system() -> Outcome {
    let sym = solve_shift_coefficients(-1.0, 1.0).unwrap();
    let exact = sym == [0.5, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // absolute residuals on O(1) coefficients; scale-relative ones on any
    // distinct pair, where rounding grows like |e0 e1| / |e1 - e0|
    let (mut worst_abs, mut worst_rel): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let e0: f64 = rng.gen_range(-3.0..3.0);
        let e1: f64 = rng.gen_range(-3.0..3.0);
        if e0 == e1 {
            continue;
        }
        let [a0, a1] = solve_shift_coefficients(e0, e1).unwrap();
        let r1 = (a0 + a1 - 1.0).abs();
        let r2 = (e0 * a0 + e1 * a1).abs();
        let scale = 1.0f64.max(a0.abs()).max(a1.abs()).max((e0 * a0).abs());
        worst_rel = worst_rel.max(r1.max(r2) / scale);
        if e0.abs() <= 2.0 && e1.abs() <= 2.0 && (e1 - e0).abs() >= 0.5 {
            worst_abs = worst_abs.max(r1).max(r2);
        }
    }
    outcome(
        exact && worst_abs <= 1e-14 && worst_rel <= 4.0 * f64::EPSILON,
        format!(
            "(-1, 1) -> {sym:?}; worst residual {worst_abs:.2e} (|eps| <= 2, gap >= 0.5), \
             worst scale-relative residual {worst_rel:.2e} (any gap)"
        ),
    )
}

fn translation_system() -> Outcome {
    let (a, b, c, s) = (1.0, 1.0, 1.0, [-1.0, -1.0, -1.0]);
    let cs = solve_translation_coefficients(a, b, c, s).unwrap();
    let [c1, c2, c3, c4] = cs;
    let res = [
        c1 + 2.0 * (c2 + c3 + c4) - 1.0,
        -2.0 * (a * a * c2 + b * b * c3) - s[0],
        -2.0 * (a * a * c2 + c * c * c4) - s[1],
        -2.0 * a * a * c2 - s[2],
    ];
    let worst = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let want = [0.0, 0.5, 0.0, 0.0];
    let close = cs.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-12);
    outcome(
        close && worst <= 1e-12,
        format!("C = {cs:?}, worst equation residual {worst:.2e}"),
    )
}

fn bessel_half_integer() -> Outcome {
    let mut worst: f64 = 0.0;
    for x in [0.5, 1.0, 5.0, 20.0, 100.0] {
        let want = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
        let got = bessel_j(1.5, x).unwrap();
        worst = worst.max(((got - want) / want).abs());
    }
    outcome(worst <= 1e-10, format!("worst relative error {worst:.2e}"))
}

fn bochner_riesz_moments() -> (Outcome, String) {
    let k = build_bochner_riesz(3.0).unwrap();
    let target = -3.0 / PI;
    let mut rows: Vec<MomentReport> = Vec::new();
    let mut limits: Vec<Vec<String>> = Vec::new();
    let mut lines = Vec::new();
    let (mut m20_ok, mut m00_ok, mut m11_ok, mut time_ok) = (true, true, true, true);
    for (x, y) in [(0.3, 0.7), (0.0, 0.0), (0.5, 0.25)] {
        let start = Instant::now();
        let m00 = extrapolated_moment(&k, 0, 0, x, y, &DEFAULT_RADII).unwrap();
        let m20 = extrapolated_moment(&k, 2, 0, x, y, &DEFAULT_RADII).unwrap();
        let m11 = extrapolated_moment(&k, 1, 1, x, y, &DEFAULT_RADII).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let (v00, v20, v11) = (
            m00.extrapolation.value,
            m20.extrapolation.value,
            m11.extrapolation.value,
        );
        m00_ok &= (v00 - 1.0).abs() <= 1e-2;
        m20_ok &= (v20 - target).abs() <= 2e-2;
        m11_ok &= v11.abs() <= 2e-2;
        time_ok &= secs < 60.0;
        lines.push(format!(
            "({x}, {y}): m00 {v00:.5}, m20 {v20:.5}, m11 {v11:.1e}, {secs:.1} s"
        ));
        for m in [&m00, &m20, &m11] {
            rows.extend(m.raw.iter().cloned());
            let r = &m.raw[0];
            limits.push(vec![
                r.h1.to_string(),
                r.h2.to_string(),
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(m.extrapolation.value),
                fmt_f64(m.extrapolation.rms_residual),
            ]);
        }
    }
    let mut csv = table_string(
        &MomentReport::CSV_HEADER,
        rows.iter().map(|r| r.csv_record()),
    )
    .unwrap();
    csv.push_str(
        &table_string(
            &["h1", "h2", "x", "y", "extrapolated", "rms_residual"],
            limits,
        )
        .unwrap(),
    );
    let mut detail = format!(
        "m20 target {target:.5} [{}], partition [{}], m11 [{}], runtime [{}]; ",
        ok(m20_ok),
        ok(m00_ok),
        ok(m11_ok),
        ok(time_ok)
    );
    detail.push_str(&lines.join("; "));
    (outcome(m20_ok && m00_ok && m11_ok && time_ok, detail), csv)
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "miss"
    }
}

fn operator_exactness(settings: &EvalSettings) -> (Outcome, String) {
    let scheme = make_paper_scheme();
    let grid = GridSpec::square(-1.0, 1.0, 11);
    let mut csv = String::new();
    let (mut worst_const, mut worst_lin): (f64, f64) = (0.0, 0.0);
    for (name, k) in shipped_compact_kernels() {
        for w in [4.0, 8.0, 16.0] {
            let one =
                apply_on_grid(&k, &TestField::Constant(1.0), &scheme, w, &grid, settings).unwrap();
            worst_const = one
                .values
                .iter()
                .fold(worst_const, |m, v| m.max((v - 1.0).abs()));
            if !SYMMETRIC.contains(&name) {
                continue;
            }
            let gu = apply_on_grid(&k, &TestField::coord_u(), &scheme, w, &grid, settings).unwrap();
            let gv = apply_on_grid(&k, &TestField::coord_v(), &scheme, w, &grid, settings).unwrap();
            for idx in 0..grid.len() {
                let (x, y) = grid.at(idx);
                worst_lin = worst_lin
                    .max((gu.values[idx] - (x + scheme.alpha / (2.0 * w))).abs())
                    .max((gv.values[idx] - (y + scheme.beta / (2.0 * w))).abs());
            }
            csv.push_str(&table_string(&["x", "y", "value"], gu.csv_records()).unwrap());
        }
    }
    (
        outcome(
            worst_const <= 1e-12 && worst_lin <= 1e-9,
            format!("worst |K1 - 1| = {worst_const:.2e}, worst affine defect = {worst_lin:.2e}"),
        ),
        csv,
    )
}

fn voronovskaja_rate(settings: &EvalSettings, options: &StudyOptions) -> (Outcome, String) {
    let scheme = make_paper_scheme();
    let ws = [8.0, 16.0, 32.0, 64.0];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut csv = String::new();
    for name in ["beta2xbeta2", "separable-d2-symmetric"] {
        let k = kernel(name);
        let recs = voronovskaja_study(
            &k,
            &TestField::SquareNorm,
            &scheme,
            (0.3, 0.4),
            &ws,
            settings,
            options,
        )
        .unwrap();
        let res: Vec<f64> = recs.iter().map(|r| r.voron_residual.unwrap()).collect();
        let ratios: Vec<f64> = res.windows(2).map(|p| p[1] / p[0]).collect();
        pass &= ratios.iter().all(|r| (0.3..=0.7).contains(r));
        parts.push(format!(
            "{name}: ratios {}",
            ratios
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        csv.push_str(&records_csv(&recs));
    }
    (outcome(pass, parts.join("; ")), csv)
}

fn rate_domination(settings: &EvalSettings, options: &StudyOptions) -> (Outcome, String) {
    let scheme = make_paper_scheme();
    let grid = GridSpec::square(-1.0, 1.0, 21);
    let mut violations = 0;
    let mut cases = 0;
    let mut tightest: f64 = 0.0;
    let mut csv = String::new();
    for name in STUDY_KERNELS {
        let k = kernel(name);
        for f in TestField::catalog() {
            let recs =
                convergence_study(&k, &f, &scheme, &grid, &W_LIST, settings, options).unwrap();
            for r in &recs {
                cases += 1;
                violations += r.thm35_violated as usize;
                if r.thm35_bound > 0.0 {
                    tightest = tightest.max(r.sup_error / r.thm35_bound);
                }
            }
            csv.push_str(&records_csv(&recs));
        }
    }
    (
        outcome(
            violations == 0,
            format!("{violations} violations in {cases} cases; largest error/bound {tightest:.3}"),
        ),
        csv,
    )
}

fn quantitative_voronovskaja(settings: &EvalSettings, options: &StudyOptions) -> (Outcome, String) {
    let scheme = make_paper_scheme();
    let mut violations = 0;
    let mut cases = 0;
    let mut tightest: f64 = 0.0;
    let mut csv = String::new();
    for name in STUDY_KERNELS {
        let k = kernel(name);
        for f in TestField::catalog() {
            if f.smoothness() < Smoothness::C1 {
                continue;
            }
            for point in [(0.3, 0.4), (-0.7, 0.2)] {
                let recs =
                    voronovskaja_study(&k, &f, &scheme, point, &W_LIST, settings, options).unwrap();
                for r in &recs {
                    cases += 1;
                    violations += r.thm37_violated as usize;
                    let (res, b) = (r.voron_residual.unwrap(), r.thm37_bound.unwrap());
                    if b > 0.0 {
                        tightest = tightest.max(res / b);
                    }
                }
                csv.push_str(&records_csv(&recs));
            }
        }
    }
    (
        outcome(
            violations == 0,
            format!(
                "{violations} violations in {cases} cases; largest residual/bound {tightest:.3}"
            ),
        ),
        csv,
    )
}

fn majorant_correctness() -> Outcome {
    let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut curves = Vec::new();
    for _ in 0..200 {
        let n = rng.gen_range(3..60);
        let deltas: Vec<f64> = (0..n).map(|i| i as f64 * 0.05).collect();
        let omegas: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        curves.push(ModulusCurve::new(deltas, omegas, unit).unwrap());
    }
    let deltas: Vec<f64> = (0..80).map(|i| i as f64 * 0.025).collect();
    for f in TestField::catalog() {
        curves.push(modulus_curve(&f, &deltas, &unit, 500, 4, false).unwrap());
    }
    let (mut worst_concave, mut worst_dom): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for c in &curves {
        let m = least_concave_majorant(c).unwrap();
        worst_concave = worst_concave.max(m.concavity_defect());
        for (a, b) in c.omegas.iter().zip(&m.omegas) {
            worst_dom = worst_dom.max(a - b);
        }
    }
    let concave_inputs: Vec<Vec<f64>> = vec![
        deltas.iter().map(|d| d.min(1.0)).collect(),
        deltas.iter().map(|d| d.sqrt()).collect(),
        deltas.iter().map(|d| 2.0 * d).collect(),
        deltas.iter().map(|d| 1.0 - (-d).exp()).collect(),
    ];
    let mut fixed = true;
    for w in concave_inputs {
        let c = ModulusCurve::new(deltas.clone(), w, unit).unwrap();
        fixed &= least_concave_majorant(&c).unwrap().omegas == c.omegas;
    }
    outcome(
        worst_concave <= 1e-12 && worst_dom <= 0.0 && fixed,
        format!(
            "{} curves; worst concavity defect {worst_concave:.2e}, worst undershoot {worst_dom:.2e}, fixed points {}",
            curves.len(),
            ok(fixed)
        ),
    )
}

fn resampler_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pixels: Vec<u8> = (0..17 * 13).map(|_| rng.gen()).collect();
    let image = Raster::new(17, 13, pixels).unwrap();
    let id_kernel = build_tensor_bspline(0, 0);
    let id_scheme = IntervalScheme::uniform(1.0, 1.0).unwrap();
    let settings = EvalSettings::default();
    let mut identity = true;
    for enc in [PgmEncoding::Binary, PgmEncoding::Ascii] {
        let bytes = encode_pgm(&image, enc).unwrap();
        for w in [1.0, 3.0] {
            let input = decode_pgm(&bytes).unwrap();
            let out = resample_image(&id_kernel, &input, &id_scheme, w, w, &settings).unwrap();
            identity &= encode_pgm(&out, enc).unwrap() == bytes;
        }
    }
    let flat = Raster::filled(9, 7, 173).unwrap();
    let schemes = [
        make_paper_scheme(),
        IntervalScheme::uniform(1.0, 1.0).unwrap(),
        IntervalScheme::uniform(2.0, 1.0).unwrap(),
    ];
    let mut constant = true;
    let mut runs = 0;
    for (_, k) in shipped_compact_kernels() {
        for s in &schemes {
            for (wi, wo) in [(1.0, 1.0), (1.0, 2.5), (2.0, 1.0), (1.0, 0.5), (3.0, 7.0)] {
                let out = resample_image(&k, &flat, s, wi, wo, &settings).unwrap();
                constant &= out.pixels.iter().all(|&p| p == 173);
                runs += 1;
            }
        }
    }
    let tiny = Raster::filled(4, 3, 42).unwrap();
    let br = build_bochner_riesz(3.0).unwrap();
    let out = resample_image(&br, &tiny, &schemes[0], 1.0, 1.5, &settings).unwrap();
    constant &= out.pixels.iter().all(|&p| p == 42);
    runs += 1;
    outcome(
        identity && constant,
        format!(
            "identity bitwise [{}], constant images [{}] over {runs} runs",
            ok(identity),
            ok(constant)
        ),
    )
}

type CsvRuns = [String; 5];

fn csv_bundle(settings: &EvalSettings, options: &StudyOptions) -> CsvRuns {
    [
        bochner_riesz_moments().1,
        operator_exactness(settings).1,
        voronovskaja_rate(settings, options).1,
        rate_domination(settings, options).1,
        quantitative_voronovskaja(settings, options).1,
    ]
}

fn determinism(first: &CsvRuns) -> Outcome {
    let sequential = EvalSettings::sequential();
    let options = StudyOptions {
        parallel: false,
        ..StudyOptions::default()
    };
    let second = csv_bundle(&sequential, &options);
    let same: Vec<bool> = first.iter().zip(&second).map(|(a, b)| a == b).collect();
    let bytes: usize = first.iter().map(|s| s.len()).sum();
    outcome(
        same.iter().all(|s| *s),
        format!(
            "rerun (sequential) vs first run (parallel): {} of 5 CSV streams identical, {bytes} bytes",
            same.iter().filter(|s| **s).count()
        ),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let settings = EvalSettings::default();
    let options = StudyOptions::default();
    let mut csv: Vec<String> = Vec::new();
    let mut with_csv = |pair: (Outcome, String)| {
        csv.push(pair.1);
        pair.0
    };

    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (
            1,
            "kernel partition of unity",
            guarded(lattice_certification),
        ),
        (2, "shift coefficient system", guarded(shift_system)),
        (
            3,
            "translation coefficient system",
            guarded(translation_system),
        ),
        (
            4,
            "Bessel half-integer oracle",
            guarded(bessel_half_integer),
        ),
        (
            5,
            "Bochner-Riesz moments",
            guarded(|| with_csv(bochner_riesz_moments())),
        ),
        (
            6,
            "operator exactness",
            guarded(|| with_csv(operator_exactness(&settings))),
        ),
        (
            7,
            "Voronovskaja rate",
            guarded(|| with_csv(voronovskaja_rate(&settings, &options))),
        ),
        (
            8,
            "rate bound domination",
            guarded(|| with_csv(rate_domination(&settings, &options))),
        ),
        (
            9,
            "quantitative Voronovskaja domination",
            guarded(|| with_csv(quantitative_voronovskaja(&settings, &options))),
        ),
        (10, "concave majorant", guarded(majorant_correctness)),
        (11, "resampler identity", guarded(resampler_identity)),
    ];
    let first: Option<CsvRuns> = csv.try_into().ok();
    results.push((
        12,
        "determinism",
        guarded(|| match &first {
            Some(first) => determinism(first),
            None => outcome(false, "an earlier criterion did not produce its CSV"),
        }),
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as usize;
        println!("{tag} criterion {n:>2} {name}: {}", o.detail);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
