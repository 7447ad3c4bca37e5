//! `validate` subcommand: quick self-contained invariant suites, one line per
//! check, exit code 2 if anything fails. These are smaller, seeded versions
//! of the full test-suite properties, meant to verify an installed binary.

use invmean::{
    conditional_tvp, exact_second_moment_series, ks_statistic, laplace_cdf, laplace_quantile,
    pilot, replicate_with_workers, solve_time_variance_weight, success_probability, sweep_curve,
    tuning_point, tvm_pmf, tvm_tvp_exact, RandomStream, TruncationLaw, ZModel,
};

pub struct Report {
    pub passed: u32,
    pub failed: u32,
}

impl Report {
    fn new() -> Self {
        Self {
            passed: 0,
            failed: 0,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            self.passed += 1;
            println!("ok   - {name}");
        } else {
            self.failed += 1;
            println!("FAIL - {name}: {detail}");
        }
    }
}

/// Seeded random non-degenerate model, cycling the three kinds.
fn random_model(stream: &mut RandomStream, which: u64) -> ZModel<f64> {
    match which % 3 {
        0 => ZModel::bernoulli(1e-4 + 0.999 * stream.unit_f64()).unwrap(),
        1 => ZModel::uniform_scaled(0.01 + 10.0 * stream.unit_f64()).unwrap(),
        _ => {
            let v0 = 2.0 * stream.unit_f64();
            let gap = 0.1 + 2.0 * stream.unit_f64();
            let p0 = 0.05 + 0.9 * stream.unit_f64();
            ZModel::discrete_finite(&[v0, v0 + gap], &[p0, 1.0 - p0]).unwrap()
        }
    }
}

fn sandwich_suite(report: &mut Report, seed: u64) {
    let mut stream = RandomStream::new(seed, 1_000_001);
    let mut worst: f64 = 0.0;
    let mut violations = 0u32;
    for i in 0..500u64 {
        let model = random_model(&mut stream, i);
        let m = model.moments().unwrap();
        let w = (1e-6 + 0.999_99 * stream.unit_f64()) * m.feasibility_limit();
        let p = success_probability(w, &m).unwrap();
        let ratio = p / w;
        if !(ratio < m.z1 && ratio >= m.z1 - w * m.z2 / 2.0 - 1e-12 * m.z1) {
            violations += 1;
            worst = worst.max((ratio - m.z1).abs());
        }
    }
    report.check(
        "sandwich: z1 - w z2/2 <= p_w/w < z1 on 500 random (model, w)",
        violations == 0,
        format!("{violations} violations, worst {worst}"),
    );
}

fn shape_suite(report: &mut Report) {
    for spec in ["bernoulli:0.001", "bernoulli:0.35", "uniform:2.0"] {
        let model: ZModel<f64> = invmean::parse_model_spec(spec).unwrap();
        let m = model.moments().unwrap();
        let limit = m.feasibility_limit();
        let grid: Vec<f64> = (1..50).map(|i| limit * i as f64 / 50.0).collect();
        let curve = sweep_curve(&m, &grid).unwrap();
        let p_scale = curve.iter().map(|t| t.p_w).fold(0.0f64, f64::max);
        let mut ok = true;
        for window in curve.windows(3) {
            ok &= window[2].p_w - 2.0 * window[1].p_w + window[0].p_w <= 1e-9 * p_scale;
            ok &= window[1].variance > window[0].variance;
            ok &= window[2].variance - 2.0 * window[1].variance + window[0].variance > 0.0;
            ok &= window[1].tvp_rel > window[0].tvp_rel;
        }
        report.check(
            &format!("shape: concave p_w, convex variance, monotone tvp [{spec}]"),
            ok,
            "finite-difference violation".to_string(),
        );
    }
}

fn laplace_suite(report: &mut Report) {
    let t = laplace_quantile(0.05f64).unwrap();
    report.check(
        "laplace: quantile(0.05) = 2.11830...",
        (t - 2.118_302_605_249_420_4).abs() < 1e-12,
        format!("got {t}"),
    );
    let mut ok = true;
    for alpha in [0.5f64, 0.1, 0.01] {
        let t = laplace_quantile(alpha).unwrap();
        ok &= (laplace_cdf(t) - laplace_cdf(-t) - (1.0 - alpha)).abs() < 1e-12;
    }
    report.check(
        "laplace: CDF mass inside (-t, t) equals 1 - alpha",
        ok,
        "mass mismatch".to_string(),
    );

    // Simpson quadrature of the density and its second moment.
    let f = |x: f64| (-(2.0f64).sqrt() * x.abs()).exp() / 2.0f64.sqrt();
    let n = 200_000;
    let (a, b) = (-40.0, 40.0);
    let h = (b - a) / n as f64;
    let mut mass = f(a) + f(b);
    let mut second = 0.0;
    for i in 1..n {
        let x = a + i as f64 * h;
        let weight = if i % 2 == 0 { 2.0 } else { 4.0 };
        mass += weight * f(x);
        second += weight * x * x * f(x);
    }
    mass *= h / 3.0;
    second *= h / 3.0;
    report.check(
        "laplace: density integrates to 1 (1e-10) with unit variance (1e-8)",
        (mass - 1.0).abs() < 1e-10 && (second - 1.0).abs() < 1e-8,
        format!("mass {mass}, variance {second}"),
    );
}

fn tvm_suite(report: &mut Report) {
    let model = ZModel::<f64>::bernoulli(0.5).unwrap();
    let m = model.moments().unwrap();
    let law = solve_time_variance_weight(0.5, &m, 1e-12).unwrap();
    report.check(
        "tvm: normalization residual below tolerance",
        law.residual.abs() < 1e-12,
        format!("residual {}", law.residual),
    );

    let sum_at = |d: f64| {
        let mut total = 0.0;
        let mut geom = 1.0;
        for n in 0..5_000u64 {
            total += law.w * geom / (law.beta * law.beta + d * n as f64).sqrt();
            geom *= 1.0 - law.p_w;
        }
        total
    };
    report.check(
        "tvm: defining sum decreases through 1 at d_w",
        sum_at(law.d_w / 2.0) > 1.0 && sum_at(law.d_w * 2.0) < 1.0,
        "monotonicity probe failed".to_string(),
    );

    let mut mass = 0.0;
    let mut positive = true;
    for n in 0..2_000u64 {
        let q = tvm_pmf(n, &law);
        positive &= q > 0.0;
        mass += q;
    }
    report.check(
        "tvm: pmf positive with unit mass",
        positive && (mass - 1.0).abs() < 1e-10,
        format!("mass {mass}"),
    );

    let tvp = tvm_tvp_exact(&law, &m, 1e-10).unwrap();
    let tp = tuning_point(0.5, &m).unwrap();
    let geo = tp.expected_cost * tp.variance;
    let lower = geo / (1.0 + 2.0 * law.d_w * m.z1 * m.z1 / law.p_w).sqrt();
    report.check(
        "tvm: TVP within the analytic sandwich",
        tvp <= geo && tvp >= lower * (1.0 - 1e-9),
        format!("tvp {tvp}, geo {geo}, lower {lower}"),
    );
}

fn sampling_suite(report: &mut Report, seed: u64) {
    let model = ZModel::<f64>::bernoulli(0.3).unwrap();
    let m = model.moments().unwrap();
    // w small enough that E(1-wZ)^4 < (1-p_w)^3: the estimator's fourth
    // moment is finite and the 5% band on the sampled second moment is a
    // sound statistical check.
    let w = 0.2;
    let tp = tuning_point(w, &m).unwrap();
    let law = TruncationLaw::geometric(tp.p_w).unwrap();
    let summary = replicate_with_workers(w, &law, &model, 200_000, seed, 1);
    let band = 4.0 * (tp.variance / summary.reps as f64).sqrt();
    report.check(
        "sampling: Monte Carlo mean within 4 SE of beta",
        (summary.mean - m.beta()).abs() < band,
        format!("mean {} vs {}", summary.mean, m.beta()),
    );

    let series = exact_second_moment_series(w, &law, &m, 1e-10).unwrap();
    let closed = (w / tp.p_w).powi(2);
    report.check(
        "sampling: series second moment matches closed form (1e-8 rel)",
        (series - closed).abs() / closed < 1e-8,
        format!("{series} vs {closed}"),
    );

    let sample_second =
        summary.sample_variance.unwrap() + summary.mean * summary.mean;
    report.check(
        "sampling: sampled second moment within 5% of closed form",
        (sample_second - closed).abs() / closed < 0.05,
        format!("{sample_second} vs {closed}"),
    );

    let mut stream = RandomStream::new(seed, 77);
    let pr = pilot(5_000, &model, 1.0, &mut stream).unwrap();
    let finite = conditional_tvp(&pr, &m).is_some();
    report.check(
        "sampling: conditional variance finite at k = 5000",
        finite,
        "flagged non-finite".to_string(),
    );

    let errors: Vec<f64> = {
        let small_w = 0.01;
        let tp = tuning_point(small_w, &m).unwrap();
        let law = TruncationLaw::geometric(tp.p_w).unwrap();
        let summary = replicate_with_workers(small_w, &law, &model, 4_000, seed + 1, 1);
        invmean::standardized_errors(&summary.per_draw, small_w, &m)
    };
    let d = ks_statistic(&errors, laplace_cdf).unwrap();
    report.check(
        "sampling: standardized errors near Laplace (KS < 0.08 at 4e3 reps)",
        d < 0.08,
        format!("KS {d}"),
    );
}

fn determinism_suite(report: &mut Report, seed: u64) {
    let model = ZModel::<f64>::bernoulli(0.3).unwrap();
    let m = model.moments().unwrap();
    let tp = tuning_point(0.5, &m).unwrap();
    let law = TruncationLaw::geometric(tp.p_w).unwrap();
    let one = replicate_with_workers(0.5, &law, &model, 10_001, seed, 1);
    let four = replicate_with_workers(0.5, &law, &model, 10_001, seed, 4);
    report.check(
        "determinism: replicate identical across worker counts",
        one == four,
        "summaries differ".to_string(),
    );

    let mut a = RandomStream::new(seed, 3);
    let mut b = RandomStream::new(seed, 3);
    let same = (0..1_000).all(|_| a.next_u64() == b.next_u64());
    report.check(
        "determinism: streams reproduce bit-exactly",
        same,
        "sequences diverged".to_string(),
    );
}

/// Runs the requested suite; returns the process exit code.
pub fn run(suite: &str, seed: u64) -> i32 {
    let mut report = Report::new();
    let known = [
        "sandwich",
        "shape",
        "laplace",
        "tvm",
        "sampling",
        "determinism",
    ];
    if suite != "all" && !known.contains(&suite) {
        eprintln!("unknown suite {suite:?}; expected one of: all {}", known.join(" "));
        return 1;
    }
    if suite == "all" || suite == "sandwich" {
        sandwich_suite(&mut report, seed);
    }
    if suite == "all" || suite == "shape" {
        shape_suite(&mut report);
    }
    if suite == "all" || suite == "laplace" {
        laplace_suite(&mut report);
    }
    if suite == "all" || suite == "tvm" {
        tvm_suite(&mut report);
    }
    if suite == "all" || suite == "sampling" {
        sampling_suite(&mut report, seed);
    }
    if suite == "all" || suite == "determinism" {
        determinism_suite(&mut report, seed);
    }
    println!(
        "validate: {} passed, {} failed",
        report.passed, report.failed
    );
    if report.failed > 0 {
        2
    } else {
        0
    }
}
