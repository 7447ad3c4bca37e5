//! Implementations of the experiment subcommands. Each returns a [`Table`]
//! ready to emit; all randomness flows through per-replication streams, so a
//! given seed fixes the output regardless of worker count.

use invmean::{
    adaptive_experiment, ks_statistic, laplace_cdf, laplace_quantile, parse_model_spec,
    replicate_with_workers, standard_normal_cdf, standardized_errors, sweep_curve, tuning_point,
    RandomStream, Result, TruncationLaw, ZModel,
};

use crate::output::{Cell, Meta, Table};

/// Deterministic fan-out: contiguous index chunks per worker, results
/// reassembled in index order.
fn par_map_indexed<T: Send>(
    reps: u64,
    workers: usize,
    f: impl Fn(u64) -> T + Copy + Send + Sync,
) -> Vec<T> {
    let workers = workers.max(1).min(reps.max(1) as usize);
    if workers == 1 {
        return (0..reps).map(f).collect();
    }
    let chunk = reps.div_ceil(workers as u64);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|j| {
                let start = j * chunk;
                let end = ((j + 1) * chunk).min(reps);
                scope.spawn(move || (start..end).map(f).collect::<Vec<_>>())
            })
            .collect();
        let mut all = Vec::with_capacity(reps as usize);
        for handle in handles {
            all.extend(handle.join().expect("worker panicked"));
        }
        all
    })
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn curve(model_spec: &str, wmin: f64, wmax: f64, points: usize, seed: u64) -> Result<Table> {
    let model: ZModel<f64> = parse_model_spec(model_spec)?;
    let m = model.moments()?;
    let grid = linspace(wmin, wmax, points);
    let tuning = sweep_curve(&m, &grid)?;
    let rows = tuning
        .iter()
        .map(|t| {
            vec![
                Cell::Float(t.w),
                Cell::Float(t.p_w),
                Cell::Float(t.expected_cost),
                Cell::Float(t.variance),
                Cell::Float(t.rel_variance),
                Cell::Float(t.tvp_rel),
            ]
        })
        .collect();
    Ok(Table {
        meta: Meta::new(
            "curve",
            seed,
            &[
                ("model", model_spec.to_string()),
                ("wmin", wmin.to_string()),
                ("wmax", wmax.to_string()),
                ("points", points.to_string()),
            ],
        ),
        columns: vec!["w", "p_w", "expected_cost", "variance", "rel_variance", "tvp_rel"],
        rows,
    })
}

pub fn estimate(
    model_spec: &str,
    w: f64,
    reps: u64,
    alpha: f64,
    seed: u64,
    workers: usize,
) -> Result<Table> {
    let model: ZModel<f64> = parse_model_spec(model_spec)?;
    let m = model.moments()?;
    let tp = tuning_point(w, &m)?;
    let law = TruncationLaw::geometric(tp.p_w)?;
    let summary = replicate_with_workers(w, &law, &model, reps, seed, workers);

    // Laplace-asymptotic interval around the replication mean. For reps > 1
    // the single-draw scale shrinks by sqrt(reps); the Laplace quantile is
    // kept, which errs on the wide side for means.
    let t = laplace_quantile(alpha)?;
    let half_width = t * m.sigma * (w * m.z1).sqrt() / (reps as f64).sqrt();

    let row = vec![
        Cell::Float(w),
        Cell::Float(tp.p_w),
        Cell::Int(summary.reps),
        Cell::Float(summary.mean),
        summary.sample_variance.map_or(Cell::Missing, Cell::Float),
        summary.standard_error.map_or(Cell::Missing, Cell::Float),
        Cell::Int(summary.total_cost),
        Cell::Float(alpha),
        Cell::Float(summary.mean - half_width),
        Cell::Float(summary.mean + half_width),
    ];
    Ok(Table {
        meta: Meta::new(
            "estimate",
            seed,
            &[
                ("model", model_spec.to_string()),
                ("w", w.to_string()),
                ("reps", reps.to_string()),
                ("alpha", alpha.to_string()),
            ],
        ),
        columns: vec![
            "w",
            "p_w",
            "reps",
            "mean",
            "sample_variance",
            "standard_error",
            "total_cost",
            "alpha",
            "ci_lower",
            "ci_upper",
        ],
        rows: vec![row],
    })
}

pub fn adaptive(
    model_spec: &str,
    k: u64,
    reps: u64,
    epsilon: Option<f64>,
    seed: u64,
    workers: usize,
) -> Result<Table> {
    let model: ZModel<f64> = parse_model_spec(model_spec)?;
    // For bounded Z, epsilon = 1/b is always a valid lower bound on beta.
    let epsilon = epsilon.unwrap_or(1.0 / model.bound());
    let experiment = adaptive_experiment(&model, k, reps, epsilon, seed, workers)?;
    let row = vec![
        Cell::Int(experiment.k),
        Cell::Int(experiment.reps),
        Cell::Float(experiment.epsilon),
        Cell::Float(experiment.mean_estimate),
        Cell::Float(experiment.sample_variance),
        Cell::Float(experiment.mean_inverse_p),
        Cell::Float(experiment.expected_total_cost),
        Cell::Float(experiment.observed_mean_cost),
        Cell::Float(experiment.tvp_rel),
        Cell::Float(experiment.tvp_rel_stderr),
        Cell::Float(experiment.tvp_rel_lower),
        Cell::Float(experiment.tvp_rel_upper),
    ];
    Ok(Table {
        meta: Meta::new(
            "adaptive-experiment",
            seed,
            &[
                ("model", model_spec.to_string()),
                ("k", k.to_string()),
                ("reps", reps.to_string()),
                ("epsilon", epsilon.to_string()),
            ],
        ),
        columns: vec![
            "k",
            "reps",
            "epsilon",
            "mean_estimate",
            "sample_variance",
            "mean_inverse_p",
            "expected_total_cost",
            "observed_mean_cost",
            "tvp_rel",
            "tvp_rel_stderr",
            "tvp_rel_lower",
            "tvp_rel_upper",
        ],
        rows: vec![row],
    })
}

pub fn convergence(
    model_spec: &str,
    w: f64,
    reps: u64,
    seed: u64,
    workers: usize,
) -> Result<Table> {
    let model: ZModel<f64> = parse_model_spec(model_spec)?;
    let m = model.moments()?;
    let tp = tuning_point(w, &m)?;
    let law = TruncationLaw::geometric(tp.p_w)?;
    let summary = replicate_with_workers(w, &law, &model, reps, seed, workers);
    let errors = standardized_errors(&summary.per_draw, w, &m);

    let ks_laplace = ks_statistic(&errors, laplace_cdf)?;
    let ks_normal = ks_statistic(&errors, standard_normal_cdf)?;

    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for e in &errors {
        let d = e - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let variance = m2 / (n - 1.0);
    let excess_kurtosis = (m4 / n) / (variance * variance) - 3.0;

    let row = vec![
        Cell::Float(w),
        Cell::Float(tp.p_w),
        Cell::Float(tp.expected_cost),
        Cell::Int(reps),
        Cell::Float(ks_laplace),
        Cell::Float(ks_normal),
        Cell::Float(variance),
        Cell::Float(excess_kurtosis),
    ];
    Ok(Table {
        meta: Meta::new(
            "convergence",
            seed,
            &[
                ("model", model_spec.to_string()),
                ("w", w.to_string()),
                ("reps", reps.to_string()),
            ],
        ),
        columns: vec![
            "w",
            "p_w",
            "expected_cost",
            "reps",
            "ks_laplace",
            "ks_normal",
            "error_variance",
            "excess_kurtosis",
        ],
        rows: vec![row],
    })
}

pub fn compare_ratio(
    model_spec: &str,
    n: u64,
    reps: u64,
    seed: u64,
    workers: usize,
) -> Result<Table> {
    let model: ZModel<f64> = parse_model_spec(model_spec)?;
    let m = model.moments()?;
    let beta = m.beta();

    // One ratio estimate 1/Z-bar per replication on its own stream. A zero
    // sample mean (possible for tiny n) is kept as NaN and excluded below.
    let model_ref = &model;
    let estimates: Vec<f64> = par_map_indexed(reps, workers, move |i| {
        let mut stream = RandomStream::new(seed, i);
        let mut sum = 0.0;
        for _ in 0..n {
            sum += model_ref.sample(&mut stream);
        }
        if sum > 0.0 {
            n as f64 / sum
        } else {
            f64::NAN
        }
    });
    let valid: Vec<f64> = estimates.iter().copied().filter(|x| x.is_finite()).collect();
    let count = valid.len() as f64;
    let mean = valid.iter().sum::<f64>() / count;
    let sample_var = valid.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);

    let bias = mean - beta;
    let predicted_bias = m.var / (n as f64 * m.z1.powi(3));
    let scaled_variance = n as f64 * sample_var; // Var of sqrt(n) (1/Z-bar - beta)
    let sigma_squared = m.sigma * m.sigma;

    let row = vec![
        Cell::Int(n),
        Cell::Int(valid.len() as u64),
        Cell::Float(mean),
        Cell::Float(bias),
        Cell::Float(predicted_bias),
        Cell::Float(scaled_variance),
        Cell::Float(sigma_squared),
    ];
    Ok(Table {
        meta: Meta::new(
            "compare-ratio",
            seed,
            &[
                ("model", model_spec.to_string()),
                ("k", n.to_string()),
                ("reps", reps.to_string()),
            ],
        ),
        columns: vec![
            "n",
            "valid_reps",
            "mean_estimate",
            "bias",
            "predicted_bias",
            "scaled_variance",
            "sigma_squared",
        ],
        rows: vec![row],
    })
}
