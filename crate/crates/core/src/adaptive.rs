//! Two-phase adaptive implementation: a pilot run of k Z-samples fixes the
//! weight `w_k` and an empirical geometric rate `P_k`, after which a single
//! truncated-product draw is unconditionally unbiased for beta — no analytic
//! moments required. Includes the conditional-variance oracle used to study
//! the procedure's time-variance product.

use crate::analytic::stable_success_probability;
use crate::error::{Error, Result};
use crate::estimator::{single_draw, EstimateDraw, TruncationLaw};
use crate::model::{MomentSummary, ZModel};
use crate::real::{real, Real};
use crate::stream::RandomStream;

/// Outcome of the pilot phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotResult<F> {
    /// Pilot sample size.
    pub k: u64,
    /// First pilot moment M1(k).
    pub m1: F,
    /// Second pilot moment M2(k).
    pub m2: F,
    /// Selected weight, min(1/(k M1), M1/M2, epsilon); epsilon/k when
    /// degenerate.
    pub w_k: F,
    /// Empirical geometric rate P_k; 1/k when degenerate.
    pub p_k: F,
    /// The known lower bound 0 < epsilon <= beta supplied by the caller.
    pub epsilon: F,
    /// True iff every pilot draw was zero (M1 = 0).
    pub degenerate: bool,
}

impl<F: Real> PilotResult<F> {
    /// Builds the pilot construction from explicit samples. Used directly in
    /// tests and by [`pilot`], which streams the sums instead of storing
    /// draws.
    pub fn from_samples(samples: &[F], epsilon: F) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidPilotSize);
        }
        let mut s1 = F::zero();
        let mut s2 = F::zero();
        for &z in samples {
            s1 = s1 + z;
            s2 = s2 + z * z;
        }
        Self::from_moment_sums(samples.len() as u64, s1, s2, epsilon)
    }

    fn from_moment_sums(k: u64, s1: F, s2: F, epsilon: F) -> Result<Self> {
        if !epsilon.is_finite() || !(epsilon > F::zero()) {
            return Err(Error::InvalidEpsilon(epsilon.into_f64()));
        }
        let k_f = real::<F>(k as f64);
        let m1 = s1 / k_f;
        let m2 = s2 / k_f;
        // Unbiasedness needs q_n = P(1-P)^n > 0 for every n, i.e. P < 1
        // strictly. The raw construction reaches P = 1 exactly when k = 1
        // (both branches), so cap at k/(k+1); the cap is inactive for k >= 2,
        // where P <= 1/k <= k/(k+1) already holds.
        let rate_cap = k_f / (k_f + F::one());
        if s1 == F::zero() {
            // All-zero pilot: fall back to the guaranteed-unbiased branch.
            return Ok(Self {
                k,
                m1: F::zero(),
                m2: F::zero(),
                w_k: epsilon / k_f,
                p_k: (F::one() / k_f).min(rate_cap),
                epsilon,
                degenerate: true,
            });
        }
        let w_k = (F::one() / (k_f * m1)).min(m1 / m2).min(epsilon);
        // Same cancellation-free quadratic form as p_w; w_k <= M1/M2 keeps it
        // strictly positive.
        let p_k = stable_success_probability(w_k, m1, m2).min(rate_cap);
        Ok(Self {
            k,
            m1,
            m2,
            w_k,
            p_k,
            epsilon,
            degenerate: false,
        })
    }

    /// The truncation law induced by the pilot.
    pub fn law(&self) -> TruncationLaw<F> {
        TruncationLaw::EmpiricalGeometric { p: self.p_k }
    }
}

/// Runs the pilot phase: consumes exactly `k` Z-draws from `stream` and
/// constructs `(w_k, P_k)`.
///
/// `epsilon` must satisfy 0 < epsilon <= beta; for a model bounded by b,
/// `epsilon = 1/b` always qualifies.
pub fn pilot<F: Real>(
    k: u64,
    model: &ZModel<F>,
    epsilon: F,
    stream: &mut RandomStream,
) -> Result<PilotResult<F>> {
    if k == 0 {
        return Err(Error::InvalidPilotSize);
    }
    if !epsilon.is_finite() || !(epsilon > F::zero()) {
        return Err(Error::InvalidEpsilon(epsilon.into_f64()));
    }
    let mut s1 = F::zero();
    let mut s2 = F::zero();
    for _ in 0..k {
        let z = model.sample(stream);
        s1 = s1 + z;
        s2 = s2 + z * z;
    }
    PilotResult::from_moment_sums(k, s1, s2, epsilon)
}

/// One estimator draw under the pilot's empirical-geometric law.
///
/// `stream` must be independent of the pilot stream (hand each phase its own
/// stream index). The draw is unbiased for beta for every k >= 1, including
/// the degenerate branch. `w_override` substitutes a different weight while
/// keeping the pilot law; `None` uses `w_k`.
pub fn adaptive_draw<F: Real>(
    pr: &PilotResult<F>,
    w_override: Option<F>,
    model: &ZModel<F>,
    stream: &mut RandomStream,
) -> EstimateDraw<F> {
    let w = w_override.unwrap_or(pr.w_k);
    single_draw(w, &pr.law(), model, stream)
}

/// Conditional-variance oracle: given the pilot, the exact conditional
/// time-variance product `(k + 1/P_k) * (w_k^2/(P_k delta_k) - beta^2)` with
/// `delta_k = 1 - E(1 - w_k Z)^2 / (1 - P_k)` under the true moments.
///
/// Returns `None` when `delta_k <= 0`, i.e. the conditional variance is not
/// finite for this pilot (possible at small k); never panics.
pub fn conditional_tvp<F: Real>(pr: &PilotResult<F>, m: &MomentSummary<F>) -> Option<F> {
    let w = pr.w_k;
    // (1 - P_k) - E(1 - w Z)^2 formed without subtracting near-equal O(1)
    // quantities: g = 1 - E(1 - w Z)^2 = w (2 z1 - w z2).
    let g = w * (real::<F>(2.0) * m.z1 - w * m.z2);
    let one_minus_p = F::one() - pr.p_k;
    let delta = (g - pr.p_k) / one_minus_p;
    if !(delta > F::zero()) {
        return None;
    }
    let beta = m.beta();
    let conditional_variance = w * w / (pr.p_k * delta) - beta * beta;
    let expected_cost = real::<F>(pr.k as f64) + F::one() / pr.p_k;
    Some(expected_cost * conditional_variance)
}

/// Aggregates of a full pilot-plus-draw experiment in the style of the
/// two-phase procedure's validation runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveExperiment<F> {
    pub k: u64,
    pub reps: u64,
    pub epsilon: F,
    /// Mean of the estimator draws (targets beta).
    pub mean_estimate: F,
    /// Unbiased sample variance of the draws.
    pub sample_variance: F,
    /// Mean of 1/P_k over the pilots.
    pub mean_inverse_p: F,
    /// Estimated expected total cost, k + mean(1/P_k).
    pub expected_total_cost: F,
    /// Z-draws actually consumed per replication, pilot included.
    pub observed_mean_cost: F,
    /// Estimated expected time relative variance product,
    /// (k + mean(1/P_k)) * S^2 / beta^2.
    pub tvp_rel: F,
    /// First-order standard error of `tvp_rel` (fourth-moment delta method).
    pub tvp_rel_stderr: F,
    /// 95% confidence band for `tvp_rel`.
    pub tvp_rel_lower: F,
    pub tvp_rel_upper: F,
}

/// Runs `reps` independent (pilot, draw) pairs and reports the estimated
/// expected time relative variance product with a confidence band.
///
/// Streams: replication i uses `(seed, 2i)` for the pilot and `(seed, 2i+1)`
/// for the estimator draw. beta is taken from the model's analytic moments —
/// this is a validation experiment, not an inference procedure.
pub fn adaptive_experiment<F: Real>(
    model: &ZModel<F>,
    k: u64,
    reps: u64,
    epsilon: F,
    seed: u64,
    workers: usize,
) -> Result<AdaptiveExperiment<F>> {
    if reps < 2 {
        return Err(Error::EmptySample);
    }
    let workers = workers.max(1).min(reps as usize);
    let one_rep = |i: u64| -> Result<(F, F, u64)> {
        let mut pilot_stream = RandomStream::new(seed, 2 * i);
        let mut draw_stream = RandomStream::new(seed, 2 * i + 1);
        let pr = pilot(k, model, epsilon, &mut pilot_stream)?;
        let draw = adaptive_draw(&pr, None, model, &mut draw_stream);
        Ok((draw.value, F::one() / pr.p_k, k + draw.z_draws))
    };

    let samples: Vec<(F, F, u64)> = if workers == 1 {
        (0..reps).map(one_rep).collect::<Result<_>>()?
    } else {
        let chunk = reps.div_ceil(workers as u64);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers as u64)
                .map(|j| {
                    let start = j * chunk;
                    let end = ((j + 1) * chunk).min(reps);
                    scope.spawn(move || (start..end).map(one_rep).collect::<Result<Vec<_>>>())
                })
                .collect();
            let mut all = Vec::with_capacity(reps as usize);
            for handle in handles {
                all.extend(handle.join().expect("experiment worker panicked")?);
            }
            Ok::<_, Error>(all)
        })?
    };

    let reps_f = real::<F>(reps as f64);
    let mut sum_value = F::zero();
    let mut sum_inv_p = F::zero();
    let mut sum_cost = 0u64;
    for &(value, inv_p, cost) in &samples {
        sum_value = sum_value + value;
        sum_inv_p = sum_inv_p + inv_p;
        sum_cost += cost;
    }
    let mean_estimate = sum_value / reps_f;
    let mean_inverse_p = sum_inv_p / reps_f;

    let mut ss2 = F::zero();
    let mut ss4 = F::zero();
    let mut ss_inv_p = F::zero();
    for &(value, inv_p, _) in &samples {
        let d = value - mean_estimate;
        ss2 = ss2 + d * d;
        ss4 = ss4 + d * d * d * d;
        let e = inv_p - mean_inverse_p;
        ss_inv_p = ss_inv_p + e * e;
    }
    let sample_variance = ss2 / (reps_f - F::one());
    let m4 = ss4 / reps_f;

    let beta = model.moments()?.beta();
    let beta_sq = beta * beta;
    let expected_total_cost = real::<F>(k as f64) + mean_inverse_p;
    let tvp_rel = expected_total_cost * sample_variance / beta_sq;

    // Var(S^2) ~ (m4 - S^4)/reps; Var(mean 1/P) = S^2(1/P)/reps. The two
    // relative errors combine in quadrature (independence to first order).
    let var_s2 = ((m4 - sample_variance * sample_variance) / reps_f).max(F::zero());
    let rel_se_s2 = var_s2.sqrt() / sample_variance;
    let var_cost = ss_inv_p / (reps_f - F::one()) / reps_f;
    let rel_se_cost = var_cost.sqrt() / expected_total_cost;
    let rel_se = (rel_se_s2 * rel_se_s2 + rel_se_cost * rel_se_cost).sqrt();
    let tvp_rel_stderr = tvp_rel * rel_se;
    let z = real::<F>(1.96);

    let observed_mean_cost = real::<F>(sum_cost as f64) / reps_f;
    Ok(AdaptiveExperiment {
        k,
        reps,
        epsilon,
        mean_estimate,
        sample_variance,
        mean_inverse_p,
        expected_total_cost,
        observed_mean_cost,
        tvp_rel,
        tvp_rel_stderr,
        tvp_rel_lower: tvp_rel - z * tvp_rel_stderr,
        tvp_rel_upper: tvp_rel + z * tvp_rel_stderr,
    })
}
