//! Confidence intervals and distributional diagnostics.
//!
//! The standardized error of the truncated-product estimator converges (as
//! w -> 0) to a mean-zero Laplace law with scale 1/sqrt(2) — unit variance —
//! while the classical ratio estimator 1/Z-bar is asymptotically normal.
//! This module provides both interval constructions, the standardization
//! transform, the reference CDFs, and a Kolmogorov–Smirnov distance for
//! checking the convergence empirically.

use crate::analytic::laplace_quantile;
use crate::error::{Error, Result};
use crate::estimator::EstimateDraw;
use crate::model::MomentSummary;
use crate::real::{real, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    /// Interval from the Laplace limit of the unbiased estimator.
    LaplaceAsymptotic,
    /// Delta-method normal interval for the ratio estimator.
    NormalDelta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval<F> {
    pub center: F,
    pub lower: F,
    pub upper: F,
    pub alpha: F,
    pub method: CiMethod,
}

/// Asymptotic 1 - alpha interval around one estimator draw:
/// half-width `(-log(alpha)/sqrt(2)) * sigma * sqrt(w E[Z])`.
///
/// `m` selects the sigma mode explicitly: analytic model moments for
/// validation studies, or pilot plug-in moments via
/// [`MomentSummary::from_raw`] when the true moments are unknown.
pub fn laplace_ci<F: Real>(
    draw_value: F,
    w: F,
    m: &MomentSummary<F>,
    alpha: F,
) -> Result<ConfidenceInterval<F>> {
    let t = laplace_quantile(alpha)?;
    let half_width = t * m.sigma * (w * m.z1).sqrt();
    Ok(ConfidenceInterval {
        center: draw_value,
        lower: draw_value - half_width,
        upper: draw_value + half_width,
        alpha,
        method: CiMethod::LaplaceAsymptotic,
    })
}

/// The classical biased estimator 1 / Z-bar.
pub fn ratio_estimate<F: Real>(samples: &[F]) -> Result<F> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sum = F::zero();
    for &z in samples {
        sum = sum + z;
    }
    let mean = sum / real::<F>(samples.len() as f64);
    if !(mean > F::zero()) {
        return Err(Error::UndefinedEstimate);
    }
    Ok(F::one() / mean)
}

/// Delta-method 1 - alpha interval for the ratio estimator: the plug-in
/// asymptotic variance of 1/Z-bar is S^2 / Z-bar^4.
pub fn normal_delta_ci<F: Real>(samples: &[F], alpha: F) -> Result<ConfidenceInterval<F>> {
    if !alpha.is_finite() || !(alpha > F::zero()) || !(alpha < F::one()) {
        return Err(Error::InvalidAlpha(alpha.into_f64()));
    }
    if samples.len() < 2 {
        return Err(Error::EmptySample);
    }
    let estimate = ratio_estimate(samples)?;
    let n = real::<F>(samples.len() as f64);
    let mean = F::one() / estimate;
    let mut ss = F::zero();
    for &z in samples {
        let d = z - mean;
        ss = ss + d * d;
    }
    let sample_var = ss / (n - F::one());
    let se = (sample_var / n).sqrt() * estimate * estimate; // S / (sqrt(n) Z-bar^2)
    let z_crit = standard_normal_quantile(F::one() - alpha / real::<F>(2.0));
    Ok(ConfidenceInterval {
        center: estimate,
        lower: estimate - z_crit * se,
        upper: estimate + z_crit * se,
        alpha,
        method: CiMethod::NormalDelta,
    })
}

/// Maps draws taken at a common weight to their standardized errors
/// `(value - beta) / (sigma sqrt(w E[Z]))`, whose limit law (w -> 0) is the
/// standard unit-variance Laplace distribution.
pub fn standardized_errors<F: Real>(
    draws: &[EstimateDraw<F>],
    w: F,
    m: &MomentSummary<F>,
) -> Vec<F> {
    let beta = m.beta();
    let scale = m.sigma * (w * m.z1).sqrt();
    draws.iter().map(|d| (d.value - beta) / scale).collect()
}

/// CDF of the mean-zero Laplace law with scale 1/sqrt(2) (unit variance).
pub fn laplace_cdf<F: Real>(x: F) -> F {
    let half = real::<F>(0.5);
    let root2 = real::<F>(2.0).sqrt();
    if x < F::zero() {
        half * (root2 * x).exp()
    } else {
        F::one() - half * (-root2 * x).exp()
    }
}

/// Standard normal CDF via the Zelen–Severo polynomial (|error| < 7.5e-8),
/// ample for goodness-of-fit distances on the 1e-2 scale.
pub fn standard_normal_cdf<F: Real>(x: F) -> F {
    let xf = x.into_f64();
    let t = 1.0 / (1.0 + 0.2316419 * xf.abs());
    let poly = t
        * (0.319381530
            + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    let pdf = (-0.5 * xf * xf).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = pdf * poly;
    F::from_f64(if xf >= 0.0 { 1.0 - upper } else { upper })
}

/// Quantile of the standard normal via bisection on the CDF; plenty for
/// interval construction at everyday alpha levels.
fn standard_normal_quantile<F: Real>(p: F) -> F {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    let target = p.into_f64();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if standard_normal_cdf::<f64>(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    real::<F>(0.5 * (lo + hi))
}

/// Two-sided Kolmogorov–Smirnov statistic between a sample and a reference
/// CDF: `max_i max(F(x_(i)) - i/n, (i+1)/n - F(x_(i)))` over the sorted
/// sample.
pub fn ks_statistic<F: Real>(samples: &[F], cdf: impl Fn(F) -> F) -> Result<F> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    let n = real::<F>(sorted.len() as f64);
    let mut sup = F::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let fx = cdf(x);
        let below = real::<F>(i as f64) / n;
        let above = real::<F>((i + 1) as f64) / n;
        sup = sup.max(fx - below).max(above - fx);
    }
    Ok(sup)
}
