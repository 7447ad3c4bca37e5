//! Drawing realizations of the truncated-product estimator
//! `w/q_N * prod_{i<=N} (1 - w Z_i)` under a pluggable truncation law, with
//! exact cost accounting and deterministic replication.

use crate::error::{Error, Result};
use crate::model::ZModel;
use crate::real::{real, Real};
use crate::stream::RandomStream;
use crate::tvm::{tvm_pmf, TvmLaw};

/// Distribution of the truncation index N. Every variant assigns positive
/// mass to every non-negative integer, which is what keeps the estimator
/// unbiased.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncationLaw<F> {
    /// Geometric(p) on {0, 1, ...}; with p = p_w this is the
    /// variance-minimizing choice.
    Geometric { p: F },
    /// The time-variance-minimizing law.
    Tvm(TvmLaw<F>),
    /// Geometric law with a success probability estimated from pilot data
    /// rather than analytic moments.
    EmpiricalGeometric { p: F },
}

impl<F: Real> TruncationLaw<F> {
    pub fn geometric(p: F) -> Result<Self> {
        check_success_probability(p)?;
        Ok(Self::Geometric { p })
    }

    pub fn empirical_geometric(p: F) -> Result<Self> {
        check_success_probability(p)?;
        Ok(Self::EmpiricalGeometric { p })
    }

    pub fn tvm(law: TvmLaw<F>) -> Self {
        Self::Tvm(law)
    }

    /// Success probability of the geometric decay factor shared by all
    /// variants.
    #[inline]
    pub fn geometric_rate(&self) -> F {
        match self {
            Self::Geometric { p } | Self::EmpiricalGeometric { p } => *p,
            Self::Tvm(law) => law.p_w,
        }
    }

    /// Probability mass q_n.
    pub fn pmf(&self, n: u64) -> F {
        match self {
            Self::Geometric { p } | Self::EmpiricalGeometric { p } => {
                *p * (F::one() - *p).powf(real::<F>(n as f64))
            }
            Self::Tvm(law) => tvm_pmf(n, law),
        }
    }
}

fn check_success_probability<F: Real>(p: F) -> Result<()> {
    if !p.is_finite() || !(p > F::zero()) || !(p < F::one()) {
        return Err(Error::InvalidSuccessProbability(p.into_f64()));
    }
    Ok(())
}

/// One realization of the estimator together with its exact cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateDraw<F> {
    /// The realized estimator value.
    pub value: F,
    /// The sampled truncation index N.
    pub n_used: u64,
    /// Z-samples consumed; equal to `n_used` by construction.
    pub z_draws: u64,
    /// The weight the draw was taken at.
    pub w: F,
}

/// Inverse-transform sample of Geometric(p) on {0, 1, ...}: one uniform per
/// draw, `N = floor(ln U / ln(1-p))`.
#[inline]
fn geometric_index(p: f64, stream: &mut RandomStream) -> u64 {
    let log_decay = (-p).ln_1p();
    if log_decay == 0.0 {
        return 0; // p indistinguishable from 0 cannot be constructed; p ~ 1 lands here
    }
    let u = stream.unit_f64();
    (u.ln() / log_decay).floor() as u64
}

/// Samples the truncation index N from the law.
///
/// Geometric variants use the inverse transform. The TVM law is sampled by
/// rejection with its own Geometric(p_w) as the proposal; the acceptance
/// probability `beta / sqrt(beta^2 + d_w n)` is exactly the pmf ratio over
/// the envelope `w z1 / p_w`, and equals 1 at n = 0.
pub fn draw_truncation<F: Real>(law: &TruncationLaw<F>, stream: &mut RandomStream) -> u64 {
    match law {
        TruncationLaw::Geometric { p } | TruncationLaw::EmpiricalGeometric { p } => {
            geometric_index(p.into_f64(), stream)
        }
        TruncationLaw::Tvm(tvm) => {
            let beta_sq = (tvm.beta * tvm.beta).into_f64();
            let d = tvm.d_w.into_f64();
            let beta = tvm.beta.into_f64();
            loop {
                let n = geometric_index(tvm.p_w.into_f64(), stream);
                let accept = beta / (beta_sq + d * n as f64).sqrt();
                if stream.unit_f64() < accept {
                    return n;
                }
            }
        }
    }
}

/// Draws one realization of the estimator at weight `w`.
///
/// The product is accumulated in ratio form, `prod (1 - w Z_i)/(1 - p)`,
/// so the running value stays O(1) even when N reaches 10^6 and neither the
/// bare product nor q_N is ever materialized on its own; negative factors
/// (possible when w > 1/b) flow through the accumulator sign unchanged.
pub fn single_draw<F: Real>(
    w: F,
    law: &TruncationLaw<F>,
    model: &ZModel<F>,
    stream: &mut RandomStream,
) -> EstimateDraw<F> {
    let n = draw_truncation(law, stream);
    let decay = F::one() - law.geometric_rate();
    let mut ratio_product = F::one();
    for _ in 0..n {
        let z = model.sample(stream);
        ratio_product = ratio_product * (F::one() - w * z) / decay;
    }
    let value = match law {
        TruncationLaw::Geometric { p } | TruncationLaw::EmpiricalGeometric { p } => {
            w / *p * ratio_product
        }
        // w / q_n = sqrt(beta^2 + d n) / ((1-p)^n) and the decay powers were
        // already divided out of the accumulator.
        TruncationLaw::Tvm(tvm) => {
            (tvm.beta * tvm.beta + tvm.d_w * real::<F>(n as f64)).sqrt() * ratio_product
        }
    };
    EstimateDraw {
        value,
        n_used: n,
        z_draws: n,
        w,
    }
}

/// Indexed replication record with deterministic aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary<F> {
    pub reps: u64,
    pub mean: F,
    /// Unbiased sample variance; `None` for a single replication.
    pub sample_variance: Option<F>,
    /// sqrt(sample_variance / reps); `None` for a single replication.
    pub standard_error: Option<F>,
    /// Total Z-draws consumed across all replications.
    pub total_cost: u64,
    /// The draws, in replication-index order.
    pub per_draw: Vec<EstimateDraw<F>>,
}

impl<F: Real> ReplicationSummary<F> {
    /// Aggregates a draw vector in index order. This is the canonical
    /// aggregation: recomputing from `per_draw` reproduces every field
    /// bit-exactly regardless of how the draws were generated.
    pub fn from_draws(per_draw: Vec<EstimateDraw<F>>) -> Self {
        assert!(!per_draw.is_empty(), "at least one replication required");
        let reps = per_draw.len() as u64;
        let mut sum = F::zero();
        let mut total_cost = 0u64;
        for d in &per_draw {
            sum = sum + d.value;
            total_cost += d.z_draws;
        }
        let mean = sum / real::<F>(reps as f64);
        let (sample_variance, standard_error) = if reps >= 2 {
            let mut ss = F::zero();
            for d in &per_draw {
                let delta = d.value - mean;
                ss = ss + delta * delta;
            }
            let var = ss / real::<F>((reps - 1) as f64);
            (Some(var), Some((var / real::<F>(reps as f64)).sqrt()))
        } else {
            (None, None)
        };
        Self {
            reps,
            mean,
            sample_variance,
            standard_error,
            total_cost,
            per_draw,
        }
    }
}

/// `reps` independent draws on streams `(seed, 0..reps)`, aggregated in
/// index order.
pub fn replicate<F: Real>(
    w: F,
    law: &TruncationLaw<F>,
    model: &ZModel<F>,
    reps: u64,
    seed: u64,
) -> ReplicationSummary<F> {
    replicate_with_workers(w, law, model, reps, seed, 1)
}

/// Like [`replicate`], fanning the draws out over `workers` threads.
///
/// Each replication's stream is a pure function of `(seed, index)` and the
/// result vector is assembled in index order, so the summary is byte-for-byte
/// identical for every worker count.
pub fn replicate_with_workers<F: Real>(
    w: F,
    law: &TruncationLaw<F>,
    model: &ZModel<F>,
    reps: u64,
    seed: u64,
    workers: usize,
) -> ReplicationSummary<F> {
    assert!(reps >= 1, "at least one replication required");
    let workers = workers.max(1).min(reps as usize);
    let draw_one = |i: u64| single_draw(w, law, model, &mut RandomStream::new(seed, i));

    let per_draw: Vec<EstimateDraw<F>> = if workers == 1 {
        (0..reps).map(draw_one).collect()
    } else {
        let chunk = reps.div_ceil(workers as u64);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers as u64)
                .map(|j| {
                    let start = j * chunk;
                    let end = ((j + 1) * chunk).min(reps);
                    scope.spawn(move || (start..end).map(draw_one).collect::<Vec<_>>())
                })
                .collect();
            let mut all = Vec::with_capacity(reps as usize);
            for handle in handles {
                all.extend(handle.join().expect("replication worker panicked"));
            }
            all
        })
    };
    ReplicationSummary::from_draws(per_draw)
}
