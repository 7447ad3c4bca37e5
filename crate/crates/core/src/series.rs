//! Independent ground truth for the estimator's moments: direct series
//! evaluation of E[estimator^2] under any truncation law, and full outcome
//! enumeration for Bernoulli Z. These paths share no code with the closed
//! forms they are used to check.

use crate::error::{Error, Result};
use crate::estimator::TruncationLaw;
use crate::kahan::KahanSum;
use crate::model::MomentSummary;
use crate::real::{real, Real};

const MAX_SERIES_TERMS: u64 = 200_000_000;
// The enumeration is quadratic in the truncation level: n_max levels hold
// n_max^2/2 atoms.
const MAX_ENUMERATION_N: u64 = 5_000;

/// Direct evaluation of `E[estimator^2] = w^2 sum_n r^n / q_n` with
/// `r = E(1 - w Z)^2 = 1 - 2 w z1 + w^2 z2`, truncated under a certified
/// geometric tail bound at relative tolerance `tol`.
///
/// For geometric laws the term ratio is `r / (1 - p)`; the series diverges
/// (and this returns an error) when that ratio reaches 1 — i.e. when the law
/// under-weights deep truncation more strongly than the product shrinks.
pub fn exact_second_moment_series<F: Real>(
    w: F,
    law: &TruncationLaw<F>,
    m: &MomentSummary<F>,
    tol: F,
) -> Result<F> {
    if !tol.is_finite() || !(tol > F::zero()) {
        return Err(Error::InvalidTolerance(tol.into_f64()));
    }
    let r = F::one() - real::<F>(2.0) * w * m.z1 + w * w * m.z2;
    if !(r >= F::zero()) || !(r < F::one()) {
        return Err(Error::SeriesDiverges(format!(
            "E(1 - w Z)^2 = {} is outside [0, 1); w is infeasible",
            r.into_f64()
        )));
    }

    match law {
        TruncationLaw::Geometric { p } | TruncationLaw::EmpiricalGeometric { p } => {
            let ratio = r / (F::one() - *p);
            if !(ratio < F::one()) {
                return Err(Error::SeriesDiverges(format!(
                    "term ratio r/(1-p) = {} >= 1 for p = {}",
                    ratio.into_f64(),
                    p.into_f64()
                )));
            }
            let mut sum = KahanSum::new();
            let mut term = w * w / *p;
            let mut n: u64 = 0;
            loop {
                sum.add(term);
                let tail = term * ratio / (F::one() - ratio);
                if tail < tol * sum.value().abs().max(F::one()) {
                    return Ok(sum.value());
                }
                term = term * ratio;
                n += 1;
                if n > MAX_SERIES_TERMS {
                    return Err(Error::TruncationFailed(
                        "second-moment series exceeded the iteration cap".into(),
                    ));
                }
            }
        }
        TruncationLaw::Tvm(tvm) => {
            // term_n = w^2 r^n sqrt(beta^2 + d n) / (w (1-p)^n); successive
            // ratios are bounded by (r/(1-p)) sqrt(1 + d/beta^2).
            let decay = F::one() - tvm.p_w;
            let ratio = r / decay;
            let beta_sq = tvm.beta * tvm.beta;
            let ratio_cap = ratio * (F::one() + tvm.d_w / beta_sq).sqrt();
            if !(ratio_cap < F::one()) {
                return Err(Error::SeriesDiverges(format!(
                    "TVM term ratio bound {} >= 1",
                    ratio_cap.into_f64()
                )));
            }
            let mut sum = KahanSum::new();
            let mut geom = F::one(); // (r/(1-p))^n
            let mut n: u64 = 0;
            loop {
                let n_f = real::<F>(n as f64);
                let term = w * geom * (beta_sq + tvm.d_w * n_f).sqrt();
                sum.add(term);
                let tail = term * ratio_cap / (F::one() - ratio_cap);
                if tail < tol * sum.value().abs().max(F::one()) {
                    return Ok(sum.value());
                }
                geom = geom * ratio;
                n += 1;
                if n > MAX_SERIES_TERMS {
                    return Err(Error::TruncationFailed(
                        "second-moment series exceeded the iteration cap".into(),
                    ));
                }
            }
        }
    }
}

/// The exact finite-outcome distribution of the estimator for Bernoulli Z,
/// with the truncation levels enumerated far enough to cover the requested
/// probability mass.
#[derive(Debug, Clone)]
pub struct BernoulliEnumeration<F> {
    /// `(value, probability)` atoms: for N = n the product is `(1-w)^K` with
    /// K ~ Binomial(n, theta), so the atom at (n, k) has value
    /// `w (1-w)^k / q_n`.
    pub atoms: Vec<(F, F)>,
    /// Largest truncation level enumerated.
    pub n_max: u64,
    /// Total probability covered, at least `1 - cutoff_mass`.
    pub covered_mass: F,
}

impl<F: Real> BernoulliEnumeration<F> {
    pub fn mean(&self) -> F {
        let mut sum = KahanSum::new();
        for &(v, p) in &self.atoms {
            sum.add(v * p);
        }
        sum.value()
    }

    pub fn second_moment(&self) -> F {
        let mut sum = KahanSum::new();
        for &(v, p) in &self.atoms {
            sum.add(v * v * p);
        }
        sum.value()
    }

    /// Closed-form bound on the mean mass missing beyond `n_max`:
    /// `w sum_{n > n_max} (E|1 - w Z|)^n`.
    pub fn mean_tail_bound(&self, w: F, theta: F) -> F {
        let a = (F::one() - theta) + theta * (F::one() - w).abs();
        w * a.powf(real::<F>((self.n_max + 1) as f64)) / (F::one() - a)
    }
}

/// Enumerates the exact outcome atoms of the estimator for Z ~ Bernoulli(theta)
/// under a geometric(p) truncation law, extending the truncation level until
/// the uncovered mass drops below `cutoff_mass`.
pub fn bernoulli_exact_distribution<F: Real>(
    w: F,
    theta: F,
    p_geometric: F,
    cutoff_mass: F,
) -> Result<BernoulliEnumeration<F>> {
    if !theta.is_finite() || !(theta > F::zero()) || !(theta < F::one()) {
        return Err(Error::InvalidModel(format!(
            "bernoulli probability must lie strictly inside (0, 1), got {theta}"
        )));
    }
    if !p_geometric.is_finite() || !(p_geometric > F::zero()) || !(p_geometric < F::one()) {
        return Err(Error::InvalidSuccessProbability(p_geometric.into_f64()));
    }
    if !cutoff_mass.is_finite() || !(cutoff_mass > F::zero()) || !(cutoff_mass < F::one()) {
        return Err(Error::InvalidTolerance(cutoff_mass.into_f64()));
    }
    if !w.is_finite() || !(w > F::zero()) {
        return Err(Error::InfeasibleWeight {
            w: w.into_f64(),
            limit: 2.0 / theta.into_f64(),
        });
    }

    // Geometric tail after n is (1-p)^{n+1}: the smallest adequate n_max.
    let n_max = (cutoff_mass.into_f64().ln() / (-p_geometric.into_f64()).ln_1p()).ceil() as u64;
    if n_max > MAX_ENUMERATION_N {
        return Err(Error::TruncationFailed(format!(
            "covering 1 - {} of the mass needs n_max = {n_max} > {MAX_ENUMERATION_N} levels",
            cutoff_mass.into_f64()
        )));
    }

    // Probabilities are assembled in log space: at deep truncation levels the
    // k = 0 binomial weight (1-theta)^n underflows long before the mid-range
    // weights become negligible.
    let theta_f = theta.into_f64();
    let w_f = w.into_f64();
    let log_decay = (-p_geometric.into_f64()).ln_1p();
    let log_theta_odds = theta_f.ln() - (-theta_f).ln_1p();
    let mut atoms = Vec::new();
    let mut covered = KahanSum::new();
    let one_minus_w = F::from_f64(1.0 - w_f);
    let mut log_q_n = p_geometric.into_f64().ln(); // ln p + n ln(1-p)
    for n in 0..=n_max {
        let mut log_binom = n as f64 * (-theta_f).ln_1p(); // k = 0
        let mut value = F::from_f64((w_f.ln() - log_q_n).exp()); // w / q_n
        for k in 0..=n {
            let prob = F::from_f64((log_q_n + log_binom).exp());
            atoms.push((value, prob));
            covered.add(prob);
            if k < n {
                log_binom += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + log_theta_odds;
                value = value * one_minus_w;
            }
        }
        log_q_n += log_decay;
    }
    Ok(BernoulliEnumeration {
        atoms,
        n_max,
        covered_mass: covered.value(),
    })
}
