//! Closed-form tuning analytics for the truncated-product estimator of
//! beta = 1/E[Z]: success probability of the variance-minimizing geometric
//! truncation law, estimator variance, expected cost, and the time-variance
//! product, all as functions of the weight parameter `w`.

use crate::error::{Error, Result};
use crate::model::MomentSummary;
use crate::real::{real, Real};

/// All closed-form quantities attached to one weight value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningPoint<F> {
    pub w: F,
    /// Success probability of the variance-minimizing geometric law.
    pub p_w: F,
    /// E[N] = 1/p_w - 1, in units of Z-draws.
    pub expected_cost: F,
    /// Var of the estimator, w^2/p_w^2 - beta^2.
    pub variance: F,
    /// variance / beta^2
    pub rel_variance: F,
    /// expected_cost * rel_variance
    pub tvp_rel: F,
}

fn check_feasible<F: Real>(w: F, m: &MomentSummary<F>) -> Result<()> {
    let limit = m.feasibility_limit();
    if !(w > F::zero()) || !(w < limit) || !w.is_finite() {
        return Err(Error::InfeasibleWeight {
            w: w.into_f64(),
            limit: limit.into_f64(),
        });
    }
    Ok(())
}

/// Stable evaluation of `1 - sqrt(1 - 2 w m1 + w^2 m2)` via
/// `g / (1 + sqrt(1 - g))` with `g = w (2 m1 - w m2)`.
///
/// The naive form loses every significant digit once `w m1` drops below
/// ~1e-8; this form is exact to rounding for all feasible `w`. Shared with
/// the pilot-phase construction, which applies it to sample moments.
#[inline]
pub(crate) fn stable_success_probability<F: Real>(w: F, m1: F, m2: F) -> F {
    let g = w * (real::<F>(2.0) * m1 - w * m2);
    let s = (F::one() - g).max(F::zero());
    g / (F::one() + s.sqrt())
}

/// Stable evaluation of the gap `w z1 - p_w`, which is O(w^2 Var Z) and
/// cancels catastrophically if formed by subtraction at small `w`.
#[inline]
pub(crate) fn weighted_mean_minus_success_probability<F: Real>(
    w: F,
    m: &MomentSummary<F>,
    p_w: F,
) -> F {
    let g = w * (real::<F>(2.0) * m.z1 - w * m.z2);
    let s = (F::one() - g).max(F::zero()).sqrt();
    w * (w * m.z2 - m.z1 * p_w) / (F::one() + s)
}

/// Success probability p_w of the variance-minimizing geometric truncation
/// law, for `w` in the feasibility interval (0, 2 E[Z]/E[Z^2]).
pub fn success_probability<F: Real>(w: F, m: &MomentSummary<F>) -> Result<F> {
    check_feasible(w, m)?;
    Ok(stable_success_probability(w, m.z1, m.z2))
}

/// Evaluates every closed-form tuning quantity at `w`.
pub fn tuning_point<F: Real>(w: F, m: &MomentSummary<F>) -> Result<TuningPoint<F>> {
    let p_w = success_probability(w, m)?;
    let beta = m.beta();
    let expected_cost = F::one() / p_w - F::one();
    let ratio = w * m.z1 / p_w; // = w beta^{-1} ... / p_w, dimensionless
    let rel_variance = ratio * ratio - F::one();
    let variance = rel_variance * beta * beta;
    Ok(TuningPoint {
        w,
        p_w,
        expected_cost,
        variance,
        rel_variance,
        tvp_rel: expected_cost * rel_variance,
    })
}

/// Evaluates [`tuning_point`] on a strictly increasing grid.
pub fn sweep_curve<F: Real>(m: &MomentSummary<F>, w_grid: &[F]) -> Result<Vec<TuningPoint<F>>> {
    let mut prev: Option<F> = None;
    for (index, &w) in w_grid.iter().enumerate() {
        if let Some(p) = prev {
            if !(w > p) {
                return Err(Error::GridNotIncreasing {
                    index,
                    value: w.into_f64(),
                });
            }
        }
        prev = Some(w);
    }
    w_grid.iter().map(|&w| tuning_point(w, m)).collect()
}

/// sigma = sqrt(Var Z / (E Z)^4): the scale of the limiting Laplace law and
/// the w->0 limit of the time-variance product (in absolute units).
pub fn asymptotic_sigma<F: Real>(m: &MomentSummary<F>) -> F {
    m.sigma
}

/// Half-width multiplier t = -log(alpha)/sqrt(2) of the symmetric standard
/// Laplace interval holding mass 1 - alpha.
pub fn laplace_quantile<F: Real>(alpha: F) -> Result<F> {
    if !alpha.is_finite() || !(alpha > F::zero()) || !(alpha < F::one()) {
        return Err(Error::InvalidAlpha(alpha.into_f64()));
    }
    Ok(-alpha.ln() / real::<F>(2.0).sqrt())
}

/// Inverts E[N(w)] = cost for `w`: the smaller root of
/// `w^2 z2 - 2 w z1 + p(2 - p) = 0` with `p = 1/(cost + 1)`.
///
/// Useful for experiments pinned to a computational budget rather than a
/// weight. Fails if the cost is below the minimum attainable at w = z1/z2.
pub fn weight_for_expected_cost<F: Real>(m: &MomentSummary<F>, cost: F) -> Result<F> {
    if !(cost > F::zero()) || !cost.is_finite() {
        return Err(Error::CostTooSmall {
            cost: cost.into_f64(),
            minimum: 0.0,
        });
    }
    let p = F::one() / (cost + F::one());
    let discriminant = m.z1 * m.z1 - m.z2 * p * (real::<F>(2.0) - p);
    if !(discriminant >= F::zero()) {
        let p_max = stable_success_probability(m.z1 / m.z2, m.z1, m.z2);
        return Err(Error::CostTooSmall {
            cost: cost.into_f64(),
            minimum: (F::one() / p_max - F::one()).into_f64(),
        });
    }
    // Smaller root, written to avoid cancellation between z1 and sqrt(disc).
    let w = p * (real::<F>(2.0) - p) / (m.z1 + discriminant.sqrt());
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ZModel;

    fn moments(p: f64) -> MomentSummary<f64> {
        ZModel::bernoulli(p).unwrap().moments().unwrap()
    }

    #[test]
    fn success_probability_matches_reference_value() {
        // bernoulli(0.001), w = 1: 1 - sqrt(0.999) evaluated in 40-digit
        // arithmetic = 5.001250625390898642739388842103313497e-4
        let p = success_probability(1.0, &moments(0.001)).unwrap();
        assert!((p - 5.001250625390898642e-4).abs() < 1e-18);
    }

    #[test]
    fn maximum_is_attained_at_mean_over_second_moment() {
        let m = moments(0.001);
        let w_star = m.z1 / m.z2;
        let p_star = success_probability(w_star, &m).unwrap();
        let expected = 1.0 - (1.0 - m.z1 * m.z1 / m.z2).sqrt();
        assert!((p_star - expected).abs() < 1e-15);
        for w in [0.2 * w_star, 0.7 * w_star, 1.3 * w_star, 1.9 * w_star] {
            assert!(success_probability(w, &m).unwrap() <= p_star);
        }
    }

    #[test]
    fn stable_form_agrees_with_naive_form_where_naive_is_safe() {
        let m = moments(0.3);
        for w in [0.1, 0.5, 1.0, 1.5] {
            let stable = success_probability(w, &m).unwrap();
            let naive = 1.0 - (1.0 - 2.0 * w * m.z1 + w * w * m.z2).sqrt();
            assert!((stable - naive).abs() < 1e-14, "w={w}");
        }
    }

    #[test]
    fn small_w_limit_of_p_over_w_is_the_mean() {
        // p_w/(w z1) -> 1 monotonically from below as w -> 0
        let m = moments(0.001);
        let w_star = m.z1 / m.z2;
        let mut prev = 0.0;
        for scale in [1e-2, 1e-4, 1e-6] {
            let w = scale * w_star;
            let ratio = success_probability(w, &m).unwrap() / (w * m.z1);
            assert!(ratio > prev && ratio < 1.0, "ratio {ratio}");
            prev = ratio;
        }
        assert!((prev - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_weights_are_rejected_with_the_interval() {
        let m = moments(0.5); // limit = 2
        for w in [0.0, -1.0, 2.0, 2.5, f64::NAN] {
            match tuning_point(w, &m) {
                Err(Error::InfeasibleWeight { limit, .. }) => assert_eq!(limit, 2.0),
                other => panic!("expected infeasibility error, got {other:?}"),
            }
        }
        assert!(tuning_point(1.999, &m).is_ok());
    }

    #[test]
    fn tuning_point_matches_reference_values() {
        // Frozen from 40-digit evaluation of the closed forms.
        let m = moments(0.001);
        let tp = tuning_point(1.0, &m).unwrap();
        assert!((tp.rel_variance - 2.997999749874921820).abs() < 1e-12);
        assert!((tp.expected_cost - 1998.499874937460910).abs() < 1e-9);
        assert!((tp.tvp_rel - 5991.502125187570348).abs() < 1e-8);

        let tp = tuning_point(0.1, &m).unwrap();
        assert!((tp.rel_variance - 0.1079279753390976518).abs() < 1e-13);
        assert!((tp.expected_cost - 10524.81576572142769).abs() < 1e-8);
        assert!((tp.tvp_rel - 1135.922056411328417).abs() < 1e-9);
    }

    #[test]
    fn tvp_approaches_the_relative_variance_of_z_as_w_vanishes() {
        let m = moments(0.001);
        let tp = tuning_point(1e-4, &m).unwrap();
        assert!((tp.tvp_rel - 999.0).abs() / 999.0 < 1e-3, "{}", tp.tvp_rel);
    }

    #[test]
    fn sweep_rejects_bad_grids_and_orders_points() {
        let m = moments(0.001);
        let grid: Vec<f64> = (1..10).map(|i| 0.2 * i as f64).collect();
        let curve = sweep_curve(&m, &grid).unwrap();
        assert_eq!(curve.len(), 9);
        for pair in curve.windows(2) {
            assert!(pair[1].rel_variance > pair[0].rel_variance);
            assert!(pair[1].tvp_rel > pair[0].tvp_rel);
        }

        assert!(matches!(
            sweep_curve(&m, &[0.4, 0.4]),
            Err(Error::GridNotIncreasing { index: 1, .. })
        ));
        assert!(matches!(
            sweep_curve(&m, &[0.4, 2.5]),
            Err(Error::InfeasibleWeight { .. })
        ));
    }

    #[test]
    fn single_point_sweep_at_the_maximizer() {
        let m = moments(0.3);
        let curve = sweep_curve(&m, &[m.z1 / m.z2]).unwrap();
        let expected = 1.0 - (1.0 - m.z1 * m.z1 / m.z2).sqrt();
        assert!((curve[0].p_w - expected).abs() < 1e-15);
    }

    #[test]
    fn sigma_matches_hand_arithmetic() {
        assert!((asymptotic_sigma(&moments(0.001)).powi(2) - 9.99e8).abs() / 9.99e8 < 1e-12);
        assert!((asymptotic_sigma(&moments(0.5)) - 2.0).abs() < 1e-15);
        let m = ZModel::uniform_scaled(2.0).unwrap().moments().unwrap();
        assert!((asymptotic_sigma(&m) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn laplace_quantile_reference_values() {
        // -ln(0.05)/sqrt(2) in 40-digit arithmetic
        let t = laplace_quantile(0.05f64).unwrap();
        assert!((t - 2.118302605249420440).abs() < 1e-14);
        // alpha = exp(-sqrt(2)) inverts to exactly 1
        let t = laplace_quantile((-2.0f64.sqrt()).exp()).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        // alpha -> 1 collapses the interval
        assert!(laplace_quantile(1.0 - 1e-12).unwrap() < 1e-11);
        assert!(laplace_quantile(0.0).is_err());
        assert!(laplace_quantile(1.0).is_err());
    }

    #[test]
    fn weight_for_expected_cost_round_trips() {
        let m = moments(0.1);
        for cost in [50.0, 1e3, 1e6] {
            let w = weight_for_expected_cost(&m, cost).unwrap();
            let tp = tuning_point(w, &m).unwrap();
            assert!(
                (tp.expected_cost - cost).abs() / cost < 1e-9,
                "cost {cost} -> {}",
                tp.expected_cost
            );
        }
        // The floor at w = z1/z2 is 1/p_max - 1 ~ 18.5 for this model.
        assert!(matches!(
            weight_for_expected_cost(&m, 10.0),
            Err(Error::CostTooSmall { .. })
        ));
    }

    #[test]
    fn gap_helper_agrees_with_direct_subtraction_at_moderate_w() {
        let m = moments(0.3);
        for w in [0.2, 0.8, 1.5] {
            let p = success_probability(w, &m).unwrap();
            let direct = w * m.z1 - p;
            let stable = weighted_mean_minus_success_probability(w, &m, p);
            assert!((direct - stable).abs() < 1e-14 * direct.abs().max(1.0));
            assert!(stable > 0.0);
        }
        // At w z1 = 1e-8 the gap is ~1e-16 z1^2-scale; the stable form keeps
        // full relative precision where the direct form returns noise.
        let w = 1e-8 / m.z1;
        let p = success_probability(w, &m).unwrap();
        let stable = weighted_mean_minus_success_probability(w, &m, p);
        let predicted = 0.5 * w * w * m.var; // leading Taylor term
        assert!((stable - predicted).abs() / predicted < 1e-6, "{stable} vs {predicted}");
    }

    #[test]
    fn works_in_single_precision() {
        let m = ZModel::<f32>::bernoulli(0.3).unwrap().moments().unwrap();
        let tp = tuning_point(0.5f32, &m).unwrap();
        assert!(tp.p_w > 0.0 && tp.p_w < 1.0);
        assert!(tp.variance > 0.0);
    }
}
