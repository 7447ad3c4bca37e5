//! Compensated summation. The truncation-law series run to 10^5+ terms, where
//! naive accumulation alone would eat the 1e-12 solver tolerances.

use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub(crate) struct KahanSum<F> {
    sum: F,
    compensation: F,
}

impl<F: Real> KahanSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            compensation: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, term: F) {
        let y = term - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_where_naive_summation_drifts() {
        let term = 1e-8f64;
        let n = 10_000_000u64;
        let mut kahan = KahanSum::new();
        for _ in 0..n {
            kahan.add(term);
        }
        let exact = term * n as f64;
        assert!((kahan.value() - exact).abs() < 1e-16);
    }
}
