//! Descriptive statistics, variance decomposition and correlation.
//!
//! All reductions go through [`KahanSum`] so results do not depend on how
//! the input was batched.

mod anova;
mod correlation;
mod summary;

pub use anova::{variance_decomposition, GroupedSample, VarianceDecomposition};
pub use correlation::{
    average_ranks, correlation_matrix, pairwise_complete, pearson, rank_with, significance, spearman, spearman_with,
    CorrelationCell, CorrelationMatrix, Method, Significance, TieRule, UndefinedReason,
};
pub use summary::{boxplot, describe, median_sorted, quantile_sorted, BoxplotSummary, DescriptiveSummary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("at least {required} groups are required, got {actual}")]
    TooFewGroups { required: usize, actual: usize },
    #[error("group `{0}` has no values")]
    EmptyGroup(String),
    #[error("duplicate group `{0}`")]
    DuplicateGroup(String),
    #[error("at least {required} columns are required, got {actual}")]
    TooFewColumns { required: usize, actual: usize },
    #[error("unknown correlation method `{0}` (expected pearson or spearman)")]
    UnknownMethod(String),
}

/// Compensated (Kahan-Babuska) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<KahanSum>().total()
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(kahan_sum(values.iter().copied()) / values.len() as f64)
    }
}

/// Sum of squared deviations about `center`.
pub(crate) fn sum_sq_dev(values: &[f64], center: f64) -> f64 {
    kahan_sum(values.iter().map(|x| (x - center) * (x - center)))
}

pub(crate) fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut v = vec![1.0e16];
        v.extend(std::iter::repeat_n(1.0, 1000));
        v.push(-1.0e16);
        assert_eq!(kahan_sum(v.iter().copied()), 1000.0);
        assert_ne!(v.iter().sum::<f64>(), 1000.0);
    }

    #[test]
    fn mean_of_empty_is_none() {
        assert_eq!(mean(&[]), None);
        assert_eq!(mean(&[2.0, 4.0]), Some(3.0));
    }
}
