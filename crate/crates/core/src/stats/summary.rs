use serde::{Deserialize, Serialize};

use super::{check_finite, kahan_sum, sum_sq_dev, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveSummary {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    /// Divisor n - 1; zero for a single value.
    pub sample_std: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

/// Five-number summary; whiskers are the sample extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Middle order statistic; mean of the two middle values for even length.
/// `sorted` must be non-empty and ascending.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Quantile by linear interpolation between order statistics at the
/// 1-based position `1 + (n - 1)·q`. This is the one place the quartile
/// rule lives.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let pos = (n - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n || frac == 0.0 {
        sorted[lo.min(n - 1)]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn describe(values: &[f64]) -> Result<DescriptiveSummary, StatsError> {
    let sorted = sorted_copy(values)?;
    let n = sorted.len();
    let mean = kahan_sum(sorted.iter().copied()) / n as f64;
    let sample_std = if n > 1 {
        (sum_sq_dev(&sorted, mean) / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let (min, max) = (sorted[0], sorted[n - 1]);
    Ok(DescriptiveSummary {
        n,
        median: median_sorted(&sorted),
        mean,
        sample_std,
        min,
        max,
        range: max - min,
    })
}

pub fn boxplot(values: &[f64]) -> Result<BoxplotSummary, StatsError> {
    let sorted = sorted_copy(values)?;
    Ok(BoxplotSummary {
        q1: quantile_sorted(&sorted, 0.25),
        // shares the median routine with describe so the two agree exactly
        q2: median_sorted(&sorted),
        q3: quantile_sorted(&sorted, 0.75),
        whisker_low: sorted[0],
        whisker_high: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton() {
        let d = describe(&[5.0]).unwrap();
        assert_eq!((d.median, d.mean, d.sample_std, d.range), (5.0, 5.0, 0.0, 0.0));
    }

    #[test]
    fn even_median_and_sample_std() {
        let d = describe(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(d.median, 2.5);
        assert_eq!(d.mean, 2.5);
        // Σ(x-2.5)² = 5, /3
        assert!((d.sample_std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((d.min, d.max, d.range), (1.0, 4.0, 3.0));
    }

    #[test]
    fn empty_and_non_finite_rejected() {
        assert_eq!(describe(&[]), Err(StatsError::Empty));
        assert_eq!(boxplot(&[]), Err(StatsError::Empty));
        assert_eq!(describe(&[1.0, f64::NAN]), Err(StatsError::NonFinite(1)));
    }

    #[test]
    fn boxplot_hand_enumerated() {
        // positions 1 + 4q: 2, 3, 4 → exact order statistics
        let b = boxplot(&[3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!((b.q1, b.q2, b.q3), (2.0, 3.0, 4.0));
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 5.0));

        let b = boxplot(&[7.0; 4]).unwrap();
        assert_eq!(
            (b.q1, b.q2, b.q3, b.whisker_low, b.whisker_high),
            (7.0, 7.0, 7.0, 7.0, 7.0)
        );

        // n = 4: positions 1.75 and 3.25
        let b = boxplot(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((b.q1, b.q3), (1.75, 3.25));
    }

    proptest! {
        #[test]
        fn summary_invariants(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let d = describe(&values).unwrap();
            let b = boxplot(&values).unwrap();
            prop_assert!(d.min <= d.median && d.median <= d.max);
            prop_assert_eq!(d.range, d.max - d.min);
            prop_assert_eq!(b.q2, d.median);
            prop_assert!(b.whisker_low <= b.q1 && b.q1 <= b.q2 && b.q2 <= b.q3 && b.q3 <= b.whisker_high);
        }

        #[test]
        fn summaries_permutation_invariant(mut values in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let a = describe(&values).unwrap();
            let ba = boxplot(&values).unwrap();
            values.reverse();
            prop_assert_eq!(a, describe(&values).unwrap());
            prop_assert_eq!(ba, boxplot(&values).unwrap());
        }
    }
}
