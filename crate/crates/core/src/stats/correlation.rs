use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{check_finite, kahan_sum, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Spearman,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        })
    }
}

impl FromStr for Method {
    type Err = StatsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Method::Pearson),
            "spearman" => Ok(Method::Spearman),
            _ => Err(StatsError::UnknownMethod(s.to_string())),
        }
    }
}

/// Two-tailed significance level reached by a correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Significance {
    None,
    P90,
    P95,
    P99,
}

impl Significance {
    /// Footnote mark: a = 90%, b = 95%, c = 99%.
    pub fn mark(&self) -> Option<char> {
        match self {
            Significance::None => None,
            Significance::P90 => Some('a'),
            Significance::P95 => Some('b'),
            Significance::P99 => Some('c'),
        }
    }

    pub fn from_mark(mark: Option<char>) -> Option<Self> {
        match mark {
            None => Some(Significance::None),
            Some('a') => Some(Significance::P90),
            Some('b') => Some(Significance::P95),
            Some('c') => Some(Significance::P99),
            Some(_) => None,
        }
    }

    pub fn level(&self) -> Option<u8> {
        match self {
            Significance::None => None,
            Significance::P90 => Some(90),
            Significance::P95 => Some(95),
            Significance::P99 => Some(99),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UndefinedReason {
    /// Fewer than three complete pairs.
    TooFewObservations,
    /// One of the inputs has zero variance.
    ConstantInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub r: Option<f64>,
    pub n: usize,
    pub significance: Significance,
    pub undefined: Option<UndefinedReason>,
}

impl CorrelationCell {
    fn undefined(n: usize, reason: UndefinedReason) -> Self {
        Self {
            r: None,
            n,
            significance: Significance::None,
            undefined: Some(reason),
        }
    }

    fn defined(r: f64, n: usize) -> Self {
        Self {
            r: Some(r),
            n,
            significance: significance(r, n),
            undefined: None,
        }
    }
}

/// Significance of `r` from the t statistic `r·√((n−2)/(1−r²))` with n − 2
/// degrees of freedom, two-tailed at α = 0.10, 0.05, 0.01.
pub fn significance(r: f64, n: usize) -> Significance {
    if n < 3 || !r.is_finite() {
        return Significance::None;
    }
    let denom = 1.0 - r * r;
    let p = if denom <= 0.0 {
        0.0
    } else {
        let t = r.abs() * ((n - 2) as f64 / denom).sqrt();
        let dist = StudentsT::new(0.0, 1.0, (n - 2) as f64).expect("n - 2 >= 1 degrees of freedom");
        2.0 * dist.sf(t)
    };
    if p < 0.01 {
        Significance::P99
    } else if p < 0.05 {
        Significance::P95
    } else if p < 0.10 {
        Significance::P90
    } else {
        Significance::None
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)
}

/// Pearson product-moment correlation.
///
/// Too-short or constant inputs give an undefined cell rather than an error.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationCell, StatsError> {
    check_pair(x, y)?;
    let n = x.len();
    if n < 3 {
        return Ok(CorrelationCell::undefined(n, UndefinedReason::TooFewObservations));
    }
    // canonical row order so the result cannot depend on input order
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mx = kahan_sum(pairs.iter().map(|p| p.0)) / n as f64;
    let my = kahan_sum(pairs.iter().map(|p| p.1)) / n as f64;
    let sxy = kahan_sum(pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let sxx = kahan_sum(pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    let syy = kahan_sum(pairs.iter().map(|p| (p.1 - my) * (p.1 - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Ok(CorrelationCell::undefined(n, UndefinedReason::ConstantInput));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationCell::defined(r, n))
}

/// How tied values are ranked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieRule {
    /// Tied values share the mean of the positions they occupy.
    #[default]
    Average,
    /// Ties are broken by input position (earlier rows rank lower). Not
    /// permutation invariant; kept for comparison with tables produced
    /// that way.
    InputOrder,
}

/// 1-based ranks, ascending.
pub fn rank_with(values: &[f64], rule: TieRule) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps input order among ties
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    match rule {
        TieRule::InputOrder => {
            for (pos, &i) in idx.iter().enumerate() {
                ranks[i] = (pos + 1) as f64;
            }
        }
        TieRule::Average => {
            let mut start = 0;
            while start < idx.len() {
                let mut end = start + 1;
                while end < idx.len() && values[idx[end]] == values[idx[start]] {
                    end += 1;
                }
                // positions start+1 ..= end share their mean
                let avg = (start + 1 + end) as f64 / 2.0;
                for &i in &idx[start..end] {
                    ranks[i] = avg;
                }
                start = end;
            }
        }
    }
    ranks
}

pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    rank_with(values, TieRule::Average)
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationCell, StatsError> {
    spearman_with(x, y, TieRule::Average)
}

pub fn spearman_with(x: &[f64], y: &[f64], rule: TieRule) -> Result<CorrelationCell, StatsError> {
    check_pair(x, y)?;
    pearson(&rank_with(x, rule), &rank_with(y, rule))
}

/// Rows where both values are defined.
pub fn pairwise_complete(x: &[Option<f64>], y: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    x.iter().zip(y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub method: Method,
    pub names: Vec<String>,
    /// Row-major, symmetric.
    pub cells: Vec<Vec<CorrelationCell>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<&CorrelationCell> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(&self.cells[i][j])
    }
}

/// Symmetric matrix of pairwise correlations with unit diagonal. Undefined
/// entries (`None`) are dropped pairwise.
pub fn correlation_matrix(
    columns: &[(String, Vec<Option<f64>>)],
    method: Method,
) -> Result<CorrelationMatrix, StatsError> {
    if columns.len() < 2 {
        return Err(StatsError::TooFewColumns {
            required: 2,
            actual: columns.len(),
        });
    }
    let len = columns[0].1.len();
    if let Some((_, c)) = columns.iter().find(|(_, c)| c.len() != len) {
        return Err(StatsError::LengthMismatch {
            left: len,
            right: c.len(),
        });
    }
    let k = columns.len();
    let mut cells = vec![vec![CorrelationCell::undefined(0, UndefinedReason::TooFewObservations); k]; k];
    for a in 0..k {
        let n = columns[a].1.iter().flatten().count();
        cells[a][a] = if n < 3 {
            CorrelationCell::undefined(n, UndefinedReason::TooFewObservations)
        } else {
            CorrelationCell::defined(1.0, n)
        };
        for b in (a + 1)..k {
            let (x, y) = pairwise_complete(&columns[a].1, &columns[b].1);
            let cell = match method {
                Method::Pearson => pearson(&x, &y)?,
                Method::Spearman => spearman(&x, &y)?,
            };
            cells[a][b] = cell;
            cells[b][a] = cell;
        }
    }
    Ok(CorrelationMatrix {
        method,
        names: columns.iter().map(|(n, _)| n.clone()).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_correlation_is_one_and_significant() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let c = pearson(&x, &x).unwrap();
        assert!((c.r.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.significance, Significance::P99);
    }

    #[test]
    fn constant_input_is_reported_undefined() {
        let c = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.r, None);
        assert_eq!(c.undefined, Some(UndefinedReason::ConstantInput));
        let c = pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(c.undefined, Some(UndefinedReason::TooFewObservations));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch { left: 3, right: 2 })
        );
        assert!(spearman(&[1.0], &[]).is_err());
    }

    #[test]
    fn average_ranks_for_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[1.0, 3.0, 3.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(rank_with(&[2.0, 1.0, 2.0], TieRule::InputOrder), vec![2.0, 1.0, 3.0]);
        let c = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 3.0, 4.0]).unwrap();
        assert!((c.r.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_transform_gives_unit_spearman() {
        let x: Vec<f64> = vec![-3.0, 0.5, 1.0, 2.0, 7.0, 11.0];
        let y: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        assert!((spearman(&x, &y).unwrap().r.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn significance_thresholds() {
        // n = 30 two-tailed critical r: 0.306 (90%), 0.361 (95%), 0.463 (99%)
        assert_eq!(significance(0.30, 30), Significance::None);
        assert_eq!(significance(0.32, 30), Significance::P90);
        assert_eq!(significance(-0.40, 30), Significance::P95);
        assert_eq!(significance(0.47, 30), Significance::P99);
        assert_eq!(significance(1.0, 30), Significance::P99);
        assert_eq!(significance(0.9, 2), Significance::None);
    }

    #[test]
    fn marks_round_trip() {
        for s in [
            Significance::None,
            Significance::P90,
            Significance::P95,
            Significance::P99,
        ] {
            assert_eq!(Significance::from_mark(s.mark()), Some(s));
        }
        assert_eq!(Significance::from_mark(Some('z')), None);
    }

    #[test]
    fn matrix_shape_and_pairwise_exclusion() {
        let cols = vec![
            ("a".to_string(), vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), None]),
            (
                "b".to_string(),
                vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), Some(9.0)],
            ),
            (
                "c".to_string(),
                vec![Some(2.0), Some(1.0), Some(4.0), Some(3.0), Some(0.0)],
            ),
        ];
        let m = correlation_matrix(&cols, Method::Pearson).unwrap();
        assert_eq!(m.get("a", "b").unwrap().n, 4);
        assert!((m.get("a", "b").unwrap().r.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.get("b", "c"), m.get("c", "b"));
        assert_eq!(m.get("a", "a").unwrap().r, Some(1.0));
        assert!(correlation_matrix(&cols[..1], Method::Pearson).is_err());

        let mut bad = cols.clone();
        bad[2].1.pop();
        assert!(matches!(
            correlation_matrix(&bad, Method::Spearman),
            Err(StatsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tiny_groups_flag_cells() {
        let cols = vec![
            ("a".to_string(), vec![Some(1.0), Some(2.0)]),
            ("b".to_string(), vec![Some(3.0), Some(1.0)]),
        ];
        let m = correlation_matrix(&cols, Method::Spearman).unwrap();
        assert_eq!(m.cells[0][1].undefined, Some(UndefinedReason::TooFewObservations));
        assert_eq!(m.cells[0][0].r, None);
    }

    #[test]
    fn method_parses() {
        assert_eq!("Pearson".parse::<Method>().unwrap(), Method::Pearson);
        assert!("kendall".parse::<Method>().is_err());
    }

    /// Independent rank oracle: for each value count how many are strictly
    /// smaller and how many are equal, then rank = smaller + (equal + 1) / 2.
    fn oracle_ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|a| {
                let smaller = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                smaller + (equal + 1.0) / 2.0
            })
            .collect()
    }

    /// Textbook Pearson on the oracle ranks, plain summation.
    fn oracle_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
        let (rx, ry) = (oracle_ranks(x), oracle_ranks(y));
        let n = x.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        if sxx == 0.0 || syy == 0.0 {
            None
        } else {
            Some(sxy / (sxx * syy).sqrt())
        }
    }

    #[test]
    fn spearman_matches_oracle_exhaustively_for_short_inputs() {
        // every x, y over alphabet {0,1,2} for lengths 3 and 4 (3^8 = 6561 pairs at n = 4)
        let alphabet = [0.0, 1.0, 2.0];
        for n in 3..=4usize {
            let total = 3usize.pow(n as u32);
            let decode = |mut code: usize| {
                (0..n)
                    .map(|_| {
                        let v = alphabet[code % 3];
                        code /= 3;
                        v
                    })
                    .collect::<Vec<f64>>()
            };
            for cx in 0..total {
                let x = decode(cx);
                for cy in 0..total {
                    let y = decode(cy);
                    let got = spearman(&x, &y).unwrap().r;
                    let want = oracle_spearman(&x, &y);
                    match (got, want) {
                        (Some(g), Some(w)) => assert!((g - w).abs() < 1e-12, "{x:?} {y:?}"),
                        (None, None) => {}
                        other => panic!("{x:?} {y:?}: {other:?}"),
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn spearman_matches_oracle_up_to_eight(
            pairs in prop::collection::vec((0u8..4, 0u8..4), 3..=8)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let got = spearman(&x, &y).unwrap().r;
            let want = oracle_spearman(&x, &y);
            match (got, want) {
                (Some(g), Some(w)) => prop_assert!((g - w).abs() < 1e-12),
                (None, None) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }

        #[test]
        fn pearson_affine_behaviour(
            xs in prop::collection::vec(-100f64..100.0, 3..30),
            a in prop_oneof![-50f64..-0.1, 0.1f64..50.0],
            b in -100f64..100.0,
            seed in any::<u64>(),
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, v)| v.sin() * 3.0 + (i as f64 * (seed % 7) as f64).cos()).collect();
            let base = pearson(&xs, &ys).unwrap();
            let tx: Vec<f64> = xs.iter().map(|v| a * v + b).collect();
            let moved = pearson(&tx, &ys).unwrap();
            if let (Some(r0), Some(r1)) = (base.r, moved.r) { prop_assert!((r1 - a.signum() * r0).abs() < 1e-9) }
        }

        #[test]
        fn spearman_invariant_under_increasing_transform(
            xs in prop::collection::vec(-5f64..5.0, 3..25),
            ys in prop::collection::vec(-5f64..5.0, 25),
        ) {
            let ys = &ys[..xs.len()];
            let tx: Vec<f64> = xs.iter().map(|v| v.exp() * 2.0 + 1.0).collect();
            prop_assert_eq!(spearman(&xs, ys).unwrap(), spearman(&tx, ys).unwrap());
        }

        #[test]
        fn correlations_permutation_invariant(
            pairs in prop::collection::vec((-50f64..50.0, -50f64..50.0), 3..30),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let (rx, ry): (Vec<f64>, Vec<f64>) = pairs.iter().rev().copied().unzip();
            prop_assert_eq!(pearson(&x, &y).unwrap(), pearson(&rx, &ry).unwrap());
            prop_assert_eq!(spearman(&x, &y).unwrap(), spearman(&rx, &ry).unwrap());
        }

        #[test]
        fn r_is_bounded(pairs in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 3..50)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Some(r) = pearson(&x, &y).unwrap().r {
                prop_assert!(r.abs() <= 1.0 + 1e-12);
            }
        }
    }
}
